// Command-line front end over the C API: datagen, train, eval, sample.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "svp/svp.h"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Failure {
  int code;
  std::string message;
};

[[noreturn]] void config_error(const std::string& msg) { throw Failure{kExitConfig, msg}; }

void check(svp_status s, const std::string& context) {
  if (s == SVP_OK) return;
  const int code =
      (s == SVP_ERR_CONFIG || s == SVP_ERR_INVALID_ARGUMENT) ? kExitConfig : kExitRuntime;
  throw Failure{code, context + ": " + svp_status_name(s) + ": " + svp_last_error()};
}

std::string take(char* s) {
  std::string out = s ? s : "";
  svp_string_free(s);
  return out;
}

// Relative output paths land under $SVP_OUTPUT_ROOT when it is set.
fs::path output_path(const std::string& p) {
  fs::path path(p);
  const char* root = std::getenv("SVP_OUTPUT_ROOT");
  if (root && *root && path.is_relative()) return fs::path(root) / path;
  return path;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
  if (!out) throw Failure{kExitRuntime, "cannot write " + path.string()};
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Dataset {
  svp_dataset* ptr = nullptr;
  Dataset() = default;
  Dataset(const Dataset&) = delete;
  Dataset& operator=(const Dataset&) = delete;
  ~Dataset() { svp_dataset_free(ptr); }
  std::array<int64_t, 5> shape() const {
    std::array<int64_t, 5> s{};
    check(svp_dataset_shape(ptr, s.data()), "dataset shape");
    return s;
  }
};

struct Trainer {
  svp_trainer* ptr = nullptr;
  Trainer() = default;
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;
  ~Trainer() { svp_trainer_free(ptr); }
  Json config() const {
    char* s = nullptr;
    check(svp_trainer_config(ptr, &s), "trainer config");
    return Json::parse(take(s));
  }
};

void load_dataset(const std::string& path, Dataset& out) {
  if (path.empty()) config_error("no dataset given (--data or data_path in the config)");
  if (!fs::exists(path)) config_error("dataset " + path + " does not exist");
  check(svp_dataset_load(path.c_str(), &out.ptr), "loading " + path);
}

// Picks one split of `all` according to the ratios stored in a run config.
void pick_split(const Dataset& all, const Json& run_cfg, const std::string& which, Dataset& out) {
  Dataset parts[3];
  if (which == "all") {
    const double ratios[3] = {1.0, 0.0, 0.0};
    check(svp_dataset_split(all.ptr, ratios, &out.ptr, &parts[1].ptr, &parts[2].ptr), "split");
    return;
  }
  const auto r = run_cfg.at("train").at("split").get<std::vector<double>>();
  const double ratios[3] = {r[0], r[1], r[2]};
  check(svp_dataset_split(all.ptr, ratios, &parts[0].ptr, &parts[1].ptr, &parts[2].ptr),
        "splitting the dataset");
  const int idx = which == "train" ? 0 : which == "val" ? 1 : 2;
  std::swap(out.ptr, parts[idx].ptr);
}

// ---- datagen --------------------------------------------------------------

struct DatagenArgs {
  std::string kind = "sprites";
  uint64_t seed = 0;
  int64_t n = 64, t = 25, size = 32;
  std::optional<int64_t> num_sprites, sprite_size;
  std::optional<double> speed_min, speed_max, bounce_std, vx, vy;
  std::optional<std::string> glyph;
  bool inexact = false;
  std::string out = "data/dataset.bin";
};

int run_datagen(const DatagenArgs& a) {
  Json spec = {{"kind", a.kind}, {"seed", a.seed}, {"n", a.n}, {"t", a.t}, {"size", a.size}};
  auto put = [&](const char* key, const auto& opt) {
    if (opt) spec[key] = *opt;
  };
  if (a.kind == "sprites") {
    put("num_sprites", a.num_sprites);
    put("sprite_size", a.sprite_size);
    put("speed_min", a.speed_min);
    put("speed_max", a.speed_max);
    put("bounce_std", a.bounce_std);
    put("glyph", a.glyph);
    if (a.vx || a.vy || a.inexact) config_error("--vx/--vy/--inexact only apply to --kind panning");
  } else {
    put("vx", a.vx);
    put("vy", a.vy);
    if (a.inexact) spec["exact"] = false;
    if (a.num_sprites || a.sprite_size || a.speed_min || a.speed_max || a.bounce_std || a.glyph)
      config_error("sprite options only apply to --kind sprites");
  }
  Dataset ds;
  check(svp_dataset_generate(spec.dump().c_str(), &ds.ptr), "datagen");
  const fs::path out = output_path(a.out);
  check(svp_dataset_save(ds.ptr, out.string().c_str()), "saving dataset");
  const auto s = ds.shape();
  std::cout << "wrote " << out.string() << " [" << s[0] << ", " << s[1] << ", " << s[2] << ", "
            << s[3] << ", " << s[4] << "]\n";
  return 0;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string config_path, data, out, resume, mode;
  std::optional<int64_t> steps, batch, k, horizon, val_every, checkpoint_every;
  std::optional<uint64_t> seed;
  std::optional<double> lr, sigma_obs;
};

int run_train(const TrainArgs& a) {
  Json cfg = Json::object();
  Trainer tr;
  if (!a.resume.empty()) {
    if (!fs::exists(a.resume)) config_error("checkpoint " + a.resume + " does not exist");
    check(svp_trainer_load(a.resume.c_str(), nullptr, &tr.ptr), "loading " + a.resume);
    cfg = tr.config();
    if (!a.config_path.empty()) config_error("--config cannot be combined with --resume");
    if (!a.mode.empty() && a.mode != cfg["model"]["mode"])
      config_error("--mode " + a.mode + " does not match the checkpoint's mode " +
                   cfg["model"]["mode"].get<std::string>());
    if (a.batch || a.k || a.horizon || a.seed || a.lr || a.sigma_obs)
      config_error("only --steps, --data and --out may be given with --resume");
  } else if (!a.config_path.empty()) {
    try {
      cfg = Json::parse(read_text(a.config_path));
    } catch (const Json::exception& e) {
      config_error(std::string("config is not valid JSON: ") + e.what());
    }
  }
  if (!a.resume.empty()) {
    if (a.steps) cfg["train"]["steps"] = *a.steps;
  } else {
    if (a.steps) cfg["train"]["steps"] = *a.steps;
    if (a.batch) cfg["train"]["batch_size"] = *a.batch;
    if (a.k) cfg["train"]["k"] = *a.k;
    if (a.horizon) cfg["train"]["horizon"] = *a.horizon;
    if (a.lr) cfg["train"]["learning_rate"] = *a.lr;
    if (a.sigma_obs) cfg["train"]["sigma_obs"] = *a.sigma_obs;
    if (a.val_every) cfg["train"]["val_every"] = *a.val_every;
    if (a.checkpoint_every) cfg["train"]["checkpoint_every"] = *a.checkpoint_every;
    if (a.seed) cfg["seed"] = *a.seed;
    if (!a.mode.empty()) cfg["model"]["mode"] = a.mode;
  }
  if (!a.data.empty()) cfg["data_path"] = a.data;
  if (!a.out.empty()) cfg["out_dir"] = a.out;

  char* normalized = nullptr;
  check(svp_config_normalize(cfg.dump().c_str(), &normalized), "config");
  cfg = Json::parse(take(normalized));

  Dataset all, train, val;
  load_dataset(cfg["data_path"], all);
  const auto shape = all.shape();
  const auto& m = cfg["model"];
  if (shape[2] != m["channels"] || shape[3] != m["image_size"] || shape[4] != m["image_size"])
    config_error("dataset frames do not match model image_size/channels");
  const int64_t need = cfg["train"]["k"].get<int64_t>() + cfg["train"]["horizon"].get<int64_t>();
  if (shape[1] < need)
    config_error("dataset sequences have " + std::to_string(shape[1]) +
                 " frames but k + horizon = " + std::to_string(need));
  pick_split(all, cfg, "train", train);
  pick_split(all, cfg, "val", val);

  if (a.resume.empty()) check(svp_trainer_create(cfg.dump().c_str(), &tr.ptr), "creating model");

  const fs::path dir = output_path(cfg["out_dir"]);
  fs::create_directories(dir);
  const fs::path metrics = dir / "metrics.jsonl";
  const fs::path ckpt = dir / "checkpoint.svp";
  if (a.resume.empty()) fs::remove(metrics);
  write_text(dir / "config.json", cfg.dump(2) + "\n");

  int64_t start = 0;
  check(svp_trainer_step(tr.ptr, &start), "step");
  const int64_t steps = cfg["train"]["steps"];
  const bool validate = cfg["train"]["val_every"].get<int64_t>() > 0;
  check(svp_trainer_train(tr.ptr, train.ptr, validate ? val.ptr : nullptr, steps,
                          metrics.string().c_str(), ckpt.string().c_str()),
        "training");
  int64_t end = 0;
  check(svp_trainer_step(tr.ptr, &end), "step");
  std::cout << "trained steps " << start << " -> " << end << "; checkpoint " << ckpt.string()
            << "\n";
  return 0;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint, data, out = "eval", split = "test", agg;
  std::optional<int64_t> samples, k, horizon;
  std::optional<uint64_t> seed;
  bool no_baseline = false;
};

void write_plot(const fs::path& path, const std::vector<std::vector<double>>& series) {
  std::vector<double> flat;
  for (const auto& s : series) flat.insert(flat.end(), s.begin(), s.end());
  check(svp_write_plot_png(path.string().c_str(), flat.data(), static_cast<int64_t>(series.size()),
                           static_cast<int64_t>(series.front().size())),
        "plot");
}

int run_eval(const EvalArgs& a) {
  if (!fs::exists(a.checkpoint)) config_error("checkpoint " + a.checkpoint + " does not exist");
  Json eval = Json::object();
  if (a.samples) eval["n_samples"] = *a.samples;
  if (!a.agg.empty()) eval["aggregation"] = a.agg;
  if (a.k) eval["k"] = *a.k;
  if (a.horizon) eval["horizon"] = *a.horizon;
  if (a.seed) eval["seed"] = *a.seed;
  if (a.no_baseline) eval["baseline"] = false;

  Trainer tr;
  check(svp_trainer_load(a.checkpoint.c_str(), nullptr, &tr.ptr), "loading " + a.checkpoint);
  const Json cfg = tr.config();
  Dataset all, part;
  load_dataset(a.data.empty() ? cfg["data_path"].get<std::string>() : a.data, all);
  const auto shape = all.shape();
  if (shape[3] != cfg["model"]["image_size"] || shape[2] != cfg["model"]["channels"])
    config_error("dataset frames are " + std::to_string(shape[3]) + "x" + std::to_string(shape[4]) +
                 " but the checkpoint expects " + cfg["model"]["image_size"].dump());
  pick_split(all, cfg, a.split, part);

  char* report = nullptr;
  char* curves = nullptr;
  check(svp_evaluate(tr.ptr, part.ptr, eval.dump().c_str(), &report, &curves), "evaluation");
  const Json rep = Json::parse(take(report));
  const std::string table = take(curves);

  const fs::path dir = output_path(a.out);
  write_text(dir / "results.json", rep.dump(2) + "\n");
  write_text(dir / "curves.tsv", table);
  for (const char* metric : {"psnr", "ssim"}) {
    std::vector<std::vector<double>> series{rep["curves"][metric].get<std::vector<double>>()};
    if (rep.contains("baseline"))
      series.push_back(rep["baseline"]["curves"][metric].get<std::vector<double>>());
    write_plot(dir / (std::string(metric) + ".png"), series);
  }
  std::cout << "PSNR " << rep["psnr"]["mean"].get<double>() << " +- "
            << rep["psnr"]["ci95"].get<double>() << ", SSIM " << rep["ssim"]["mean"].get<double>()
            << " +- " << rep["ssim"]["ci95"].get<double>() << " (" << rep["aggregation"].get<std::string>()
            << " of " << rep["n_samples"] << ")\n";
  return 0;
}

// ---- sample ---------------------------------------------------------------

struct SampleArgs {
  std::string checkpoint, data, out = "samples", split = "test", decode_only;
  int64_t n = 3, sequences = 2, k = 5, horizon = 10;
  uint64_t seed = 0;
  bool flow = false, no_truth = false;
  int delay_cs = 20;
};

int run_sample(const SampleArgs& a) {
  if (!fs::exists(a.checkpoint)) config_error("checkpoint " + a.checkpoint + " does not exist");
  svp_decode_mask mask = SVP_DECODE_JOINT;
  if (a.decode_only == "w") mask = SVP_DECODE_APPEARANCE_ONLY;
  else if (a.decode_only == "y") mask = SVP_DECODE_MOTION_ONLY;
  if (a.n < 1 || a.sequences < 1 || a.k < 2 || a.horizon < 1)
    config_error("--n, --sequences, --horizon must be positive and --k at least 2");

  Trainer tr;
  check(svp_trainer_load(a.checkpoint.c_str(), nullptr, &tr.ptr), "loading " + a.checkpoint);
  const Json cfg = tr.config();
  Dataset all, part;
  load_dataset(a.data.empty() ? cfg["data_path"].get<std::string>() : a.data, all);
  pick_split(all, cfg, a.split, part);
  const auto s = part.shape();
  const int64_t c = s[2], h = s[3], w = s[4], frame = c * h * w;
  if (h != cfg["model"]["image_size"] || c != cfg["model"]["channels"])
    config_error("dataset frames do not match the checkpoint's image size");
  const bool truth = !a.no_truth;
  const int64_t shown = truth ? a.k + a.horizon : a.k;
  if (s[1] < shown)
    config_error("horizon exceeds the dataset length (" + std::to_string(s[1]) + " frames; need " +
                 std::to_string(shown) + "); pass --no-truth to drop the ground-truth row");
  const int64_t count = std::min(a.sequences, s[0]);

  const fs::path dir = output_path(a.out);
  const int64_t len = a.k + a.horizon;
  for (int64_t i = 0; i < count; ++i) {
    std::vector<float> seq(static_cast<size_t>(shown * frame));
    check(svp_dataset_frames(part.ptr, i, 0, shown, seq.data()), "frames");
    std::vector<float> cond(static_cast<size_t>(a.n * a.k * frame));
    for (int64_t r = 0; r < a.n; ++r)
      std::copy_n(seq.begin(), a.k * frame, cond.begin() + r * a.k * frame);
    std::vector<float> pred(static_cast<size_t>(a.n * a.horizon * frame));
    check(svp_rollout(tr.ptr, cond.data(), a.n, a.k, a.horizon, a.seed + static_cast<uint64_t>(i),
                      mask, pred.data()),
          "rollout");

    // rows x len grid: optional ground truth, then each sample (conditioning + prediction).
    const int64_t rows = a.n + (truth ? 1 : 0);
    std::vector<float> grid(static_cast<size_t>(rows * len * frame), 1.0f);
    int64_t row = 0;
    if (truth) std::copy(seq.begin(), seq.end(), grid.begin()), ++row;
    for (int64_t r = 0; r < a.n; ++r, ++row) {
      auto dst = grid.begin() + row * len * frame;
      std::copy_n(seq.begin(), a.k * frame, dst);
      std::copy_n(pred.begin() + r * a.horizon * frame, a.horizon * frame, dst + a.k * frame);
    }
    const std::string stem = "seq" + std::to_string(i);
    check(svp_write_frame_grid_png((dir / (stem + "_strip.png")).string().c_str(), grid.data(),
                                   rows, len, c, h, w),
          "strip");
    // GIF frames are [len, rows, ...]: transpose the grid.
    std::vector<float> anim(grid.size());
    for (int64_t t = 0; t < len; ++t)
      for (int64_t r = 0; r < rows; ++r)
        std::copy_n(grid.begin() + (r * len + t) * frame, frame, anim.begin() + (t * rows + r) * frame);
    check(svp_write_gif((dir / (stem + ".gif")).string().c_str(), anim.data(), len, rows, c, h, w,
                        a.delay_cs),
          "gif");
    if (a.flow) {
      std::vector<float> flow(static_cast<size_t>((shown - 1) * 2 * h * w));
      check(svp_posterior_flow(tr.ptr, seq.data(), shown, flow.data()), "flow");
      check(svp_write_flow_png((dir / (stem + "_flow.png")).string().c_str(), flow.data(),
                               shown - 1, h, w),
            "flow image");
    }
  }
  Json caption = {{"rows", truth ? "ground truth, then one row per sample" : "one row per sample"},
                  {"columns", "conditioning frames 1.." + std::to_string(a.k) + ", then predictions"},
                  {"decode", a.decode_only.empty() ? "joint"
                             : a.decode_only == "w" ? "appearance only (motion latent replaced by zeros)"
                                                    : "motion only (appearance latent replaced by zeros)"},
                  {"seed", a.seed},
                  {"samples", a.n}};
  write_text(dir / "caption.json", caption.dump(2) + "\n");
  std::cout << "wrote " << count << " strip(s) to " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic video prediction: data generation, training, evaluation, sampling"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(svp_version()));

  DatagenArgs dg;
  auto* datagen = app.add_subcommand("datagen", "generate a synthetic video dataset");
  datagen->add_option("--kind", dg.kind, "sprites or panning")->check(CLI::IsMember({"sprites", "panning"}));
  datagen->add_option("--seed", dg.seed);
  datagen->add_option("--n", dg.n, "number of sequences")->check(CLI::PositiveNumber);
  datagen->add_option("--t", dg.t, "frames per sequence")->check(CLI::Range(int64_t{2}, int64_t{1} << 20));
  datagen->add_option("--size", dg.size, "frame height and width")->check(CLI::PositiveNumber);
  datagen->add_option("--num-sprites", dg.num_sprites);
  datagen->add_option("--sprite-size", dg.sprite_size);
  datagen->add_option("--speed-min", dg.speed_min);
  datagen->add_option("--speed-max", dg.speed_max);
  datagen->add_option("--bounce-std", dg.bounce_std);
  datagen->add_option("--glyph", dg.glyph)->check(CLI::IsMember({"digits", "square"}));
  datagen->add_option("--vx", dg.vx, "pan velocity (pixels/frame)");
  datagen->add_option("--vy", dg.vy);
  datagen->add_flag("--inexact", dg.inexact, "sample the texture analytically (non-integer pans)");
  datagen->add_option("--out,-o", dg.out, "dataset file");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "train a model");
  train->add_option("--config,-c", ta.config_path, "JSON run config");
  train->add_option("--data", ta.data);
  train->add_option("--out,-o", ta.out, "output directory");
  train->add_option("--resume", ta.resume, "checkpoint to continue from");
  train->add_option("--mode", ta.mode)->check(CLI::IsMember({"full", "no_w", "no_z1"}));
  train->add_option("--steps", ta.steps);
  train->add_option("--batch", ta.batch);
  train->add_option("--k", ta.k);
  train->add_option("--horizon", ta.horizon);
  train->add_option("--lr", ta.lr);
  train->add_option("--sigma-obs", ta.sigma_obs);
  train->add_option("--val-every", ta.val_every);
  train->add_option("--checkpoint-every", ta.checkpoint_every);
  train->add_option("--seed", ta.seed);

  EvalArgs ea;
  auto* evalc = app.add_subcommand("eval", "score rollouts against held-out sequences");
  evalc->add_option("--checkpoint", ea.checkpoint)->required();
  evalc->add_option("--data", ea.data);
  evalc->add_option("--split", ea.split)->check(CLI::IsMember({"train", "val", "test", "all"}));
  evalc->add_option("--samples", ea.samples)->check(CLI::PositiveNumber);
  evalc->add_option("--agg", ea.agg)->check(CLI::IsMember({"mean", "best"}));
  evalc->add_option("--k", ea.k);
  evalc->add_option("--horizon", ea.horizon);
  evalc->add_option("--seed", ea.seed);
  evalc->add_flag("--no-baseline", ea.no_baseline);
  evalc->add_option("--out,-o", ea.out);

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "render rollouts as PNG strips and GIFs");
  sample->add_option("--checkpoint", sa.checkpoint)->required();
  sample->add_option("--data", sa.data);
  sample->add_option("--split", sa.split)->check(CLI::IsMember({"train", "val", "test", "all"}));
  sample->add_option("--n", sa.n, "samples per sequence");
  sample->add_option("--sequences", sa.sequences);
  sample->add_option("--k", sa.k);
  sample->add_option("--horizon", sa.horizon);
  sample->add_option("--seed", sa.seed);
  sample->add_option("--decode-only", sa.decode_only)->check(CLI::IsMember({"w", "y"}));
  sample->add_flag("--flow", sa.flow, "also render posterior flow fields");
  sample->add_flag("--no-truth", sa.no_truth, "omit the ground-truth row");
  sample->add_option("--delay", sa.delay_cs, "GIF frame delay in 1/100 s");
  sample->add_option("--out,-o", sa.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*datagen) return run_datagen(dg);
    if (*train) return run_train(ta);
    if (*evalc) return run_eval(ea);
    if (*sample) return run_sample(sa);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
