#include "svp/svp.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include "svp/checkpoint.hpp"
#include "svp/config.hpp"
#include "svp/datagen.hpp"
#include "svp/errors.hpp"
#include "svp/evaluation.hpp"
#include "svp/imageio.hpp"
#include "svp/trainer.hpp"

struct svp_dataset {
  svp::VideoDataset ds;
};

struct svp_trainer {
  std::unique_ptr<svp::Trainer> tr;
};

namespace {

thread_local std::string g_last_error;

svp_status fail(svp_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <typename F>
svp_status guard(F&& body) {
  try {
    g_last_error.clear();
    body();
    return SVP_OK;
  } catch (const svp::ConfigError& e) {
    return fail(SVP_ERR_CONFIG, e.what());
  } catch (const svp::ChecksumError& e) {
    return fail(SVP_ERR_CHECKSUM, e.what());
  } catch (const svp::VersionError& e) {
    return fail(SVP_ERR_VERSION, e.what());
  } catch (const svp::IoError& e) {
    return fail(SVP_ERR_IO, e.what());
  } catch (const svp::IncompatibleError& e) {
    return fail(SVP_ERR_INCOMPATIBLE, e.what());
  } catch (const svp::NumericError& e) {
    return fail(SVP_ERR_NUMERIC, e.what());
  } catch (const svp::ShapeError& e) {
    return fail(SVP_ERR_SHAPE, e.what());
  } catch (const svp::Json::exception& e) {
    return fail(SVP_ERR_CONFIG, std::string("invalid JSON: ") + e.what());
  } catch (const std::exception& e) {
    return fail(SVP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SVP_ERR_INTERNAL, "unknown failure");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

svp::Json parse(const char* text, const char* what) {
  try {
    return svp::Json::parse(text);
  } catch (const svp::Json::exception& e) {
    throw svp::ConfigError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

svp::Image tile(const float* data, int64_t c, int64_t h, int64_t w) {
  return svp::frame_to_image({data, static_cast<size_t>(c * h * w)}, c, h, w);
}

}  // namespace

extern "C" {

const char* svp_version(void) { return "0.1.0"; }

const char* svp_last_error(void) { return g_last_error.c_str(); }

const char* svp_status_name(svp_status status) {
  switch (status) {
    case SVP_OK: return "ok";
    case SVP_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SVP_ERR_CONFIG: return "config error";
    case SVP_ERR_IO: return "io error";
    case SVP_ERR_CHECKSUM: return "checksum error";
    case SVP_ERR_VERSION: return "version error";
    case SVP_ERR_INCOMPATIBLE: return "incompatible";
    case SVP_ERR_NUMERIC: return "numeric error";
    case SVP_ERR_SHAPE: return "shape error";
    case SVP_ERR_INTERNAL: return "internal error";
  }
  return "unknown";
}

void svp_string_free(char* s) { std::free(s); }

svp_status svp_config_normalize(const char* config_json, char** normalized) {
  if (!config_json) return fail(SVP_ERR_INVALID_ARGUMENT, "config_json is null");
  return guard([&] {
    auto cfg = svp::parse_run_config(config_json);
    if (normalized) *normalized = dup_string(svp::Json(cfg).dump(2));
  });
}

svp_status svp_dataset_generate(const char* spec_json, svp_dataset** out) {
  if (!spec_json || !out) return fail(SVP_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    auto ds = std::make_unique<svp_dataset>();
    ds->ds = svp::generate_from_spec(parse(spec_json, "dataset spec"));
    *out = ds.release();
  });
}

svp_status svp_dataset_load(const char* path, svp_dataset** out) {
  if (!path || !out) return fail(SVP_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    auto ds = std::make_unique<svp_dataset>();
    ds->ds = svp::load_dataset(path);
    *out = ds.release();
  });
}

svp_status svp_dataset_save(const svp_dataset* ds, const char* path) {
  if (!ds || !path) return fail(SVP_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] { svp::save_dataset(ds->ds, path); });
}

svp_status svp_dataset_shape(const svp_dataset* ds, int64_t shape[5]) {
  if (!ds || !shape) return fail(SVP_ERR_INVALID_ARGUMENT, "null argument");
  auto s = ds->ds.shape();
  std::copy(s.begin(), s.end(), shape);
  return SVP_OK;
}

svp_status svp_dataset_metadata(const svp_dataset* ds, char** json) {
  if (!ds || !json) return fail(SVP_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] { *json = dup_string(ds->ds.metadata.dump(2)); });
}

svp_status svp_dataset_frames(const svp_dataset* ds, int64_t index, int64_t first, int64_t count,
                              float* out) {
  if (!ds || !out) return fail(SVP_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    const auto& d = ds->ds;
    if (count < 0 || first < 0 || first + count > d.t)
      throw svp::ShapeError("frame range exceeds the sequence length");
    if (count == 0) return;
    auto src = d.frame(index, first);
    std::memcpy(out, src.data(), sizeof(float) * static_cast<size_t>(count * d.frame_size()));
  });
}

svp_status svp_dataset_split(const svp_dataset* ds, const double ratios[3], svp_dataset** train,
                             svp_dataset** val, svp_dataset** test) {
  if (!ds || !ratios || !train || !val || !test)
    return fail(SVP_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    auto parts = svp::split(ds->ds, {ratios[0], ratios[1], ratios[2]});
    auto a = std::make_unique<svp_dataset>(svp_dataset{std::move(parts.train)});
    auto b = std::make_unique<svp_dataset>(svp_dataset{std::move(parts.val)});
    auto c = std::make_unique<svp_dataset>(svp_dataset{std::move(parts.test)});
    *train = a.release();
    *val = b.release();
    *test = c.release();
  });
}

void svp_dataset_free(svp_dataset* ds) { delete ds; }

svp_status svp_trainer_create(const char* config_json, svp_trainer** out) {
  if (!config_json || !out) return fail(SVP_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    auto cfg = svp::parse_run_config(config_json);
    auto t = std::make_unique<svp_trainer>();
    t->tr = std::make_unique<svp::Trainer>(cfg);
    *out = t.release();
  });
}

svp_status svp_trainer_load(const char* path, const char* expected_model_json, svp_trainer** out) {
  if (!path || !out) return fail(SVP_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    std::optional<svp::ModelConfig> expected;
    if (expected_model_json) {
      svp::ModelConfig m;
      from_json(parse(expected_model_json, "expected model config"), m);
      m.validate();
      expected = m;
    }
    auto t = std::make_unique<svp_trainer>();
    t->tr = std::make_unique<svp::Trainer>(
        svp::Trainer::load(path, expected ? &*expected : nullptr));
    *out = t.release();
  });
}

svp_status svp_trainer_save(const svp_trainer* tr, const char* path) {
  if (!tr || !path) return fail(SVP_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] { tr->tr->save(path); });
}

svp_status svp_trainer_config(const svp_trainer* tr, char** json) {
  if (!tr || !json) return fail(SVP_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] { *json = dup_string(svp::Json(tr->tr->config()).dump(2)); });
}

svp_status svp_trainer_step(const svp_trainer* tr, int64_t* step) {
  if (!tr || !step) return fail(SVP_ERR_INVALID_ARGUMENT, "null argument");
  *step = tr->tr->step();
  return SVP_OK;
}

svp_status svp_trainer_train(svp_trainer* tr, const svp_dataset* train, const svp_dataset* val,
                             int64_t steps, const char* metrics_path, const char* checkpoint_path) {
  if (!tr || !train) return fail(SVP_ERR_INVALID_ARGUMENT, "null argument");
  if (steps < 0) return fail(SVP_ERR_INVALID_ARGUMENT, "steps must be non-negative");
  return guard([&] {
    svp::TrainOptions opts;
    opts.validation = val ? &val->ds : nullptr;
    std::ofstream metrics;
    if (metrics_path) {
      metrics.open(metrics_path, std::ios::app);
      if (!metrics) throw svp::IoError(std::string("cannot open metrics file ") + metrics_path);
      opts.metrics = &metrics;
    }
    if (checkpoint_path) opts.checkpoint_path = checkpoint_path;
    tr->tr->train(train->ds, steps, opts);
  });
}

void svp_trainer_free(svp_trainer* tr) { delete tr; }

svp_status svp_evaluate(svp_trainer* tr, const svp_dataset* ds, const char* eval_json,
                        char** report_json, char** curves_tsv) {
  if (!tr || !ds) return fail(SVP_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    svp::EvalConfig cfg = tr->tr->config().eval;
    if (eval_json) from_json(parse(eval_json, "eval config"), cfg);
    cfg.validate();
    auto report = svp::evaluate(tr->tr->model(), ds->ds, cfg);
    if (report_json) *report_json = dup_string(report.to_json().dump(2));
    if (curves_tsv) *curves_tsv = dup_string(report.curves_table());
  });
}

svp_status svp_rollout(svp_trainer* tr, const float* cond, int64_t batch, int64_t k,
                       int64_t horizon, uint64_t seed, svp_decode_mask mask, float* out) {
  if (!tr || !cond || !out) return fail(SVP_ERR_INVALID_ARGUMENT, "null argument");
  if (batch <= 0) return fail(SVP_ERR_INVALID_ARGUMENT, "batch must be positive");
  if (mask < SVP_DECODE_JOINT || mask > SVP_DECODE_MOTION_ONLY)
    return fail(SVP_ERR_INVALID_ARGUMENT, "unknown decode mask");
  return guard([&] {
    auto& model = tr->tr->model();
    const auto& mc = model->config();
    const int64_t c = mc.channels, s = mc.image_size;
    auto x = torch::from_blob(const_cast<float*>(cond), {batch, k, c, s, s}, torch::kFloat32)
                 .to(model->parameters().front().scalar_type());
    svp::Rng rng(seed);
    const bool was_training = model->is_training();
    model->eval();
    auto res = model->rollout(x, horizon, rng, static_cast<svp::DecodeMask>(mask));
    if (was_training) model->train();
    auto frames = res.frames.to(torch::kFloat32).contiguous();
    std::memcpy(out, frames.data_ptr<float>(), sizeof(float) * frames.numel());
  });
}

svp_status svp_posterior_flow(svp_trainer* tr, const float* frames, int64_t t, float* out) {
  if (!tr || !frames || !out) return fail(SVP_ERR_INVALID_ARGUMENT, "null argument");
  if (t < 2) return fail(SVP_ERR_INVALID_ARGUMENT, "need at least two frames");
  return guard([&] {
    torch::NoGradGuard no_grad;
    auto& model = tr->tr->model();
    const auto& mc = model->config();
    auto x = torch::from_blob(const_cast<float*>(frames), {1, t, mc.channels, mc.image_size,
                                                           mc.image_size},
                              torch::kFloat32)
                 .to(model->parameters().front().scalar_type());
    auto g = model->posterior_recurrence(model->encode_motion(x));
    auto flow = model->decode_flow(g.slice(1, 1)).squeeze(0).to(torch::kFloat32).contiguous();
    std::memcpy(out, flow.data_ptr<float>(), sizeof(float) * flow.numel());
  });
}

svp_status svp_write_frame_grid_png(const char* path, const float* frames, int64_t rows,
                                    int64_t cols, int64_t c, int64_t h, int64_t w) {
  if (!path || !frames || rows <= 0 || cols <= 0)
    return fail(SVP_ERR_INVALID_ARGUMENT, "bad grid arguments");
  return guard([&] {
    std::vector<std::vector<svp::Image>> grid(static_cast<size_t>(rows));
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t q = 0; q < cols; ++q)
        grid[r].push_back(tile(frames + (r * cols + q) * c * h * w, c, h, w));
    svp::write_png(svp::tile_grid(grid), path);
  });
}

svp_status svp_write_gif(const char* path, const float* frames, int64_t n, int64_t rows,
                         int64_t c, int64_t h, int64_t w, int delay_cs) {
  if (!path || !frames || n <= 0 || rows <= 0)
    return fail(SVP_ERR_INVALID_ARGUMENT, "bad GIF arguments");
  return guard([&] {
    std::vector<svp::Image> anim;
    for (int64_t i = 0; i < n; ++i) {
      std::vector<std::vector<svp::Image>> grid;
      for (int64_t r = 0; r < rows; ++r)
        grid.push_back({tile(frames + (i * rows + r) * c * h * w, c, h, w)});
      anim.push_back(svp::tile_grid(grid));
    }
    svp::write_gif(anim, path, delay_cs);
  });
}

svp_status svp_write_flow_png(const char* path, const float* flows, int64_t n, int64_t h,
                              int64_t w) {
  if (!path || !flows || n <= 0) return fail(SVP_ERR_INVALID_ARGUMENT, "bad flow arguments");
  return guard([&] {
    double max_mag = 0;
    const int64_t px = h * w;
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < px; ++j)
        max_mag = std::max(max_mag, std::hypot(double(flows[i * 2 * px + j]),
                                               double(flows[i * 2 * px + px + j])));
    std::vector<std::vector<svp::Image>> grid(1);
    for (int64_t i = 0; i < n; ++i)
      grid[0].push_back(svp::flow_to_color({flows + i * 2 * px, static_cast<size_t>(2 * px)}, h, w,
                                           max_mag));
    svp::write_png(svp::tile_grid(grid), path);
  });
}

svp_status svp_write_plot_png(const char* path, const double* values, int64_t n_series,
                              int64_t length) {
  if (!path || !values || n_series <= 0 || length <= 0)
    return fail(SVP_ERR_INVALID_ARGUMENT, "bad plot arguments");
  return guard([&] {
    static const std::array<std::array<uint8_t, 3>, 4> colors{
        {{0, 0, 0}, {30, 90, 220}, {210, 40, 40}, {30, 150, 60}}};
    std::vector<svp::PlotSeries> series;
    for (int64_t s = 0; s < n_series; ++s)
      series.push_back({std::vector<double>(values + s * length, values + (s + 1) * length),
                        colors[static_cast<size_t>(s) % colors.size()]});
    svp::write_png(svp::plot_series(series), path);
  });
}

}  // extern "C"
