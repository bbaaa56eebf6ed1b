#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "svp/checkpoint.hpp"
#include "svp/datagen.hpp"
#include "svp/errors.hpp"
#include "svp/trainer.hpp"

using namespace svp;
using svp::testing::micro_config;
using svp::testing::small_run;
using svp::testing::TempDir;

namespace {

double hand_kl(const GaussianParams& q, const GaussianParams& p) {
  auto v = torch::log(p.scale / q.scale) +
           (q.scale.pow(2) + (q.mean - p.mean).pow(2)) / (2 * p.scale.pow(2)) - 0.5;
  return v.sum().item<double>();
}

// Independent orchestration of one training pass from the model's parts.
double scripted_total(VideoModel& m, const torch::Tensor& x, int64_t k, double sigma,
                      const TrainingNoise& noise, const LossWeights& wts) {
  torch::NoGradGuard guard;
  const int64_t b = x.size(0), t = x.size(1);
  auto hm = m->motion_encoder()->forward(x);
  auto g = m->posterior_rnn()->forward(hm);
  auto q_y1 = m->initial_head()->forward(torch::cat({hm.select(1, 0), hm.select(1, 1)}, -1));
  auto y = q_y1.mean + q_y1.scale * noise.y1;
  auto q_z1 = m->global_posterior_module()->forward(hm);
  auto p_z1 = m->global_prior_module()->forward(hm.slice(1, 0, k));
  auto z1 = q_z1.mean + q_z1.scale * noise.z1;
  std::vector<torch::Tensor> ys{y};
  double kl_local = 0;
  for (int64_t s = 1; s < t; ++s) {
    auto q = m->posterior_head()->forward(g.select(1, s));
    auto p = m->prior_head()->forward(ys.back());
    kl_local += hand_kl(q, p);
    auto z = q.mean + q.scale * noise.z.select(1, s - 1);
    ys.push_back(m->motion_transition()->forward(ys.back(), torch::cat({z, z1}, -1)));
  }
  auto hw = m->appearance_encoder()->forward(x);
  auto zt = m->appearance_rnn()->forward(hw);
  std::vector<torch::Tensor> ws{hw.select(1, 0)};
  double app = 0;
  for (int64_t s = 1; s < t; ++s) {
    auto pred = m->appearance_predictor()->forward(ws.back());
    app += (pred - zt.select(1, s - 1)).pow(2).sum(-1).sqrt().sum().item<double>();
    ws.push_back(m->appearance_transition()->forward(ws.back(), zt.select(1, s - 1)));
  }
  double recon = 0, flow = 0;
  for (int64_t s = 0; s < t; ++s) {
    auto xh = m->frame_decoder()->forward(torch::cat({ws[s], ys[s]}, -1));
    recon += ((xh - x.select(1, s)).pow(2) / (2 * sigma * sigma)).sum().item<double>() +
             static_cast<double>(b * x[0][0].numel()) * (std::log(sigma) + 0.5 * std::log(2 * M_PI));
    if (s > 0) {
      auto f = m->flow_decoder()->forward(g.select(1, s));
      auto warped = warp(f, x.select(1, s - 1));
      flow += (warped - x.select(1, s)).flatten(1).pow(2).sum(-1).sqrt().sum().item<double>();
    }
  }
  const double kl_y1 = hand_kl(q_y1, {torch::zeros_like(q_y1.mean), torch::ones_like(q_y1.scale)});
  const double kl_z1 = hand_kl(q_z1, p_z1);
  const double n = static_cast<double>(b);
  return (recon + wts.kl_y1 * kl_y1 + wts.kl_z_local * kl_local + wts.kl_z1 * kl_z1 +
          wts.flow * flow + wts.appearance * app) /
         n;
}

VideoModel micro_model(Mode mode, uint64_t seed) {
  torch::manual_seed(seed);
  VideoModel m(micro_config(mode));
  m->to(torch::kFloat64);
  svp::testing::randomize(*m, seed + 1);
  return m;
}

}  // namespace

TEST(ForwardTrain, MatchesScriptedPass) {
  auto m = micro_model(Mode::Full, 3);
  auto x = torch::rand({2, 4, 1, 2, 2}, torch::kFloat64);
  Rng rng(9);
  auto noise = draw_training_noise(rng, m->config(), 2, 4, torch::kFloat64);
  LossWeights w{0.7, 1.3, 0.4, 2.0, 0.6};
  auto fwd = m->forward_train(x, 2, 0.8, noise);
  const double total = assemble_loss(fwd.terms, w).breakdown.total;
  EXPECT_NEAR(total, scripted_total(m, x, 2, 0.8, noise, w), 1e-6);
}

TEST(ForwardTrain, ShapesAndKlSigns) {
  auto run = small_run();
  VideoModel m(run.model);
  auto x = torch::rand({3, 6, 1, 16, 16});
  Rng rng(1);
  auto fwd = m->forward_train(x, 3, 1.0, draw_training_noise(rng, run.model, 3, 6));
  EXPECT_EQ(fwd.x_hat.sizes(), x.sizes());
  EXPECT_EQ(fwd.flow.sizes(), (std::vector<int64_t>{3, 5, 2, 16, 16}));
  EXPECT_EQ(fwd.latents.y.sizes(), (std::vector<int64_t>{3, 6, run.model.d_y}));
  EXPECT_EQ(fwd.latents.w.sizes(), (std::vector<int64_t>{3, 6, run.model.d_w}));
  auto b = assemble_loss(fwd.terms, {}).breakdown;
  EXPECT_GE(b.kl_y1, 0);
  EXPECT_GE(b.kl_z_local, 0);
  EXPECT_GE(*b.kl_z1, 0);
  EXPECT_THROW(m->forward_train(x.slice(1, 0, 3), 3, 1.0, draw_training_noise(rng, run.model, 3, 3)),
               ShapeError);
}

TEST(ForwardTrain, ChainReplay) {
  auto m = micro_model(Mode::Full, 5);
  auto x = torch::rand({2, 5, 1, 2, 2}, torch::kFloat64);
  Rng rng(2);
  auto fwd = m->forward_train(x, 2, 1.0, draw_training_noise(rng, m->config(), 2, 5, torch::kFloat64));
  const auto& l = fwd.latents;
  torch::NoGradGuard g;
  for (int64_t t = 0; t + 1 < 5; ++t) {
    EXPECT_TRUE(torch::equal(l.y.select(1, t + 1), m->motion_step(l.y.select(1, t), l.z.select(1, t), l.z1)));
    EXPECT_TRUE(torch::equal(l.w.select(1, t + 1),
                             m->appearance_step(l.w.select(1, t), l.zw_tilde.select(1, t))));
  }
}

TEST(ForwardTrain, CallTraceUsesPosteriorsOnly) {
  auto run = small_run();
  VideoModel m(run.model);
  CallTrace trace;
  m->set_trace(&trace);
  Rng rng(1);
  m->forward_train(torch::rand({2, 6, 1, 16, 16}), 3, 1.0, draw_training_noise(rng, run.model, 2, 6));
  for (int t = 2; t <= 6; ++t) EXPECT_TRUE(trace.contains("sample_q_z:" + std::to_string(t)));
  for (const auto& e : trace.events) EXPECT_EQ(e.rfind("sample_p_z", 0), std::string::npos) << e;
  EXPECT_TRUE(trace.contains("sample_q_z1"));
  EXPECT_TRUE(trace.contains("flow_decoder"));
}

TEST(Rollout, PriorBeyondConditioningAndNoFlow) {
  auto run = small_run();
  for (auto cond : {CondLatents::Posterior, CondLatents::Prior}) {
    run.model.cond_latents = cond;
    VideoModel m(run.model);
    CallTrace trace;
    m->set_trace(&trace);
    Rng rng(3);
    auto out = m->rollout(torch::rand({2, 3, 1, 16, 16}), 4, rng);
    EXPECT_EQ(out.frames.sizes(), (std::vector<int64_t>{2, 4, 1, 16, 16}));
    for (int t = 2; t <= 3; ++t) {
      const bool post = cond == CondLatents::Posterior;
      EXPECT_EQ(trace.contains("sample_q_z:" + std::to_string(t)), post);
      EXPECT_EQ(trace.contains("sample_p_z:" + std::to_string(t)), !post);
    }
    for (int t = 4; t <= 7; ++t) {
      EXPECT_TRUE(trace.contains("sample_p_z:" + std::to_string(t)));
      EXPECT_FALSE(trace.contains("sample_q_z:" + std::to_string(t)));
    }
    EXPECT_TRUE(trace.contains("sample_p_z1"));
    EXPECT_FALSE(trace.contains("sample_q_z1"));
    EXPECT_FALSE(trace.contains("flow_decoder"));
    EXPECT_FALSE(trace.contains("warp"));
  }
}

TEST(Rollout, RangeSeedsAndErrors) {
  auto run = small_run();
  Trainer tr(run);
  auto data = generate_bouncing_sprites(1, 8, 8, 16, SpriteConfig{.sprite_size = 5});
  tr.train(data, 3);
  auto& m = tr.model();
  m->eval();
  auto cond = torch::rand({1, 3, 1, 16, 16});
  Rng a(1), b(1), c(2);
  auto fa = m->rollout(cond, 5, a).frames, fb = m->rollout(cond, 5, b).frames;
  auto fc = m->rollout(cond, 5, c).frames;
  EXPECT_TRUE(torch::equal(fa, fb));
  EXPECT_GT((fa - fc).abs().max().item<double>(), 0);
  EXPECT_GE(fa.min().item<double>(), 0);
  EXPECT_LE(fa.max().item<double>(), 1);
  EXPECT_THROW(m->rollout(cond.slice(1, 0, 1), 5, a), ShapeError);
  EXPECT_THROW(m->rollout(cond, 0, a), ShapeError);
}

TEST(Rollout, DecodeMasksZeroOneLatent) {
  auto run = small_run();
  VideoModel m(run.model);
  svp::testing::randomize(*m, 3, 0.2);
  auto cond = torch::rand({1, 3, 1, 16, 16});
  Rng r1(4), r2(4);
  auto joint = m->rollout(cond, 3, r1, DecodeMask::Joint);
  auto w_only = m->rollout(cond, 3, r2, DecodeMask::AppearanceOnly);
  auto expect = m->decode_frame(joint.w.slice(1, 3), torch::zeros_like(joint.y.slice(1, 3)));
  EXPECT_TRUE(torch::allclose(w_only.frames, expect));
}

TEST(Ablations, NoAppearanceHoldsWConstant) {
  auto run = small_run(Mode::NoAppearance);
  VideoModel m(run.model);
  Rng rng(1);
  auto fwd = m->forward_train(torch::rand({2, 6, 1, 16, 16}), 3, 1.0,
                              draw_training_noise(rng, run.model, 2, 6));
  for (int64_t t = 1; t < 6; ++t)
    EXPECT_TRUE(torch::equal(fwd.latents.w.select(1, t), fwd.latents.w.select(1, 0)));
  EXPECT_EQ(fwd.terms.appearance_l2.item<double>(), 0.0);
  auto out = m->rollout(torch::rand({1, 3, 1, 16, 16}), 4, rng);
  for (int64_t t = 1; t < 7; ++t) EXPECT_TRUE(torch::equal(out.w.select(1, t), out.w.select(1, 0)));
}

TEST(Ablations, NoGlobalSkipsKl) {
  auto run = small_run(Mode::NoGlobal);
  VideoModel m(run.model);
  CallTrace trace;
  m->set_trace(&trace);
  Rng rng(1);
  auto fwd = m->forward_train(torch::rand({2, 6, 1, 16, 16}), 3, 1.0,
                              draw_training_noise(rng, run.model, 2, 6));
  EXPECT_FALSE(fwd.terms.kl_z1.defined());
  EXPECT_FALSE(trace.contains("global_posterior"));
  EXPECT_TRUE(m->global_prior_module().is_empty());
}

TEST(Trainer, DeterministicSteps) {
  auto run = small_run();
  auto data = generate_bouncing_sprites(2, 10, 8, 16, SpriteConfig{.sprite_size = 5});
  Trainer a(run), b(run);
  for (int i = 0; i < 3; ++i) {
    auto la = a.training_step(a.sample_batch(data));
    auto lb = b.training_step(b.sample_batch(data));
    EXPECT_EQ(la.total, lb.total);
    EXPECT_EQ(la.to_json(), lb.to_json());
  }
}

TEST(Trainer, MetricsOneRecordPerStep) {
  auto data = generate_bouncing_sprites(2, 10, 8, 16, SpriteConfig{.sprite_size = 5});
  for (auto mode : {Mode::Full, Mode::NoGlobal, Mode::NoAppearance}) {
    Trainer tr(small_run(mode));
    std::ostringstream log;
    TrainOptions opts;
    opts.metrics = &log;
    tr.train(data, 4, opts);
    std::istringstream in(log.str());
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
      auto j = Json::parse(line);
      EXPECT_EQ(j["step"], ++n);
      EXPECT_EQ(j.contains("kl_z1"), mode != Mode::NoGlobal);
      EXPECT_GE(j["kl_y1"].get<double>(), 0);
      EXPECT_GE(j["kl_z_local"].get<double>(), 0);
    }
    EXPECT_EQ(n, 4);
  }
}

TEST(Trainer, ValidationLeavesTrainingStreamAlone) {
  auto run = small_run();
  Trainer tr(run);
  auto data = generate_bouncing_sprites(2, 4, 8, 16, SpriteConfig{.sprite_size = 5});
  const auto before = tr.rng().state();
  const double v = tr.validation_psnr(data);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_EQ(tr.rng().state(), before);
}

TEST(Trainer, KlWarmupScalesWeights) {
  auto run = small_run();
  run.train.kl_warmup_steps = 4;
  Trainer tr(run);
  EXPECT_DOUBLE_EQ(tr.effective_weights().kl_z_local, 0.25);
  EXPECT_DOUBLE_EQ(tr.effective_weights().flow, 1.0);
}

TEST(Checkpoint, ZeroStepsEqualsInitialisation) {
  TempDir dir;
  auto run = small_run();
  Trainer tr(run);
  auto data = generate_bouncing_sprites(2, 4, 8, 16, SpriteConfig{.sprite_size = 5});
  TrainOptions opts;
  opts.checkpoint_path = dir.file("c.svp");
  tr.train(data, 0, opts);
  auto back = Trainer::load(dir.file("c.svp"));
  Trainer fresh(run);
  auto pa = back.model()->named_parameters(), pb = fresh.model()->named_parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (const auto& item : pa) EXPECT_TRUE(torch::equal(item.value(), pb[item.key()])) << item.key();
  EXPECT_EQ(back.step(), 0);
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  TempDir dir;
  Trainer tr(small_run());
  auto data = generate_bouncing_sprites(2, 6, 8, 16, SpriteConfig{.sprite_size = 5});
  tr.train(data, 2);
  tr.save(dir.file("a.svp"));
  Trainer::load(dir.file("a.svp")).save(dir.file("b.svp"));
  std::ifstream a(dir.file("a.svp"), std::ios::binary), b(dir.file("b.svp"), std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_FALSE(sa.empty());
  EXPECT_EQ(sa, sb);
}

TEST(Checkpoint, ResumeMatchesUninterruptedRun) {
  TempDir dir;
  auto run = small_run();
  auto data = generate_bouncing_sprites(2, 10, 8, 16, SpriteConfig{.sprite_size = 5});
  Trainer straight(run);
  straight.train(data, 3);
  straight.save(dir.file("mid.svp"));
  auto next = straight.training_step(straight.sample_batch(data));
  auto resumed = Trainer::load(dir.file("mid.svp"));
  EXPECT_EQ(resumed.step(), 3);
  auto again = resumed.training_step(resumed.sample_batch(data));
  EXPECT_EQ(next.total, again.total);
  EXPECT_EQ(resumed.step(), 4);
}

TEST(Checkpoint, CorruptionIsDetected) {
  TempDir dir;
  Trainer tr(small_run());
  tr.save(dir.file("c.svp"));
  std::fstream f(dir.file("c.svp"), std::ios::in | std::ios::out | std::ios::binary);
  f.seekg(0, std::ios::end);
  const auto size = static_cast<std::streamoff>(f.tellg());
  f.seekp(size / 2);
  char byte;
  f.seekg(size / 2);
  f.read(&byte, 1);
  byte ^= 0x40;
  f.seekp(size / 2);
  f.write(&byte, 1);
  f.close();
  EXPECT_THROW(Trainer::load(dir.file("c.svp")), ChecksumError);
}

TEST(Checkpoint, VersionAndModeGuards) {
  TempDir dir;
  Trainer tr(small_run(Mode::NoAppearance));
  tr.save(dir.file("c.svp"));
  auto full = small_run(Mode::Full).model;
  try {
    Trainer::load(dir.file("c.svp"), &full);
    FAIL() << "expected IncompatibleError";
  } catch (const IncompatibleError& e) {
    EXPECT_NE(std::string(e.what()).find("no_w"), std::string::npos);
  }
  auto same = small_run(Mode::NoAppearance).model;
  EXPECT_NO_THROW(Trainer::load(dir.file("c.svp"), &same));

  CheckpointData d = read_checkpoint(dir.file("c.svp"));
  write_checkpoint(dir.file("v.svp"), d);
  std::fstream f(dir.file("v.svp"), std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(8);
  const uint32_t bumped = kCheckpointVersion + 1;
  f.write(reinterpret_cast<const char*>(&bumped), 4);
  f.close();
  EXPECT_THROW(read_checkpoint(dir.file("v.svp")), VersionError);
  EXPECT_THROW(read_checkpoint(dir.file("missing.svp")), IoError);
}

TEST(Checkpoint, RoundTripReproducesRollouts) {
  TempDir dir;
  Trainer tr(small_run());
  auto data = generate_bouncing_sprites(2, 6, 8, 16, SpriteConfig{.sprite_size = 5});
  tr.train(data, 2);
  tr.save(dir.file("c.svp"));
  auto back = Trainer::load(dir.file("c.svp"));
  auto cond = torch::rand({2, 3, 1, 16, 16});
  Rng r1(10), r2(10);
  tr.model()->eval();
  back.model()->eval();
  EXPECT_TRUE(torch::equal(tr.model()->rollout(cond, 5, r1).frames,
                           back.model()->rollout(cond, 5, r2).frames));
}

TEST(Causality, PosteriorIgnoresFutureFrames) {
  auto run = small_run();
  VideoModel m(run.model);
  auto x = torch::rand({1, 6, 1, 16, 16}, torch::kFloat64);
  m->to(torch::kFloat64);
  auto q = m->local_posterior(m->posterior_recurrence(m->encode_motion(x)));
  auto x2 = x.clone();
  x2.select(1, 4).uniform_();
  auto q2 = m->local_posterior(m->posterior_recurrence(m->encode_motion(x2)));
  EXPECT_LE((q.mean.slice(1, 0, 4) - q2.mean.slice(1, 0, 4)).abs().max().item<double>(), 1e-9);
  EXPECT_LE((q.scale.slice(1, 0, 4) - q2.scale.slice(1, 0, 4)).abs().max().item<double>(), 1e-9);
  EXPECT_GT((q.mean.select(1, 4) - q2.mean.select(1, 4)).abs().max().item<double>(), 0);
}
