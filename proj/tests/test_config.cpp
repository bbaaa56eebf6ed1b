#include <gtest/gtest.h>

#include "svp/config.hpp"
#include "svp/errors.hpp"
#include "svp/rng.hpp"

using namespace svp;

TEST(Config, DefaultsValidate) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  auto parsed = parse_run_config("{}");
  EXPECT_EQ(parsed, c);
}

TEST(Config, JsonRoundTrip) {
  RunConfig c;
  c.seed = 42;
  c.model.mode = Mode::NoGlobal;
  c.model.pooling = Pooling::Mean;
  c.model.appearance_source = AppearanceSource::Encoded;
  c.model.cond_latents = CondLatents::Prior;
  c.train.weights.flow = 0.5;
  c.train.split = {0.5, 0.25, 0.25};
  c.eval.aggregation = Aggregation::BestOfN;
  const Json j = c;
  EXPECT_EQ(parse_run_config(j.dump()), c);
  EXPECT_EQ(j["model"]["mode"], "no_z1");
}

TEST(Config, PartialOverridesKeepDefaults) {
  auto c = parse_run_config(R"({"model": {"mode": "no_w"}, "train": {"steps": 7}})");
  EXPECT_EQ(c.model.mode, Mode::NoAppearance);
  EXPECT_EQ(c.train.steps, 7);
  EXPECT_EQ(c.train.batch_size, TrainConfig{}.batch_size);
}

TEST(Config, RejectsBadInput) {
  for (const char* text :
       {"not json", R"({"unknown": 1})", R"({"model": {"d_y": 0}})",
        R"({"model": {"mode": "both"}})", R"({"model": {"image_size": 30}})",
        R"({"train": {"k": 1}})", R"({"train": {"sigma_obs": -1}})",
        R"({"train": {"split": [0.5, 0.5, 0.5]}})", R"({"train": {"steps": "many"}})",
        R"({"train": {"weights": {"flow": -1}}})", R"({"eval": {"n_samples": 0}})",
        R"({"eval": {"aggregation": "median"}})", R"({"model": {"patch_size": 5}})"})
    EXPECT_THROW(parse_run_config(text), ConfigError) << text;
}

TEST(Config, ModeNames) {
  for (auto m : {Mode::Full, Mode::NoAppearance, Mode::NoGlobal})
    EXPECT_EQ(mode_from_string(to_string(m)), m);
  EXPECT_THROW(mode_from_string("x"), ConfigError);
}

TEST(Rng, StateRoundTripAndDerive) {
  Rng a(3);
  a.normal();
  const auto s = a.state();
  const double next = a.normal();
  Rng b;
  b.set_state(s);
  EXPECT_EQ(b.normal(), next);
  EXPECT_NE(Rng::derive(1, 0).next_u64(), Rng::derive(1, 1).next_u64());
  EXPECT_EQ(Rng::derive(1, 5).next_u64(), Rng::derive(1, 5).next_u64());
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    const auto k = a.index(7);
    EXPECT_GE(k, 0);
    EXPECT_LT(k, 7);
  }
}

TEST(Rng, NormalMoments) {
  Rng r(11);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal();
    s += v;
    s2 += v * v;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.015);
}
