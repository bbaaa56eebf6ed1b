#include <gtest/gtest.h>

#include "support.hpp"
#include "svp/errors.hpp"
#include "svp/model.hpp"

using namespace svp;
using svp::testing::small_config;

TEST(PosteriorRecurrence, CausalAndDeterministic) {
  auto cfg = small_config();
  PosteriorRecurrence rnn(cfg);
  auto h = torch::randn({2, 6, cfg.d_h});
  auto g = rnn->forward(h);
  EXPECT_EQ(g.sizes(), (std::vector<int64_t>{2, 6, cfg.rnn_width}));
  EXPECT_TRUE(torch::equal(g, rnn->forward(h)));
  auto h2 = h.clone();
  h2.select(1, 4).add_(3.0);
  auto g2 = rnn->forward(h2);
  EXPECT_TRUE(torch::equal(g.slice(1, 0, 4), g2.slice(1, 0, 4)));
  EXPECT_FALSE(torch::equal(g.select(1, 4), g2.select(1, 4)));
  EXPECT_EQ(rnn->forward(h.slice(1, 0, 1)).size(1), 1);
  EXPECT_THROW(rnn->forward(torch::randn({2, 0, cfg.d_h})), ShapeError);
}

TEST(GaussianHeads, ScalePositive) {
  auto cfg = small_config();
  VideoModel m(cfg);
  auto p = m->local_posterior(torch::randn({1000, cfg.rnn_width}) * 10);
  EXPECT_EQ(p.dim(), cfg.d_z);
  EXPECT_GT(p.scale.min().item<double>(), 0);
  auto q = m->local_prior(torch::randn({1000, cfg.d_y}) * 10);
  EXPECT_GT(q.scale.min().item<double>(), 0);
  EXPECT_THROW(m->local_prior(torch::randn({3, cfg.d_y + 1})), ShapeError);
}

TEST(GaussianHeads, ZeroWeightsGiveSoftplusBias) {
  auto cfg = small_config();
  cfg.head_hidden = 0;  // single affine layer
  VideoModel m(cfg);
  auto& fc = m->posterior_head()->mlp()->final_layer();
  {
    torch::NoGradGuard g;
    fc->weight.zero_();
    fc->bias.slice(0, 0, cfg.d_z).zero_();
    fc->bias.slice(0, cfg.d_z).fill_(0.3);
  }
  auto p = m->local_posterior(torch::randn({5, cfg.rnn_width}));
  EXPECT_TRUE(torch::allclose(p.mean, torch::zeros_like(p.mean)));
  const double expect = std::log1p(std::exp(0.3)) + cfg.scale_floor;
  EXPECT_TRUE(torch::allclose(p.scale, torch::full_like(p.scale, expect), 0, 1e-6));
}

TEST(GaussianHeads, TinyPriorHandEvaluation) {
  GaussianHead head(1, 0, 1, 1e-4);
  {
    torch::NoGradGuard g;
    auto& fc = head->mlp()->final_layer();
    fc->weight.copy_(torch::tensor({{2.0f}, {-1.0f}}));
    fc->bias.copy_(torch::tensor({0.5f, 0.25f}));
  }
  auto p = head->forward(torch::tensor({{1.5f}}));
  EXPECT_NEAR(p.mean.item<double>(), 3.5, 1e-6);
  EXPECT_NEAR(p.scale.item<double>(), std::log1p(std::exp(-1.25)) + 1e-4, 1e-6);
}

TEST(InitialPosterior, NeedsTwoFeatures) {
  auto cfg = small_config();
  VideoModel m(cfg);
  auto h = torch::randn({3, cfg.d_h});
  auto same = m->initial_motion_posterior(h, h);
  auto diff = m->initial_motion_posterior(h, torch::randn({3, cfg.d_h}));
  EXPECT_EQ(same.dim(), cfg.d_y);
  EXPECT_TRUE(torch::isfinite(same.mean).all().item<bool>());
  EXPECT_TRUE(torch::isfinite(diff.scale).all().item<bool>());
  EXPECT_THROW(m->initial_motion_posterior(h, torch::Tensor()), ShapeError);
}

TEST(GlobalDynamics, SharedModuleServesAnyLength) {
  auto cfg = small_config();
  VideoModel m(cfg);
  EXPECT_EQ(m->global_prior_module().ptr().get(), m->global_posterior_module().ptr().get());
  auto h = torch::randn({2, 7, cfg.d_h});
  EXPECT_EQ(m->global_dynamics(h).dim(), cfg.d_g);
  EXPECT_EQ(m->global_dynamics(h.slice(1, 0, 3)).dim(), cfg.d_g);
  EXPECT_EQ(m->global_dynamics(h.slice(1, 0, 1)).dim(), cfg.d_g);
  EXPECT_THROW(m->global_dynamics(h.slice(1, 0, 0)), ShapeError);
}

TEST(GlobalDynamics, PositionalEncodingMakesOrderMatter) {
  for (auto pooling : {Pooling::SummaryToken, Pooling::Mean}) {
    auto cfg = small_config();
    cfg.pooling = pooling;
    VideoModel m(cfg);
    auto h = torch::randn({1, 5, cfg.d_h});
    auto rev = h.flip(1);
    auto a = m->global_dynamics(h), b = m->global_dynamics(rev);
    EXPECT_FALSE(torch::allclose(a.mean, b.mean, 0, 1e-7));
  }
}

TEST(MotionStep, ResidualIdentityAtInit) {
  auto cfg = small_config();
  VideoModel m(cfg);
  auto y = torch::randn({4, cfg.d_y});
  EXPECT_TRUE(torch::equal(m->motion_step(y, torch::randn({4, cfg.d_z}), torch::randn({4, cfg.d_g})), y));
  EXPECT_THROW(m->motion_step(y, torch::randn({4, cfg.d_z + 1}), torch::randn({4, cfg.d_g})),
               ShapeError);
  EXPECT_THROW(m->motion_step_no_global(y, torch::randn({4, cfg.d_z})), ConfigError);
}

TEST(MotionStep, OneDimensionalHandEvaluation) {
  ResidualTransition step(1, 2, std::vector<int64_t>{});
  {
    torch::NoGradGuard g;
    auto& fc = step->mlp()->final_layer();
    fc->weight.copy_(torch::tensor({{0.5f, -1.0f, 2.0f}}));
    fc->bias.fill_(0.1f);
  }
  // y + 0.5 y - z + 2 z1 + 0.1 with y = 2, z = 0.5, z1 = -0.25
  auto out = step->forward(torch::tensor({{2.0f}}), torch::tensor({{0.5f, -0.25f}}));
  EXPECT_NEAR(out.item<double>(), 2.0 + 1.0 - 0.5 - 0.5 + 0.1, 1e-6);
}

TEST(MotionStep, NoGlobalVariant) {
  auto cfg = small_config(Mode::NoGlobal);
  VideoModel m(cfg);
  auto y = torch::randn({2, cfg.d_y});
  auto z = torch::randn({2, cfg.d_z});
  EXPECT_TRUE(torch::equal(m->motion_step_no_global(y, z), y));
  {
    torch::NoGradGuard g;
    m->motion_transition()->mlp()->final_layer()->weight.normal_();
  }
  EXPECT_EQ(m->motion_step_no_global(y, z).sizes(), y.sizes());
  EXPECT_THROW(m->motion_step(y, z, torch::randn({2, cfg.d_g})), ConfigError);
  EXPECT_THROW(m->global_dynamics(torch::randn({2, 3, cfg.d_h})), ConfigError);
  EXPECT_EQ(m->motion_transition()->cond_dim(), cfg.d_z);
}
