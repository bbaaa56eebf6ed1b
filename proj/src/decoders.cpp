#include "svp/decoders.hpp"

#include "svp/encoders.hpp"
#include "svp/errors.hpp"

namespace svp {

ConvDecoderImpl::ConvDecoderImpl(const ModelConfig& cfg, int64_t in_dim, int64_t out_channels,
                                 bool sigmoid)
    : in_(in_dim),
      base_channels_(conv_block_channels(cfg, cfg.conv_blocks - 1)),
      base_size_(cfg.image_size >> cfg.conv_blocks),
      sigmoid_(sigmoid) {
  proj_ = register_module("proj",
                          torch::nn::Linear(in_dim, base_channels_ * base_size_ * base_size_));
  for (int64_t b = cfg.conv_blocks - 1; b >= 0; --b) {
    const int64_t in = conv_block_channels(cfg, b);
    const int64_t out = b == 0 ? out_channels : conv_block_channels(cfg, b - 1);
    deconvs_.push_back(register_module(
        "deconv" + std::to_string(cfg.conv_blocks - 1 - b),
        torch::nn::ConvTranspose2d(
            torch::nn::ConvTranspose2dOptions(in, out, 4).stride(2).padding(1))));
  }
}

torch::Tensor ConvDecoderImpl::forward(const torch::Tensor& z) {
  check_last_dim(z, in_, "decoder input");
  auto lead = z.sizes().vec();
  lead.pop_back();
  auto x = torch::leaky_relu(proj_->forward(z.reshape({-1, in_})), 0.2)
               .view({-1, base_channels_, base_size_, base_size_});
  for (size_t i = 0; i < deconvs_.size(); ++i) {
    x = deconvs_[i]->forward(x);
    if (i + 1 < deconvs_.size()) x = torch::leaky_relu(x, 0.2);
  }
  if (sigmoid_) x = torch::sigmoid(x);
  for (int64_t d : {x.size(1), x.size(2), x.size(3)}) lead.push_back(d);
  return x.reshape(lead);
}

void ConvDecoderImpl::zero_final() {
  torch::NoGradGuard guard;
  deconvs_.back()->weight.zero_();
  deconvs_.back()->bias.zero_();
}

torch::Tensor warp(const torch::Tensor& flow, const torch::Tensor& source) {
  if (!flow.defined() || !source.defined() || flow.dim() < 3 || source.dim() < 3)
    throw ShapeError("warp expects [..., 2, H, W] flow and [..., C, H, W] source");
  if (flow.size(-3) != 2) throw ShapeError("flow must have two channels (dx, dy)");
  const int64_t h = source.size(-2), w = source.size(-1), c = source.size(-3);
  if (flow.size(-2) != h || flow.size(-1) != w)
    throw ShapeError("flow and source spatial sizes differ");
  auto lead = source.sizes().vec();
  lead.resize(lead.size() - 3);
  auto flow_lead = flow.sizes().vec();
  flow_lead.resize(flow_lead.size() - 3);
  if (lead != flow_lead) throw ShapeError("flow and source batch shapes differ");

  auto f = flow.reshape({-1, 2, h, w});
  auto src = source.reshape({-1, c, h * w});
  const int64_t n = f.size(0);
  auto opts = flow.options();
  auto gx = torch::arange(w, opts).view({1, 1, w});
  auto gy = torch::arange(h, opts).view({1, h, 1});
  auto sx = torch::clamp(gx + f.select(1, 0), 0.0, static_cast<double>(w - 1));
  auto sy = torch::clamp(gy + f.select(1, 1), 0.0, static_cast<double>(h - 1));
  auto x0 = sx.detach().floor();
  auto y0 = sy.detach().floor();
  auto x1 = torch::clamp_max(x0 + 1, static_cast<double>(w - 1));
  auto y1 = torch::clamp_max(y0 + 1, static_cast<double>(h - 1));
  auto wx = (sx - x0).unsqueeze(1);
  auto wy = (sy - y0).unsqueeze(1);

  auto gather = [&](const torch::Tensor& yy, const torch::Tensor& xx) {
    auto idx = (yy * w + xx).to(torch::kLong).view({n, 1, h * w}).expand({n, c, h * w});
    return src.gather(2, idx).view({n, c, h, w});
  };
  auto out = (1 - wx) * (1 - wy) * gather(y0, x0) + wx * (1 - wy) * gather(y0, x1) +
             (1 - wx) * wy * gather(y1, x0) + wx * wy * gather(y1, x1);
  lead.push_back(c);
  lead.push_back(h);
  lead.push_back(w);
  return out.reshape(lead);
}

torch::Tensor flow_supervision_loss(const torch::Tensor& warped, const torch::Tensor& target) {
  if (warped.sizes() != target.sizes())
    throw ShapeError("flow supervision: warped and target sequences differ in shape");
  if (warped.dim() != 5) throw ShapeError("flow supervision expects [B, T, C, H, W]");
  return (warped - target).flatten(2).norm(2, -1).sum(1).mean();
}

}  // namespace svp
