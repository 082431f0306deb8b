#include "sedenet/model.hpp"

#include <cmath>
#include <stdexcept>

namespace sedenet {
namespace {

constexpr size_t kComp = ComponentLayout::kComponents;

void add_inplace(Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("elementwise add shape mismatch");
  for (size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

Conv2dSpec conv3x3(size_t ci, size_t co) {
  return Conv2dSpec{ci, co, 3, 3, 1, 1};
}

HxConvSpec hx3x3(size_t ci, size_t co) {
  return HxConvSpec{ci, co, 3, 3, 1, 1, false};
}

}  // namespace

void validate_config(const ModelConfig& cfg) {
  if (cfg.depth < 1) throw std::invalid_argument("depth must be >= 1");
  if (cfg.per_component_widths.size() != cfg.depth + 1) {
    throw std::invalid_argument("per_component_widths needs depth+1 entries");
  }
  for (size_t w : cfg.per_component_widths) {
    if (w == 0) throw std::invalid_argument("per_component_widths entries must be positive");
  }
  if (cfg.blocks_per_group < 1) throw std::invalid_argument("blocks_per_group must be >= 1");
  if (cfg.frames_in != 12) {
    throw std::invalid_argument("frames_in must be 12 (components 1..12 carry the history)");
  }
  if (cfg.frames_out == 0 || cfg.frames_out != cfg.output_components.size()) {
    throw std::invalid_argument("output_components must list one component per output frame");
  }
  for (size_t k : cfg.output_components) {
    if (k < 1 || k > 12) {
      throw std::invalid_argument("output_components must lie in [1,12]");
    }
  }
  if (cfg.upsample != "nearest") {
    throw std::invalid_argument("upsample mode must be \"nearest\"");
  }
  if (cfg.in_dynamic_channels == 0 || cfg.in_static_channels == 0 ||
      cfg.out_channels_per_frame == 0) {
    throw std::invalid_argument("channel counts must be positive");
  }
}

// ---- RealConv ----

RealConv::RealConv(const Conv2dSpec& spec, bool bias, Prng& rng)
    : spec_(spec), has_bias_(bias) {
  weight_ = Tensor({spec.out_channels, spec.in_channels, spec.kernel_h, spec.kernel_w});
  grad_weight_ = Tensor(weight_.shape());
  const double fan_in = static_cast<double>(spec.in_channels * spec.kernel_h * spec.kernel_w);
  const double fan_out = static_cast<double>(spec.out_channels * spec.kernel_h * spec.kernel_w);
  const float bound = static_cast<float>(std::sqrt(6.0 / (fan_in + fan_out)));
  for (size_t i = 0; i < weight_.size(); ++i) weight_[i] = rng.uniform_float(-bound, bound);
  if (has_bias_) {
    bias_ = Tensor({spec.out_channels});
    grad_bias_ = Tensor(bias_.shape());
  }
}

Tensor RealConv::forward(const Tensor& x, bool train) {
  if (train) input_cache_ = x;
  Tensor out = conv2d(x, weight_, spec_);
  if (has_bias_) add_channel_bias(out, bias_);
  return out;
}

Tensor RealConv::backward(const Tensor& grad_out) {
  if (input_cache_.empty()) throw std::logic_error("RealConv backward without forward");
  Conv2dGrads g = conv2d_backward(input_cache_, weight_, grad_out, spec_);
  add_inplace(grad_weight_, g.grad_weight);
  if (has_bias_) add_inplace(grad_bias_, channel_bias_grad(grad_out));
  return std::move(g.grad_input);
}

void RealConv::zero_grad() {
  grad_weight_.fill(0.0f);
  if (has_bias_) grad_bias_.fill(0.0f);
}

void RealConv::collect(const std::string& prefix, std::vector<ParamRef>& params) {
  params.push_back({prefix + ".weight", &weight_, &grad_weight_});
  if (has_bias_) params.push_back({prefix + ".bias", &bias_, &grad_bias_});
}

size_t RealConv::param_count() const {
  return weight_.size() + (has_bias_ ? bias_.size() : 0);
}

// ---- BatchNorm ----

BatchNorm::BatchNorm(size_t channels)
    : gamma_({channels}, 1.0f),
      beta_({channels}, 0.0f),
      grad_gamma_({channels}, 0.0f),
      grad_beta_({channels}, 0.0f),
      running_mean_({channels}, 0.0f),
      running_var_({channels}, 1.0f) {}

Tensor BatchNorm::forward(const Tensor& x, bool train) {
  return batchnorm_forward(x, gamma_, beta_, running_mean_, running_var_,
                           train ? BnMode::kTrain : BnMode::kEval, momentum_,
                           eps_, train ? &cache_ : nullptr);
}

Tensor BatchNorm::backward(const Tensor& grad_out) {
  BnGrads g = batchnorm_backward(cache_, grad_out);
  add_inplace(grad_gamma_, g.grad_gamma);
  add_inplace(grad_beta_, g.grad_beta);
  return std::move(g.grad_input);
}

void BatchNorm::zero_grad() {
  grad_gamma_.fill(0.0f);
  grad_beta_.fill(0.0f);
}

void BatchNorm::collect(const std::string& prefix, std::vector<ParamRef>& params,
                        std::vector<BufferRef>& buffers) {
  params.push_back({prefix + ".gamma", &gamma_, &grad_gamma_});
  params.push_back({prefix + ".beta", &beta_, &grad_beta_});
  buffers.push_back({prefix + ".running_mean", &running_mean_});
  buffers.push_back({prefix + ".running_var", &running_var_});
}

// ---- HxConvNode ----

Tensor HxConvNode::forward(const Tensor& x, bool train) {
  if (train) input_cache_ = x;
  return layer_.forward(x);
}

Tensor HxConvNode::backward(const Tensor& grad_out) {
  if (input_cache_.empty()) throw std::logic_error("hxconv backward without forward");
  return layer_.backward(input_cache_, grad_out);
}

void HxConvNode::collect(const std::string& prefix, std::vector<ParamRef>& params) {
  params.push_back({prefix + ".banks", &layer_.banks(), &layer_.grad_banks()});
  if (layer_.has_bias()) {
    params.push_back({prefix + ".bias", &layer_.bias(), &layer_.grad_bias()});
  }
}

// ---- LearnVectorBlock ----

LearnVectorBlock::LearnVectorBlock(size_t in_channels, size_t out_channels, Prng& rng)
    : conv1_(conv3x3(in_channels, out_channels), /*bias=*/false, rng),
      conv2_(conv3x3(out_channels, out_channels), /*bias=*/true, rng),
      bn_(out_channels) {}

Tensor LearnVectorBlock::forward(const Tensor& x, bool train) {
  if (x.rank() != 4) throw std::invalid_argument("learn_vector input must be [N,C,H,W]");
  Tensor y = conv1_.forward(x, train);
  Tensor t = bn_.forward(y, train);
  if (train) bn_out_cache_ = t;
  return conv2_.forward(relu(t), train);
}

Tensor LearnVectorBlock::backward(const Tensor& grad_out) {
  Tensor ga = conv2_.backward(grad_out);
  Tensor gt = relu_backward(bn_out_cache_, ga);
  Tensor gy = bn_.backward(gt);
  return conv1_.backward(gy);
}

void LearnVectorBlock::zero_grad() {
  conv1_.zero_grad();
  conv2_.zero_grad();
  bn_.zero_grad();
}

void LearnVectorBlock::collect(const std::string& prefix, std::vector<ParamRef>& params,
                               std::vector<BufferRef>& buffers) {
  conv1_.collect(prefix + ".conv1", params);
  bn_.collect(prefix + ".bn", params, buffers);
  conv2_.collect(prefix + ".conv2", params);
}

// ---- ResidualBlock ----

ResidualBlock::ResidualBlock(size_t comp_in, size_t comp_out, Prng& rng)
    : bn1_(kComp * comp_in),
      bn2_(kComp * comp_out),
      conv1_(hx3x3(comp_in, comp_out), rng),
      conv2_(hx3x3(comp_out, comp_out), rng),
      has_proj_(comp_in != comp_out) {
  if (has_proj_) {
    proj_ = HxConvNode(HxConvSpec{comp_in, comp_out, 1, 1, 1, 0, false}, rng);
  }
}

Tensor ResidualBlock::forward(const Tensor& x, bool train) {
  Tensor t1 = bn1_.forward(x, train);
  if (train) pre1_cache_ = t1;
  Tensor y = conv1_.forward(relu(t1), train);
  Tensor t2 = bn2_.forward(y, train);
  if (train) pre2_cache_ = t2;
  Tensor z = conv2_.forward(relu(t2), train);
  if (has_proj_) {
    add_inplace(z, proj_.forward(x, train));
  } else {
    add_inplace(z, x);
  }
  return z;
}

Tensor ResidualBlock::backward(const Tensor& grad_out) {
  Tensor ga2 = conv2_.backward(grad_out);
  Tensor gt2 = relu_backward(pre2_cache_, ga2);
  Tensor gy = bn2_.backward(gt2);
  Tensor ga1 = conv1_.backward(gy);
  Tensor gt1 = relu_backward(pre1_cache_, ga1);
  Tensor gx = bn1_.backward(gt1);
  if (has_proj_) {
    add_inplace(gx, proj_.backward(grad_out));
  } else {
    add_inplace(gx, grad_out);
  }
  return gx;
}

void ResidualBlock::zero_grad() {
  bn1_.zero_grad();
  bn2_.zero_grad();
  conv1_.zero_grad();
  conv2_.zero_grad();
  if (has_proj_) proj_.zero_grad();
}

void ResidualBlock::collect(const std::string& prefix, std::vector<ParamRef>& params,
                            std::vector<BufferRef>& buffers) {
  bn1_.collect(prefix + ".bn1", params, buffers);
  conv1_.collect(prefix + ".conv1", params);
  bn2_.collect(prefix + ".bn2", params, buffers);
  conv2_.collect(prefix + ".conv2", params);
  if (has_proj_) proj_.collect(prefix + ".proj", params);
}

// ---- EncoderGroup ----

EncoderGroup::EncoderGroup(size_t comp_in, size_t comp_out, size_t blocks, Prng& rng) {
  blocks_.reserve(blocks);
  for (size_t b = 0; b < blocks; ++b) {
    blocks_.emplace_back(b == 0 ? comp_in : comp_out, comp_out, rng);
  }
  pool_ = HxConvNode(HxConvSpec{comp_out, comp_out, 3, 3, 2, 1, false}, rng);
}

std::pair<Tensor, Tensor> EncoderGroup::forward(const Tensor& x, bool train) {
  Tensor h = x;
  for (auto& block : blocks_) h = block.forward(h, train);
  Tensor out = pool_.forward(h, train);
  return {std::move(out), std::move(h)};
}

Tensor EncoderGroup::backward(const Tensor& grad_out, const Tensor& grad_skip) {
  Tensor g = pool_.backward(grad_out);
  add_inplace(g, grad_skip);
  for (size_t b = blocks_.size(); b-- > 0;) g = blocks_[b].backward(g);
  return g;
}

void EncoderGroup::zero_grad() {
  for (auto& block : blocks_) block.zero_grad();
  pool_.zero_grad();
}

void EncoderGroup::collect(const std::string& prefix, std::vector<ParamRef>& params,
                           std::vector<BufferRef>& buffers) {
  for (size_t b = 0; b < blocks_.size(); ++b) {
    blocks_[b].collect(prefix + ".block" + std::to_string(b), params, buffers);
  }
  pool_.collect(prefix + ".pool", params);
}

// ---- CodeBlock ----

CodeBlock::CodeBlock(size_t comp_in, size_t comp_out, Prng& rng)
    : bn_(kComp * comp_in), conv_(hx3x3(comp_in, comp_out), rng) {}

Tensor CodeBlock::forward(const Tensor& x, bool train) {
  Tensor t = bn_.forward(x, train);
  if (train) pre_cache_ = t;
  return conv_.forward(relu(t), train);
}

Tensor CodeBlock::backward(const Tensor& grad_out) {
  Tensor ga = conv_.backward(grad_out);
  Tensor gt = relu_backward(pre_cache_, ga);
  return bn_.backward(gt);
}

void CodeBlock::zero_grad() {
  bn_.zero_grad();
  conv_.zero_grad();
}

void CodeBlock::collect(const std::string& prefix, std::vector<ParamRef>& params,
                        std::vector<BufferRef>& buffers) {
  bn_.collect(prefix + ".bn", params, buffers);
  conv_.collect(prefix + ".conv", params);
}

// ---- DecoderGroup ----

DecoderGroup::DecoderGroup(size_t comp_dec, size_t comp_skip, size_t comp_out, Prng& rng)
    : reduce_(hx3x3(comp_dec + comp_skip, comp_out), rng),
      block_(comp_out, comp_out, rng),
      comp_dec_(comp_dec),
      comp_skip_(comp_skip) {}

Tensor DecoderGroup::forward(const Tensor& dec_in, const Tensor& skip, bool train) {
  Tensor up = upsample2x(dec_in);
  Tensor cat = concat_components(up, skip, comp_dec_, comp_skip_);
  Tensor y = reduce_.forward(cat, train);
  return block_.forward(y, train);
}

std::pair<Tensor, Tensor> DecoderGroup::backward(const Tensor& grad_out) {
  Tensor gy = block_.backward(grad_out);
  Tensor gcat = reduce_.backward(gy);
  auto [gup, gskip] = split_components(gcat, comp_dec_, comp_skip_);
  return {upsample2x_backward(gup), std::move(gskip)};
}

void DecoderGroup::zero_grad() {
  reduce_.zero_grad();
  block_.zero_grad();
}

void DecoderGroup::collect(const std::string& prefix, std::vector<ParamRef>& params,
                           std::vector<BufferRef>& buffers) {
  reduce_.collect(prefix + ".reduce", params);
  block_.collect(prefix + ".block", params, buffers);
}

// ---- layout helpers ----

Tensor concat_components(const Tensor& a, const Tensor& b, size_t ca, size_t cb) {
  if (a.rank() != 4 || b.rank() != 4 || a.dim(0) != b.dim(0) ||
      a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3) ||
      a.dim(1) != kComp * ca || b.dim(1) != kComp * cb) {
    throw std::invalid_argument("concat_components shape mismatch");
  }
  const size_t n = a.dim(0), hw = a.dim(2) * a.dim(3);
  Tensor out({n, kComp * (ca + cb), a.dim(2), a.dim(3)});
  for (size_t i = 0; i < n; ++i) {
    for (size_t k = 0; k < kComp; ++k) {
      float* dst = out.data() + ((i * kComp + k) * (ca + cb)) * hw;
      const float* pa = a.data() + ((i * kComp + k) * ca) * hw;
      std::copy(pa, pa + ca * hw, dst);
      const float* pb = b.data() + ((i * kComp + k) * cb) * hw;
      std::copy(pb, pb + cb * hw, dst + ca * hw);
    }
  }
  return out;
}

std::pair<Tensor, Tensor> split_components(const Tensor& cat, size_t ca, size_t cb) {
  if (cat.rank() != 4 || cat.dim(1) != kComp * (ca + cb)) {
    throw std::invalid_argument("split_components shape mismatch");
  }
  const size_t n = cat.dim(0), h = cat.dim(2), w = cat.dim(3), hw = h * w;
  Tensor a({n, kComp * ca, h, w});
  Tensor b({n, kComp * cb, h, w});
  for (size_t i = 0; i < n; ++i) {
    for (size_t k = 0; k < kComp; ++k) {
      const float* src = cat.data() + ((i * kComp + k) * (ca + cb)) * hw;
      std::copy(src, src + ca * hw, a.data() + ((i * kComp + k) * ca) * hw);
      std::copy(src + ca * hw, src + (ca + cb) * hw,
                b.data() + ((i * kComp + k) * cb) * hw);
    }
  }
  return {std::move(a), std::move(b)};
}

PackedInput pack_input(const Tensor& static_features,
                       const std::vector<Tensor>& dynamic_frames) {
  if (static_features.rank() != 4) {
    throw std::invalid_argument("pack_input static features must be [N,C,H,W]");
  }
  if (dynamic_frames.size() != 12) {
    throw std::invalid_argument("pack_input needs exactly 12 dynamic frames");
  }
  const size_t n = static_features.dim(0), cg = static_features.dim(1),
               h = static_features.dim(2), w = static_features.dim(3);
  for (const Tensor& f : dynamic_frames) {
    if (!f.same_shape(static_features)) {
      throw std::invalid_argument("pack_input dynamic frame channel/shape mismatch");
    }
  }
  PackedInput packed{Tensor({n, kComp * cg, h, w})};
  const size_t chw = cg * h * w;
  for (size_t i = 0; i < n; ++i) {
    float* base = packed.tensor.data() + i * kComp * chw;
    std::copy(static_features.data() + i * chw, static_features.data() + (i + 1) * chw,
              base);
    for (size_t k = 0; k < 12; ++k) {
      const float* src = dynamic_frames[k].data() + i * chw;
      std::copy(src, src + chw, base + (k + 1) * chw);
    }
    // components 13..15 stay zero
  }
  return packed;
}

// ---- SedUNet ----

SedUNet::SedUNet(const ModelConfig& cfg, Prng& rng) : cfg_(cfg) {
  validate_config(cfg_);
  const auto& w = cfg_.per_component_widths;
  learn_vector_ = LearnVectorBlock(cfg_.in_static_channels, cfg_.in_dynamic_channels, rng);
  encoders_.reserve(cfg_.depth);
  for (size_t i = 0; i < cfg_.depth; ++i) {
    encoders_.emplace_back(i == 0 ? cfg_.in_dynamic_channels : w[i - 1], w[i],
                           cfg_.blocks_per_group, rng);
  }
  code_ = CodeBlock(w[cfg_.depth - 1], w[cfg_.depth], rng);
  decoders_.reserve(cfg_.depth);
  for (size_t j = 0; j < cfg_.depth; ++j) {
    const size_t dec_in = j == 0 ? w[cfg_.depth] : w[cfg_.depth - j];
    const size_t skip = w[cfg_.depth - 1 - j];
    decoders_.emplace_back(dec_in, skip, skip, rng);
  }
  HxConvSpec final_spec = hx3x3(w[0], cfg_.out_channels_per_frame);
  final_spec.bias = cfg_.final_bias;
  // The regression head starts from the zero map so early training is not
  // spent unlearning a random projection of the trunk.
  final_ = HxConvNode(final_spec, rng, HxInit::kZero);
}

Tensor SedUNet::forward(const Tensor& static_input,
                        const std::vector<Tensor>& dynamic_frames, bool train) {
  if (static_input.rank() != 4 || static_input.dim(1) != cfg_.in_static_channels) {
    throw std::invalid_argument("static input must be [N," +
                                std::to_string(cfg_.in_static_channels) + ",H,W]");
  }
  const size_t h = static_input.dim(2), wdt = static_input.dim(3);
  const size_t div = size_t{1} << cfg_.depth;
  if (h % div != 0 || wdt % div != 0) {
    throw std::invalid_argument("spatial dims must be divisible by 2^depth");
  }
  Tensor sf = learn_vector_.forward(static_input, train);
  Tensor x = pack_input(sf, dynamic_frames).tensor;
  skip_cache_.clear();
  skip_cache_.reserve(cfg_.depth);
  for (auto& enc : encoders_) {
    auto [out, skip] = enc.forward(x, train);
    x = std::move(out);
    skip_cache_.push_back(std::move(skip));
  }
  x = code_.forward(x, train);
  for (size_t j = 0; j < decoders_.size(); ++j) {
    x = decoders_[j].forward(x, skip_cache_[cfg_.depth - 1 - j], train);
  }
  return final_.forward(x, train);
}

void SedUNet::backward(const Tensor& grad_out) {
  Tensor g = final_.backward(grad_out);
  std::vector<Tensor> grad_skips(cfg_.depth);
  for (size_t j = decoders_.size(); j-- > 0;) {
    auto [gdec, gskip] = decoders_[j].backward(g);
    g = std::move(gdec);
    grad_skips[cfg_.depth - 1 - j] = std::move(gskip);
  }
  g = code_.backward(g);
  for (size_t i = encoders_.size(); i-- > 0;) {
    g = encoders_[i].backward(g, grad_skips[i]);
  }
  // Only component 0 of the packed input is learned; frames are data.
  const size_t n = g.dim(0), cg = cfg_.in_dynamic_channels, hw = g.dim(2) * g.dim(3);
  Tensor gsf({n, cg, g.dim(2), g.dim(3)});
  for (size_t i = 0; i < n; ++i) {
    const float* src = g.data() + i * kComp * cg * hw;
    std::copy(src, src + cg * hw, gsf.data() + i * cg * hw);
  }
  learn_vector_.backward(gsf);
}

void SedUNet::zero_grad() {
  learn_vector_.zero_grad();
  for (auto& e : encoders_) e.zero_grad();
  code_.zero_grad();
  for (auto& d : decoders_) d.zero_grad();
  final_.zero_grad();
}

std::vector<ParamRef> SedUNet::parameters() {
  std::vector<ParamRef> params;
  std::vector<BufferRef> buffers;
  learn_vector_.collect("learn_vector", params, buffers);
  for (size_t i = 0; i < encoders_.size(); ++i) {
    encoders_[i].collect("enc" + std::to_string(i), params, buffers);
  }
  code_.collect("code", params, buffers);
  for (size_t j = 0; j < decoders_.size(); ++j) {
    decoders_[j].collect("dec" + std::to_string(j), params, buffers);
  }
  final_.collect("final", params);
  return params;
}

std::vector<BufferRef> SedUNet::buffers() {
  std::vector<ParamRef> params;
  std::vector<BufferRef> buffers;
  learn_vector_.collect("learn_vector", params, buffers);
  for (size_t i = 0; i < encoders_.size(); ++i) {
    encoders_[i].collect("enc" + std::to_string(i), params, buffers);
  }
  code_.collect("code", params, buffers);
  for (size_t j = 0; j < decoders_.size(); ++j) {
    decoders_[j].collect("dec" + std::to_string(j), params, buffers);
  }
  return buffers;
}

size_t SedUNet::param_count() {
  size_t total = 0;
  for (const ParamRef& p : parameters()) total += p.value->size();
  return total;
}

Tensor select_outputs(const Tensor& net_out, const ModelConfig& cfg) {
  if (net_out.rank() != 4 || net_out.dim(1) % kComp != 0) {
    throw std::invalid_argument("select_outputs expects component-major [N,16*Cg,H,W]");
  }
  const size_t cg = net_out.dim(1) / kComp;
  if (cg != cfg.out_channels_per_frame) {
    throw std::invalid_argument("select_outputs channel layout mismatch");
  }
  const size_t n = net_out.dim(0), h = net_out.dim(2), w = net_out.dim(3), hw = h * w;
  Tensor out({n, cfg.frames_out, cg, h, w});
  for (size_t f = 0; f < cfg.frames_out; ++f) {
    const size_t k = cfg.output_components[f];
    if (k >= kComp) throw std::invalid_argument("output component index outside [0,15]");
    for (size_t i = 0; i < n; ++i) {
      const float* src = net_out.data() + ((i * kComp + k) * cg) * hw;
      float* dst = out.data() + ((i * cfg.frames_out + f) * cg) * hw;
      std::copy(src, src + cg * hw, dst);
    }
  }
  return out;
}

Tensor select_outputs_backward(const Tensor& grad_sel, const ModelConfig& cfg) {
  if (grad_sel.rank() != 5 || grad_sel.dim(1) != cfg.frames_out) {
    throw std::invalid_argument("select_outputs_backward expects [N,F,Cg,H,W]");
  }
  const size_t n = grad_sel.dim(0), cg = grad_sel.dim(2), h = grad_sel.dim(3),
               w = grad_sel.dim(4), hw = h * w;
  Tensor g({n, kComp * cg, h, w});
  for (size_t f = 0; f < cfg.frames_out; ++f) {
    const size_t k = cfg.output_components[f];
    if (k >= kComp) throw std::invalid_argument("output component index outside [0,15]");
    for (size_t i = 0; i < n; ++i) {
      const float* src = grad_sel.data() + ((i * cfg.frames_out + f) * cg) * hw;
      float* dst = g.data() + ((i * kComp + k) * cg) * hw;
      for (size_t x = 0; x < cg * hw; ++x) dst[x] += src[x];
    }
  }
  return g;
}

size_t model_param_count(const ModelConfig& cfg) {
  validate_config(cfg);
  const auto& w = cfg.per_component_widths;
  const auto bn = [](size_t comp) { return 2 * kComp * comp; };
  const auto hx = [](size_t ci, size_t co, size_t k) { return kComp * co * ci * k * k; };
  const auto res = [&](size_t ci, size_t co) {
    size_t count = bn(ci) + hx(ci, co, 3) + bn(co) + hx(co, co, 3);
    if (ci != co) count += hx(ci, co, 1);
    return count;
  };

  const size_t d = cfg.in_dynamic_channels, s = cfg.in_static_channels;
  size_t total = d * s * 9 + 2 * d + (d * d * 9 + d);  // learn_vector (conv2 has bias)
  for (size_t i = 0; i < cfg.depth; ++i) {
    const size_t ci = i == 0 ? d : w[i - 1];
    total += res(ci, w[i]);
    for (size_t b = 1; b < cfg.blocks_per_group; ++b) total += res(w[i], w[i]);
    total += hx(w[i], w[i], 3);  // strided pool
  }
  total += bn(w[cfg.depth - 1]) + hx(w[cfg.depth - 1], w[cfg.depth], 3);  // code
  for (size_t j = 0; j < cfg.depth; ++j) {
    const size_t dec_in = j == 0 ? w[cfg.depth] : w[cfg.depth - j];
    const size_t skip = w[cfg.depth - 1 - j];
    total += hx(dec_in + skip, skip, 3) + res(skip, skip);
  }
  total += hx(w[0], cfg.out_channels_per_frame, 3);
  if (cfg.final_bias) total += kComp * cfg.out_channels_per_frame;
  return total;
}

}  // namespace sedenet
