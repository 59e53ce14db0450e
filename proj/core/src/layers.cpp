#include <cmath>

#include "dnas/layers.hpp"

namespace dnas {

namespace {

int64_t kernel_volume(Dimensionality dim, int64_t k) {
  return dim == Dimensionality::d2 ? k * k : k * k * k;
}

}  // namespace

// ---- primitives -------------------------------------------------------------

Conv::Conv(Dimensionality dim_, int64_t in_channels, int64_t out_channels, int64_t kernel,
           int stride_, int padding_, int64_t groups_, std::mt19937& rng)
    : stride(stride_), padding(padding_), groups(groups_), dim(dim_) {
  check_input(in_channels % groups_ == 0 && out_channels % groups_ == 0,
              "conv: groups=" + std::to_string(groups_) + " must divide in=" +
                  std::to_string(in_channels) + " and out=" + std::to_string(out_channels));
  Shape ws{out_channels, in_channels / groups_};
  for (int d = 0; d < (dim_ == Dimensionality::d2 ? 2 : 3); ++d) ws.push_back(kernel);
  const int64_t fan_in = (in_channels / groups_) * kernel_volume(dim_, kernel);
  const float stddev = std::sqrt(2.0f / static_cast<float>(fan_in));
  weight = Tensor::randn(ws, rng, stddev, /*requires_grad=*/true);
}

Tensor Conv::forward(const Tensor& x) const {
  return dim == Dimensionality::d2 ? conv2d(x, weight, stride, padding, groups)
                                   : conv3d(x, weight, stride, padding, groups);
}

BatchNorm::BatchNorm(int64_t channels, float eps_, float momentum_) : eps(eps_), momentum(momentum_) {
  gamma = Tensor::full({channels}, 1.0f, /*requires_grad=*/true);
  beta = Tensor::zeros({channels}, /*requires_grad=*/true);
  running_mean = Tensor::zeros({channels});
  running_var = Tensor::full({channels}, 1.0f);
}

Tensor BatchNorm::forward(const Tensor& x, bool train) {
  return batch_norm(x, gamma, beta, running_mean, running_var, train, eps, momentum);
}

Linear::Linear(int64_t in_features, int64_t out_features, std::mt19937& rng) {
  const float bound = 1.0f / std::sqrt(static_cast<float>(in_features));
  weight = Tensor::uniform({in_features, out_features}, rng, -bound, bound, /*requires_grad=*/true);
  bias = Tensor::zeros({out_features}, /*requires_grad=*/true);
}

Tensor Linear::forward(const Tensor& x) const { return fully_connected(x, weight, bias); }

// ---- student ----------------------------------------------------------------

PyConvLayer::PyConvLayer(const PyConvSpec& spec_, int64_t in_channels, Dimensionality dim,
                         std::mt19937& rng)
    : spec(spec_) {
  check_input(!spec.levels.empty(), "pyconv: at least one level required");
  for (const auto& l : spec.levels) {
    check_input(l.kernel % 2 == 1, "pyconv: kernel sizes must be odd");
    check_input(in_channels % l.groups == 0 && l.out_channels % l.groups == 0,
                "pyconv: groups=" + std::to_string(l.groups) + " must divide in channels " +
                    std::to_string(in_channels) + " and level channels " +
                    std::to_string(l.out_channels));
    levels.emplace_back(dim, in_channels, l.out_channels, l.kernel, /*stride=*/1,
                        static_cast<int>(l.padding()), l.groups, rng);
  }
}

Tensor PyConvLayer::forward(const Tensor& x) const {
  if (levels.size() == 1) return levels[0].forward(x);
  std::vector<Tensor> outs;
  outs.reserve(levels.size());
  for (const auto& l : levels) outs.push_back(l.forward(x));
  return concat(outs, /*axis=*/1);
}

void PyConvLayer::collect(const std::string& prefix, NamedTensors& params) const {
  for (size_t l = 0; l < levels.size(); ++l)
    params.push_back({prefix + ".level" + std::to_string(l) + ".weight", levels[l].weight});
}

BlockLayer::BlockLayer(const BlockSpec& spec_, int64_t in_channels, Dimensionality dim_,
                       std::mt19937& rng)
    : spec(spec_), dim(dim_), pyconv(spec_.pyconv, in_channels, dim_, rng), bn(spec_.pyconv.out_channels()) {}

Tensor BlockLayer::forward(const Tensor& x, bool train) {
  Tensor y = relu(bn.forward(pyconv.forward(x), train));
  if (dim == Dimensionality::d2)
    return spec.pool == PoolKind::max ? max_pool2d(y, 2, 2) : avg_pool2d(y, 2, 2);
  return spec.pool == PoolKind::max ? max_pool3d(y, 2, 2) : avg_pool3d(y, 2, 2);
}

void BlockLayer::collect(const std::string& prefix, NamedTensors& params, NamedTensors& buffers) {
  pyconv.collect(prefix + ".pyconv", params);
  params.push_back({prefix + ".bn.gamma", bn.gamma});
  params.push_back({prefix + ".bn.beta", bn.beta});
  buffers.push_back({prefix + ".bn.running_mean", bn.running_mean});
  buffers.push_back({prefix + ".bn.running_var", bn.running_var});
}

StudentNet::StudentNet(const ArchitectureSpec& arch_, std::mt19937& rng) : arch(arch_) {
  validate_architecture(arch);
  int64_t in_ch = arch.input_channels;
  for (const auto& bs : arch.blocks) {
    blocks.emplace_back(bs, in_ch, arch.dim, rng);
    in_ch = bs.pyconv.out_channels();
  }
  head = std::make_unique<Linear>(in_ch, arch.num_classes, rng);
}

Tensor StudentNet::forward_logits(const Tensor& x, bool train) {
  const int spatial_dims = arch.dim == Dimensionality::d2 ? 2 : 3;
  check_input(x.ndim() == spatial_dims + 2,
              "student: input rank must be " + std::to_string(spatial_dims + 2));
  check_input(x.dim(1) == arch.input_channels,
              "student: expected " + std::to_string(arch.input_channels) + " input channels, got " +
                  std::to_string(x.dim(1)));
  for (int d = 2; d < 2 + spatial_dims; ++d) {
    check_input(x.dim(d) % 16 == 0, "student: spatial extent " + std::to_string(x.dim(d)) +
                                        " must be divisible by 16 (four pooling halvings)");
  }
  Tensor y = x;
  for (auto& b : blocks) y = b.forward(y, train);
  return head->forward(global_avg_pool(y));
}

Tensor StudentNet::predict(const Tensor& x, bool train) {
  return softmax(forward_logits(x, train), 1);
}

std::vector<Tensor> StudentNet::parameters() {
  NamedTensors params, buffers;
  collect(params, buffers);
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (auto& p : params) out.push_back(p.tensor);
  return out;
}

void StudentNet::collect(NamedTensors& params, NamedTensors& buffers) {
  for (size_t b = 0; b < blocks.size(); ++b)
    blocks[b].collect("block" + std::to_string(b + 1), params, buffers);
  params.push_back({"head.weight", head->weight});
  params.push_back({"head.bias", head->bias});
}

// ---- backbone ----------------------------------------------------------------

std::string PlainBackboneConfig::to_string() const {
  std::string s = "plain:in=" + std::to_string(in_channels) + ":channels=";
  for (size_t i = 0; i < channels.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(channels[i]);
  }
  return s;
}

PlainBackboneConfig PlainBackboneConfig::from_string(const std::string& s) {
  PlainBackboneConfig cfg;
  cfg.channels.clear();
  check_input(s.rfind("plain:", 0) == 0, "unknown backbone descriptor: " + s);
  const size_t in_pos = s.find("in=");
  const size_t ch_pos = s.find(":channels=");
  check_input(in_pos != std::string::npos && ch_pos != std::string::npos,
              "malformed backbone descriptor: " + s);
  cfg.in_channels = std::stoll(s.substr(in_pos + 3, ch_pos - in_pos - 3));
  std::string list = s.substr(ch_pos + 10);
  size_t pos = 0;
  while (pos < list.size()) {
    size_t comma = list.find(',', pos);
    if (comma == std::string::npos) comma = list.size();
    cfg.channels.push_back(std::stoll(list.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  check_input(!cfg.channels.empty(), "backbone descriptor has no channels: " + s);
  return cfg;
}

PlainBackbone::PlainBackbone(const PlainBackboneConfig& cfg, std::mt19937& rng) : cfg_(cfg) {
  check_input(cfg.channels.size() >= 2, "plain backbone needs at least 2 segments");
  for (size_t n = 0; n < cfg.channels.size(); ++n) {
    Segment seg;
    if (n == 0) {
      // Entry: stride-2 conv, pool, then a full conv at the cut channels.
      const int64_t mid = std::max<int64_t>(cfg.channels[0] / 2, 8);
      seg.convs.emplace_back(Dimensionality::d2, cfg.in_channels, mid, 3, 2, 1, 1, rng);
      seg.bns.emplace_back(mid);
      seg.convs.emplace_back(Dimensionality::d2, mid, cfg.channels[0], 3, 1, 1, 1, rng);
      seg.bns.emplace_back(cfg.channels[0]);
      seg.pool_first = false;
    } else {
      seg.pool_first = true;
      seg.convs.emplace_back(Dimensionality::d2, cfg.channels[n - 1], cfg.channels[n], 3, 1, 1, 1,
                             rng);
      seg.bns.emplace_back(cfg.channels[n]);
    }
    segments_.push_back(std::move(seg));
  }
}

Tensor PlainBackbone::forward_segment(int64_t n, const Tensor& x, bool train) {
  check_input(n >= 0 && n < num_segments(), "backbone segment index out of range");
  auto& seg = segments_[static_cast<size_t>(n)];
  Tensor y = x;
  if (seg.pool_first) y = max_pool2d(y, 2, 2);
  for (size_t i = 0; i < seg.convs.size(); ++i) {
    y = relu(seg.bns[i].forward(seg.convs[i].forward(y), train));
    if (n == 0 && i == 0) y = max_pool2d(y, 2, 2);
  }
  return y;
}

void PlainBackbone::collect(const std::string& prefix, NamedTensors& params, NamedTensors& buffers) {
  for (size_t n = 0; n < segments_.size(); ++n) {
    auto& seg = segments_[n];
    for (size_t i = 0; i < seg.convs.size(); ++i) {
      const std::string base = prefix + ".seg" + std::to_string(n) + ".conv" + std::to_string(i);
      params.push_back({base + ".weight", seg.convs[i].weight});
      params.push_back({base + ".bn.gamma", seg.bns[i].gamma});
      params.push_back({base + ".bn.beta", seg.bns[i].beta});
      buffers.push_back({base + ".bn.running_mean", seg.bns[i].running_mean});
      buffers.push_back({base + ".bn.running_var", seg.bns[i].running_var});
    }
  }
}

// ---- teacher heads -------------------------------------------------------------

StageDescriptor::StageDescriptor(int64_t in_channels, int64_t descriptor_len, std::mt19937& rng)
    : reduce(Dimensionality::d2, in_channels, descriptor_len / 2, 1, 1, 0, 1, rng),
      bn1(descriptor_len / 2),
      expand(Dimensionality::d2, descriptor_len / 2, descriptor_len, 3, 1, 1, 1, rng),
      bn2(descriptor_len) {
  check_input(descriptor_len % 2 == 0, "descriptor length must be even");
}

Tensor StageDescriptor::forward(const Tensor& feature_map, bool train) {
  Tensor y = relu(bn1.forward(reduce.forward(feature_map), train));
  y = relu(bn2.forward(expand.forward(y), train));
  return global_max_pool(y);
}

void StageDescriptor::collect(const std::string& prefix, NamedTensors& params,
                              NamedTensors& buffers) {
  params.push_back({prefix + ".reduce.weight", reduce.weight});
  params.push_back({prefix + ".bn1.gamma", bn1.gamma});
  params.push_back({prefix + ".bn1.beta", bn1.beta});
  buffers.push_back({prefix + ".bn1.running_mean", bn1.running_mean});
  buffers.push_back({prefix + ".bn1.running_var", bn1.running_var});
  params.push_back({prefix + ".expand.weight", expand.weight});
  params.push_back({prefix + ".bn2.gamma", bn2.gamma});
  params.push_back({prefix + ".bn2.beta", bn2.beta});
  buffers.push_back({prefix + ".bn2.running_mean", bn2.running_mean});
  buffers.push_back({prefix + ".bn2.running_var", bn2.running_var});
}

StageClassifier::StageClassifier(int64_t in_features, int64_t hidden, int64_t num_classes,
                                 std::mt19937& rng)
    : bn_in(in_features), fc1(in_features, hidden, rng), bn_mid(hidden), fc2(hidden, num_classes, rng) {}

Tensor StageClassifier::forward_logits(const Tensor& v, bool train) {
  Tensor y = bn_in.forward(v, train);
  y = relu(bn_mid.forward(fc1.forward(y), train));
  return fc2.forward(y);
}

Tensor StageClassifier::forward(const Tensor& v, bool train) {
  return softmax(forward_logits(v, train), 1);
}

void StageClassifier::collect(const std::string& prefix, NamedTensors& params,
                              NamedTensors& buffers) {
  params.push_back({prefix + ".bn_in.gamma", bn_in.gamma});
  params.push_back({prefix + ".bn_in.beta", bn_in.beta});
  buffers.push_back({prefix + ".bn_in.running_mean", bn_in.running_mean});
  buffers.push_back({prefix + ".bn_in.running_var", bn_in.running_var});
  params.push_back({prefix + ".fc1.weight", fc1.weight});
  params.push_back({prefix + ".fc1.bias", fc1.bias});
  params.push_back({prefix + ".bn_mid.gamma", bn_mid.gamma});
  params.push_back({prefix + ".bn_mid.beta", bn_mid.beta});
  buffers.push_back({prefix + ".bn_mid.running_mean", bn_mid.running_mean});
  buffers.push_back({prefix + ".bn_mid.running_var", bn_mid.running_var});
  params.push_back({prefix + ".fc2.weight", fc2.weight});
  params.push_back({prefix + ".fc2.bias", fc2.bias});
}

// ---- teacher -------------------------------------------------------------------

TeacherNet::TeacherNet(std::unique_ptr<Backbone> backbone_, const TeacherConfig& cfg_,
                       std::mt19937& rng)
    : backbone(std::move(backbone_)), cfg(cfg_) {
  check_input(backbone != nullptr, "teacher: backbone required");
  const int64_t n = backbone->num_segments();
  check_input(n >= 2, "teacher: progressive learning needs at least 2 stages, got " +
                          std::to_string(n));
  check_input(cfg.descriptor_len >= 2 && cfg.descriptor_len % 2 == 0,
              "teacher: descriptor length must be even and >= 2");
  check_input(cfg.num_classes >= 2, "teacher: need at least 2 classes");
  const int64_t L = cfg.descriptor_len;
  for (int64_t i = 0; i < n; ++i) {
    phi.emplace_back(backbone->segment_out_channels(i), L, rng);
    psi.emplace_back(L, L / 2, cfg.num_classes, rng);
  }
  psi_agg = std::make_unique<StageClassifier>(n * L, L / 2, cfg.num_classes, rng);
}

Tensor TeacherNet::stage_descriptor_value(const Tensor& input, int64_t n, bool train) {
  check_input(n >= 0 && n < num_stages(), "teacher: stage index out of range");
  Tensor x = input;
  for (int64_t i = 0; i <= n; ++i) x = backbone->forward_segment(i, x, train);
  return phi[static_cast<size_t>(n)].forward(x, train);
}

Tensor TeacherNet::stage_prediction(const Tensor& v, int64_t n, bool train) {
  check_input(n >= 0 && n < num_stages(), "teacher: stage index out of range");
  return psi[static_cast<size_t>(n)].forward(v, train);
}

std::vector<Tensor> TeacherNet::forward_all(const Tensor& input, bool train) {
  const int64_t n = num_stages();
  std::vector<Tensor> descriptors;
  std::vector<Tensor> preds;
  Tensor x = input;
  for (int64_t i = 0; i < n; ++i) {
    x = backbone->forward_segment(i, x, train);
    Tensor v = phi[static_cast<size_t>(i)].forward(x, train);
    descriptors.push_back(v);
    preds.push_back(psi[static_cast<size_t>(i)].forward(v, train));
  }
  preds.push_back(psi_agg->forward(concat(descriptors, 1), train));
  return preds;
}

Tensor TeacherNet::predict(const Tensor& input, bool train) {
  return softmax(predict_logits(input, train), 1);
}

Tensor TeacherNet::predict_logits(const Tensor& input, bool train) {
  const int64_t n = num_stages();
  std::vector<Tensor> descriptors;
  Tensor x = input;
  for (int64_t i = 0; i < n; ++i) {
    x = backbone->forward_segment(i, x, train);
    descriptors.push_back(phi[static_cast<size_t>(i)].forward(x, train));
  }
  return psi_agg->forward_logits(concat(descriptors, 1), train);
}

std::vector<Tensor> TeacherNet::parameters() {
  NamedTensors params, buffers;
  collect(params, buffers);
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (auto& p : params) out.push_back(p.tensor);
  return out;
}

std::vector<Tensor> TeacherNet::stage_parameters(int64_t n) {
  check_input(n >= 0 && n < num_stages(), "teacher: stage index out of range");
  NamedTensors params, buffers;
  // Fresh collectors per segment keep this simple: collect everything and
  // filter by segment/head prefixes that stage n touches.
  backbone->collect("backbone", params, buffers);
  std::vector<Tensor> out;
  for (auto& p : params) {
    for (int64_t i = 0; i <= n; ++i) {
      if (p.name.rfind("backbone.seg" + std::to_string(i) + ".", 0) == 0) {
        out.push_back(p.tensor);
        break;
      }
    }
  }
  NamedTensors hp, hb;
  phi[static_cast<size_t>(n)].collect("phi", hp, hb);
  psi[static_cast<size_t>(n)].collect("psi", hp, hb);
  for (auto& p : hp) out.push_back(p.tensor);
  return out;
}

void TeacherNet::collect(NamedTensors& params, NamedTensors& buffers) {
  backbone->collect("backbone", params, buffers);
  for (size_t i = 0; i < phi.size(); ++i)
    phi[i].collect("phi" + std::to_string(i + 1), params, buffers);
  for (size_t i = 0; i < psi.size(); ++i)
    psi[i].collect("psi" + std::to_string(i + 1), params, buffers);
  psi_agg->collect("psi_agg", params, buffers);
}

TeacherNet build_teacher(const PlainBackboneConfig& backbone_cfg, const TeacherConfig& cfg,
                         std::mt19937& rng) {
  auto backbone = std::make_unique<PlainBackbone>(backbone_cfg, rng);
  return TeacherNet(std::move(backbone), cfg, rng);
}

// ---- supernet -------------------------------------------------------------------

SuperNet::SuperNet(const CandidateSpace& space_, int64_t num_classes_, int64_t input_channels_,
                   std::mt19937& rng)
    : space(space_), num_classes(num_classes_), input_channels(input_channels_) {
  space.validate();
  int64_t in_ch = input_channels;
  for (int64_t b = 0; b < space.num_blocks(); ++b) {
    SuperBlock blk;
    const auto& cands = space.conv_candidates[static_cast<size_t>(b)];
    for (const auto& cand : cands) {
      blk.branches.push_back(
          SuperBranch{PyConvLayer(cand, in_ch, Dimensionality::d2, rng), BatchNorm(cand.out_channels())});
    }
    blk.alpha_hat = Tensor::full({static_cast<int64_t>(cands.size())}, 1.0f, /*requires_grad=*/true);
    blk.beta_hat = Tensor::full({2}, 1.0f, /*requires_grad=*/true);
    blocks.push_back(std::move(blk));
    in_ch = cands[0].out_channels();
  }
  head = std::make_unique<Linear>(in_ch, num_classes, rng);
}

Tensor SuperNet::predict(const Tensor& x, bool train, const MixOverride* override_probs) {
  return softmax(predict_logits(x, train, override_probs), 1);
}

Tensor SuperNet::predict_logits(const Tensor& x, bool train, const MixOverride* override_probs) {
  Tensor y = x;
  for (size_t b = 0; b < blocks.size(); ++b) {
    auto& blk = blocks[b];
    std::vector<Tensor> branch_outs;
    branch_outs.reserve(blk.branches.size());
    for (auto& br : blk.branches)
      branch_outs.push_back(relu(br.bn.forward(br.pyconv.forward(y), train)));
    Tensor alpha, beta;
    if (override_probs) {
      alpha = Tensor::from_data({static_cast<int64_t>(override_probs->alpha[b].size())},
                                std::vector<float>(override_probs->alpha[b].begin(),
                                                   override_probs->alpha[b].end()));
      beta = Tensor::from_data({2}, {override_probs->beta[b][0], override_probs->beta[b][1]});
    } else {
      alpha = softmax(blk.alpha_hat, 0);
      beta = softmax(blk.beta_hat, 0);
    }
    Tensor mixed = weighted_sum(branch_outs, alpha);
    y = weighted_sum({avg_pool2d(mixed, 2, 2), max_pool2d(mixed, 2, 2)}, beta);
  }
  return head->forward(global_avg_pool(y));
}

MixWeights SuperNet::mix_weights() const {
  MixWeights w;
  for (const auto& blk : blocks) {
    w.alpha_hat.emplace_back(blk.alpha_hat.data().begin(), blk.alpha_hat.data().end());
    w.beta_hat.push_back({blk.beta_hat.data()[0], blk.beta_hat.data()[1]});
  }
  return w;
}

void SuperNet::set_mix_weights(const MixWeights& w) {
  check_input(w.alpha_hat.size() == blocks.size() && w.beta_hat.size() == blocks.size(),
              "supernet: mix weight block count mismatch");
  for (size_t b = 0; b < blocks.size(); ++b) {
    check_input(w.alpha_hat[b].size() == blocks[b].branches.size(),
                "supernet: candidate count mismatch in block " + std::to_string(b + 1));
    std::copy(w.alpha_hat[b].begin(), w.alpha_hat[b].end(), blocks[b].alpha_hat.data().begin());
    blocks[b].beta_hat.data()[0] = w.beta_hat[b][0];
    blocks[b].beta_hat.data()[1] = w.beta_hat[b][1];
  }
}

std::vector<Tensor> SuperNet::parameters() {
  NamedTensors params, buffers;
  collect(params, buffers);
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (auto& p : params) out.push_back(p.tensor);
  return out;
}

std::vector<Tensor> SuperNet::logit_parameters() {
  std::vector<Tensor> out;
  for (auto& blk : blocks) {
    out.push_back(blk.alpha_hat);
    out.push_back(blk.beta_hat);
  }
  return out;
}

void SuperNet::collect(NamedTensors& params, NamedTensors& buffers) {
  for (size_t b = 0; b < blocks.size(); ++b) {
    auto& blk = blocks[b];
    const std::string bp = "block" + std::to_string(b + 1);
    for (size_t m = 0; m < blk.branches.size(); ++m) {
      const std::string cp = bp + ".cand" + std::to_string(m);
      blk.branches[m].pyconv.collect(cp + ".pyconv", params);
      params.push_back({cp + ".bn.gamma", blk.branches[m].bn.gamma});
      params.push_back({cp + ".bn.beta", blk.branches[m].bn.beta});
      buffers.push_back({cp + ".bn.running_mean", blk.branches[m].bn.running_mean});
      buffers.push_back({cp + ".bn.running_var", blk.branches[m].bn.running_var});
    }
    params.push_back({bp + ".alpha_hat", blk.alpha_hat});
    params.push_back({bp + ".beta_hat", blk.beta_hat});
  }
  params.push_back({"head.weight", head->weight});
  params.push_back({"head.bias", head->bias});
}

StudentNet inherit_student(const SuperNet& super, const Derivation& derivation,
                           std::mt19937& rng) {
  ArchitectureSpec arch = derivation.arch;
  arch.num_classes = super.num_classes;
  arch.input_channels = super.input_channels;
  StudentNet student(arch, rng);
  for (size_t b = 0; b < student.blocks.size(); ++b) {
    const auto& branch =
        super.blocks[b].branches[static_cast<size_t>(derivation.conv_choice[b])];
    auto& blk = student.blocks[b];
    check_internal(branch.pyconv.levels.size() == blk.pyconv.levels.size(),
                   "inherit: level count mismatch");
    for (size_t l = 0; l < blk.pyconv.levels.size(); ++l) {
      auto src = branch.pyconv.levels[l].weight.data();
      std::copy(src.begin(), src.end(), blk.pyconv.levels[l].weight.data().begin());
    }
    auto copy_all = [](const Tensor& from, Tensor& to) {
      std::copy(from.data().begin(), from.data().end(), to.data().begin());
    };
    copy_all(branch.bn.gamma, blk.bn.gamma);
    copy_all(branch.bn.beta, blk.bn.beta);
    copy_all(branch.bn.running_mean, blk.bn.running_mean);
    copy_all(branch.bn.running_var, blk.bn.running_var);
  }
  // The classifier head also carries over.
  std::copy(super.head->weight.data().begin(), super.head->weight.data().end(),
            student.head->weight.data().begin());
  std::copy(super.head->bias.data().begin(), super.head->bias.data().end(),
            student.head->bias.data().begin());
  return student;
}

}  // namespace dnas
