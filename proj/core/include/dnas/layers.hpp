#pragma once

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dnas/arch.hpp"
#include "dnas/ops.hpp"

namespace dnas {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};
using NamedTensors = std::vector<NamedTensor>;

// ---- primitive layers ------------------------------------------------------

// Convolution without bias (every conv here is followed by batch norm).
class Conv {
 public:
  Conv(Dimensionality dim, int64_t in_channels, int64_t out_channels, int64_t kernel, int stride,
       int padding, int64_t groups, std::mt19937& rng);

  Tensor forward(const Tensor& x) const;
  Tensor weight;
  int stride, padding;
  int64_t groups;
  Dimensionality dim;
};

class BatchNorm {
 public:
  BatchNorm(int64_t channels, float eps = 1e-5f, float momentum = 0.1f);

  Tensor forward(const Tensor& x, bool train);
  Tensor gamma, beta, running_mean, running_var;
  float eps, momentum;
};

class Linear {
 public:
  Linear(int64_t in_features, int64_t out_features, std::mt19937& rng);

  Tensor forward(const Tensor& x) const;
  Tensor weight;  // [Din, Dout]
  Tensor bias;    // [Dout]
};

// ---- student building blocks -----------------------------------------------

// Parallel conv levels over one input, concatenated along channels.
// Stride 1, padding (kernel-1)/2: spatial extents are preserved.
class PyConvLayer {
 public:
  PyConvLayer(const PyConvSpec& spec, int64_t in_channels, Dimensionality dim, std::mt19937& rng);

  Tensor forward(const Tensor& x) const;
  int64_t out_channels() const { return spec.out_channels(); }
  void collect(const std::string& prefix, NamedTensors& params) const;

  PyConvSpec spec;
  std::vector<Conv> levels;
};

// pyconv -> batch norm -> relu -> 2x2 pool (stride 2).
class BlockLayer {
 public:
  BlockLayer(const BlockSpec& spec, int64_t in_channels, Dimensionality dim, std::mt19937& rng);

  Tensor forward(const Tensor& x, bool train);
  void collect(const std::string& prefix, NamedTensors& params, NamedTensors& buffers);

  BlockSpec spec;
  Dimensionality dim;
  PyConvLayer pyconv;
  BatchNorm bn;
};

// Four blocks, global average pooling and a fully connected classifier.
class StudentNet {
 public:
  StudentNet(const ArchitectureSpec& arch, std::mt19937& rng);

  Tensor forward_logits(const Tensor& x, bool train);
  // softmax over classes
  Tensor predict(const Tensor& x, bool train = false);

  std::vector<Tensor> parameters();
  void collect(NamedTensors& params, NamedTensors& buffers);

  ArchitectureSpec arch;
  std::vector<BlockLayer> blocks;
  std::unique_ptr<Linear> head;
};

// ---- teacher ----------------------------------------------------------------

// A feature extractor split into consecutive segments. Segment n consumes
// segment n-1's output; cut-point channel counts are exposed for the heads.
class Backbone {
 public:
  virtual ~Backbone() = default;
  virtual int64_t num_segments() const = 0;
  virtual int64_t segment_out_channels(int64_t n) const = 0;
  virtual Tensor forward_segment(int64_t n, const Tensor& x, bool train) = 0;
  virtual void collect(const std::string& prefix, NamedTensors& params, NamedTensors& buffers) = 0;
  virtual std::string descriptor() const = 0;
};

struct PlainBackboneConfig {
  int64_t in_channels = 3;
  std::vector<int64_t> channels = {64, 128, 256};  // per-segment output channels

  std::string to_string() const;
  static PlainBackboneConfig from_string(const std::string& s);
};

// Desk-scale CNN backbone: a stride-2 entry conv, then one conv per
// segment with 2x2 max pooling between segments.
class PlainBackbone : public Backbone {
 public:
  PlainBackbone(const PlainBackboneConfig& cfg, std::mt19937& rng);

  int64_t num_segments() const override { return static_cast<int64_t>(cfg_.channels.size()); }
  int64_t segment_out_channels(int64_t n) const override { return cfg_.channels[static_cast<size_t>(n)]; }
  Tensor forward_segment(int64_t n, const Tensor& x, bool train) override;
  void collect(const std::string& prefix, NamedTensors& params, NamedTensors& buffers) override;
  std::string descriptor() const override { return cfg_.to_string(); }

 private:
  struct Segment {
    std::vector<Conv> convs;
    std::vector<BatchNorm> bns;
    bool pool_first = false;
  };
  PlainBackboneConfig cfg_;
  std::vector<Segment> segments_;
};

// Stage descriptor head: 1x1 conv C -> L/2, BN, ReLU, 3x3 conv L/2 -> L,
// BN, ReLU, global max pool over the whole spatial extent.
class StageDescriptor {
 public:
  StageDescriptor(int64_t in_channels, int64_t descriptor_len, std::mt19937& rng);

  Tensor forward(const Tensor& feature_map, bool train);
  void collect(const std::string& prefix, NamedTensors& params, NamedTensors& buffers);

  Conv reduce;   // 1x1
  BatchNorm bn1;
  Conv expand;   // 3x3
  BatchNorm bn2;
};

// Stage classifier: BN, FC in -> L/2, BN, ReLU, FC L/2 -> K, softmax.
class StageClassifier {
 public:
  StageClassifier(int64_t in_features, int64_t hidden, int64_t num_classes, std::mt19937& rng);

  Tensor forward(const Tensor& v, bool train);        // softmax distribution
  Tensor forward_logits(const Tensor& v, bool train);
  void collect(const std::string& prefix, NamedTensors& params, NamedTensors& buffers);

  BatchNorm bn_in;
  Linear fc1;
  BatchNorm bn_mid;
  Linear fc2;
};

struct TeacherConfig {
  int64_t descriptor_len = 512;  // L
  int64_t num_classes = 10;      // K
};

// Segmented backbone with per-stage descriptor/classifier heads and one
// aggregation classifier over the concatenated descriptors. Inference uses
// the aggregation prediction only.
class TeacherNet {
 public:
  TeacherNet(std::unique_ptr<Backbone> backbone, const TeacherConfig& cfg, std::mt19937& rng);

  int64_t num_stages() const { return backbone->num_segments(); }
  int64_t descriptor_len() const { return cfg.descriptor_len; }
  int64_t num_classes() const { return cfg.num_classes; }

  // Runs segments 1..n (0-based n) and the stage descriptor: v_n.
  Tensor stage_descriptor_value(const Tensor& input, int64_t n, bool train);
  // Stage prediction p_n from v_n.
  Tensor stage_prediction(const Tensor& v, int64_t n, bool train);
  // All N+1 predictions p_1..p_{N+1} from one pass over the input.
  std::vector<Tensor> forward_all(const Tensor& input, bool train);
  // p_{N+1}
  Tensor predict(const Tensor& input, bool train = false);
  // Pre-softmax aggregation-head output.
  Tensor predict_logits(const Tensor& input, bool train = false);

  std::vector<Tensor> parameters();
  // Parameters touched by stage n (segments 0..n, phi_n, psi_n).
  std::vector<Tensor> stage_parameters(int64_t n);
  void collect(NamedTensors& params, NamedTensors& buffers);

  std::unique_ptr<Backbone> backbone;
  TeacherConfig cfg;
  std::vector<StageDescriptor> phi;
  std::vector<StageClassifier> psi;
  std::unique_ptr<StageClassifier> psi_agg;
};

// Builds the desk-scale teacher (plain backbone + heads). num_segments is
// fixed by the backbone config; rejects fewer than 2 segments.
TeacherNet build_teacher(const PlainBackboneConfig& backbone_cfg, const TeacherConfig& cfg,
                         std::mt19937& rng);

// ---- supernet ----------------------------------------------------------------

// Explicit mixing probabilities; used to collapse the supernet onto a
// single candidate without going through the softmax.
struct MixOverride {
  std::vector<std::vector<float>> alpha;
  std::vector<std::array<float, 2>> beta;
};

// One candidate branch: pyconv -> its own BN -> ReLU.
struct SuperBranch {
  PyConvLayer pyconv;
  BatchNorm bn;
};

struct SuperBlock {
  std::vector<SuperBranch> branches;
  Tensor alpha_hat;  // [M], learnable
  Tensor beta_hat;   // [2] = {average, max}, learnable
};

// All candidates of every block, combined by softmax-weighted sums:
//   X_out = beta_avg * avg_pool(S) + beta_max * max_pool(S),
//   S = sum_m alpha_m * branch_m(X_in).
class SuperNet {
 public:
  SuperNet(const CandidateSpace& space, int64_t num_classes, int64_t input_channels,
           std::mt19937& rng);

  Tensor predict(const Tensor& x, bool train, const MixOverride* override_probs = nullptr);
  Tensor predict_logits(const Tensor& x, bool train, const MixOverride* override_probs = nullptr);

  MixWeights mix_weights() const;
  void set_mix_weights(const MixWeights& w);

  std::vector<Tensor> parameters();       // branch weights + logits
  std::vector<Tensor> logit_parameters();  // alpha_hat/beta_hat only
  void collect(NamedTensors& params, NamedTensors& buffers);

  CandidateSpace space;
  int64_t num_classes;
  int64_t input_channels;
  std::vector<SuperBlock> blocks;
  std::unique_ptr<Linear> head;
};

// Copies the winning branch of every supernet block (conv weights and BN
// state) into a freshly built student with the same derived architecture.
StudentNet inherit_student(const SuperNet& super, const Derivation& derivation,
                           std::mt19937& rng);

}  // namespace dnas
