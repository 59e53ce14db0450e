#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dnas/common.hpp"

namespace dnas {

enum class PoolKind { average, max };
enum class Dimensionality { d2, d3 };

const char* pool_name(PoolKind k);

// One pyramid level: [kernel x kernel, out_channels, groups].
struct FilterSpec {
  int64_t kernel = 1;
  int64_t out_channels = 1;
  int64_t groups = 1;

  // Stride is always 1 and padding (kernel-1)/2, so spatial size is kept.
  int64_t padding() const { return (kernel - 1) / 2; }
  bool operator==(const FilterSpec&) const = default;
};

// Parallel filter levels sharing one input, concatenated along channels.
struct PyConvSpec {
  std::vector<FilterSpec> levels;

  int64_t out_channels() const;
  bool operator==(const PyConvSpec&) const = default;
};

// PyConv -> BatchNorm -> ReLU -> 2x2 (or 2x2x2) pool with stride 2.
struct BlockSpec {
  PyConvSpec pyconv;
  PoolKind pool = PoolKind::max;

  bool operator==(const BlockSpec&) const = default;
};

struct ArchitectureSpec {
  std::vector<BlockSpec> blocks;  // exactly 4
  int64_t num_classes = 10;
  int64_t input_channels = 3;
  Dimensionality dim = Dimensionality::d2;

  bool operator==(const ArchitectureSpec&) const = default;
};

// Throws InvalidInput when a structural invariant is broken (block count,
// odd kernels, positive extents).
void validate_architecture(const ArchitectureSpec& arch);

// The searchable design space: per block a list of PyConv candidates plus
// the fixed {average, max} pooling pair.
struct CandidateSpace {
  std::vector<std::vector<PyConvSpec>> conv_candidates;
  static constexpr std::array<PoolKind, 2> pool_candidates{PoolKind::average, PoolKind::max};

  int64_t num_blocks() const { return static_cast<int64_t>(conv_candidates.size()); }
  void validate() const;
};

// Learnable selection logits; probabilities are softmax per block.
struct MixWeights {
  std::vector<std::vector<float>> alpha_hat;       // one entry per conv candidate
  std::vector<std::array<float, 2>> beta_hat;      // [average, max]

  static MixWeights ones_like(const CandidateSpace& space);
  std::vector<double> alpha_probs(int64_t block) const;
  std::array<double, 2> beta_probs(int64_t block) const;
};

struct Derivation {
  ArchitectureSpec arch;
  std::vector<int64_t> conv_choice;  // per block, 0-based
  std::vector<PoolKind> pool_choice;
};

// Keeps the highest-probability candidate per block; ties break toward the
// lowest index (average before max for pooling).
Derivation derive_architecture(const CandidateSpace& space, const MixWeights& weights,
                               int64_t num_classes = 10, int64_t input_channels = 3);

// Replaces every theta x theta kernel by theta^3 and 2x2 pooling by 2x2x2,
// keeping channels, groups and ordering.
ArchitectureSpec extend_to_3d(const ArchitectureSpec& arch);

// The published candidate table: 4/9/6/3 conv candidates for blocks 1-4
// with per-block output channel totals 32/64/128/256.
CandidateSpace reference_candidate_space();

// The searched student: [11,16,1;3,16,1] / [9,32,1;5,32,1] / [5,64,1;3,64,1]
// / [3,128,1;1,128,1], max pooling everywhere.
ArchitectureSpec reference_student(int64_t num_classes = 10, int64_t input_channels = 3);

// Text format, one block per line:
//   dim: 2
//   in_channels: 3
//   classes: 10
//   block1: pyconv[(11,16,1),(3,16,1)] pool=max
// print/parse round-trips losslessly.
std::string print_architecture(const ArchitectureSpec& arch);
ArchitectureSpec parse_architecture(const std::string& text);

}  // namespace dnas
