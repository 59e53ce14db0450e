#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dnas/data.hpp"
#include "dnas/layers.hpp"
#include "dnas/losses.hpp"
#include "dnas/optim.hpp"

namespace dnas {

enum class LrSchedule { cosine, plateau };

struct TrainConfig {
  float learning_rate = 0.002f;   // 3-D runs use 0.001 with the plateau schedule
  LrSchedule schedule = LrSchedule::cosine;
  float weight_decay = 5e-4f;     // 3-D runs use 1e-5
  float momentum = 0.9f;
  int64_t batch_size = 32;
  int64_t epochs = 300;
  float lambda = 0.7f;            // distillation weight
  uint64_t seed = 1;
  std::pair<float, float> brightness_range = {0.5f, 1.5f};
  // Ablation: apply the distillation MSE to logits instead of probabilities.
  bool mse_on_logits = false;
  int64_t plateau_patience = 10;
  float plateau_factor = 0.1f;

  void validate() const;
};

struct EpochMetrics {
  int64_t epoch = 0;
  std::vector<double> stage_losses;  // one entry per loss head (teacher: N+1)
  double lr = 0.0;
  double train_accuracy = 0.0;
};

struct PhaseResult {
  std::vector<EpochMetrics> epochs;
  double wall_seconds = 0.0;
  int64_t optimizer_steps = 0;
};

struct TrainHooks {
  std::function<void(const EpochMetrics&)> on_epoch;
};

// Algorithm-1 progressive training: per batch, one loss/backward/step per
// stage on independently brightness-augmented copies, then one aggregation
// step on the original input (N+1 optimizer steps per batch).
PhaseResult train_teacher_progressive(TeacherNet& teacher, const Dataset& data,
                                      const TrainConfig& cfg, const TrainHooks& hooks = {});

// End-to-end baseline of the same teacher: single cross-entropy loss on the
// aggregation prediction, no brightness augmentation, one step per batch.
PhaseResult train_backbone_plain(TeacherNet& teacher, const Dataset& data, const TrainConfig& cfg,
                                 const TrainHooks& hooks = {});

struct SearchResult {
  MixWeights weights;
  Derivation derivation;
  PhaseResult phase;
};

// Joint single-level optimization of all candidate weights and the
// selection logits under the distillation search loss; the teacher runs
// detached in eval mode.
SearchResult run_search(SuperNet& supernet, TeacherNet& teacher, const Dataset& data,
                        const TrainConfig& cfg, const TrainHooks& hooks = {});

// Knowledge transfer into the (fresh or inherited) student. teacher may be
// null only when lambda == 0, which reduces to plain supervised training.
PhaseResult run_transfer(StudentNet& student, TeacherNet* teacher, const Dataset& data,
                         const TrainConfig& cfg, const TrainHooks& hooks = {});

// ---- evaluation ---------------------------------------------------------------

struct MetricsReport {
  int64_t num_classes = 0;
  int64_t total = 0;
  double accuracy = 0.0;
  std::vector<double> precision, recall, f1;
  double macro_f1 = 0.0;
  std::vector<int64_t> confusion;  // [K*K], row = truth, col = prediction

  std::string to_text() const;
  std::string to_records() const;
};

// Batched eval-mode evaluation; predict must map [B,C,...] to [B,K]
// probabilities.
MetricsReport evaluate(const std::function<Tensor(const Tensor&)>& predict, const Dataset& data,
                       int64_t batch_size = 32);

}  // namespace dnas
