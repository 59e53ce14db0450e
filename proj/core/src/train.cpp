#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "dnas/train.hpp"

namespace dnas {

void TrainConfig::validate() const {
  check_input(learning_rate > 0.0f, "train config: learning_rate must be positive");
  check_input(weight_decay >= 0.0f, "train config: weight_decay must be >= 0");
  check_input(batch_size >= 1, "train config: batch_size must be >= 1");
  check_input(epochs >= 1, "train config: epochs must be >= 1");
  check_input(lambda >= 0.0f && lambda <= 1.0f, "train config: lambda must be in [0,1]");
  check_input(brightness_range.first > 0.0f && brightness_range.first <= brightness_range.second,
              "train config: brightness_range must be positive and ordered");
}

namespace {

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

void check_finite_loss(double loss, const char* phase, int64_t epoch, int64_t batch) {
  if (!std::isfinite(loss)) {
    throw InternalError(std::string(phase) + ": non-finite loss " + std::to_string(loss) +
                        " at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch));
  }
}

int64_t argmax_row(std::span<const float> row) {
  int64_t best = 0;
  for (int64_t i = 1; i < static_cast<int64_t>(row.size()); ++i)
    if (row[static_cast<size_t>(i)] > row[static_cast<size_t>(best)]) best = i;
  return best;
}

// Batch accuracy of [B,K] probabilities against integer labels.
std::pair<int64_t, int64_t> batch_hits(const Tensor& probs, const std::vector<int64_t>& labels) {
  const int64_t B = probs.dim(0);
  const int64_t K = probs.dim(1);
  int64_t hits = 0;
  auto pd = probs.data();
  for (int64_t b = 0; b < B; ++b)
    hits += argmax_row(pd.subspan(static_cast<size_t>(b * K), static_cast<size_t>(K))) ==
            labels[static_cast<size_t>(b)];
  return {hits, B};
}

float epoch_lr(const TrainConfig& cfg, int64_t epoch, const std::vector<double>& loss_history) {
  if (cfg.schedule == LrSchedule::cosine)
    return cosine_annealing_lr(epoch, cfg.epochs, cfg.learning_rate);
  return plateau_lr(loss_history, cfg.learning_rate, cfg.plateau_patience, cfg.plateau_factor);
}

// Distillation objective shared by search and transfer. p_teacher must be
// detached; model_logits carries the live graph.
Tensor mixed_loss(const Tensor& model_logits, const Tensor* teacher_probs,
                  const Tensor* teacher_logits, const Tensor& onehot, const TrainConfig& cfg) {
  Tensor probs = softmax(model_logits, 1);
  if (!teacher_probs) return cross_entropy(probs, onehot);
  if (cfg.mse_on_logits) {
    check_internal(teacher_logits != nullptr, "mixed_loss: teacher logits required");
    return add(mul_scalar(mse(model_logits, *teacher_logits), cfg.lambda),
               mul_scalar(cross_entropy(probs, onehot), 1.0f - cfg.lambda));
  }
  return distill_loss(probs, *teacher_probs, onehot, cfg.lambda);
}

}  // namespace

PhaseResult train_teacher_progressive(TeacherNet& teacher, const Dataset& data,
                                      const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  check_input(!data.samples.empty(), "train_teacher_progressive: empty dataset");
  check_input(teacher.num_classes() == data.num_classes,
              "train_teacher_progressive: teacher expects " +
                  std::to_string(teacher.num_classes()) + " classes, dataset has " +
                  std::to_string(data.num_classes));
  const int64_t n_stages = teacher.num_stages();

  Timer timer;
  PhaseResult result;
  Sgd opt(cfg.learning_rate, cfg.momentum, cfg.weight_decay);
  auto params = teacher.parameters();
  std::mt19937 shuffle_rng(static_cast<uint32_t>(cfg.seed * 7919u + 100));
  std::mt19937 brightness_rng(static_cast<uint32_t>(cfg.seed * 7919u + 200));
  std::vector<double> loss_history;

  for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    opt.set_lr(epoch_lr(cfg, epoch, loss_history));
    auto batches = make_batches(data, cfg.batch_size, &shuffle_rng);
    std::vector<double> stage_loss_sum(static_cast<size_t>(n_stages) + 1, 0.0);
    int64_t hits = 0, seen = 0;
    for (size_t bi = 0; bi < batches.size(); ++bi) {
      const auto& batch = batches[bi];
      // Stage passes: fresh brightness draw per stage, immediate step.
      for (int64_t n = 0; n < n_stages; ++n) {
        Tensor xa = brightness_augment(batch.images, cfg.brightness_range.first,
                                       cfg.brightness_range.second, brightness_rng);
        Tensor v = teacher.stage_descriptor_value(xa, n, /*train=*/true);
        Tensor p = teacher.stage_prediction(v, n, /*train=*/true);
        Tensor loss = cross_entropy(p, batch.onehot);
        check_finite_loss(loss.item64(), "train_teacher_progressive", epoch,
                          static_cast<int64_t>(bi));
        stage_loss_sum[static_cast<size_t>(n)] += loss.item64();
        loss.backward();
        opt.step(params);
      }
      // Aggregation pass on the original input.
      Tensor p_agg = teacher.predict(batch.images, /*train=*/true);
      Tensor loss = cross_entropy(p_agg, batch.onehot);
      check_finite_loss(loss.item64(), "train_teacher_progressive", epoch,
                        static_cast<int64_t>(bi));
      stage_loss_sum[static_cast<size_t>(n_stages)] += loss.item64();
      loss.backward();
      opt.step(params);

      auto [h, b] = batch_hits(p_agg, batch.labels);
      hits += h;
      seen += b;
    }

    EpochMetrics em;
    em.epoch = epoch;
    for (double s : stage_loss_sum) em.stage_losses.push_back(s / static_cast<double>(batches.size()));
    em.lr = opt.lr();
    em.train_accuracy = static_cast<double>(hits) / static_cast<double>(seen);
    loss_history.push_back(em.stage_losses.back());
    result.epochs.push_back(em);
    if (hooks.on_epoch) hooks.on_epoch(em);
  }
  result.optimizer_steps = opt.step_count();
  result.wall_seconds = timer.seconds();
  return result;
}

PhaseResult train_backbone_plain(TeacherNet& teacher, const Dataset& data, const TrainConfig& cfg,
                                 const TrainHooks& hooks) {
  cfg.validate();
  check_input(!data.samples.empty(), "train_backbone_plain: empty dataset");
  check_input(teacher.num_classes() == data.num_classes,
              "train_backbone_plain: class count mismatch");

  Timer timer;
  PhaseResult result;
  Sgd opt(cfg.learning_rate, cfg.momentum, cfg.weight_decay);
  auto params = teacher.parameters();
  std::mt19937 shuffle_rng(static_cast<uint32_t>(cfg.seed * 7919u + 300));
  std::vector<double> loss_history;

  for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    opt.set_lr(epoch_lr(cfg, epoch, loss_history));
    auto batches = make_batches(data, cfg.batch_size, &shuffle_rng);
    double loss_sum = 0.0;
    int64_t hits = 0, seen = 0;
    for (size_t bi = 0; bi < batches.size(); ++bi) {
      const auto& batch = batches[bi];
      Tensor p = teacher.predict(batch.images, /*train=*/true);
      Tensor loss = cross_entropy(p, batch.onehot);
      check_finite_loss(loss.item64(), "train_backbone_plain", epoch, static_cast<int64_t>(bi));
      loss_sum += loss.item64();
      loss.backward();
      opt.step(params);
      auto [h, b] = batch_hits(p, batch.labels);
      hits += h;
      seen += b;
    }
    EpochMetrics em;
    em.epoch = epoch;
    em.stage_losses = {loss_sum / static_cast<double>(batches.size())};
    em.lr = opt.lr();
    em.train_accuracy = static_cast<double>(hits) / static_cast<double>(seen);
    loss_history.push_back(em.stage_losses.back());
    result.epochs.push_back(em);
    if (hooks.on_epoch) hooks.on_epoch(em);
  }
  result.optimizer_steps = opt.step_count();
  result.wall_seconds = timer.seconds();
  return result;
}

SearchResult run_search(SuperNet& supernet, TeacherNet& teacher, const Dataset& data,
                        const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  check_input(!data.samples.empty(), "run_search: empty dataset");
  check_input(teacher.num_classes() == supernet.num_classes,
              "run_search: teacher predicts " + std::to_string(teacher.num_classes()) +
                  " classes but the supernet has " + std::to_string(supernet.num_classes));
  check_input(supernet.num_classes == data.num_classes, "run_search: dataset class mismatch");

  Timer timer;
  PhaseResult phase;
  Sgd opt(cfg.learning_rate, cfg.momentum, cfg.weight_decay);
  auto params = supernet.parameters();
  std::mt19937 shuffle_rng(static_cast<uint32_t>(cfg.seed * 7919u + 400));
  std::vector<double> loss_history;

  for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    opt.set_lr(epoch_lr(cfg, epoch, loss_history));
    auto batches = make_batches(data, cfg.batch_size, &shuffle_rng);
    double loss_sum = 0.0;
    int64_t hits = 0, seen = 0;
    for (size_t bi = 0; bi < batches.size(); ++bi) {
      const auto& batch = batches[bi];
      Tensor t_probs, t_logits;
      {
        NoGradGuard ng;
        t_logits = teacher.predict_logits(batch.images, /*train=*/false);
        t_probs = softmax(t_logits, 1);
      }
      Tensor logits = supernet.predict_logits(batch.images, /*train=*/true);
      Tensor loss = mixed_loss(logits, &t_probs, &t_logits, batch.onehot, cfg);
      check_finite_loss(loss.item64(), "run_search", epoch, static_cast<int64_t>(bi));
      loss_sum += loss.item64();
      loss.backward();
      opt.step(params);
      auto [h, b] = batch_hits(softmax(logits.detach(), 1), batch.labels);
      hits += h;
      seen += b;
    }
    EpochMetrics em;
    em.epoch = epoch;
    em.stage_losses = {loss_sum / static_cast<double>(batches.size())};
    em.lr = opt.lr();
    em.train_accuracy = static_cast<double>(hits) / static_cast<double>(seen);
    loss_history.push_back(em.stage_losses.back());
    phase.epochs.push_back(em);
    if (hooks.on_epoch) hooks.on_epoch(em);
  }
  phase.optimizer_steps = opt.step_count();
  phase.wall_seconds = timer.seconds();

  SearchResult out{supernet.mix_weights(),
                   derive_architecture(supernet.space, supernet.mix_weights(),
                                       supernet.num_classes, supernet.input_channels),
                   std::move(phase)};
  return out;
}

PhaseResult run_transfer(StudentNet& student, TeacherNet* teacher, const Dataset& data,
                         const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  check_input(!data.samples.empty(), "run_transfer: empty dataset");
  check_input(student.arch.num_classes == data.num_classes, "run_transfer: dataset class mismatch");
  if (cfg.lambda > 0.0f)
    check_input(teacher != nullptr, "run_transfer: lambda > 0 requires a trained teacher");
  if (teacher)
    check_input(teacher->num_classes() == student.arch.num_classes,
                "run_transfer: teacher/student class mismatch");

  Timer timer;
  PhaseResult result;
  Sgd opt(cfg.learning_rate, cfg.momentum, cfg.weight_decay);
  auto params = student.parameters();
  std::mt19937 shuffle_rng(static_cast<uint32_t>(cfg.seed * 7919u + 500));
  std::vector<double> loss_history;

  for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    opt.set_lr(epoch_lr(cfg, epoch, loss_history));
    auto batches = make_batches(data, cfg.batch_size, &shuffle_rng);
    double loss_sum = 0.0;
    int64_t hits = 0, seen = 0;
    for (size_t bi = 0; bi < batches.size(); ++bi) {
      const auto& batch = batches[bi];
      Tensor t_probs, t_logits;
      if (teacher) {
        NoGradGuard ng;
        t_logits = teacher->predict_logits(batch.images, /*train=*/false);
        t_probs = softmax(t_logits, 1);
      }
      Tensor logits = student.forward_logits(batch.images, /*train=*/true);
      Tensor loss = mixed_loss(logits, teacher ? &t_probs : nullptr,
                               teacher ? &t_logits : nullptr, batch.onehot, cfg);
      check_finite_loss(loss.item64(), "run_transfer", epoch, static_cast<int64_t>(bi));
      loss_sum += loss.item64();
      loss.backward();
      opt.step(params);
      auto [h, b] = batch_hits(softmax(logits.detach(), 1), batch.labels);
      hits += h;
      seen += b;
    }
    EpochMetrics em;
    em.epoch = epoch;
    em.stage_losses = {loss_sum / static_cast<double>(batches.size())};
    em.lr = opt.lr();
    em.train_accuracy = static_cast<double>(hits) / static_cast<double>(seen);
    loss_history.push_back(em.stage_losses.back());
    result.epochs.push_back(em);
    if (hooks.on_epoch) hooks.on_epoch(em);
  }
  result.optimizer_steps = opt.step_count();
  result.wall_seconds = timer.seconds();
  return result;
}

// ---- evaluation ---------------------------------------------------------------

MetricsReport evaluate(const std::function<Tensor(const Tensor&)>& predict, const Dataset& data,
                       int64_t batch_size) {
  check_input(!data.samples.empty(), "evaluate: empty dataset");
  const int64_t K = data.num_classes;
  MetricsReport rep;
  rep.num_classes = K;
  rep.confusion.assign(static_cast<size_t>(K * K), 0);

  NoGradGuard ng;
  auto batches = make_batches(data, batch_size, nullptr);
  int64_t hits = 0;
  for (const auto& batch : batches) {
    Tensor p = predict(batch.images);
    check_input(p.ndim() == 2 && p.dim(1) == K, "evaluate: predictor output shape mismatch");
    auto pd = p.data();
    for (int64_t b = 0; b < p.dim(0); ++b) {
      const int64_t pred = argmax_row(pd.subspan(static_cast<size_t>(b * K), static_cast<size_t>(K)));
      const int64_t truth = batch.labels[static_cast<size_t>(b)];
      rep.confusion[static_cast<size_t>(truth * K + pred)]++;
      hits += pred == truth;
      ++rep.total;
    }
  }
  rep.accuracy = static_cast<double>(hits) / static_cast<double>(rep.total);

  rep.precision.assign(static_cast<size_t>(K), 0.0);
  rep.recall.assign(static_cast<size_t>(K), 0.0);
  rep.f1.assign(static_cast<size_t>(K), 0.0);
  double f1_sum = 0.0;
  for (int64_t k = 0; k < K; ++k) {
    int64_t tp = rep.confusion[static_cast<size_t>(k * K + k)];
    int64_t pred_k = 0, truth_k = 0;
    for (int64_t j = 0; j < K; ++j) {
      pred_k += rep.confusion[static_cast<size_t>(j * K + k)];
      truth_k += rep.confusion[static_cast<size_t>(k * K + j)];
    }
    const double prec = pred_k > 0 ? static_cast<double>(tp) / pred_k : 0.0;
    const double rec = truth_k > 0 ? static_cast<double>(tp) / truth_k : 0.0;
    const double f1 = prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    rep.precision[static_cast<size_t>(k)] = prec;
    rep.recall[static_cast<size_t>(k)] = rec;
    rep.f1[static_cast<size_t>(k)] = f1;
    f1_sum += f1;
  }
  rep.macro_f1 = f1_sum / static_cast<double>(K);
  return rep;
}

std::string MetricsReport::to_text() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "samples: " << total << "\n";
  os << "accuracy: " << accuracy << "\n";
  os << "macro_f1: " << macro_f1 << "\n";
  os << "class  precision  recall     f1\n";
  for (int64_t k = 0; k < num_classes; ++k) {
    os << std::setw(5) << k << "  " << std::setw(9) << precision[static_cast<size_t>(k)] << "  "
       << std::setw(6) << recall[static_cast<size_t>(k)] << "  " << std::setw(6)
       << f1[static_cast<size_t>(k)] << "\n";
  }
  os << "confusion (rows = truth):\n";
  for (int64_t i = 0; i < num_classes; ++i) {
    for (int64_t j = 0; j < num_classes; ++j)
      os << std::setw(6) << confusion[static_cast<size_t>(i * num_classes + j)];
    os << "\n";
  }
  return os.str();
}

std::string MetricsReport::to_records() const {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "summary samples=" << total << " accuracy=" << accuracy << " macro_f1=" << macro_f1
     << "\n";
  for (int64_t k = 0; k < num_classes; ++k) {
    os << "class id=" << k << " precision=" << precision[static_cast<size_t>(k)]
       << " recall=" << recall[static_cast<size_t>(k)] << " f1=" << f1[static_cast<size_t>(k)]
       << "\n";
  }
  return os.str();
}

}  // namespace dnas
