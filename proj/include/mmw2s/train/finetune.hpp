#pragma once

#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "mmw2s/common/parallel.hpp"
#include "mmw2s/train/alignment.hpp"
#include "mmw2s/train/checkpoint.hpp"
#include "mmw2s/train/focal_loss.hpp"

namespace mmw2s {

struct TrainExample {
  ClipFeatures features;
  ResponseLabel label = ResponseLabel::kSilence;
};

struct StepLog {
  std::uint64_t step = 0;
  double loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  std::vector<StepLog> log;
  std::uint64_t final_step = 0;
  bool stopped_early = false;
  double train_accuracy = -1.0;  // -1 when never measured
};

/// Batch members for a step, drawn without replacement; a pure function of
/// (seed, step) so that resumed runs see the same batches.
inline std::vector<std::size_t> batch_indices(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                              std::uint64_t step) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t take = std::min(n, batch_size);
  Rng rng(mix_seed(mix_seed(seed, fnv1a64("batch")), step));
  for (std::size_t k = 0; k < take; ++k) std::swap(idx[k], idx[k + rng.below(n - k)]);
  idx.resize(take);
  return idx;
}

/// Mean focal loss over the listed examples. Per-example gradients are
/// summed in list order, so the result does not depend on thread count.
inline double batch_loss(const MultimodalModel& model, const std::vector<TrainExample>& data,
                         const std::vector<std::size_t>& idx, ModalitySet mask, double gamma, double alpha,
                         Gradients* g) {
  std::vector<double> losses(idx.size());
  std::vector<Gradients> grads(g ? idx.size() : 0);
  parallel_for(idx.size(), [&](std::size_t k) {
    MultimodalModel::ForwardCache cache;
    const Logits z = model.forward(data[idx[k]].features, mask, cache);
    const LossAndGrad lg = focal_loss(z, data[idx[k]].label, gamma, alpha);
    losses[k] = lg.loss;
    if (g) {
      grads[k] = model.params().zeros_like();
      model.backward(cache, lg.dlogits, grads[k]);
    }
  });
  const double inv = 1.0 / static_cast<double>(idx.size());
  double total = 0.0;
  for (double l : losses) total += l;
  if (g) {
    for (auto& gk : grads) add_into(*g, gk);
    scale(*g, inv);
  }
  return total * inv;
}

/// Lowest index wins ties.
inline std::size_t argmax_label(const RowVec& v) {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < v.size(); ++k) {
    if (v(k) > v(best)) best = k;
  }
  return static_cast<std::size_t>(best);
}

inline double accuracy(const MultimodalModel& model, const std::vector<TrainExample>& data, ModalitySet mask) {
  std::vector<int> hit(data.size());
  parallel_for(data.size(), [&](std::size_t k) {
    hit[k] = argmax_label(model.forward(data[k].features, mask)) == index_of(data[k].label) ? 1 : 0;
  });
  return data.empty() ? 0.0 : static_cast<double>(std::accumulate(hit.begin(), hit.end(), 0)) / static_cast<double>(data.size());
}

/// One contrastive alignment update on the listed examples.
inline double align_pretrain_step(MultimodalModel& model, const std::vector<TrainExample>& data,
                                  const std::vector<std::size_t>& idx, ModalitySet mask, const TrainConfig& cfg,
                                  OptimizerState& opt) {
  std::vector<const ClipFeatures*> batch;
  for (auto k : idx) batch.push_back(&data[k].features);
  Gradients g = model.params().zeros_like();
  const double loss = alignment_loss(model, batch, mask, cfg.align_temperature, &g);
  adamw_step(model.params(), g, opt, cfg);
  return loss;
}

/// Stage 1: cfg.align_steps contrastive updates with their own optimizer
/// state. Returns the per-step log.
inline std::vector<StepLog> align_pretrain(Checkpoint& ck, const std::vector<TrainExample>& data,
                                           const TrainConfig& cfg) {
  cfg.validate();
  require(!data.empty(), ErrorCode::kInvalidConfig, "alignment needs a nonempty training set");
  OptimizerState opt = OptimizerState::for_params(ck.model.params());
  std::vector<StepLog> log;
  for (std::uint64_t s = 0; s < cfg.align_steps; ++s) {
    const auto idx = batch_indices(data.size(), cfg.batch_size, mix_seed(cfg.seed, fnv1a64("align")), s);
    log.push_back({s + 1, align_pretrain_step(ck.model, data, idx, ck.modalities, cfg, opt), cfg.lr});
  }
  return log;
}

using StepObserver = std::function<void(const StepLog&)>;

/// Stage 2: focal-loss fine-tuning from ck.step up to cfg.max_steps. The
/// checkpoint carries parameters, optimizer moments and the step counter,
/// so a run can be stopped and resumed with identical results.
inline TrainResult finetune(Checkpoint& ck, const std::vector<TrainExample>& train, const TrainConfig& cfg,
                            const StepObserver& observer = {}) {
  cfg.validate();
  require(!train.empty(), ErrorCode::kInvalidConfig, "training split is empty");
  if (!ck.optimizer) ck.optimizer = OptimizerState::for_params(ck.model.params());
  ck.train = cfg;
  TrainResult result;
  while (ck.step < cfg.max_steps) {
    const auto idx = batch_indices(train.size(), cfg.batch_size, cfg.seed, ck.step);
    Gradients g = ck.model.params().zeros_like();
    const double loss = batch_loss(ck.model, train, idx, ck.modalities, cfg.gamma, cfg.alpha, &g);
    adamw_step(ck.model.params(), g, *ck.optimizer, cfg);
    ++ck.step;
    const StepLog entry{ck.step, loss, cfg.lr};
    result.log.push_back(entry);
    if (observer) observer(entry);
    if (cfg.stop_train_accuracy > 0.0 && ck.step % cfg.check_every == 0) {
      result.train_accuracy = accuracy(ck.model, train, ck.modalities);
      if (result.train_accuracy >= cfg.stop_train_accuracy) {
        result.stopped_early = true;
        break;
      }
    }
  }
  result.final_step = ck.step;
  return result;
}

inline std::string format_loss_log(const std::vector<StepLog>& log) {
  std::string out = "step,loss,lr\n";
  char buf[96];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof(buf), "%llu,%.17g,%.17g\n", static_cast<unsigned long long>(e.step), e.loss, e.lr);
    out += buf;
  }
  return out;
}

}  // namespace mmw2s
