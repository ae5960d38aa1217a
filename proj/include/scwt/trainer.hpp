#pragma once

// Generic training loop shared by the single-tower classifier and the
// end-to-end fusion models. A parameter type P participates through:
//   std::vector<std::span<double>> P::views();  (and a const overload)
//   P zeros_like(const P&);
//   Posterior predict(const P&, const S&);
//   double accumulate_gradient(const P&, const S&, const ClassWeights&, double scale, P& grads);

#include <algorithm>
#include <array>
#include <string>
#include <numeric>
#include <random>
#include <utility>

#include "scwt/error.hpp"

namespace scwt {

template <class Params, class SampleT>
double accuracy(const Params& params, std::span<const SampleT> samples) {
  if (samples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : samples) {
    if (argmax(predict(params, s).probs) == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

template <class SampleT>
void require_all_classes(std::span<const SampleT> samples) {
  std::array<bool, kNumClasses> seen{};
  for (const auto& s : samples) {
    if (s.label < 0 || s.label >= kNumClasses) throw ValidationError("sample label out of range");
    seen[static_cast<std::size_t>(s.label)] = true;
  }
  for (int c = 0; c < kNumClasses; ++c) {
    if (!seen[static_cast<std::size_t>(c)]) {
      throw ValidationError("training data has no sample of class " +
                            std::string(kClassNames[static_cast<std::size_t>(c)]));
    }
  }
}

template <class Params, class SampleT>
TrainResult<Params> train_loop(Params model, std::span<const SampleT> train, std::span<const SampleT> val,
                               const TrainConfig& config) {
  config.validate();
  if (train.empty()) throw ValidationError("training set is empty");
  if (val.empty()) throw ValidationError("validation set is empty");
  require_all_classes(train);

  std::mt19937_64 rng(config.seed);
  AdamState state = AdamState::zeros_for(std::as_const(model).views());
  const AdamConfig adam{config.learning_rate};
  EarlyStopping stopper(config.patience);

  TrainResult<Params> result{model, {}};
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int step = 1; step <= config.max_steps; ++step) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(order.size(), begin + batch);
      Params grads = zeros_like(model);
      const double scale = 1.0 / static_cast<double>(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        loss_total += accumulate_gradient(model, train[order[i]], config.class_weights, scale, grads);
      }
      adam_step(model, grads, state, adam);
    }
    const double val_acc = accuracy(model, val);
    result.history.train_loss.push_back(loss_total / static_cast<double>(train.size()));
    result.history.val_accuracy.push_back(val_acc);
    result.history.steps_run = step;
    if (stopper.update(step, val_acc)) result.params = model;
    if (stopper.should_stop()) {
      result.history.stopped_early = true;
      break;
    }
  }
  result.history.best_step = stopper.best_step();
  result.history.best_val_accuracy = std::max(stopper.best_accuracy(), 0.0);
  return result;
}

}  // namespace scwt
