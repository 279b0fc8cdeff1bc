#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bnl/dataset.hpp"
#include "bnl/network.hpp"

namespace bnl {

enum class OptimizerKind { sgd, adam };

enum class WeightInit { uniform_scaled, zeros };

std::string optimizer_name(OptimizerKind k);
OptimizerKind optimizer_from_name(const std::string& s);

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::adam;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 1;  // 0 is accepted and leaves the parameters untouched
  uint64_t seed = 1;
  WeightInit weight_init = WeightInit::uniform_scaled;
  bool shuffle_each_epoch = true;
  bool reinit_params = true;     // false keeps the current parameters (warm start)
  double early_stop_loss = 0.0;  // > 0: stop once epoch train loss <= this
  bool train_bias = true;        // false pins biases at their initial values
  double adam_beta1 = 0.9;       // first/second moment decay; the defaults are
  double adam_beta2 = 0.999;     // the standard constants
};

struct TrainReport {
  std::vector<double> epoch_loss;      // mean per-example loss, one entry per epoch run
  std::vector<double> eval_accuracy;   // filled when an eval set is supplied
  int epochs_run = 0;
  bool early_stopped = false;
  std::string optimizer_desc;
  std::string init_desc;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(int epoch_, const std::string& what) : std::runtime_error(what), epoch(epoch_) {}
  int epoch;
};

/// Mini-batch training with MSE loss. Deterministic for a fixed config and
/// dataset: the shuffle order, the init, and the gradient reduction order
/// (fixed 16-example chunks combined in index order) do not depend on the
/// worker count (BNL_THREADS caps it). Throws TrainingDiverged when the
/// epoch loss turns non-finite.
TrainReport train(Network& net, const Dataset& data, const TrainConfig& cfg,
                  const Dataset* eval_set = nullptr, int eval_every = 0);

/// Exact-match accuracy after rounding. Nonlinearity task: the single output
/// is rounded half-to-even and clamped to [0, 2^(n-1)]. Spectrum task: every
/// entry of the rounded output vector must equal the target.
double evaluate_accuracy(const Network& net, const Dataset& data);

/// Accuracy under the exact-match rule plus two tolerance bands, reported
/// for transparency on the scalar task.
struct AccuracyBands {
  double exact = 0;
  double within_half = 0;  // |prediction - target| <= 0.5
  double within_one = 0;   // |prediction - target| <= 1.0
};
AccuracyBands evaluate_accuracy_bands(const Network& net, const Dataset& data);

/// Counts over nonlinearity classes 0..2^(n-1); predictions are rounded and
/// clamped into that range before indexing.
struct ConfusionMatrix {
  int classes = 0;
  std::vector<int64_t> cells;  // row = true class, column = predicted

  int64_t at(int truth, int predicted) const {
    return cells[size_t(truth) * classes + predicted];
  }
  int64_t total() const;
};
ConfusionMatrix confusion_matrix(const Network& net, const Dataset& data);

double round_half_even(double v);

/// Worker cap from BNL_THREADS, defaulting to the hardware concurrency.
int worker_count();

}  // namespace bnl
