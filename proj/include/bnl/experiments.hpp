#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bnl/dataset.hpp"
#include "bnl/network.hpp"
#include "bnl/train.hpp"

namespace bnl {

/// A named grid of stringified values; each table becomes one CSV next to
/// the report.
struct MetricTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

/// Machine-readable experiment result: key-value metadata plus tables. All
/// reported metrics are recomputable from the dataset and model files listed
/// under artifacts.
struct ExperimentReport {
  std::string id;
  int n = 0;
  uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::pair<std::string, std::string>> metrics;
  std::vector<MetricTable> tables;
  std::vector<std::string> artifacts;
  bool expected_negative = false;  // the run documents a known-hard setup
  bool negative_outcome = false;   // the run's own success bar was not met

  void add_config(const std::string& k, const std::string& v);
  void add_config(const std::string& k, double v);
  void add_config(const std::string& k, int64_t v);
  void add_metric(const std::string& k, const std::string& v);
  void add_metric(const std::string& k, double v);
  void add_metric(const std::string& k, int64_t v);
  const std::string* find_metric(const std::string& k) const;

  std::string base_name() const;  // "<id>_<n>_<seed>"
  std::string to_text() const;

  /// Writes "<base>.report" plus one CSV per table into dir (first table at
  /// "<base>.csv", the rest at "<base>.<table>.csv"); returns the paths.
  std::vector<std::string> write(const std::string& dir);
};

std::string format_double(double v);

/// Single dense layer of width 2^n mapping sign-encoded functions to their
/// spectra. The bias is pinned at zero by default: with it free, exactly N
/// independent examples leave a one-dimensional family of interpolating
/// solutions per output row and gradient methods land measurably off the
/// +/-1 matrix; with it pinned the solution is unique. train_bias=true in an
/// override probes the free-bias behaviour.
ExperimentReport learn_walsh(int n, size_t num_examples, uint64_t seed,
                             const std::optional<TrainConfig>& override_cfg = std::nullopt,
                             const std::string& out_dir = "");

/// Default sweep grid {N/8, N/4, N/2, 3N/4, 7N/8, N-1, N, 2N}, clamped to
/// [1, 2N] and deduplicated.
std::vector<size_t> default_sweep_counts(int n);

/// Spectrum exact-match accuracy on a fixed disjoint test set as a function
/// of the training-set size, averaged over seeds. Counts above N are topped
/// up with random distinct functions beyond an independent core of N.
ExperimentReport min_examples_sweep(int n, const std::vector<size_t>& counts, int num_seeds,
                                    uint64_t seed,
                                    const std::optional<TrainConfig>& override_cfg = std::nullopt,
                                    const std::string& out_dir = "");

/// Analytic network computing nonlinearity exactly: a dense layer whose rows
/// are -1/2 and +1/2 times the Hadamard rows with bias 2^(n-1) (the 2N affine
/// distances), then negate -> maxpool over the full window -> negate to take
/// the minimum.
Network affine_min_network(int n);

/// Trains the affine+min architecture on scalar nonlinearity targets.
/// From random init this is a documented hard case (the pool routes gradient
/// to one row per example); from warm_start it verifies the analytic optimum
/// is stable. Reports accuracy and a greedy (heuristic) matching distance of
/// learned rows to the nearest signed half-Hadamard rows.
ExperimentReport affine_min_training_attempt(int n, const Dataset& data, uint64_t seed,
                                             const std::optional<TrainConfig>& override_cfg =
                                                 std::nullopt,
                                             const std::string& out_dir = "", bool warm_start = false);

/// Encoder architectures for the end-to-end task; hidden widths halve down
/// to 2 and a final scalar layer follows.
std::vector<int> encoder_hidden_widths(int n);

struct EndToEndOptions {
  uint64_t seed = 1;
  int seeds_to_try = 3;           // stop at the first seed that meets the bar
  size_t train_size = 0;          // 0 = per-n default
  size_t test_size = 0;           // 0 = per-n default (n=4: complement of train)
  double target_test_accuracy = 0;  // 0 = per-n default
  std::optional<TrainConfig> config;
  int eval_every = 0;             // 0 = per-n default
};

/// Trains the encoder network on (function -> nonlinearity) pairs and reports
/// train/test accuracy, tolerance bands, and confusion matrices. n=3 and n=6
/// are expected-negative probes with capped budgets.
ExperimentReport end_to_end(int n, const EndToEndOptions& opts, const std::string& out_dir = "");

/// Wall-time per function and state bytes for nonlinearity via the fast
/// transform, via the direct O(N^2) transform, and via a saved model. For
/// n >= 8 the fast-vs-direct ordering is asserted; the model ratio is only
/// reported.
ExperimentReport cost_benchmark(int n, const std::string& model_path, uint64_t seed = 1,
                                const std::string& out_dir = "");

}  // namespace bnl
