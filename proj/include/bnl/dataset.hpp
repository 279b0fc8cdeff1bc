#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bnl/truth_table.hpp"

namespace bnl {

enum class Task { walsh_spectrum, nonlinearity };

enum class SplitTag { all, train, test };

std::string task_name(Task t);
Task task_from_name(const std::string& s);
std::string split_name(SplitTag t);
SplitTag split_from_name(const std::string& s);

/// One training example: a function plus its integer target(s) - the full
/// Walsh spectrum for the spectrum task, the single nonlinearity value for
/// the end-to-end task. The +/-1 network input is derived on demand.
struct Example {
  TruthTable fn;
  std::vector<int32_t> target;
};

struct Dataset {
  int n = 0;
  Task task = Task::nonlinearity;
  uint64_t seed = 0;
  SplitTag split = SplitTag::all;
  std::vector<Example> examples;

  size_t size() const { return examples.size(); }
  size_t input_width() const { return size_t(1) << n; }
  size_t target_width() const;

  /// Sign-encoded input, exactly +/-1 entries.
  std::vector<double> input_doubles(size_t i) const;
  std::vector<double> target_doubles(size_t i) const;
};

std::vector<int32_t> make_target(const TruthTable& f, Task task);

/// Deterministic sampling of `size` distinct functions. For n <= 4 this is a
/// seeded shuffle of the full index space followed by a prefix; for n >= 5,
/// rejection sampling of random tables with exact dedup. Same arguments,
/// same bytes on disk.
Dataset generate(int n, Task task, size_t size, uint64_t seed);

/// `count` sign-encoded functions whose +/-1 vectors are linearly independent
/// over the rationals, drawn by seeded rejection; Walsh-spectrum targets are
/// attached. `exclude` entries are never drawn.
Dataset independent_set(int n, size_t count, uint64_t seed,
                        const std::vector<TruthTable>& exclude = {});

/// Disjoint, exhaustive partition after a seeded shuffle.
std::pair<Dataset, Dataset> split(const Dataset& d, double train_fraction, uint64_t seed);

void save(const Dataset& d, const std::string& path);

/// Loads and re-verifies targets against the transform module: every 100th
/// record by default, every record when verify_all is set.
Dataset load(const std::string& path, bool verify_all = false);

}  // namespace bnl
