#include "bnl/dataset.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "bnl/linalg.hpp"
#include "bnl/walsh.hpp"

namespace bnl {

namespace {

// memory guard for rejection-sampled arities
constexpr size_t kMaxGeneratedExamples = size_t(1) << 26;

[[noreturn]] void load_error(const std::string& path, size_t line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::vector<int32_t> sign_values(const TruthTable& f) {
  std::vector<int32_t> v(f.size());
  for (size_t i = 0; i < f.size(); ++i) v[i] = 1 - 2 * f.bit(i);
  return v;
}

}  // namespace

std::string task_name(Task t) {
  return t == Task::walsh_spectrum ? "walsh_spectrum" : "nonlinearity";
}

Task task_from_name(const std::string& s) {
  if (s == "walsh_spectrum") return Task::walsh_spectrum;
  if (s == "nonlinearity") return Task::nonlinearity;
  throw std::invalid_argument("unknown task '" + s + "'");
}

std::string split_name(SplitTag t) {
  switch (t) {
    case SplitTag::train: return "train";
    case SplitTag::test: return "test";
    default: return "all";
  }
}

SplitTag split_from_name(const std::string& s) {
  if (s == "train") return SplitTag::train;
  if (s == "test") return SplitTag::test;
  if (s == "all") return SplitTag::all;
  throw std::invalid_argument("unknown split '" + s + "'");
}

size_t Dataset::target_width() const {
  return task == Task::walsh_spectrum ? input_width() : 1;
}

std::vector<double> Dataset::input_doubles(size_t i) const {
  const TruthTable& f = examples[i].fn;
  std::vector<double> v(f.size());
  for (size_t j = 0; j < f.size(); ++j) v[j] = double(1 - 2 * f.bit(j));
  return v;
}

std::vector<double> Dataset::target_doubles(size_t i) const {
  const auto& t = examples[i].target;
  return std::vector<double>(t.begin(), t.end());
}

std::vector<int32_t> make_target(const TruthTable& f, Task task) {
  if (task == Task::walsh_spectrum) return fwt(f).values;
  return {int32_t(nonlinearity(f))};
}

Dataset generate(int n, Task task, size_t size, uint64_t seed) {
  Dataset d;
  d.n = n;
  d.task = task;
  d.seed = seed;
  d.split = SplitTag::all;

  Rng rng(derive_seed(seed, "generate"));

  if (n <= 4) {
    size_t space = size_t(1) << (size_t(1) << n);
    if (size > space)
      throw std::invalid_argument("requested " + std::to_string(size) + " examples but only " +
                                  std::to_string(space) + " functions exist at n=" +
                                  std::to_string(n));
    std::vector<uint32_t> indexes(space);
    for (size_t i = 0; i < space; ++i) indexes[i] = uint32_t(i);
    rng.shuffle(indexes);
    d.examples.reserve(size);
    for (size_t i = 0; i < size; ++i) {
      TruthTable f = TruthTable::from_index(n, indexes[i]);
      d.examples.push_back({f, make_target(f, task)});
    }
    return d;
  }

  if (size > kMaxGeneratedExamples)
    throw std::invalid_argument("dataset size exceeds the memory budget of " +
                                std::to_string(kMaxGeneratedExamples) + " examples");
  if (n == 5 && size > (size_t(1) << 32))
    throw std::invalid_argument("requested more examples than functions exist at n=5");

  std::set<std::vector<uint64_t>> seen;
  d.examples.reserve(size);
  while (d.examples.size() < size) {
    TruthTable f = TruthTable::random(n, rng);
    if (!seen.insert(f.words()).second) continue;
    d.examples.push_back({f, make_target(f, task)});
  }
  return d;
}

Dataset independent_set(int n, size_t count, uint64_t seed,
                        const std::vector<TruthTable>& exclude) {
  size_t dim = size_t(1) << n;
  if (count < 1 || count > dim)
    throw std::invalid_argument("independent_set: count must be in [1, 2^n]");

  std::set<std::vector<uint64_t>> banned;
  for (const TruthTable& f : exclude) {
    if (f.arity() != n) throw std::invalid_argument("independent_set: exclusion arity mismatch");
    banned.insert(f.words());
  }

  Dataset d;
  d.n = n;
  d.task = Task::walsh_spectrum;
  d.seed = seed;
  d.split = SplitTag::all;

  Rng rng(derive_seed(seed, "independent_set"));
  IndependenceTracker tracker(dim);
  size_t budget = 128 * count + 1024;
  while (d.examples.size() < count) {
    if (budget-- == 0)
      throw std::runtime_error("independent_set: retry budget exhausted before reaching rank " +
                               std::to_string(count));
    TruthTable f = TruthTable::random(n, rng);
    if (banned.count(f.words())) continue;
    if (!tracker.try_add(sign_values(f))) continue;
    banned.insert(f.words());
    d.examples.push_back({f, make_target(f, Task::walsh_spectrum)});
  }
  return d;
}

std::pair<Dataset, Dataset> split(const Dataset& d, double train_fraction, uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train_fraction must be strictly between 0 and 1");
  size_t total = d.size();
  size_t train_count = size_t(std::llround(train_fraction * double(total)));
  if (train_count == 0 || train_count >= total)
    throw std::invalid_argument("degenerate split: one side would be empty");

  std::vector<size_t> order(total);
  for (size_t i = 0; i < total; ++i) order[i] = i;
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(order);

  Dataset train, test;
  train.n = test.n = d.n;
  train.task = test.task = d.task;
  train.seed = test.seed = d.seed;
  train.split = SplitTag::train;
  test.split = SplitTag::test;
  train.examples.reserve(train_count);
  test.examples.reserve(total - train_count);
  for (size_t i = 0; i < total; ++i) {
    const Example& e = d.examples[order[i]];
    (i < train_count ? train : test).examples.push_back(e);
  }
  return {std::move(train), std::move(test)};
}

void save(const Dataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: LF endings everywhere
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "BNLDS v1 n=" << d.n << " task=" << task_name(d.task) << " size=" << d.size()
      << " seed=" << d.seed << " split=" << split_name(d.split) << "\n";
  for (const Example& e : d.examples) {
    out << e.fn.to_hex() << '\t';
    for (size_t i = 0; i < e.target.size(); ++i) {
      if (i) out << ' ';
      out << e.target[i];
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

Dataset load(const std::string& path, bool verify_all) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");

  std::string header;
  if (!std::getline(in, header)) load_error(path, 1, "missing header");

  Dataset d;
  size_t declared = 0;
  {
    std::istringstream hs(header);
    std::string magic, version;
    hs >> magic >> version;
    if (magic != "BNLDS" || version != "v1")
      load_error(path, 1, "not a BNLDS v1 file");
    std::string field;
    bool have_n = false, have_task = false, have_size = false, have_seed = false,
         have_split = false;
    while (hs >> field) {
      size_t eq = field.find('=');
      if (eq == std::string::npos) load_error(path, 1, "malformed header field '" + field + "'");
      std::string key = field.substr(0, eq);
      std::string val = field.substr(eq + 1);
      try {
        if (key == "n") {
          d.n = std::stoi(val);
          have_n = true;
        } else if (key == "task") {
          d.task = task_from_name(val);
          have_task = true;
        } else if (key == "size") {
          declared = std::stoull(val);
          have_size = true;
        } else if (key == "seed") {
          d.seed = std::stoull(val);
          have_seed = true;
        } else if (key == "split") {
          d.split = split_from_name(val);
          have_split = true;
        } else {
          load_error(path, 1, "unknown header field '" + key + "'");
        }
      } catch (const std::invalid_argument& e) {
        load_error(path, 1, e.what());
      }
    }
    if (!(have_n && have_task && have_size && have_seed && have_split))
      load_error(path, 1, "incomplete header");
    if (d.n < 1 || d.n > kMaxArity) load_error(path, 1, "arity out of range");
  }

  size_t expect_targets = d.task == Task::walsh_spectrum ? (size_t(1) << d.n) : 1;
  d.examples.reserve(declared);
  std::string line;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() && d.examples.size() == declared) continue;  // trailing blank
    size_t tab = line.find('\t');
    if (tab == std::string::npos) load_error(path, lineno, "missing TAB separator");
    Example e{TruthTable(d.n), {}};
    try {
      e.fn = TruthTable::from_hex(d.n, line.substr(0, tab));
    } catch (const std::invalid_argument& ex) {
      load_error(path, lineno, ex.what());
    }
    std::istringstream ts(line.substr(tab + 1));
    int64_t v;
    while (ts >> v) e.target.push_back(int32_t(v));
    if (!ts.eof()) load_error(path, lineno, "malformed target value");
    if (e.target.size() != expect_targets)
      load_error(path, lineno, "expected " + std::to_string(expect_targets) +
                                   " target value(s), got " + std::to_string(e.target.size()));
    d.examples.push_back(std::move(e));
    if (d.examples.size() > declared)
      load_error(path, lineno, "more records than the declared size " + std::to_string(declared));
  }
  if (d.examples.size() != declared)
    load_error(path, lineno, "declared size " + std::to_string(declared) + " but found " +
                                 std::to_string(d.examples.size()) + " records");

  // spot-check persisted targets against the transform module
  for (size_t i = 0; i < d.size(); i += verify_all ? 1 : 100) {
    if (d.examples[i].target != make_target(d.examples[i].fn, d.task))
      load_error(path, i + 2, "stored target does not match the recomputed value");
  }
  return d;
}

}  // namespace bnl
