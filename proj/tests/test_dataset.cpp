#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "bnl/dataset.hpp"
#include "bnl/linalg.hpp"
#include "bnl/walsh.hpp"
#include "oracles.hpp"

using namespace bnl;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out);
  out << text;
}

struct TempDir {
  fs::path path;
  TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("bnl_test_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<std::vector<int32_t>> sign_rows(const Dataset& d) {
  std::vector<std::vector<int32_t>> rows;
  for (size_t i = 0; i < d.size(); ++i) {
    std::vector<int32_t> r(d.input_width());
    for (size_t j = 0; j < r.size(); ++j) r[j] = 1 - 2 * d.examples[i].fn.bit(j);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

TEST_CASE("generate small space exhaustively") {
  Dataset d = generate(2, Task::walsh_spectrum, 16, 99);
  REQUIRE(d.size() == 16);
  std::set<uint64_t> seen;
  for (const Example& e : d.examples) {
    seen.insert(e.fn.to_index());
    CHECK(e.target == walsh_naive(e.fn).values);
  }
  CHECK(seen.size() == 16);  // the full space, each function once

  CHECK_THROWS_AS(generate(2, Task::nonlinearity, 17, 1), std::invalid_argument);
}

TEST_CASE("generate full n=4 space") {
  Dataset d = generate(4, Task::nonlinearity, 65536, 7);
  REQUIRE(d.size() == 65536);
  std::set<uint64_t> seen;
  int max_target = 0;
  for (const Example& e : d.examples) {
    seen.insert(e.fn.to_index());
    REQUIRE(e.target.size() == 1);
    CHECK(e.target[0] >= 0);
    max_target = std::max(max_target, int(e.target[0]));
  }
  CHECK(seen.size() == 65536);
  CHECK(max_target == 6);  // the bent bound at n=4
}

TEST_CASE("generate determinism") {
  Dataset a = generate(5, Task::nonlinearity, 500, 42);
  Dataset b = generate(5, Task::nonlinearity, 500, 42);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a.examples[i].fn == b.examples[i].fn);
    CHECK(a.examples[i].target == b.examples[i].target);
  }
  // distinctness at rejection-sampled arity
  std::set<std::vector<uint64_t>> seen;
  for (const Example& e : a.examples) seen.insert(e.fn.words());
  CHECK(seen.size() == a.size());

  TempDir tmp("gen_det");
  save(a, tmp.file("a.bnl"));
  save(b, tmp.file("b.bnl"));
  CHECK(slurp(tmp.file("a.bnl")) == slurp(tmp.file("b.bnl")));
}

TEST_CASE("independent_set") {
  Dataset d = independent_set(2, 4, 1);
  REQUIRE(d.size() == 4);
  CHECK(rank(sign_rows(d)) == 4);
  CHECK(oracles::rank_float([&] {
          std::vector<std::vector<double>> rows;
          for (const auto& r : sign_rows(d)) rows.emplace_back(r.begin(), r.end());
          return rows;
        }()) == 4);

  Dataset big = independent_set(5, 32, 3);
  CHECK(rank(sign_rows(big)) == 32);
  for (const Example& e : big.examples) CHECK(e.target == fwt(e.fn).values);

  Dataset one = independent_set(4, 1, 5);
  REQUIRE(one.size() == 1);
  CHECK(rank(sign_rows(one)) == 1);

  CHECK_THROWS_AS(independent_set(2, 5, 1), std::invalid_argument);
  CHECK_THROWS_AS(independent_set(3, 0, 1), std::invalid_argument);
}

TEST_CASE("independent_set exclusions") {
  Rng rng(17);
  std::vector<TruthTable> banned;
  for (int i = 0; i < 100; ++i) banned.push_back(TruthTable::random(3, rng));
  Dataset d = independent_set(3, 8, 21, banned);
  REQUIRE(d.size() == 8);
  CHECK(rank(sign_rows(d)) == 8);
  std::set<std::string> banned_set;
  for (const TruthTable& f : banned) banned_set.insert(f.to_bit_string());
  for (const Example& e : d.examples) CHECK(banned_set.count(e.fn.to_bit_string()) == 0);
}

TEST_CASE("rank") {
  std::vector<std::vector<int32_t>> same(5, std::vector<int32_t>{1, -1, 1, -1});
  CHECK(rank(same) == 1);

  std::vector<std::vector<int32_t>> h8rows;
  const HadamardMatrix& h8 = hadamard(8);
  for (int r = 0; r < 8; ++r) {
    std::vector<int32_t> row(8);
    for (int c = 0; c < 8; ++c) row[c] = h8.at(r, c);
    h8rows.push_back(std::move(row));
  }
  CHECK(rank(h8rows) == 8);

  std::vector<std::vector<int32_t>> h4 = {
      {1, 1, 1, 1}, {1, -1, 1, -1}, {1, 1, -1, -1}, {1, -1, -1, 1}};
  CHECK(rank(h4) == 4);

  CHECK(rank({{1, 2}, {2, 4}}) == 1);
  CHECK(rank({{0, 0, 0}}) == 0);
  CHECK_THROWS_AS(rank({}), std::invalid_argument);
  CHECK_THROWS_AS(rank({{1, 2}, {1}}), std::invalid_argument);

  // agreement with the float oracle on small random +/-1 sets
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    size_t m = 2 + rng.next_below(6);
    std::vector<std::vector<int32_t>> rows;
    std::vector<std::vector<double>> drows;
    for (size_t i = 0; i < m; ++i) {
      std::vector<int32_t> r(8);
      for (auto& v : r) v = rng.next_below(2) ? 1 : -1;
      // sometimes duplicate an earlier row to force deficiency
      if (i > 0 && rng.next_below(3) == 0) r = rows[rng.next_below(i)];
      drows.emplace_back(r.begin(), r.end());
      rows.push_back(std::move(r));
    }
    CHECK(rank(rows) == oracles::rank_float(drows));
  }

  // large enough to overflow the 128-bit fraction-free path
  Dataset big = independent_set(6, 64, 9);
  CHECK(rank(sign_rows(big)) == 64);
}

TEST_CASE("IndependenceTracker certificates") {
  IndependenceTracker t(4);
  CHECK(t.try_add({1, 1, 1, 1}));
  CHECK_FALSE(t.try_add({1, 1, 1, 1}));
  CHECK_FALSE(t.try_add({-1, -1, -1, -1}));  // scalar multiple
  CHECK(t.try_add({1, -1, 1, -1}));
  CHECK(t.try_add({1, 1, -1, -1}));
  CHECK_FALSE(t.try_add({3, 1, 1, -1}));  // sum of the three accepted rows
  CHECK(t.rank() == 3);
  CHECK(t.try_add({1, -1, -1, 1}));  // completes the orthogonal basis
  CHECK(t.rank() == 4);
  CHECK_THROWS_AS(t.try_add({1, 1}), std::invalid_argument);
}

TEST_CASE("split") {
  Dataset d = generate(4, Task::nonlinearity, 65536, 11);
  auto [train, test] = split(d, 30000.0 / 65536.0, 13);
  CHECK(train.size() == 30000);
  CHECK(test.size() == 35536);
  CHECK(train.split == SplitTag::train);
  CHECK(test.split == SplitTag::test);

  std::set<uint64_t> all;
  for (const Example& e : train.examples) all.insert(e.fn.to_index());
  for (const Example& e : test.examples) all.insert(e.fn.to_index());
  CHECK(all.size() == 65536);  // disjoint and exhaustive

  auto [train2, test2] = split(d, 30000.0 / 65536.0, 13);
  bool same = train2.size() == train.size();
  for (size_t i = 0; same && i < 100; ++i)
    same = train2.examples[i].fn == train.examples[i].fn;
  CHECK(same);

  CHECK_THROWS_AS(split(d, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(split(d, 1.0, 1), std::invalid_argument);
  Dataset tiny = generate(3, Task::nonlinearity, 10, 1);
  CHECK_THROWS_AS(split(tiny, 0.001, 1), std::invalid_argument);  // empty train side
}

TEST_CASE("save and load round trip") {
  TempDir tmp("roundtrip");
  Dataset d = generate(3, Task::walsh_spectrum, 50, 77);
  save(d, tmp.file("d.bnl"));
  Dataset e = load(tmp.file("d.bnl"), true);
  CHECK(e.n == d.n);
  CHECK(e.task == d.task);
  CHECK(e.seed == d.seed);
  CHECK(e.split == d.split);
  REQUIRE(e.size() == d.size());
  for (size_t i = 0; i < d.size(); ++i) {
    CHECK(e.examples[i].fn == d.examples[i].fn);
    CHECK(e.examples[i].target == d.examples[i].target);
  }
}

TEST_CASE("empty dataset file") {
  TempDir tmp("empty");
  Dataset d;
  d.n = 4;
  d.task = Task::nonlinearity;
  d.seed = 9;
  d.split = SplitTag::all;
  save(d, tmp.file("e.bnl"));
  Dataset e = load(tmp.file("e.bnl"));
  CHECK(e.size() == 0);
  CHECK(e.n == 4);
}

TEST_CASE("load rejects malformed files") {
  TempDir tmp("malformed");

  spit(tmp.file("nothdr.bnl"), "garbage\n");
  CHECK_THROWS_AS(load(tmp.file("nothdr.bnl")), std::runtime_error);

  // header says n=3 but the record is a 4-bit (n=2) table
  spit(tmp.file("arity.bnl"),
       "BNLDS v1 n=3 task=nonlinearity size=1 seed=0 split=all\n6\t1\n");
  CHECK_THROWS_WITH_AS(load(tmp.file("arity.bnl")), doctest::Contains(":2:"),
                       std::runtime_error);

  spit(tmp.file("badhex.bnl"),
       "BNLDS v1 n=3 task=nonlinearity size=1 seed=0 split=all\nzz\t1\n");
  CHECK_THROWS_AS(load(tmp.file("badhex.bnl")), std::runtime_error);

  spit(tmp.file("targets.bnl"),
       "BNLDS v1 n=2 task=walsh_spectrum size=1 seed=0 split=all\n6\t0 0 4\n");
  CHECK_THROWS_WITH_AS(load(tmp.file("targets.bnl")), doctest::Contains("4 target"),
                       std::runtime_error);

  // truncated: one record missing
  spit(tmp.file("short.bnl"),
       "BNLDS v1 n=2 task=nonlinearity size=2 seed=0 split=all\n6\t0\n");
  CHECK_THROWS_AS(load(tmp.file("short.bnl")), std::runtime_error);

  // wrong stored target is caught by re-verification (record 0 is always checked)
  spit(tmp.file("wrong.bnl"),
       "BNLDS v1 n=2 task=nonlinearity size=1 seed=0 split=all\n6\t1\n");
  CHECK_THROWS_WITH_AS(load(tmp.file("wrong.bnl")), doctest::Contains("recomputed"),
                       std::runtime_error);

  CHECK_THROWS_AS(load(tmp.file("missing.bnl")), std::runtime_error);
}

TEST_CASE("load target verification depth") {
  TempDir tmp("verify");
  Dataset d = generate(3, Task::nonlinearity, 120, 5);
  save(d, tmp.file("v.bnl"));

  // corrupt a record that the 1-in-100 spot check skips (line 2 + 57)
  std::string text = slurp(tmp.file("v.bnl"));
  size_t lines_seen = 0, pos = 0;
  while (lines_seen < 57 && pos != std::string::npos) {
    pos = text.find('\n', pos) + 1;
    ++lines_seen;
  }
  size_t tab = text.find('\t', pos);
  text[tab + 1] = text[tab + 1] == '4' ? '3' : '4';
  spit(tmp.file("v.bnl"), text);

  CHECK_NOTHROW(load(tmp.file("v.bnl")));  // spot check passes over it
  CHECK_THROWS_WITH_AS(load(tmp.file("v.bnl"), true), doctest::Contains("recomputed"),
                       std::runtime_error);
}

TEST_CASE("input views are sign encoded") {
  Dataset d = generate(3, Task::nonlinearity, 20, 2);
  for (size_t i = 0; i < d.size(); ++i) {
    std::vector<double> in = d.input_doubles(i);
    REQUIRE(in.size() == 8);
    for (size_t j = 0; j < in.size(); ++j)
      CHECK(in[j] == (d.examples[i].fn.bit(j) ? -1.0 : 1.0));
  }
}
