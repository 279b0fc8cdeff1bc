#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "bnl/dataset.hpp"
#include "bnl/experiments.hpp"
#include "bnl/train.hpp"
#include "bnl/walsh.hpp"
#include "oracles.hpp"

using namespace bnl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("bnl_nn_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

Network hadamard_dense(int n) {
  int dim = 1 << n;
  Network net(dim, {LayerSpec::dense(dim)});
  const HadamardMatrix& h = hadamard(dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) net.dense(0).w.at(r, c) = double(h.at(r, c));
  return net;
}

Network constant_net(int input_width, double value) {
  Network net(input_width, {LayerSpec::dense(1)});
  net.dense(0).b[0] = value;
  return net;
}

Dataset single_example_dataset(int n, int32_t target) {
  Dataset d;
  d.n = n;
  d.task = Task::nonlinearity;
  d.seed = 0;
  d.split = SplitTag::all;
  d.examples.push_back({TruthTable::zeros(n), {target}});
  return d;
}

Network random_net(int input_width, std::vector<LayerSpec> layers, uint64_t seed) {
  Network net(input_width, std::move(layers));
  net.init_uniform_scaled(seed);
  return net;
}

}  // namespace

TEST_CASE("forward matches the spectrum product") {
  Network net = hadamard_dense(2);
  std::vector<double> out = net.forward(std::vector<double>{1, -1, -1, 1});
  CHECK(out == std::vector<double>{0, 0, 0, 4});

  // exhaustive: the Hadamard dense layer is the transform, for every function
  Network net4 = hadamard_dense(4);
  for (uint64_t idx = 0; idx < 65536; ++idx) {
    TruthTable f = function_from_index(4, idx);
    std::vector<double> in(16);
    for (size_t i = 0; i < 16; ++i) in[i] = f.bit(i) ? -1.0 : 1.0;
    std::vector<double> got = net4.forward(in);
    WalshSpectrum want = fwt(f);
    for (size_t w = 0; w < 16; ++w) CHECK(got[w] == double(want.values[w]));
  }
}

TEST_CASE("layer primitives") {
  Network relu_net(3, {LayerSpec::relu()});
  CHECK(relu_net.forward(std::vector<double>{-1, 2, 0}) == std::vector<double>{0, 2, 0});

  Network pool(4, {LayerSpec::maxpool1d(4)});
  CHECK(pool.forward(std::vector<double>{3, 1, 4, 1}) == std::vector<double>{4});

  Network pool2(4, {LayerSpec::maxpool1d(2)});
  CHECK(pool2.forward(std::vector<double>{3, 1, 4, 1}) == std::vector<double>{3, 4});

  Network neg(2, {LayerSpec::negate()});
  CHECK(neg.forward(std::vector<double>{1.5, -2}) == std::vector<double>{-1.5, 2});

  CHECK_THROWS_AS(Network(4, {LayerSpec::maxpool1d(3)}), std::invalid_argument);
  CHECK_THROWS_AS(Network(4, {LayerSpec::dense(0)}), std::invalid_argument);
  CHECK_THROWS_AS(Network(0, {LayerSpec::dense(1)}), std::invalid_argument);

  Network d(4, {LayerSpec::dense(2)});
  CHECK_THROWS_AS(d.forward(std::vector<double>{1, 2, 3}), std::invalid_argument);
}

TEST_CASE("parameter count") {
  Network d(4, {LayerSpec::dense(3), LayerSpec::relu(), LayerSpec::dense(2)});
  CHECK(d.param_count() == size_t(4 * 3 + 3 + 3 * 2 + 2));
}

TEST_CASE("backward: finite differences") {
  Network net = random_net(
      6, {LayerSpec::dense(5), LayerSpec::relu(), LayerSpec::dense(3)}, 99);
  Rng rng(4);
  std::vector<double> in(6), target(3);
  for (double& v : in) v = rng.next_uniform(-2, 2);
  for (double& v : target) v = rng.next_uniform(-2, 2);

  Trace trace;
  net.forward_trace(in, trace);
  Gradients analytic = backward(net, trace, target);
  Gradients numeric = oracles::numeric_gradients(net, in, target, 1e-5);
  CHECK(oracles::gradients_close(analytic, numeric, 1e-6));
}

TEST_CASE("backward: zero loss means zero gradients") {
  Network net = random_net(4, {LayerSpec::dense(4), LayerSpec::relu(), LayerSpec::dense(2)}, 3);
  std::vector<double> in{0.5, -1, 2, 0.25};
  Trace trace;
  std::vector<double> out = net.forward_trace(in, trace);
  Gradients g = backward(net, trace, out);  // target == output
  for (const Matrix& m : g.dw)
    for (double v : m.data) CHECK(v == 0.0);
  for (const auto& b : g.db)
    for (double v : b) CHECK(v == 0.0);
}

TEST_CASE("backward: linear closed form over a batch") {
  Network net = random_net(3, {LayerSpec::dense(2)}, 8);
  std::vector<std::vector<double>> xs = {{1, -1, 1}, {-1, -1, 1}, {1, 1, -1}, {-1, 1, 1}};
  std::vector<std::vector<double>> ts = {{0.5, 1}, {2, -1}, {0, 0}, {1, 1}};

  Gradients sum = zero_gradients(net);
  for (size_t i = 0; i < xs.size(); ++i) {
    Trace trace;
    net.forward_trace(xs[i], trace);
    sum.add(backward(net, trace, ts[i]));
  }
  sum.scale(1.0 / double(xs.size()));

  // 2/B sum_i (W x_i + b - t_i) x_i^T, accumulated in the same order
  Gradients want = zero_gradients(net);
  for (size_t i = 0; i < xs.size(); ++i) {
    std::vector<double> y = net.forward(xs[i]);
    for (int r = 0; r < 2; ++r) {
      double e = 2.0 * (y[size_t(r)] - ts[i][size_t(r)]);
      want.db[0][size_t(r)] += e;
      for (int c = 0; c < 3; ++c) want.dw[0].at(r, c) += e * xs[i][size_t(c)];
    }
  }
  want.scale(1.0 / double(xs.size()));

  for (size_t i = 0; i < want.dw[0].data.size(); ++i)
    CHECK(sum.dw[0].data[i] == doctest::Approx(want.dw[0].data[i]).epsilon(1e-12));
  for (size_t i = 0; i < want.db[0].size(); ++i)
    CHECK(sum.db[0][i] == doctest::Approx(want.db[0][i]).epsilon(1e-12));
}

TEST_CASE("backward: maxpool ties route to the lowest index") {
  // identity dense layer in front of the pool makes the routing observable
  Network net(2, {LayerSpec::dense(2), LayerSpec::maxpool1d(2)});
  net.dense(0).w.at(0, 0) = 1;
  net.dense(0).w.at(1, 1) = 1;
  Trace trace;
  net.forward_trace(std::vector<double>{1, 1}, trace);  // tie inside the window
  Gradients g = backward(net, trace, std::vector<double>{0});
  CHECK(g.db[0][0] != 0.0);
  CHECK(g.db[0][1] == 0.0);
}

TEST_CASE("backward: relu gradient is zero at zero input") {
  Network net(1, {LayerSpec::dense(1), LayerSpec::relu()});
  net.dense(0).w.at(0, 0) = 1.0;  // pre-activation equals the input
  Trace trace;
  net.forward_trace(std::vector<double>{0.0}, trace);
  Gradients g = backward(net, trace, std::vector<double>{5.0});
  CHECK(g.dw[0].at(0, 0) == 0.0);
  CHECK(g.db[0][0] == 0.0);
}

TEST_CASE("train recovers the transform on the full n=2 space with sgd") {
  Dataset data = generate(2, Task::walsh_spectrum, 16, 21);
  Network net(4, {LayerSpec::dense(4)});
  TrainConfig cfg;
  cfg.optimizer = OptimizerKind::sgd;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 16;
  cfg.epochs = 2000;
  cfg.seed = 5;
  TrainReport r = train(net, data, cfg);
  CHECK(r.epochs_run == 2000);

  const HadamardMatrix& h = hadamard(4);
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(net.dense(0).b[size_t(i)]) < 0.1);
    for (int j = 0; j < 4; ++j)
      CHECK(round_half_even(net.dense(0).w.at(i, j)) == double(h.at(i, j)));
  }
}

TEST_CASE("train: zero epochs leaves parameters at their init") {
  Dataset data = generate(2, Task::nonlinearity, 8, 3);
  Network net(4, {LayerSpec::dense(1)});
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 17;
  train(net, data, cfg);

  Network ref(4, {LayerSpec::dense(1)});
  ref.init_uniform_scaled(derive_seed(17, "weight_init"));
  CHECK(net.dense(0).w.data == ref.dense(0).w.data);

  // warm start + zero epochs: parameters untouched
  net.dense(0).w.at(0, 0) = 7.0;
  cfg.reinit_params = false;
  train(net, data, cfg);
  CHECK(net.dense(0).w.at(0, 0) == 7.0);
}

TEST_CASE("train: full-batch loss is non-increasing on the convex task") {
  Dataset data = generate(2, Task::walsh_spectrum, 16, 9);
  Network net(4, {LayerSpec::dense(4)});
  TrainConfig cfg;
  cfg.optimizer = OptimizerKind::sgd;
  cfg.learning_rate = 0.01;
  cfg.batch_size = 16;
  cfg.epochs = 300;
  cfg.seed = 2;
  TrainReport r = train(net, data, cfg);
  for (size_t e = 1; e < r.epoch_loss.size(); ++e)
    CHECK(r.epoch_loss[e] <= r.epoch_loss[e - 1] + 1e-12);
}

TEST_CASE("train: divergence names the epoch") {
  Dataset data = generate(2, Task::walsh_spectrum, 16, 9);
  Network net(4, {LayerSpec::dense(4)});
  TrainConfig cfg;
  cfg.optimizer = OptimizerKind::sgd;
  cfg.learning_rate = 1e9;
  cfg.batch_size = 4;
  cfg.epochs = 50;
  try {
    train(net, data, cfg);
    FAIL("expected divergence");
  } catch (const TrainingDiverged& e) {
    CHECK(e.epoch >= 1);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("train: deterministic across runs and worker counts") {
  Dataset data = generate(3, Task::nonlinearity, 64, 4);
  auto run = [&](const char* threads) {
    setenv("BNL_THREADS", threads, 1);
    Network net(8, {LayerSpec::dense(6), LayerSpec::relu(), LayerSpec::dense(1)});
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.batch_size = 24;  // not a multiple of the chunk size
    cfg.seed = 11;
    train(net, data, cfg);
    unsetenv("BNL_THREADS");
    std::vector<double> params;
    for (int l = 0; l < net.dense_count(); ++l) {
      params.insert(params.end(), net.dense(l).w.data.begin(), net.dense(l).w.data.end());
      params.insert(params.end(), net.dense(l).b.begin(), net.dense(l).b.end());
    }
    return params;
  };
  std::vector<double> a = run("1");
  std::vector<double> b = run("2");
  std::vector<double> c = run("4");
  CHECK(a == b);
  CHECK(a == c);
}

TEST_CASE("evaluate_accuracy") {
  // a net that computes the target exactly scores 1.0
  Dataset full3 = generate(3, Task::nonlinearity, 256, 6);
  Network oracle_net = affine_min_network(3);
  CHECK(evaluate_accuracy(oracle_net, full3) == 1.0);

  // constant-zero net scores the population share of nl == 0
  Dataset full4 = generate(4, Task::nonlinearity, 65536, 8);
  Network zero_net = constant_net(16, 0.0);
  int64_t zeros = 0;
  for (const Example& e : full4.examples)
    if (nonlinearity_bruteforce(e.fn) == 0) ++zeros;
  CHECK(evaluate_accuracy(zero_net, full4) == doctest::Approx(double(zeros) / 65536.0));

  // round-half-to-even at the boundary: 5.5 rounds to 6, 4.5 rounds to 4
  Network half_net(16, {LayerSpec::dense(1)});
  half_net.dense(0).b[0] = 5.5;
  CHECK(evaluate_accuracy(half_net, single_example_dataset(4, 6)) == 1.0);
  CHECK(evaluate_accuracy(half_net, single_example_dataset(4, 5)) == 0.0);
  half_net.dense(0).b[0] = 4.5;
  CHECK(evaluate_accuracy(half_net, single_example_dataset(4, 4)) == 1.0);
  CHECK(evaluate_accuracy(half_net, single_example_dataset(4, 5)) == 0.0);

  // predictions are clamped into [0, 2^(n-1)]
  Network neg_net = constant_net(16, -3.0);
  CHECK(evaluate_accuracy(neg_net, single_example_dataset(4, 0)) == 1.0);

  CHECK_THROWS_AS(evaluate_accuracy(oracle_net, full4), std::invalid_argument);  // arity
}

TEST_CASE("round_half_even") {
  CHECK(round_half_even(0.5) == 0.0);
  CHECK(round_half_even(1.5) == 2.0);
  CHECK(round_half_even(2.5) == 2.0);
  CHECK(round_half_even(-0.5) == 0.0);
  CHECK(round_half_even(-1.5) == -2.0);
  CHECK(round_half_even(2.4) == 2.0);
  CHECK(round_half_even(2.6) == 3.0);
}

TEST_CASE("confusion matrix") {
  Dataset full3 = generate(3, Task::nonlinearity, 256, 6);
  ConfusionMatrix m = confusion_matrix(affine_min_network(3), full3);
  CHECK(m.classes == 5);  // classes 0..4
  CHECK(m.total() == 256);
  // an exact predictor is purely diagonal, rows summing to class populations
  std::vector<int64_t> pop(5, 0);
  for (const Example& e : full3.examples) pop[size_t(e.target[0])] += 1;
  for (int t = 0; t < 5; ++t)
    for (int p = 0; p < 5; ++p) CHECK(m.at(t, p) == (t == p ? pop[size_t(t)] : 0));

  // clamping puts wild outputs into the edge classes
  ConfusionMatrix low = confusion_matrix(constant_net(8, -9.0), full3);
  int64_t col0 = 0;
  for (int t = 0; t < low.classes; ++t) col0 += low.at(t, 0);
  CHECK(col0 == 256);
}

TEST_CASE("model save/load round trip") {
  TempDir tmp("model");
  Network net = random_net(
      8, {LayerSpec::dense(6), LayerSpec::relu(), LayerSpec::dense(4), LayerSpec::negate(),
          LayerSpec::maxpool1d(2), LayerSpec::dense(1)},
      123);
  save_model(net, tmp.file("m.bnlm"));
  Network back = load_model(tmp.file("m.bnlm"));
  CHECK(back.input_width() == net.input_width());
  CHECK(back.layers() == net.layers());

  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> in(8);
    for (double& v : in) v = rng.next_uniform(-3, 3);
    CHECK(net.forward(in) == back.forward(in));  // bit-exact
  }
}

TEST_CASE("model file integrity") {
  TempDir tmp("integrity");
  Network net = random_net(4, {LayerSpec::dense(2)}, 9);
  save_model(net, tmp.file("m.bnlm"));

  std::ifstream in(tmp.file("m.bnlm"), std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();

  {  // truncated
    std::ofstream out(tmp.file("short.bnlm"), std::ios::binary);
    out.write(bytes.data(), std::streamsize(bytes.size() - 7));
  }
  CHECK_THROWS_AS(load_model(tmp.file("short.bnlm")), std::runtime_error);

  {  // corrupted payload byte
    std::string bad = bytes;
    bad[bad.size() / 2] = char(bad[bad.size() / 2] ^ 0x40);
    std::ofstream out(tmp.file("bad.bnlm"), std::ios::binary);
    out.write(bad.data(), std::streamsize(bad.size()));
  }
  CHECK_THROWS_WITH_AS(load_model(tmp.file("bad.bnlm")), doctest::Contains("CRC"),
                       std::runtime_error);

  CHECK_THROWS_AS(load_model(tmp.file("absent.bnlm")), std::runtime_error);

  // a model for the wrong arity is rejected at evaluation by shape checks
  Dataset d3 = generate(3, Task::nonlinearity, 32, 2);
  Network net16 = constant_net(16, 0.0);
  CHECK_THROWS_AS(evaluate_accuracy(net16, d3), std::invalid_argument);
}
