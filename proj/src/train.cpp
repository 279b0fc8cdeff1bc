#include "bnl/train.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace bnl {

namespace {

constexpr int kChunk = 16;  // gradient reduction granularity, independent of workers

struct AdamState {
  std::vector<Matrix> mw, vw;
  std::vector<std::vector<double>> mb, vb;
  int64_t t = 0;

  explicit AdamState(const Network& net) {
    for (int l = 0; l < net.dense_count(); ++l) {
      const DenseParams& p = net.dense(l);
      mw.emplace_back(p.w.rows, p.w.cols);
      vw.emplace_back(p.w.rows, p.w.cols);
      mb.emplace_back(p.b.size(), 0.0);
      vb.emplace_back(p.b.size(), 0.0);
    }
  }
};

void adam_update(double& param, double g, double& m, double& v, double lr, double beta1,
                 double beta2, double bc1, double bc2) {
  constexpr double eps = 1e-8;
  m = beta1 * m + (1 - beta1) * g;
  v = beta2 * v + (1 - beta2) * g * g;
  param -= lr * (m / bc1) / (std::sqrt(v / bc2) + eps);
}

void apply_step(Network& net, const Gradients& g, const TrainConfig& cfg, AdamState* adam) {
  if (cfg.optimizer == OptimizerKind::sgd) {
    for (int l = 0; l < net.dense_count(); ++l) {
      DenseParams& p = net.dense(l);
      for (size_t i = 0; i < p.w.data.size(); ++i)
        p.w.data[i] -= cfg.learning_rate * g.dw[size_t(l)].data[i];
      if (!cfg.train_bias) continue;
      for (size_t i = 0; i < p.b.size(); ++i)
        p.b[i] -= cfg.learning_rate * g.db[size_t(l)][i];
    }
    return;
  }
  adam->t += 1;
  double bc1 = 1.0 - std::pow(cfg.adam_beta1, double(adam->t));
  double bc2 = 1.0 - std::pow(cfg.adam_beta2, double(adam->t));
  for (int l = 0; l < net.dense_count(); ++l) {
    DenseParams& p = net.dense(l);
    for (size_t i = 0; i < p.w.data.size(); ++i)
      adam_update(p.w.data[i], g.dw[size_t(l)].data[i], adam->mw[size_t(l)].data[i],
                  adam->vw[size_t(l)].data[i], cfg.learning_rate, cfg.adam_beta1,
                  cfg.adam_beta2, bc1, bc2);
    if (!cfg.train_bias) continue;
    for (size_t i = 0; i < p.b.size(); ++i)
      adam_update(p.b[i], g.db[size_t(l)][i], adam->mb[size_t(l)][i], adam->vb[size_t(l)][i],
                  cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, bc1, bc2);
  }
}

// Runs fn(chunk_index, begin, end) over fixed-size chunks of [0, total) on up
// to worker_count() threads. Chunk boundaries do not depend on the worker
// count, so per-chunk results combined in chunk order are reproducible.
template <typename Fn>
void for_chunks(size_t total, size_t n_chunks, const Fn& fn) {
  int workers = std::min<int>(worker_count(), int(n_chunks));
  if (workers <= 1) {
    for (size_t c = 0; c < n_chunks; ++c)
      fn(c, c * kChunk, std::min(total, (c + 1) * kChunk));
    return;
  }
  std::atomic<size_t> next{0};
  auto body = [&] {
    for (size_t c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1))
      fn(c, c * kChunk, std::min(total, (c + 1) * kChunk));
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (std::thread& t : pool) t.join();
}

std::vector<double> input_of(const Dataset& data, size_t i) { return data.input_doubles(i); }

double prediction_scalar(const Network& net, const Dataset& data, size_t i) {
  return net.forward(input_of(data, i))[0];
}

}  // namespace

std::string optimizer_name(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind optimizer_from_name(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw std::invalid_argument("unknown optimizer '" + s + "'");
}

int worker_count() {
  if (const char* env = std::getenv("BNL_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? int(hw) : 1;
}

TrainReport train(Network& net, const Dataset& data, const TrainConfig& cfg,
                  const Dataset* eval_set, int eval_every) {
  if (data.size() == 0) throw std::invalid_argument("train: empty dataset");
  if (int(data.input_width()) != net.input_width())
    throw std::invalid_argument("train: dataset arity does not match the network input width (" +
                                std::to_string(data.input_width()) + " vs " +
                                std::to_string(net.input_width()) + ")");
  if (int(data.target_width()) != net.output_width())
    throw std::invalid_argument("train: target width does not match the network output width");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (cfg.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (!(cfg.learning_rate > 0)) throw std::invalid_argument("train: learning_rate must be > 0");

  TrainReport report;
  report.optimizer_desc = optimizer_name(cfg.optimizer) + " lr=" + std::to_string(cfg.learning_rate) +
                          " batch=" + std::to_string(cfg.batch_size);
  report.init_desc = cfg.reinit_params
                         ? (cfg.weight_init == WeightInit::zeros
                                ? "zeros"
                                : "uniform +/-sqrt(1/fan_in), seed " + std::to_string(cfg.seed))
                         : "warm start (parameters kept)";

  if (cfg.reinit_params) {
    if (cfg.weight_init == WeightInit::zeros)
      net.init_zeros();
    else
      net.init_uniform_scaled(derive_seed(cfg.seed, "weight_init"));
  }
  if (cfg.epochs == 0) return report;

  const size_t count = data.size();
  std::vector<std::vector<double>> targets(count);
  for (size_t i = 0; i < count; ++i) targets[i] = data.target_doubles(i);

  std::vector<size_t> order(count);
  for (size_t i = 0; i < count; ++i) order[i] = i;
  Rng shuffle_rng(derive_seed(cfg.seed, "epoch_shuffle"));

  AdamState adam_state(net);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle_each_epoch) shuffle_rng.shuffle(order);

    double epoch_loss_sum = 0.0;
    for (size_t start = 0; start < count; start += size_t(cfg.batch_size)) {
      size_t stop = std::min(count, start + size_t(cfg.batch_size));
      size_t bsize = stop - start;
      size_t n_chunks = (bsize + kChunk - 1) / kChunk;

      std::vector<Gradients> partials(n_chunks);
      std::vector<double> losses(n_chunks, 0.0);
      for_chunks(bsize, n_chunks, [&](size_t c, size_t lo, size_t hi) {
        Gradients acc = zero_gradients(net);
        Trace trace;
        double loss = 0.0;
        for (size_t k = lo; k < hi; ++k) {
          size_t idx = order[start + k];
          std::vector<double> in = input_of(data, idx);
          std::vector<double> out = net.forward_trace(in, trace);
          loss += mse_loss(out, targets[idx]);
          acc.add(backward(net, trace, targets[idx]));
        }
        partials[c] = std::move(acc);
        losses[c] = loss;
      });

      Gradients batch_grad = std::move(partials[0]);
      double batch_loss = losses[0];
      for (size_t c = 1; c < n_chunks; ++c) {
        batch_grad.add(partials[c]);
        batch_loss += losses[c];
      }
      batch_grad.scale(1.0 / double(bsize));
      epoch_loss_sum += batch_loss;

      apply_step(net, batch_grad, cfg, &adam_state);
    }

    double epoch_loss = epoch_loss_sum / double(count);
    if (!std::isfinite(epoch_loss))
      throw TrainingDiverged(epoch + 1, "training diverged (non-finite loss) at epoch " +
                                            std::to_string(epoch + 1));
    report.epoch_loss.push_back(epoch_loss);
    report.epochs_run = epoch + 1;

    if (eval_set && eval_every > 0 && ((epoch + 1) % eval_every == 0 || epoch + 1 == cfg.epochs))
      report.eval_accuracy.push_back(evaluate_accuracy(net, *eval_set));

    if (cfg.early_stop_loss > 0 && epoch_loss <= cfg.early_stop_loss) {
      report.early_stopped = true;
      break;
    }
  }
  return report;
}

double round_half_even(double v) {
  double fl = std::floor(v);
  double diff = v - fl;
  if (diff > 0.5) return fl + 1.0;
  if (diff < 0.5) return fl;
  return std::fmod(fl, 2.0) == 0.0 ? fl : fl + 1.0;
}

double evaluate_accuracy(const Network& net, const Dataset& data) {
  if (data.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
  if (int(data.input_width()) != net.input_width())
    throw std::invalid_argument("evaluate: dataset arity does not match the network input width");
  if (int(data.target_width()) != net.output_width())
    throw std::invalid_argument("evaluate: target width does not match the network output width");

  const double max_class = double(data.input_width() / 2);  // 2^(n-1)
  std::atomic<int64_t> hits{0};
  size_t n_chunks = (data.size() + kChunk - 1) / kChunk;
  for_chunks(data.size(), n_chunks, [&](size_t, size_t lo, size_t hi) {
    int64_t local = 0;
    for (size_t i = lo; i < hi; ++i) {
      std::vector<double> out = net.forward(data.input_doubles(i));
      const auto& target = data.examples[i].target;
      if (data.task == Task::nonlinearity) {
        double p = std::clamp(round_half_even(out[0]), 0.0, max_class);
        if (int64_t(p) == target[0]) ++local;
      } else {
        bool ok = true;
        for (size_t j = 0; j < out.size() && ok; ++j)
          ok = int64_t(round_half_even(out[j])) == target[j];
        if (ok) ++local;
      }
    }
    hits += local;
  });
  return double(hits.load()) / double(data.size());
}

AccuracyBands evaluate_accuracy_bands(const Network& net, const Dataset& data) {
  if (data.task != Task::nonlinearity)
    throw std::invalid_argument("accuracy bands are defined for the scalar task");
  const double max_class = double(data.input_width() / 2);
  AccuracyBands b;
  int64_t exact = 0, half = 0, one = 0;
  for (size_t i = 0; i < data.size(); ++i) {
    double raw = prediction_scalar(net, data, i);
    double t = double(data.examples[i].target[0]);
    double p = std::clamp(round_half_even(raw), 0.0, max_class);
    if (p == t) ++exact;
    if (std::abs(raw - t) <= 0.5) ++half;
    if (std::abs(raw - t) <= 1.0) ++one;
  }
  b.exact = double(exact) / double(data.size());
  b.within_half = double(half) / double(data.size());
  b.within_one = double(one) / double(data.size());
  return b;
}

int64_t ConfusionMatrix::total() const {
  int64_t s = 0;
  for (int64_t c : cells) s += c;
  return s;
}

ConfusionMatrix confusion_matrix(const Network& net, const Dataset& data) {
  if (data.task != Task::nonlinearity)
    throw std::invalid_argument("confusion_matrix requires the nonlinearity task");
  if (int(data.input_width()) != net.input_width())
    throw std::invalid_argument("confusion_matrix: dataset arity does not match the network");

  ConfusionMatrix m;
  m.classes = int(data.input_width() / 2) + 1;  // classes 0..2^(n-1)
  m.cells.assign(size_t(m.classes) * m.classes, 0);
  for (size_t i = 0; i < data.size(); ++i) {
    double raw = prediction_scalar(net, data, i);
    int pred = int(std::clamp(round_half_even(raw), 0.0, double(m.classes - 1)));
    int truth = data.examples[i].target[0];
    m.cells[size_t(truth) * m.classes + pred] += 1;
  }
  return m;
}

}  // namespace bnl
