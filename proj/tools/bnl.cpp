// bnl - Boolean function properties, dataset generation, network training,
// and the learnability experiments, from one binary.
//
// Exit codes: 0 success, 1 negative experiment outcome (completed run whose
// success bar was not met), 2 usage or input error, 3 numeric failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bnl/dataset.hpp"
#include "bnl/experiments.hpp"
#include "bnl/network.hpp"
#include "bnl/train.hpp"
#include "bnl/truth_table.hpp"
#include "bnl/walsh.hpp"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNegative = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

bnl::TruthTable parse_table(const std::string& text, bool force_hex) {
  if (text.empty()) throw std::invalid_argument("empty truth table");
  bool binary_chars = text.find_first_not_of("01") == std::string::npos;
  if (!force_hex && binary_chars) return bnl::TruthTable::from_bit_string(text);
  // hex form: length determines the arity (4 bits per digit)
  size_t nbits = text.size() * 4;
  if (nbits < 2 || (nbits & (nbits - 1)) != 0)
    throw std::invalid_argument("hex table length must encode a power-of-two bit count");
  int n = 0;
  while ((size_t(1) << n) < nbits) ++n;
  return bnl::TruthTable::from_hex(n, text);
}

struct TrainOverride {
  std::string optimizer;
  double lr = 0;
  int epochs = 0;
  int batch = 0;

  bool any() const { return !optimizer.empty() || lr > 0 || epochs > 0 || batch > 0; }

  std::optional<bnl::TrainConfig> to_config(const bnl::TrainConfig& base) const {
    if (!any()) return std::nullopt;
    bnl::TrainConfig cfg = base;
    if (!optimizer.empty()) cfg.optimizer = bnl::optimizer_from_name(optimizer);
    if (lr > 0) cfg.learning_rate = lr;
    if (epochs > 0) cfg.epochs = epochs;
    if (batch > 0) cfg.batch_size = batch;
    return cfg;
  }
};

void add_train_flags(CLI::App* cmd, TrainOverride& ov) {
  cmd->add_option("--optimizer", ov.optimizer, "sgd or adam")
      ->check(CLI::IsMember({"sgd", "adam"}));
  cmd->add_option("--lr", ov.lr, "learning rate");
  cmd->add_option("--epochs", ov.epochs, "epoch count");
  cmd->add_option("--batch", ov.batch, "mini-batch size");
}

int run_props(const std::string& table_text, bool force_hex, bool want_spectrum, bool as_json) {
  bnl::TruthTable f = parse_table(table_text, force_hex);
  int w = bnl::weight(f);
  int deg = bnl::degree(f);
  bool affine = deg <= 1;
  int nl = bnl::nonlinearity(f);
  if (as_json) {
    json j{{"n", f.arity()},
           {"weight", w},
           {"degree", deg},
           {"affine", affine},
           {"nonlinearity", nl}};
    if (want_spectrum) j["spectrum"] = bnl::fwt(f).values;
    std::cout << j.dump() << "\n";
  } else {
    std::cout << "n " << f.arity() << "\n"
              << "weight " << w << "\n"
              << "degree " << deg << "\n"
              << "affine " << (affine ? "true" : "false") << "\n"
              << "nonlinearity " << nl << "\n";
    if (want_spectrum) std::cout << bnl::spectrum_dump(bnl::fwt(f));
  }
  return kExitOk;
}

bnl::Network build_arch(const std::string& arch, const bnl::Dataset& data) {
  int dim = int(data.input_width());
  if (arch == "linear") return bnl::Network(dim, {bnl::LayerSpec::dense(dim)});
  if (arch == "affine-min") return bnl::affine_min_network(data.n);
  if (arch == "encoder") {
    std::vector<bnl::LayerSpec> layers;
    for (int w : bnl::encoder_hidden_widths(data.n)) {
      layers.push_back(bnl::LayerSpec::dense(w));
      layers.push_back(bnl::LayerSpec::relu());
    }
    layers.push_back(bnl::LayerSpec::dense(1));
    return bnl::Network(dim, std::move(layers));
  }
  throw std::invalid_argument("unknown architecture '" + arch + "'");
}

int run_experiment(const std::string& id, int n, uint64_t seed, const std::string& out_dir,
                   const TrainOverride& ov, size_t examples, const std::string& counts_text,
                   int sweep_seeds, size_t train_size, size_t test_size, double target,
                   int attempts, bool warm_start, size_t data_size, const std::string& model) {
  bnl::TrainConfig base;
  std::optional<bnl::TrainConfig> cfg = ov.to_config(base);
  bnl::ExperimentReport rep;

  if (id == "learn-walsh") {
    size_t k = examples ? examples : size_t(1) << n;
    rep = bnl::learn_walsh(n, k, seed, cfg, out_dir);
    std::cout << "learn-walsh n=" << n << " seed=" << seed << ": H_" << (1 << n)
              << " recovered: " << *rep.find_metric("recovered_rounded")
              << " (max dev " << *rep.find_metric("max_weight_deviation") << ")";
  } else if (id == "min-examples") {
    std::vector<size_t> counts;
    if (counts_text.empty()) {
      counts = bnl::default_sweep_counts(n);
    } else {
      std::string cur;
      for (char c : counts_text + ",") {
        if (c == ',') {
          if (!cur.empty()) counts.push_back(std::stoull(cur));
          cur.clear();
        } else {
          cur += c;
        }
      }
    }
    rep = bnl::min_examples_sweep(n, counts, sweep_seeds, seed, cfg, out_dir);
    std::cout << "min-examples n=" << n << " seed=" << seed
              << ": all seeds exact at N: " << *rep.find_metric("all_seeds_exact_at_N")
              << ", mean curve non-decreasing: " << *rep.find_metric("mean_curve_non_decreasing");
  } else if (id == "affine-min") {
    size_t size = data_size ? data_size : (n <= 4 ? (size_t(1) << (size_t(1) << n)) : 20000);
    bnl::Dataset data =
        bnl::generate(n, bnl::Task::nonlinearity, size, bnl::derive_seed(seed, "affine_min_data"));
    rep = bnl::affine_min_training_attempt(n, data, seed, cfg, out_dir, warm_start);
    std::cout << "affine-min n=" << n << " seed=" << seed << ": train accuracy "
              << *rep.find_metric("train_accuracy_exact")
              << (rep.expected_negative ? " (expected-negative probe)" : "");
  } else if (id == "end-to-end") {
    bnl::EndToEndOptions opts;
    opts.seed = seed;
    opts.train_size = train_size;
    opts.test_size = test_size;
    opts.target_test_accuracy = target;
    if (attempts > 0) opts.seeds_to_try = attempts;
    opts.config = cfg;
    rep = bnl::end_to_end(n, opts, out_dir);
    std::cout << "end-to-end n=" << n << " seed=" << seed << ": best test accuracy "
              << *rep.find_metric("best_test_accuracy") << " ("
              << *rep.find_metric("param_count") << " params)";
  } else if (id == "bench") {
    rep = bnl::cost_benchmark(n, model, seed, out_dir);
    std::cout << "bench n=" << n << ": fwt " << *rep.find_metric("fwt_ns_per_call")
              << " ns, naive " << *rep.find_metric("naive_ns_per_call") << " ns, model "
              << *rep.find_metric("model_ns_per_call") << " ns";
  } else {
    throw std::invalid_argument("unknown experiment '" + id + "'");
  }

  if (!out_dir.empty()) std::cout << " -> " << out_dir << "/" << rep.base_name() << ".report";
  std::cout << "\n";
  return rep.negative_outcome ? kExitNegative : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boolean function nonlinearity toolkit"};
  app.require_subcommand(1);

  // props
  std::string table_text;
  bool force_hex = false, want_spectrum = false, props_json = false;
  CLI::App* props = app.add_subcommand("props", "properties of one truth table");
  props->add_option("table", table_text, "truth table, binary (e.g. 0110) or hex with --hex");
  props->add_flag("--hex", force_hex, "interpret the table as hex digits");
  props->add_flag("--spectrum", want_spectrum, "also print the Walsh spectrum");
  props->add_flag("--json", props_json, "machine-readable output");

  // gen
  int gen_n = 0;
  std::string gen_task = "nonlinearity", gen_out;
  size_t gen_size = 0;
  uint64_t gen_seed = 1;
  CLI::App* gen = app.add_subcommand("gen", "generate a dataset");
  gen->add_option("-n", gen_n, "arity")->required();
  gen->add_option("--task", gen_task, "nonlinearity or walsh_spectrum")
      ->check(CLI::IsMember({"nonlinearity", "walsh_spectrum"}));
  gen->add_option("--size", gen_size, "number of examples")->required();
  gen->add_option("--seed", gen_seed, "generation seed");
  gen->add_option("-o,--out", gen_out, "output path")->required();

  // train
  std::string train_data, train_arch = "", train_out, train_eval;
  uint64_t train_seed = 1;
  bool train_no_bias = false;
  TrainOverride train_ov;
  CLI::App* tr = app.add_subcommand("train", "train a network on a dataset");
  tr->add_option("--data", train_data, "training dataset (.bnl)")->required();
  tr->add_option("--arch", train_arch, "linear, encoder, or affine-min");
  tr->add_option("--seed", train_seed, "training seed");
  tr->add_option("--eval", train_eval, "optional eval dataset (.bnl)");
  tr->add_flag("--no-bias", train_no_bias, "pin biases at zero");
  add_train_flags(tr, train_ov);
  tr->add_option("-o,--out", train_out, "model output path (.bnlm)")->required();

  // eval
  std::string eval_model, eval_data, eval_confusion;
  bool eval_json = false;
  CLI::App* ev = app.add_subcommand("eval", "evaluate a model on a dataset");
  ev->add_option("--model", eval_model, "model path (.bnlm)")->required();
  ev->add_option("--data", eval_data, "dataset path (.bnl)")->required();
  ev->add_option("--confusion", eval_confusion, "write the confusion matrix CSV here");
  ev->add_flag("--json", eval_json, "machine-readable output");

  // experiment
  std::string exp_id, exp_out = "reports", exp_counts, exp_model;
  int exp_n = 4, exp_sweep_seeds = 5, exp_attempts = 0;
  uint64_t exp_seed = 1;
  size_t exp_examples = 0, exp_train_size = 0, exp_test_size = 0, exp_data_size = 0;
  double exp_target = 0;
  bool exp_warm = false;
  TrainOverride exp_ov;
  CLI::App* ex = app.add_subcommand("experiment", "run a reproduction experiment");
  ex->add_option("id", exp_id, "learn-walsh | min-examples | affine-min | end-to-end | bench")
      ->required()
      ->check(CLI::IsMember({"learn-walsh", "min-examples", "affine-min", "end-to-end", "bench"}));
  ex->add_option("-n", exp_n, "arity");
  ex->add_option("--seed", exp_seed, "experiment seed");
  ex->add_option("-o,--out", exp_out, "report directory");
  ex->add_option("--examples", exp_examples, "learn-walsh: training example count (default N)");
  ex->add_option("--counts", exp_counts, "min-examples: comma-separated example counts");
  ex->add_option("--sweep-seeds", exp_sweep_seeds, "min-examples: seeds to average");
  ex->add_option("--train-size", exp_train_size, "end-to-end: training set size");
  ex->add_option("--test-size", exp_test_size, "end-to-end: test set size");
  ex->add_option("--target", exp_target, "end-to-end: success bar on test accuracy");
  ex->add_option("--attempts", exp_attempts, "end-to-end: max seeds to try");
  ex->add_option("--data-size", exp_data_size, "affine-min: dataset size");
  ex->add_flag("--warm-start", exp_warm, "affine-min: start from the analytic parameters");
  ex->add_option("--model", exp_model, "bench: model path");
  add_train_flags(ex, exp_ov);

  // bench shortcut (same as experiment bench)
  std::string bench_model, bench_out = "reports";
  int bench_n = 4;
  uint64_t bench_seed = 1;
  CLI::App* be = app.add_subcommand("bench", "compare nonlinearity costs per method");
  be->add_option("-n", bench_n, "arity");
  be->add_option("--model", bench_model, "model path (.bnlm)")->required();
  be->add_option("--seed", bench_seed, "sampling seed");
  be->add_option("-o,--out", bench_out, "report directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (props->parsed()) return run_props(table_text, force_hex, want_spectrum, props_json);

    if (gen->parsed()) {
      bnl::Dataset d = bnl::generate(gen_n, bnl::task_from_name(gen_task), gen_size, gen_seed);
      bnl::save(d, gen_out);
      std::cout << "gen: wrote " << d.size() << " examples to " << gen_out << "\n";
      return kExitOk;
    }

    if (tr->parsed()) {
      bnl::Dataset data = bnl::load(train_data);
      std::string arch = train_arch.empty()
                             ? (data.task == bnl::Task::walsh_spectrum ? "linear" : "encoder")
                             : train_arch;
      bnl::Network net = build_arch(arch, data);
      bnl::TrainConfig cfg;
      cfg.seed = train_seed;
      cfg.train_bias = !train_no_bias;
      if (auto c = train_ov.to_config(cfg)) cfg = *c;
      std::optional<bnl::Dataset> eval_set;
      if (!train_eval.empty()) eval_set = bnl::load(train_eval);
      bnl::TrainReport r =
          bnl::train(net, data, cfg, eval_set ? &*eval_set : nullptr, eval_set ? 1 : 0);
      bnl::save_model(net, train_out);
      std::cout << "train: arch=" << arch << " epochs=" << r.epochs_run << " final loss "
                << (r.epoch_loss.empty() ? 0.0 : r.epoch_loss.back()) << " -> " << train_out
                << "\n";
      return kExitOk;
    }

    if (ev->parsed()) {
      bnl::Network net = bnl::load_model(eval_model);
      bnl::Dataset data = bnl::load(eval_data);
      double acc = bnl::evaluate_accuracy(net, data);
      if (!eval_confusion.empty()) {
        bnl::ConfusionMatrix m = bnl::confusion_matrix(net, data);
        FILE* f = std::fopen(eval_confusion.c_str(), "wb");
        if (!f) throw std::runtime_error("cannot open '" + eval_confusion + "'");
        std::fprintf(f, "true_class");
        for (int c = 0; c < m.classes; ++c) std::fprintf(f, ",pred_%d", c);
        std::fprintf(f, "\n");
        for (int r = 0; r < m.classes; ++r) {
          std::fprintf(f, "%d", r);
          for (int c = 0; c < m.classes; ++c)
            std::fprintf(f, ",%lld", static_cast<long long>(m.at(r, c)));
          std::fprintf(f, "\n");
        }
        std::fclose(f);
      }
      if (eval_json) {
        json j{{"accuracy", acc}, {"examples", data.size()}};
        if (data.task == bnl::Task::nonlinearity) {
          bnl::AccuracyBands b = bnl::evaluate_accuracy_bands(net, data);
          j["within_half"] = b.within_half;
          j["within_one"] = b.within_one;
        }
        std::cout << j.dump() << "\n";
      } else {
        std::cout << "eval: accuracy " << acc << " on " << data.size() << " examples\n";
      }
      return kExitOk;
    }

    if (ex->parsed())
      return run_experiment(exp_id, exp_n, exp_seed, exp_out, exp_ov, exp_examples, exp_counts,
                            exp_sweep_seeds, exp_train_size, exp_test_size, exp_target,
                            exp_attempts, exp_warm, exp_data_size, exp_model);

    if (be->parsed())
      return run_experiment("bench", bench_n, bench_seed, bench_out, TrainOverride{}, 0, "", 0, 0,
                            0, 0, 0, false, 0, bench_model);
  } catch (const bnl::TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
