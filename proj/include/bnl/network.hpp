#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bnl/rng.hpp"

namespace bnl {

/// Row-major dense matrix of 64-bit floats.
struct Matrix {
  int rows = 0, cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(size_t(r) * c, 0.0) {}

  double& at(int r, int c) { return data[size_t(r) * cols + c]; }
  double at(int r, int c) const { return data[size_t(r) * cols + c]; }
};

enum class LayerKind : uint8_t { dense = 0, relu = 1, maxpool1d = 2, negate = 3 };

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  int width = 0;        // dense: output width
  int pool_window = 0;  // maxpool1d: window size, must divide the input length

  static LayerSpec dense(int width) { return {LayerKind::dense, width, 0}; }
  static LayerSpec relu() { return {LayerKind::relu, 0, 0}; }
  static LayerSpec maxpool1d(int window) { return {LayerKind::maxpool1d, 0, window}; }
  static LayerSpec negate() { return {LayerKind::negate, 0, 0}; }

  bool operator==(const LayerSpec&) const = default;
};

struct DenseParams {
  Matrix w;               // out x in
  std::vector<double> b;  // out
};

/// Per-dense-layer gradients, in dense-layer order.
struct Gradients {
  std::vector<Matrix> dw;
  std::vector<std::vector<double>> db;

  void add(const Gradients& o);
  void scale(double s);
};

/// Intermediate activations kept by forward_trace for the backward pass.
struct Trace {
  std::vector<std::vector<double>> inputs;  // input of each layer, then the output
  std::vector<std::vector<int>> argmax;     // per maxpool layer, winner per window
};

/// A feed-forward stack of dense / relu / maxpool1d / negate layers.
class Network {
 public:
  Network(int input_width, std::vector<LayerSpec> layers);

  int input_width() const { return input_width_; }
  int output_width() const { return output_width_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }

  int dense_count() const { return int(params_.size()); }
  DenseParams& dense(int i) { return params_[size_t(i)]; }
  const DenseParams& dense(int i) const { return params_[size_t(i)]; }

  /// Total trainable parameters: sum over dense layers of in*out + out.
  size_t param_count() const;

  /// Seeded uniform init in +/-sqrt(1/fan_in); biases zero.
  void init_uniform_scaled(uint64_t seed);
  void init_zeros();

  std::vector<double> forward(std::span<const double> in) const;
  std::vector<double> forward_trace(std::span<const double> in, Trace& trace) const;

 private:
  int input_width_;
  int output_width_;
  std::vector<LayerSpec> layers_;
  std::vector<DenseParams> params_;
};

/// Per-example squared-error loss, summed over output entries.
double mse_loss(std::span<const double> out, std::span<const double> target);

/// Gradients of the per-example loss for every dense weight and bias.
/// ReLU passes zero gradient at exactly 0; maxpool routes to the lowest
/// winning index.
Gradients backward(const Network& net, const Trace& trace, std::span<const double> target);

Gradients zero_gradients(const Network& net);

/// Binary model file with a CRC-32 trailer; round-trips forward outputs
/// bit-exactly.
void save_model(const Network& net, const std::string& path);
Network load_model(const std::string& path);

}  // namespace bnl
