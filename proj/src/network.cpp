#include "bnl/network.hpp"

#include <bit>
#include <cassert>
#include <cmath>
#include <cstring>
#include <fstream>

namespace bnl {

namespace {

// fixed summation order: four independent accumulators, then a fixed tree
double dot(const double* a, const double* b, int len) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  int i = 0;
  for (; i + 4 <= len; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  double s = (s0 + s1) + (s2 + s3);
  for (; i < len; ++i) s += a[i] * b[i];
  return s;
}

#ifndef NDEBUG
void check_finite(const std::vector<double>& v) {
  for (double x : v) assert(std::isfinite(x) && "non-finite activation");
}
#else
void check_finite(const std::vector<double>&) {}
#endif

}  // namespace

void Gradients::add(const Gradients& o) {
  for (size_t l = 0; l < dw.size(); ++l) {
    for (size_t i = 0; i < dw[l].data.size(); ++i) dw[l].data[i] += o.dw[l].data[i];
    for (size_t i = 0; i < db[l].size(); ++i) db[l][i] += o.db[l][i];
  }
}

void Gradients::scale(double s) {
  for (size_t l = 0; l < dw.size(); ++l) {
    for (double& x : dw[l].data) x *= s;
    for (double& x : db[l]) x *= s;
  }
}

Network::Network(int input_width, std::vector<LayerSpec> layers)
    : input_width_(input_width), layers_(std::move(layers)) {
  if (input_width < 1) throw std::invalid_argument("network input width must be >= 1");
  int width = input_width;
  for (const LayerSpec& l : layers_) {
    switch (l.kind) {
      case LayerKind::dense:
        if (l.width < 1) throw std::invalid_argument("dense width must be >= 1");
        params_.push_back({Matrix(l.width, width), std::vector<double>(l.width, 0.0)});
        width = l.width;
        break;
      case LayerKind::maxpool1d:
        if (l.pool_window < 1 || width % l.pool_window != 0)
          throw std::invalid_argument("maxpool window must divide the input length (" +
                                      std::to_string(l.pool_window) + " vs " +
                                      std::to_string(width) + ")");
        width /= l.pool_window;
        break;
      case LayerKind::relu:
      case LayerKind::negate:
        break;
    }
  }
  output_width_ = width;
}

size_t Network::param_count() const {
  size_t total = 0;
  for (const DenseParams& p : params_)
    total += p.w.data.size() + p.b.size();
  return total;
}

void Network::init_uniform_scaled(uint64_t seed) {
  Rng rng(seed);
  for (DenseParams& p : params_) {
    double bound = std::sqrt(1.0 / double(p.w.cols));
    for (double& x : p.w.data) x = rng.next_uniform(-bound, bound);
    for (double& x : p.b) x = 0.0;
  }
}

void Network::init_zeros() {
  for (DenseParams& p : params_) {
    for (double& x : p.w.data) x = 0.0;
    for (double& x : p.b) x = 0.0;
  }
}

std::vector<double> Network::forward(std::span<const double> in) const {
  Trace scratch;
  return forward_trace(in, scratch);
}

std::vector<double> Network::forward_trace(std::span<const double> in, Trace& trace) const {
  if (int(in.size()) != input_width_)
    throw std::invalid_argument("forward: input width " + std::to_string(in.size()) +
                                " does not match network input " + std::to_string(input_width_));
  trace.inputs.clear();
  trace.argmax.clear();
  trace.inputs.emplace_back(in.begin(), in.end());

  size_t dense_i = 0;
  for (const LayerSpec& l : layers_) {
    const std::vector<double>& x = trace.inputs.back();
    std::vector<double> y;
    switch (l.kind) {
      case LayerKind::dense: {
        const DenseParams& p = params_[dense_i++];
        y.resize(p.w.rows);
        for (int r = 0; r < p.w.rows; ++r)
          y[r] = p.b[size_t(r)] + dot(&p.w.data[size_t(r) * p.w.cols], x.data(), p.w.cols);
        break;
      }
      case LayerKind::relu: {
        y.resize(x.size());
        for (size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
        break;
      }
      case LayerKind::maxpool1d: {
        size_t w = size_t(l.pool_window);
        size_t out_len = x.size() / w;
        y.resize(out_len);
        std::vector<int> arg(out_len);
        for (size_t o = 0; o < out_len; ++o) {
          size_t best = o * w;
          for (size_t j = o * w + 1; j < (o + 1) * w; ++j)
            if (x[j] > x[best]) best = j;  // ties keep the lowest index
          y[o] = x[best];
          arg[o] = int(best);
        }
        trace.argmax.push_back(std::move(arg));
        break;
      }
      case LayerKind::negate: {
        y.resize(x.size());
        for (size_t i = 0; i < x.size(); ++i) y[i] = -x[i];
        break;
      }
    }
    check_finite(y);
    trace.inputs.push_back(std::move(y));
  }
  return trace.inputs.back();
}

double mse_loss(std::span<const double> out, std::span<const double> target) {
  double s = 0;
  for (size_t i = 0; i < out.size(); ++i) {
    double d = out[i] - target[i];
    s += d * d;
  }
  return s;
}

Gradients zero_gradients(const Network& net) {
  Gradients g;
  for (int l = 0; l < net.dense_count(); ++l) {
    const DenseParams& p = net.dense(l);
    g.dw.emplace_back(p.w.rows, p.w.cols);
    g.db.emplace_back(p.b.size(), 0.0);
  }
  return g;
}

Gradients backward(const Network& net, const Trace& trace, std::span<const double> target) {
  const std::vector<double>& out = trace.inputs.back();
  if (out.size() != target.size())
    throw std::invalid_argument("backward: target width mismatch");

  Gradients grads = zero_gradients(net);

  // d(sum of squared errors)/d(out)
  std::vector<double> g(out.size());
  for (size_t i = 0; i < out.size(); ++i) g[i] = 2.0 * (out[i] - target[i]);

  int dense_i = net.dense_count();
  int pool_i = int(trace.argmax.size());
  for (int li = int(net.layers().size()) - 1; li >= 0; --li) {
    const LayerSpec& l = net.layers()[size_t(li)];
    const std::vector<double>& x = trace.inputs[size_t(li)];
    switch (l.kind) {
      case LayerKind::dense: {
        --dense_i;
        const DenseParams& p = net.dense(dense_i);
        Matrix& dw = grads.dw[size_t(dense_i)];
        std::vector<double>& db = grads.db[size_t(dense_i)];
        std::vector<double> gx(x.size(), 0.0);
        for (int r = 0; r < p.w.rows; ++r) {
          double gr = g[size_t(r)];
          db[size_t(r)] += gr;
          const double* wrow = &p.w.data[size_t(r) * p.w.cols];
          double* dwrow = &dw.data[size_t(r) * p.w.cols];
          for (int c = 0; c < p.w.cols; ++c) {
            dwrow[c] += gr * x[size_t(c)];
            gx[size_t(c)] += gr * wrow[c];
          }
        }
        g = std::move(gx);
        break;
      }
      case LayerKind::relu: {
        for (size_t i = 0; i < g.size(); ++i)
          if (x[i] <= 0.0) g[i] = 0.0;
        break;
      }
      case LayerKind::maxpool1d: {
        --pool_i;
        const std::vector<int>& arg = trace.argmax[size_t(pool_i)];
        std::vector<double> gx(x.size(), 0.0);
        for (size_t o = 0; o < g.size(); ++o) gx[size_t(arg[o])] = g[o];
        g = std::move(gx);
        break;
      }
      case LayerKind::negate: {
        for (double& v : g) v = -v;
        break;
      }
    }
  }
  return grads;
}

// ---- model file ----

namespace {

uint32_t crc32_update(uint32_t crc, const uint8_t* data, size_t len) {
  static uint32_t table[256];
  static bool init = false;
  if (!init) {
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      table[i] = c;
    }
    init = true;
  }
  crc = ~crc;
  for (size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
  return ~crc;
}

void put_u32(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(char(uint8_t(v >> (8 * i))));
}

void put_f64(std::string& buf, double d) {
  uint64_t v = std::bit_cast<uint64_t>(d);
  for (int i = 0; i < 8; ++i) buf.push_back(char(uint8_t(v >> (8 * i))));
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;

  void need(size_t k) const {
    if (pos + k > buf.size()) throw std::runtime_error("model file truncated");
  }
  uint8_t u8() {
    need(1);
    return uint8_t(buf[pos++]);
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(buf[pos++])) << (8 * i);
    return v;
  }
  double f64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(uint8_t(buf[pos++])) << (8 * i);
    return std::bit_cast<double>(v);
  }
};

constexpr uint32_t kModelVersion = 1;

}  // namespace

void save_model(const Network& net, const std::string& path) {
  std::string buf;
  buf += "BNLM";
  put_u32(buf, kModelVersion);
  put_u32(buf, uint32_t(net.input_width()));
  put_u32(buf, uint32_t(net.layers().size()));
  for (const LayerSpec& l : net.layers()) {
    buf.push_back(char(uint8_t(l.kind)));
    put_u32(buf, uint32_t(l.width));
    put_u32(buf, uint32_t(l.pool_window));
  }
  for (int i = 0; i < net.dense_count(); ++i) {
    const DenseParams& p = net.dense(i);
    put_u32(buf, uint32_t(p.w.rows));
    put_u32(buf, uint32_t(p.w.cols));
    for (double d : p.w.data) put_f64(buf, d);
    put_u32(buf, uint32_t(p.b.size()));
    for (double d : p.b) put_f64(buf, d);
  }
  uint32_t crc = crc32_update(0, reinterpret_cast<const uint8_t*>(buf.data()), buf.size());
  put_u32(buf, crc);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out.write(buf.data(), std::streamsize(buf.size()));
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

Network load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < 16 || buf.compare(0, 4, "BNLM") != 0)
    throw std::runtime_error("'" + path + "' is not a model file");
  uint32_t stored_crc = 0;
  for (int i = 0; i < 4; ++i)
    stored_crc |= uint32_t(uint8_t(buf[buf.size() - 4 + i])) << (8 * i);
  uint32_t crc = crc32_update(0, reinterpret_cast<const uint8_t*>(buf.data()), buf.size() - 4);
  if (crc != stored_crc) throw std::runtime_error("model file CRC mismatch (corrupt or truncated)");

  Reader r{buf};
  r.pos = 4;
  uint32_t version = r.u32();
  if (version != kModelVersion)
    throw std::runtime_error("unsupported model version " + std::to_string(version));
  int input_width = int(r.u32());
  uint32_t n_layers = r.u32();
  std::vector<LayerSpec> layers;
  for (uint32_t i = 0; i < n_layers; ++i) {
    uint8_t kind = r.u8();
    if (kind > uint8_t(LayerKind::negate)) throw std::runtime_error("unknown layer kind in model");
    LayerSpec l;
    l.kind = LayerKind(kind);
    l.width = int(r.u32());
    l.pool_window = int(r.u32());
    layers.push_back(l);
  }

  Network net(input_width, std::move(layers));  // validates the shape chain
  for (int i = 0; i < net.dense_count(); ++i) {
    DenseParams& p = net.dense(i);
    uint32_t rows = r.u32();
    uint32_t cols = r.u32();
    if (int(rows) != p.w.rows || int(cols) != p.w.cols)
      throw std::runtime_error("model parameter shape does not match its layer list");
    for (double& d : p.w.data) d = r.f64();
    uint32_t blen = r.u32();
    if (blen != p.b.size()) throw std::runtime_error("model bias length mismatch");
    for (double& d : p.b) d = r.f64();
  }
  if (r.pos != buf.size() - 4) throw std::runtime_error("trailing bytes in model file");
  return net;
}

}  // namespace bnl
