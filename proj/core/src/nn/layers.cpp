#include "radmark/nn/layers.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "radmark/error.hpp"

namespace radmark::nn {

std::vector<const Param*> Layer::cparams() const {
  auto mut = const_cast<Layer*>(this)->params();
  return {mut.begin(), mut.end()};
}

namespace {

void he_normal(Mat& w, int fan_in, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, std::sqrt(2.0 / fan_in));
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = n01(rng);
}

Tensor like(const Tensor& x, int c, int h, int w) {
  Tensor t;
  t.n = x.n;
  t.c = c;
  t.h = h;
  t.w = w;
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(int in_channels, int out_channels, int kernel)
    : in_(in_channels), out_(out_channels), k_(kernel), pad_(kernel / 2) {
  if (kernel < 1 || kernel % 2 == 0) throw InvalidArgument("conv2d: kernel must be odd");
  weight_.value = Mat::Zero(out_, in_ * k_ * k_);
  bias_.value = Mat::Zero(out_, 1);
  bias_.decay = false;
}

Shape3 Conv2d::output_shape(const Shape3& in) const {
  if (in.c != in_) throw InvalidArgument("conv2d: expected " + std::to_string(in_) + " channels");
  return {out_, in.h, in.w};
}

void Conv2d::init(std::mt19937_64& rng) {
  he_normal(weight_.value, in_ * k_ * k_, rng);
  bias_.value.setZero();
}

nlohmann::json Conv2d::config() const {
  return {{"kind", kind()}, {"in", in_}, {"out", out_}, {"kernel", k_}};
}

namespace {

// cols: (C*k*k) x (N*H*W), same-padding, stride 1.
void im2col(const Tensor& x, int k, int pad, Mat& cols) {
  const int C = x.c, H = x.h, W = x.w, N = x.n, HW = H * W;
  cols.setZero(static_cast<Eigen::Index>(C) * k * k, static_cast<Eigen::Index>(N) * HW);
  for (int c = 0; c < C; ++c) {
    const double* src = x.data.row(c).data();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* dst = cols.row((c * k + ky) * k + kx).data();
        const int dy = ky - pad, dx = kx - pad;
        const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
        if (x1 <= x0) continue;
        for (int s = 0; s < N; ++s) {
          for (int y = 0; y < H; ++y) {
            const int sy = y + dy;
            if (sy < 0 || sy >= H) continue;
            std::memcpy(dst + s * HW + y * W + x0, src + s * HW + sy * W + x0 + dx,
                        sizeof(double) * static_cast<std::size_t>(x1 - x0));
          }
        }
      }
    }
  }
}

void col2im(const Mat& cols, int k, int pad, Tensor& dx) {
  const int C = dx.c, H = dx.h, W = dx.w, N = dx.n, HW = H * W;
  dx.data.setZero(C, static_cast<Eigen::Index>(N) * HW);
  for (int c = 0; c < C; ++c) {
    double* dst = dx.data.row(c).data();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* src = cols.row((c * k + ky) * k + kx).data();
        const int oy = ky - pad, ox = kx - pad;
        const int x0 = std::max(0, -ox), x1 = std::min(W, W - ox);
        if (x1 <= x0) continue;
        for (int s = 0; s < N; ++s) {
          for (int y = 0; y < H; ++y) {
            const int sy = y + oy;
            if (sy < 0 || sy >= H) continue;
            double* d = dst + s * HW + sy * W + x0 + ox;
            const double* g = src + s * HW + y * W + x0;
            for (int i = 0; i < x1 - x0; ++i) d[i] += g[i];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor Conv2d::forward(const Tensor& x, Cache* cache) const {
  output_shape(x.shape());
  Mat cols;
  im2col(x, k_, pad_, cols);
  Tensor y = like(x, out_, x.h, x.w);
  y.data.noalias() = weight_.value * cols;
  y.data.colwise() += bias_.value.col(0);
  if (cache) {
    cache->in_shape = x.shape();
    cache->n = x.n;
    cache->saved = std::move(cols);
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& g, const Cache& cache, std::span<Mat> grads) const {
  if (!grads.empty()) {
    grads[0].noalias() += g.data * cache.saved.transpose();
    grads[1].noalias() += g.data.rowwise().sum();
  }
  const Mat dcols = weight_.value.transpose() * g.data;
  Tensor dx;
  dx.n = cache.n;
  dx.c = cache.in_shape.c;
  dx.h = cache.in_shape.h;
  dx.w = cache.in_shape.w;
  col2im(dcols, k_, pad_, dx);
  return dx;
}

// ---------------------------------------------------------------------------
// Linear

Linear::Linear(int in_features, int out_features) : in_(in_features), out_(out_features) {
  weight_.value = Mat::Zero(out_, in_);
  bias_.value = Mat::Zero(out_, 1);
  bias_.decay = false;
}

Shape3 Linear::output_shape(const Shape3& in) const {
  if (in.h != 1 || in.w != 1 || in.c != in_) {
    throw InvalidArgument("linear: expected " + std::to_string(in_) + " flat features");
  }
  return {out_, 1, 1};
}

void Linear::init(std::mt19937_64& rng) {
  he_normal(weight_.value, in_, rng);
  bias_.value.setZero();
}

nlohmann::json Linear::config() const { return {{"kind", kind()}, {"in", in_}, {"out", out_}}; }

Tensor Linear::forward(const Tensor& x, Cache* cache) const {
  output_shape(x.shape());
  Tensor y = like(x, out_, 1, 1);
  y.data.noalias() = weight_.value * x.data;
  y.data.colwise() += bias_.value.col(0);
  if (cache) {
    cache->in_shape = x.shape();
    cache->n = x.n;
    cache->saved = x.data;
  }
  return y;
}

Tensor Linear::backward(const Tensor& g, const Cache& cache, std::span<Mat> grads) const {
  if (!grads.empty()) {
    grads[0].noalias() += g.data * cache.saved.transpose();
    grads[1].noalias() += g.data.rowwise().sum();
  }
  Tensor dx = like(g, in_, 1, 1);
  dx.data.noalias() = weight_.value.transpose() * g.data;
  return dx;
}

// ---------------------------------------------------------------------------
// Pointwise

Tensor Relu::forward(const Tensor& x, Cache* cache) const {
  Tensor y = like(x, x.c, x.h, x.w);
  y.data = x.data.cwiseMax(0.0);
  if (cache) cache->saved = y.data;
  return y;
}

Tensor Relu::backward(const Tensor& g, const Cache& cache, std::span<Mat>) const {
  Tensor dx = like(g, g.c, g.h, g.w);
  dx.data = (cache.saved.array() > 0.0).select(g.data, 0.0);
  return dx;
}

Tensor Tanh::forward(const Tensor& x, Cache* cache) const {
  Tensor y = like(x, x.c, x.h, x.w);
  y.data = x.data.array().tanh().matrix();
  if (cache) cache->saved = y.data;
  return y;
}

Tensor Tanh::backward(const Tensor& g, const Cache& cache, std::span<Mat>) const {
  Tensor dx = like(g, g.c, g.h, g.w);
  dx.data = (g.data.array() * (1.0 - cache.saved.array().square())).matrix();
  return dx;
}

// ---------------------------------------------------------------------------
// Pooling / reshaping

Tensor MaxPool2::forward(const Tensor& x, Cache* cache) const {
  const int oh = x.h / 2, ow = x.w / 2, HW = x.h * x.w, OHW = oh * ow;
  Tensor y = like(x, x.c, oh, ow);
  y.data.resize(x.c, static_cast<Eigen::Index>(x.n) * OHW);
  std::vector<std::int32_t> arg;
  if (cache) arg.resize(static_cast<std::size_t>(y.data.size()));
  for (int c = 0; c < x.c; ++c) {
    const double* src = x.data.row(c).data();
    double* dst = y.data.row(c).data();
    for (int s = 0; s < x.n; ++s) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const int base = s * HW + 2 * oy * x.w + 2 * ox;
          int best = base;
          for (int off : {1, x.w, x.w + 1}) {
            if (src[base + off] > src[best]) best = base + off;
          }
          const int o = s * OHW + oy * ow + ox;
          dst[o] = src[best];
          if (cache) arg[static_cast<std::size_t>(c) * x.n * OHW + o] = best;
        }
      }
    }
  }
  if (cache) {
    cache->in_shape = x.shape();
    cache->n = x.n;
    cache->index = std::move(arg);
  }
  return y;
}

Tensor MaxPool2::backward(const Tensor& g, const Cache& cache, std::span<Mat>) const {
  Tensor dx;
  dx.n = cache.n;
  dx.c = cache.in_shape.c;
  dx.h = cache.in_shape.h;
  dx.w = cache.in_shape.w;
  dx.data = Mat::Zero(dx.c, static_cast<Eigen::Index>(dx.n) * dx.plane());
  const Eigen::Index per_row = g.data.cols();
  for (int c = 0; c < g.c; ++c) {
    const double* gs = g.data.row(c).data();
    double* d = dx.data.row(c).data();
    const std::int32_t* idx = cache.index.data() + static_cast<std::size_t>(c) * per_row;
    for (Eigen::Index o = 0; o < per_row; ++o) d[idx[o]] += gs[o];
  }
  return dx;
}

Tensor GlobalAvgPool::forward(const Tensor& x, Cache* cache) const {
  const int HW = x.plane();
  Tensor y = like(x, x.c, 1, 1);
  y.data.resize(x.c, x.n);
  for (int c = 0; c < x.c; ++c) {
    for (int s = 0; s < x.n; ++s) y.data(c, s) = x.data.row(c).segment(static_cast<Eigen::Index>(s) * HW, HW).mean();
  }
  if (cache) {
    cache->in_shape = x.shape();
    cache->n = x.n;
  }
  return y;
}

Tensor GlobalAvgPool::backward(const Tensor& g, const Cache& cache, std::span<Mat>) const {
  Tensor dx;
  dx.n = cache.n;
  dx.c = cache.in_shape.c;
  dx.h = cache.in_shape.h;
  dx.w = cache.in_shape.w;
  const int HW = dx.plane();
  dx.data.resize(dx.c, static_cast<Eigen::Index>(dx.n) * HW);
  for (int c = 0; c < dx.c; ++c) {
    for (int s = 0; s < dx.n; ++s) {
      dx.data.row(c).segment(static_cast<Eigen::Index>(s) * HW, HW).setConstant(g.data(c, s) / HW);
    }
  }
  return dx;
}

Tensor Flatten::forward(const Tensor& x, Cache* cache) const {
  const int HW = x.plane();
  Tensor y = like(x, x.c * HW, 1, 1);
  y.data.resize(y.c, x.n);
  for (int c = 0; c < x.c; ++c) {
    for (int s = 0; s < x.n; ++s) {
      for (int p = 0; p < HW; ++p) y.data(c * HW + p, s) = x.data(c, static_cast<Eigen::Index>(s) * HW + p);
    }
  }
  if (cache) {
    cache->in_shape = x.shape();
    cache->n = x.n;
  }
  return y;
}

Tensor Flatten::backward(const Tensor& g, const Cache& cache, std::span<Mat>) const {
  Tensor dx;
  dx.n = cache.n;
  dx.c = cache.in_shape.c;
  dx.h = cache.in_shape.h;
  dx.w = cache.in_shape.w;
  const int HW = dx.plane();
  dx.data.resize(dx.c, static_cast<Eigen::Index>(dx.n) * HW);
  for (int c = 0; c < dx.c; ++c) {
    for (int s = 0; s < dx.n; ++s) {
      for (int p = 0; p < HW; ++p) dx.data(c, static_cast<Eigen::Index>(s) * HW + p) = g.data(c * HW + p, s);
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Containers

Sequential::Sequential(const Sequential& other) {
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Sequential& Sequential::operator=(const Sequential& other) {
  if (this != &other) {
    layers_.clear();
    for (const auto& l : other.layers_) layers_.push_back(l->clone());
  }
  return *this;
}

Shape3 Sequential::output_shape(const Shape3& in) const {
  Shape3 s = in;
  for (const auto& l : layers_) s = l->output_shape(s);
  return s;
}

Tensor Sequential::forward(const Tensor& x, Cache* cache) const {
  if (cache) cache->children.assign(layers_.size(), Cache{});
  if (layers_.empty()) return x;
  Tensor cur = layers_[0]->forward(x, cache ? &cache->children[0] : nullptr);
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    cur = layers_[i]->forward(cur, cache ? &cache->children[i] : nullptr);
  }
  return cur;
}

Tensor Sequential::backward(const Tensor& g, const Cache& cache, std::span<Mat> grads) const {
  // Parameter slots are laid out layer by layer.
  std::vector<std::size_t> offsets(layers_.size() + 1, 0);
  for (std::size_t i = 0; i < layers_.size(); ++i) offsets[i + 1] = offsets[i] + layers_[i]->cparams().size();
  Tensor cur = g;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    std::span<Mat> sub = grads.empty() ? std::span<Mat>{} : grads.subspan(offsets[i], offsets[i + 1] - offsets[i]);
    cur = layers_[i]->backward(cur, cache.children[i], sub);
  }
  return cur;
}

std::vector<Param*> Sequential::params() {
  std::vector<Param*> out;
  for (auto& l : layers_) {
    auto p = l->params();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

void Sequential::init(std::mt19937_64& rng) {
  for (auto& l : layers_) l->init(rng);
}

nlohmann::json Sequential::config() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& l : layers_) arr.push_back(l->config());
  return {{"kind", kind()}, {"layers", arr}};
}

Shape3 Residual::output_shape(const Shape3& in) const {
  if (!(inner_.output_shape(in) == in)) throw InvalidArgument("residual: inner block must preserve shape");
  return in;
}

Tensor Residual::forward(const Tensor& x, Cache* cache) const {
  if (cache) cache->children.assign(1, Cache{});
  Tensor y = inner_.forward(x, cache ? &cache->children[0] : nullptr);
  y.data += x.data;
  return y;
}

Tensor Residual::backward(const Tensor& g, const Cache& cache, std::span<Mat> grads) const {
  Tensor dx = inner_.backward(g, cache.children[0], grads);
  dx.data += g.data;
  return dx;
}

void Residual::init(std::mt19937_64& rng) {
  inner_.init(rng);
  auto ps = inner_.params();
  const std::size_t tail = std::min<std::size_t>(2, ps.size());
  for (std::size_t i = ps.size() - tail; i < ps.size(); ++i) ps[i]->value.setZero();
}

nlohmann::json Residual::config() const { return {{"kind", kind()}, {"inner", inner_.config()}}; }

Shape3 DenseConcat::output_shape(const Shape3& in) const {
  const Shape3 f = inner_.output_shape(in);
  if (f.h != in.h || f.w != in.w) throw InvalidArgument("dense_concat: inner block must preserve spatial size");
  return {in.c + f.c, in.h, in.w};
}

Tensor DenseConcat::forward(const Tensor& x, Cache* cache) const {
  if (cache) {
    cache->children.assign(1, Cache{});
    cache->in_shape = x.shape();
  }
  Tensor f = inner_.forward(x, cache ? &cache->children[0] : nullptr);
  Tensor y = like(x, x.c + f.c, x.h, x.w);
  y.data.resize(y.c, x.data.cols());
  y.data.topRows(x.c) = x.data;
  y.data.bottomRows(f.c) = f.data;
  return y;
}

Tensor DenseConcat::backward(const Tensor& g, const Cache& cache, std::span<Mat> grads) const {
  const int in_c = cache.in_shape.c;
  Tensor gf = like(g, g.c - in_c, g.h, g.w);
  gf.data = g.data.bottomRows(g.c - in_c);
  Tensor dx = inner_.backward(gf, cache.children[0], grads);
  dx.data += g.data.topRows(in_c);
  return dx;
}

nlohmann::json DenseConcat::config() const { return {{"kind", kind()}, {"inner", inner_.config()}}; }

std::unique_ptr<Layer> layer_from_config(const nlohmann::json& cfg) {
  const auto kind = cfg.at("kind").get<std::string>();
  if (kind == "conv2d") return std::make_unique<Conv2d>(cfg.at("in"), cfg.at("out"), cfg.at("kernel"));
  if (kind == "linear") return std::make_unique<Linear>(cfg.at("in"), cfg.at("out"));
  if (kind == "relu") return std::make_unique<Relu>();
  if (kind == "tanh") return std::make_unique<Tanh>();
  if (kind == "maxpool2") return std::make_unique<MaxPool2>();
  if (kind == "gap") return std::make_unique<GlobalAvgPool>();
  if (kind == "flatten") return std::make_unique<Flatten>();
  if (kind == "sequential") {
    auto seq = std::make_unique<Sequential>();
    for (const auto& l : cfg.at("layers")) seq->add_layer(layer_from_config(l));
    return seq;
  }
  if (kind == "residual" || kind == "dense_concat") {
    auto inner = layer_from_config(cfg.at("inner"));
    auto* seq = dynamic_cast<Sequential*>(inner.get());
    if (!seq) throw SchemaError("layer config: " + kind + " inner must be sequential");
    if (kind == "residual") return std::make_unique<Residual>(std::move(*seq));
    return std::make_unique<DenseConcat>(std::move(*seq));
  }
  throw SchemaError("unknown layer kind in model config: " + kind);
}

}  // namespace radmark::nn
