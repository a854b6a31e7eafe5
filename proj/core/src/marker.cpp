#include "radmark/marker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "radmark/error.hpp"
#include "radmark/profile.hpp"

namespace radmark {

namespace {

constexpr Eigen::Index kEmbedChunk = 32;

void check_dims(const FeatureFunction& phi, Eigen::Index input, Eigen::Index carrier_dim) {
  if (phi.input_dim() != input) {
    throw InvalidArgument("marker features expect " + std::to_string(phi.input_dim()) + " inputs, image has " +
                          std::to_string(input));
  }
  if (phi.feature_dim() != carrier_dim) {
    throw InvalidArgument("marker feature dim " + std::to_string(phi.feature_dim()) + " does not match carrier dim " +
                          std::to_string(carrier_dim));
  }
}

Eigen::VectorXd batch_objective(const ImageBatch& x, const ImageBatch& xt, const Eigen::MatrixXd& f0,
                                const Eigen::MatrixXd& f, const Eigen::MatrixXd& u, const EmbedParams& p) {
  const Eigen::MatrixXd df = f - f0;
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out[i] = -df.row(i).dot(u.row(i)) + p.lambda_pixel * (xt.row(i) - x.row(i)).norm() +
             p.lambda_feature * df.row(i).norm();
  }
  return out;
}

ImageBatch batch_gradient(const FeatureFunction& phi, const ImageBatch& x, const ImageBatch& xt,
                          const Eigen::MatrixXd& f0, const Eigen::MatrixXd& f, const Eigen::MatrixXd& u,
                          const EmbedParams& p) {
  Eigen::MatrixXd gf = -u;
  const Eigen::MatrixXd df = f - f0;
  for (Eigen::Index i = 0; i < df.rows(); ++i) {
    const double n = df.row(i).norm();
    if (n > 0.0) gf.row(i) += p.lambda_feature / n * df.row(i);
  }
  ImageBatch g = phi.feature_vjp(xt, gf);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto dx = xt.row(i) - x.row(i);
    const double n = dx.norm();
    if (n > 0.0) g.row(i) += p.lambda_pixel / n * dx;
  }
  return g;
}

}  // namespace

double mark_objective(const FeatureFunction& phi, const Image& x, const Image& xt, const Eigen::VectorXd& u,
                      const EmbedParams& params) {
  check_dims(phi, x.size(), u.size());
  const ImageBatch bx = x.cast<double>().transpose();
  const ImageBatch bt = xt.cast<double>().transpose();
  return batch_objective(bx, bt, phi.features(bx), phi.features(bt), u.transpose(), params)[0];
}

Eigen::VectorXd mark_objective_gradient(const FeatureFunction& phi, const Image& x, const Image& xt,
                                        const Eigen::VectorXd& u, const EmbedParams& params) {
  check_dims(phi, x.size(), u.size());
  const ImageBatch bx = x.cast<double>().transpose();
  const ImageBatch bt = xt.cast<double>().transpose();
  return batch_gradient(phi, bx, bt, phi.features(bx), phi.features(bt), u.transpose(), params).row(0).transpose();
}

ImageBatch embed_batch(const ImageBatch& x, const Eigen::MatrixXd& carriers, const FeatureFunction& phi,
                       const EmbedParams& params, std::vector<double>* objective_trace) {
  params.validate();
  check_dims(phi, x.cols(), carriers.cols());
  if (carriers.rows() != x.rows()) throw InvalidArgument("embed_batch: one carrier row per image required");
  if (x.minCoeff() < 0.0 || x.maxCoeff() > 1.0) throw InvalidArgument("embed_batch: input pixels outside [0,1]");

  ImageBatch xt = x;
  if (params.steps == 0) return xt;
  const Eigen::MatrixXd f0 = phi.features(x);
  Eigen::MatrixXd f = f0;
  if (objective_trace) objective_trace->push_back(batch_objective(x, xt, f0, f, carriers, params).mean());

  for (int step = 0; step < params.steps; ++step) {
    const ImageBatch g = batch_gradient(phi, x, xt, f0, f, carriers, params);
    if (!g.allFinite()) {
      throw DivergenceError("embedding gradient became non-finite at step " + std::to_string(step) + " of " +
                            std::to_string(params.steps));
    }
    xt -= params.step_size * g;
    xt = xt.cwiseMax(0.0).cwiseMin(1.0);
    if (params.linf_budget) {
      const double b = *params.linf_budget;
      xt = xt.cwiseMax((x.array() - b).matrix()).cwiseMin((x.array() + b).matrix());
    }
    f = phi.features(xt);
    if (objective_trace) objective_trace->push_back(batch_objective(x, xt, f0, f, carriers, params).mean());
  }
  if (params.quantize_8bit) {
    xt = (xt.array() * 255.0).round() / 255.0;
  }
  return xt;
}

Image embed_mark(const Image& x, int class_id, const CarrierSet& carriers, const FeatureFunction& phi,
                 const EmbedParams& params) {
  if (class_id < 0 || class_id >= carriers.class_count()) {
    throw InvalidArgument("embed_mark: class " + std::to_string(class_id) + " has no carrier");
  }
  const ImageBatch bx = x.cast<double>().transpose();
  const Eigen::MatrixXd u = carriers.vectors.row(class_id);
  return row_to_image(embed_batch(bx, u, phi, params), 0);
}

MarkResult mark_dataset(const LabeledImageDataset& ds, const MarkingSelection& selection, const CarrierSet& carriers,
                        const FeatureFunction& phi, const EmbedParams& params,
                        const std::string& marker_model_digest) {
  params.validate();
  if (carriers.class_count() != ds.class_count()) {
    throw InvalidArgument("mark_dataset: " + std::to_string(carriers.class_count()) + " carriers for " +
                          std::to_string(ds.class_count()) + " classes");
  }
  std::vector<std::size_t> order;
  std::vector<int> order_class;
  for (const auto& [c, idx] : selection.per_class_indices) {
    if (c < 0 || c >= ds.class_count()) throw InvalidArgument("selection names unknown class " + std::to_string(c));
    for (auto i : idx) {
      if (i >= ds.size()) throw InvalidArgument("selection index " + std::to_string(i) + " out of range");
      if (ds.labels[i] != c) {
        throw InvalidArgument("selection lists sample " + std::to_string(i) + " under class " + std::to_string(c) +
                              " but its label is " + std::to_string(ds.labels[i]));
      }
      order.push_back(i);
      order_class.push_back(c);
    }
  }
  std::vector<std::size_t> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw InvalidArgument("selection contains a sample twice");
  }

  MarkResult out;
  out.marked = ds;
  if (!ds.dataset_id.empty()) out.marked.dataset_id = ds.dataset_id + "+marked";
  out.secret.carriers = carriers;
  out.secret.selection = selection;
  out.secret.image_shape = ds.shape;
  out.secret.embed_params = params;
  out.secret.marker_model_digest = marker_model_digest;

  const auto total = static_cast<Eigen::Index>(order.size());
  const Eigen::Index chunks = (total + kEmbedChunk - 1) / kEmbedChunk;
  std::vector<ImageBatch> results(static_cast<std::size_t>(chunks));
  auto run_chunk = [&](Eigen::Index k) {
    const Eigen::Index lo = k * kEmbedChunk;
    const Eigen::Index hi = std::min(total, lo + kEmbedChunk);
    std::span<const std::size_t> idx(order.data() + lo, static_cast<std::size_t>(hi - lo));
    const ImageBatch bx = to_batch(ds.images, idx);
    Eigen::MatrixXd u(hi - lo, carriers.feature_dim());
    for (Eigen::Index r = lo; r < hi; ++r) u.row(r - lo) = carriers.vectors.row(order_class[static_cast<std::size_t>(r)]);
    results[static_cast<std::size_t>(k)] = embed_batch(bx, u, phi, params);
  };

  const unsigned workers = std::min<unsigned>(worker_threads(), static_cast<unsigned>(std::max<Eigen::Index>(chunks, 1)));
  if (workers <= 1) {
    for (Eigen::Index k = 0; k < chunks; ++k) run_chunk(k);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (Eigen::Index k = t; k < chunks; k += workers) run_chunk(k);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  for (Eigen::Index r = 0; r < total; ++r) {
    const auto i = order[static_cast<std::size_t>(r)];
    out.secret.clean_originals.emplace(WatermarkSecret::SampleKey{order_class[static_cast<std::size_t>(r)], i},
                                       ds.images[i]);
    out.marked.images[i] = row_to_image(results[static_cast<std::size_t>(r / kEmbedChunk)], r % kEmbedChunk);
  }
  return out;
}

StealthReport stealth_metrics(std::span<const Image> clean, std::span<const Image> marked) {
  if (clean.size() != marked.size()) {
    throw InvalidArgument("stealth_metrics: " + std::to_string(clean.size()) + " clean vs " +
                          std::to_string(marked.size()) + " marked images");
  }
  StealthReport r;
  if (clean.empty()) return r;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (clean[i].size() != marked[i].size()) throw InvalidArgument("stealth_metrics: image shape mismatch at " + std::to_string(i));
    const Eigen::VectorXd d = (marked[i] - clean[i]).cast<double>();
    StealthSample s;
    s.l2_pixel = d.norm();
    s.linf_pixel = d.size() ? d.cwiseAbs().maxCoeff() : 0.0;
    const double mse = d.squaredNorm() / static_cast<double>(d.size());
    s.psnr_db = mse > 0.0 ? -10.0 * std::log10(mse) : std::numeric_limits<double>::infinity();
    r.per_sample.push_back(s);
    r.psnr_db += s.psnr_db;
    r.l2_pixel += s.l2_pixel;
    r.linf_pixel = std::max(r.linf_pixel, s.linf_pixel);
  }
  const auto n = static_cast<double>(clean.size());
  r.psnr_db /= n;
  r.l2_pixel /= n;
  return r;
}

StealthReport stealth_metrics(const WatermarkSecret& secret, const LabeledImageDataset& marked) {
  std::vector<Image> a, b;
  for (const auto& [key, img] : secret.clean_originals) {
    if (key.second >= marked.size()) throw InvalidArgument("secret references sample beyond the marked dataset");
    a.push_back(img);
    b.push_back(marked.images[key.second]);
  }
  return stealth_metrics(a, b);
}

namespace {
nlohmann::json psnr_json(double v) { return std::isinf(v) ? nlohmann::json("+inf") : nlohmann::json(v); }
}  // namespace

nlohmann::json to_json(const StealthReport& r, bool per_sample) {
  nlohmann::json j = {{"psnr_db", psnr_json(r.psnr_db)},
                      {"l2_pixel", r.l2_pixel},
                      {"linf_pixel", r.linf_pixel},
                      {"samples", r.per_sample.size()}};
  if (per_sample) {
    auto& arr = j["per_sample"] = nlohmann::json::array();
    for (const auto& s : r.per_sample) {
      arr.push_back({{"psnr_db", psnr_json(s.psnr_db)}, {"l2_pixel", s.l2_pixel}, {"linf_pixel", s.linf_pixel}});
    }
  }
  return j;
}

}  // namespace radmark
