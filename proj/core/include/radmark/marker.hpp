#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "radmark/carriers.hpp"
#include "radmark/dataset.hpp"
#include "radmark/embed_params.hpp"
#include "radmark/feature_fn.hpp"
#include "radmark/secret.hpp"

namespace radmark {

// Objective for one image against carrier u:
//   -(phi(xt) - phi(x))^T u + lambda_pixel |xt - x| + lambda_feature |phi(xt) - phi(x)|
double mark_objective(const FeatureFunction& phi, const Image& x, const Image& xt, const Eigen::VectorXd& u,
                      const EmbedParams& params);

// Gradient of mark_objective with respect to xt. The norm terms contribute
// zero where their argument vanishes (the minimal-norm subgradient).
Eigen::VectorXd mark_objective_gradient(const FeatureFunction& phi, const Image& x, const Image& xt,
                                        const Eigen::VectorXd& u, const EmbedParams& params);

// Row-wise descent on a batch: row i of `x` is pushed along row i of
// `carriers`. With `objective_trace` set, appends the mean objective before
// the first step and after every step (pre-quantization).
ImageBatch embed_batch(const ImageBatch& x, const Eigen::MatrixXd& carriers, const FeatureFunction& phi,
                       const EmbedParams& params, std::vector<double>* objective_trace = nullptr);

Image embed_mark(const Image& x, int class_id, const CarrierSet& carriers, const FeatureFunction& phi,
                 const EmbedParams& params);

struct MarkResult {
  LabeledImageDataset marked;
  WatermarkSecret secret;
};

// Replaces exactly the selected samples by their marked versions. Selected
// samples are embedded in fixed chunks in selection order; the fast profile
// spreads chunks over threads without changing any output bit.
MarkResult mark_dataset(const LabeledImageDataset& ds, const MarkingSelection& selection, const CarrierSet& carriers,
                        const FeatureFunction& phi, const EmbedParams& params,
                        const std::string& marker_model_digest = {});

struct StealthSample {
  double psnr_db = 0.0;  // +inf when the images are identical
  double l2_pixel = 0.0;
  double linf_pixel = 0.0;
};

struct StealthReport {
  double psnr_db = 0.0;    // mean of per-sample PSNR
  double l2_pixel = 0.0;   // mean of per-sample L2
  double linf_pixel = 0.0; // max of per-sample Linf
  std::vector<StealthSample> per_sample;
};

StealthReport stealth_metrics(std::span<const Image> clean, std::span<const Image> marked);

// Clean/marked image pairs held in a secret, against a marked dataset.
StealthReport stealth_metrics(const WatermarkSecret& secret, const LabeledImageDataset& marked);

nlohmann::json to_json(const StealthReport& r, bool per_sample = false);

}  // namespace radmark
