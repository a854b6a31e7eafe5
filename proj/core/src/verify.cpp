#include "radmark/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "radmark/error.hpp"

namespace radmark {

void WhiteBoxSuspect::validate() const {
  if (!feature_fn) throw InvalidArgument("white-box suspect has no feature function");
  if (feature_fn->feature_dim() != feature_dim || classifier.weight.cols() != feature_dim) {
    throw InvalidArgument("white-box suspect: classifier expects " + std::to_string(classifier.weight.cols()) +
                          " features, extractor gives " + std::to_string(feature_fn->feature_dim()));
  }
  if (classifier.bias.size() != classifier.weight.rows()) throw InvalidArgument("white-box suspect: bias length mismatch");
}

WhiteBoxSuspect WhiteBoxSuspect::from_model(const TrainedModel& model) {
  WhiteBoxSuspect s;
  s.feature_fn = &model;
  s.classifier = model.classifier_weights();
  s.feature_dim = model.feature_dim();
  s.digest = model.weights_digest();
  return s;
}

BlackBoxSuspect BlackBoxSuspect::from_model(const Classifier& model, std::string digest) {
  BlackBoxSuspect s;
  s.query = [&model](std::span<const Image> b) { return model.probabilities(b); };
  s.class_count = model.class_count();
  s.digest = std::move(digest);
  return s;
}

Eigen::MatrixXd BlackBoxSuspect::checked_query(std::span<const Image> batch) const {
  if (!query) throw QueryError("black-box suspect has no query function");
  Eigen::MatrixXd p;
  try {
    p = query(batch);
  } catch (const QueryError&) {
    throw;
  } catch (const std::exception& e) {
    throw QueryError(std::string("suspect query failed: ") + e.what());
  }
  if (p.rows() != static_cast<Eigen::Index>(batch.size()) || p.cols() != class_count) {
    throw QueryError("suspect returned a " + std::to_string(p.rows()) + "x" + std::to_string(p.cols()) +
                     " answer for " + std::to_string(batch.size()) + " images of " + std::to_string(class_count) +
                     " classes");
  }
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double s = p.row(i).sum();
    if (!p.row(i).allFinite() || p.row(i).minCoeff() < 0.0 || std::abs(s - 1.0) > 1e-4) {
      throw QueryError("suspect probability row " + std::to_string(i) + " is not a distribution (sum " +
                       std::to_string(s) + ")");
    }
  }
  return p;
}

AlignmentMap align_feature_rows(const Eigen::MatrixXd& fs, const Eigen::MatrixXd& fm, const AlignOptions& options) {
  if (fs.rows() != fm.rows()) throw InvalidArgument("alignment: feature row counts differ");
  if (fs.rows() == 0) throw InvalidArgument("alignment: empty probe");
  const Eigen::Index dm = fm.cols();
  AlignmentMap out;
  out.probe_count = static_cast<std::size_t>(fm.rows());

  Eigen::MatrixXd gram = fm.transpose() * fm;
  const Eigen::MatrixXd rhs = fm.transpose() * fs;  // d_m x d_s
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(fm);
  const bool full_rank = fm.rows() >= dm && qr.rank() == dm;
  if (full_rank) {
    out.matrix = qr.solve(fs).transpose();
  } else {
    if (!options.allow_ridge) {
      throw SingularityError("alignment probe has rank " + std::to_string(qr.rank()) + " < marker dim " +
                             std::to_string(dm) + " (" + std::to_string(fm.rows()) +
                             " probe images); enable ridge or enlarge the probe");
    }
    const double scale = std::max(gram.trace() / static_cast<double>(dm), 1.0);
    gram.diagonal().array() += options.ridge_eps * scale;
    out.matrix = gram.ldlt().solve(rhs).transpose();
    out.ridge_used = true;
  }
  const Eigen::MatrixXd resid = fs - fm * out.matrix.transpose();
  out.residual_rms = std::sqrt(resid.squaredNorm() / static_cast<double>(resid.size()));
  return out;
}

AlignmentMap align_features(const FeatureFunction& suspect_fn, const FeatureFunction& marker_fn,
                            std::span<const Image> probe, const AlignOptions& options) {
  if (probe.empty()) throw InvalidArgument("alignment: empty probe");
  const ImageBatch b = to_batch(probe);
  if (suspect_fn.input_dim() != b.cols() || marker_fn.input_dim() != b.cols()) {
    throw InvalidArgument("alignment: probe image size does not match the feature functions");
  }
  return align_feature_rows(suspect_fn.features(b), marker_fn.features(b), options);
}

std::string to_string(VerifyMethod m) {
  switch (m) {
    case VerifyMethod::kWhiteboxTestProbe: return "whitebox_test_probe";
    case VerifyMethod::kWhiteboxMarkedProbe: return "whitebox_marked_probe";
    case VerifyMethod::kBlackbox: return "blackbox";
  }
  return "?";
}

std::string to_string(ProbeSource p) { return p == ProbeSource::kTestSet ? "test_set" : "marked_set"; }

ProbeSource probe_source_from_string(const std::string& s) {
  if (s == "test_set" || s == "test") return ProbeSource::kTestSet;
  if (s == "marked_set" || s == "marked") return ProbeSource::kMarkedSet;
  throw InvalidArgument("unknown probe source '" + s + "' (expected test_set or marked_set)");
}

std::string to_string(ComparisonSpace s) { return s == ComparisonSpace::kSuspect ? "suspect" : "marker"; }

ComparisonSpace comparison_space_from_string(const std::string& s) {
  if (s == "suspect") return ComparisonSpace::kSuspect;
  if (s == "marker") return ComparisonSpace::kMarker;
  throw InvalidArgument("unknown comparison space '" + s + "' (expected suspect or marker)");
}

bool decide(VerifyMethod method, double statistic, double threshold) {
  if (std::isnan(statistic)) return false;
  return method == VerifyMethod::kBlackbox ? statistic > threshold : statistic <= threshold;
}

bool VerificationVerdict::consistent() const { return decision == decide(method, statistic, threshold); }

VerificationVerdict whitebox_verify(const WhiteBoxSuspect& suspect, const WatermarkSecret& secret,
                                    const FeatureFunction& marker_fn, ProbeSource probe_source,
                                    std::span<const Image> probe_data, const WhiteBoxOptions& options) {
  suspect.validate();
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw InvalidArgument("alpha must lie in (0,1)");
  const int m = secret.carriers.class_count();
  if (suspect.classifier.weight.rows() != m) {
    throw InvalidArgument("secret has " + std::to_string(m) + " classes, suspect classifier has " +
                          std::to_string(suspect.classifier.weight.rows()));
  }
  if (marker_fn.feature_dim() != secret.carriers.feature_dim()) {
    throw InvalidArgument("marker feature dim does not match the secret's carriers");
  }

  const AlignmentMap align = align_features(*suspect.feature_fn, marker_fn, probe_data, options.align);
  Eigen::MatrixXd w = suspect.classifier.weight;
  if (options.center_weights) w.rowwise() -= w.colwise().mean();

  std::vector<double> cosines(static_cast<std::size_t>(m));
  for (int c = 0; c < m; ++c) {
    Eigen::VectorXd a, b;
    if (options.space == ComparisonSpace::kSuspect) {
      a = align.matrix * secret.carriers.vectors.row(c).transpose();
      b = w.row(c).transpose();
    } else {
      a = secret.carriers.vectors.row(c).transpose();
      b = align.matrix.transpose() * w.row(c).transpose();
    }
    const double den = a.norm() * b.norm();
    cosines[static_cast<std::size_t>(c)] = den > 0.0 ? a.dot(b) / den : 0.0;
  }
  const int dim = options.space == ComparisonSpace::kSuspect ? suspect.feature_dim : secret.carriers.feature_dim();

  VerificationVerdict v;
  v.method = probe_source == ProbeSource::kTestSet ? VerifyMethod::kWhiteboxTestProbe : VerifyMethod::kWhiteboxMarkedProbe;
  v.hypothesis = cosine_hypothesis_test(cosines, dim);
  v.statistic = v.hypothesis->combined_log10p;
  v.threshold = std::log10(options.alpha);
  v.decision = decide(v.method, v.statistic, v.threshold);
  v.samples_used = probe_data.size();
  v.alignment_residual_rms = align.residual_rms;
  v.comparison_space = to_string(options.space);
  v.suspect_digest = suspect.digest;
  v.secret_digest = secret_digest(secret);
  return v;
}

std::vector<Image> marked_probe_images(const WatermarkSecret& secret, const LabeledImageDataset& marked) {
  std::vector<Image> out;
  out.reserve(secret.clean_originals.size());
  for (const auto& [key, img] : secret.clean_originals) {
    if (key.second >= marked.size()) throw InvalidArgument("secret references sample beyond the marked dataset");
    if (marked.labels[key.second] != key.first) {
      throw InvalidArgument("marked dataset label of sample " + std::to_string(key.second) +
                            " disagrees with the secret");
    }
    out.push_back(marked.images[key.second]);
  }
  return out;
}

std::vector<MarkedPair> marked_pairs(const WatermarkSecret& secret, const LabeledImageDataset& marked,
                                     std::uint64_t order_seed) {
  std::vector<MarkedPair> pairs;
  pairs.reserve(secret.clean_originals.size());
  for (const auto& [key, img] : secret.clean_originals) {
    if (key.second >= marked.size()) throw InvalidArgument("secret references sample beyond the marked dataset");
    if (marked.labels[key.second] != key.first) {
      throw InvalidArgument("marked dataset label of sample " + std::to_string(key.second) +
                            " disagrees with the secret");
    }
    pairs.push_back({key.first, key.second, img, marked.images[key.second]});
  }
  std::mt19937_64 rng(order_seed);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  return pairs;
}

std::vector<LossPair> blackbox_losses(const BlackBoxSuspect& suspect, std::span<const MarkedPair> pairs) {
  std::vector<LossPair> out;
  out.reserve(pairs.size());
  for (const auto& pr : pairs) {
    if (pr.class_id < 0 || pr.class_id >= suspect.class_count) {
      throw InvalidArgument("pair class " + std::to_string(pr.class_id) + " outside the suspect's classes");
    }
    const std::vector<Image> q{pr.clean, pr.marked};
    const Eigen::MatrixXd p = suspect.checked_query(q);
    LossPair lp;
    lp.class_id = pr.class_id;
    lp.index = pr.index;
    lp.clean_loss = -std::log(std::max(p(0, pr.class_id), 1e-12));
    lp.marked_loss = -std::log(std::max(p(1, pr.class_id), 1e-12));
    out.push_back(lp);
  }
  return out;
}

namespace {

// Sequential left-to-right sum; prefix means rely on this exact order.
double prefix_mean(std::span<const LossPair> losses, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += losses[i].difference();
  return s / static_cast<double>(n);
}

}  // namespace

VerificationVerdict blackbox_verify(const BlackBoxSuspect& suspect, std::span<const MarkedPair> pairs,
                                    std::optional<std::size_t> sample_budget) {
  if (pairs.empty()) throw InvalidArgument("black-box verification needs at least one marked/clean pair");
  const std::size_t n = sample_budget ? *sample_budget : pairs.size();
  if (n == 0 || n > pairs.size()) {
    throw InvalidArgument("sample budget " + std::to_string(n) + " outside [1, " + std::to_string(pairs.size()) + "]");
  }
  VerificationVerdict v;
  v.method = VerifyMethod::kBlackbox;
  v.pairs = blackbox_losses(suspect, pairs.first(n));
  v.statistic = prefix_mean(v.pairs, n);
  v.threshold = 0.0;
  v.decision = decide(v.method, v.statistic, v.threshold);
  v.samples_used = n;
  v.suspect_digest = suspect.digest;
  return v;
}

std::vector<SweepPoint> sweep_from_losses(std::span<const LossPair> losses, std::span<const std::size_t> budgets) {
  std::vector<SweepPoint> out;
  std::size_t prev = 0;
  double s = 0.0;
  std::size_t done = 0;
  for (auto b : budgets) {
    if (b == 0 || b > losses.size()) throw InvalidArgument("sweep budget " + std::to_string(b) + " out of range");
    if (b < prev) throw InvalidArgument("sweep budgets must be ascending");
    prev = b;
    for (; done < b; ++done) s += losses[done].difference();
    SweepPoint p;
    p.budget = b;
    p.statistic = s / static_cast<double>(b);
    p.decision = decide(VerifyMethod::kBlackbox, p.statistic, 0.0);
    out.push_back(p);
  }
  return out;
}

std::vector<SweepPoint> blackbox_sample_sweep(const BlackBoxSuspect& suspect, std::span<const MarkedPair> pairs,
                                              std::span<const std::size_t> budgets) {
  if (budgets.empty()) return {};
  const std::size_t top = *std::max_element(budgets.begin(), budgets.end());
  if (top > pairs.size()) throw InvalidArgument("sweep budget exceeds the pair count");
  const auto losses = blackbox_losses(suspect, pairs.first(top));
  return sweep_from_losses(losses, budgets);
}

std::optional<std::size_t> smallest_sufficient_budget(std::span<const SweepPoint> sweep) {
  std::optional<std::size_t> best;
  for (auto it = sweep.rbegin(); it != sweep.rend() && it->decision; ++it) best = it->budget;
  return best;
}

nlohmann::json to_json(const VerificationVerdict& v, bool with_pairs) {
  nlohmann::json j = {{"method", to_string(v.method)},     {"statistic", v.statistic},
                      {"threshold", v.threshold},          {"decision", v.decision},
                      {"samples_used", v.samples_used},    {"suspect_digest", v.suspect_digest},
                      {"secret_digest", v.secret_digest}};
  if (v.hypothesis) {
    j["detail"] = {{"per_class_cosines", v.hypothesis->per_class_cosines},
                   {"per_class_log10p", v.hypothesis->per_class_log10p},
                   {"combined_log10p", v.hypothesis->combined_log10p},
                   {"effective_dim", v.hypothesis->effective_dim},
                   {"comparison_space", v.comparison_space},
                   {"alignment_residual_rms", v.alignment_residual_rms}};
  } else {
    j["detail"] = {{"order_seed", v.order_seed}};
    if (with_pairs) {
      auto& arr = j["detail"]["pairs"] = nlohmann::json::array();
      for (const auto& p : v.pairs) {
        arr.push_back({{"class", p.class_id}, {"index", p.index}, {"clean_loss", p.clean_loss},
                       {"marked_loss", p.marked_loss}});
      }
    }
  }
  return j;
}

nlohmann::json to_json(const AlignmentMap& a) {
  return {{"rows", a.matrix.rows()},
          {"cols", a.matrix.cols()},
          {"residual_rms", a.residual_rms},
          {"probe_count", a.probe_count},
          {"ridge_used", a.ridge_used}};
}

nlohmann::json to_json(std::span<const SweepPoint> sweep) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : sweep) arr.push_back({{"budget", p.budget}, {"statistic", p.statistic}, {"decision", p.decision}});
  return arr;
}

}  // namespace radmark
