#include "radmark/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "radmark/binio.hpp"
#include "radmark/digest.hpp"
#include "radmark/error.hpp"
#include "radmark/profile.hpp"

namespace radmark {

namespace fs = std::filesystem;

namespace {

constexpr char kResponsesMagic[4] = {'R', 'M', 'T', 'R'};
constexpr std::uint32_t kResponsesVersion = 1;

void check_rows(const Eigen::MatrixXd& r, const char* what) {
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    if (!r.row(i).allFinite() || std::abs(r.row(i).sum() - 1.0) > 1e-4) {
      throw SchemaError(std::string(what) + ": response row " + std::to_string(i) + " is not a distribution");
    }
  }
}

std::vector<std::uint8_t> encode_responses(const TransferSet& t, std::size_t rows) {
  ByteWriter w;
  w.raw(std::string_view(kResponsesMagic, 4));
  w.u32(kResponsesVersion);
  w.u64(t.seed);
  w.section(t.victim_digest);
  w.u64(rows);
  w.u32(static_cast<std::uint32_t>(t.responses.cols()));
  for (std::size_t i = 0; i < rows; ++i) w.u64(t.pool_indices[i]);
  for (std::size_t i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < t.responses.cols(); ++c) w.f64(t.responses(static_cast<Eigen::Index>(i), c));
  }
  return w.take();
}

struct DecodedResponses {
  std::uint64_t seed = 0;
  std::string victim_digest;
  std::vector<std::size_t> pool_indices;
  Eigen::MatrixXd responses;
};

DecodedResponses decode_responses(std::span<const std::uint8_t> bytes, const std::string& where) {
  ByteReader r(bytes);
  const auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), kResponsesMagic)) throw CorruptionError(where + ": not a response blob");
  const auto version = r.u32();
  if (version != kResponsesVersion) {
    throw UnsupportedSchemaError(where + ": unsupported response blob version " + std::to_string(version));
  }
  DecodedResponses d;
  d.seed = r.u64();
  d.victim_digest = r.section_string();
  const auto n = r.u64();
  const auto m = r.u32();
  if (n > r.remaining() / 8) throw CorruptionError(where + ": response blob truncated");
  d.pool_indices.resize(static_cast<std::size_t>(n));
  for (auto& i : d.pool_indices) i = static_cast<std::size_t>(r.u64());
  d.responses.resize(static_cast<Eigen::Index>(n), m);
  for (Eigen::Index i = 0; i < d.responses.rows(); ++i) {
    for (Eigen::Index c = 0; c < m; ++c) d.responses(i, c) = r.f64();
  }
  if (!r.done()) throw CorruptionError(where + ": trailing bytes in response blob");
  return d;
}

}  // namespace

void TransferSet::validate() const {
  if (queries.size() != static_cast<std::size_t>(responses.rows()) || pool_indices.size() != queries.size()) {
    throw SchemaError("transfer set: " + std::to_string(queries.size()) + " queries vs " +
                      std::to_string(responses.rows()) + " responses");
  }
  check_rows(responses, "transfer set");
}

TransferSet build_transfer_set(const BlackBoxSuspect& victim, std::span<const Image> pool, const ImageShape& shape,
                               std::size_t budget, std::uint64_t seed, const TransferOptions& options) {
  if (budget > pool.size()) {
    throw InvalidArgument("transfer budget " + std::to_string(budget) + " exceeds pool size " +
                          std::to_string(pool.size()));
  }
  if (options.query_chunk == 0) throw InvalidArgument("query chunk must be positive");
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(budget);

  TransferSet t;
  t.shape = shape;
  t.seed = seed;
  t.victim_digest = victim.digest;
  t.pool_indices = order;
  t.responses.resize(static_cast<Eigen::Index>(budget), victim.class_count);
  for (auto i : order) t.queries.push_back(pool[i]);

  std::size_t done = 0;
  if (!options.checkpoint_path.empty() && fs::exists(options.checkpoint_path)) {
    const auto d = decode_responses(read_file_bytes(options.checkpoint_path), options.checkpoint_path);
    const bool prefix = d.pool_indices.size() <= budget &&
                        std::equal(d.pool_indices.begin(), d.pool_indices.end(), order.begin());
    if (d.seed == seed && d.victim_digest == victim.digest && prefix && d.responses.cols() == victim.class_count) {
      done = d.pool_indices.size();
      t.responses.topRows(static_cast<Eigen::Index>(done)) = d.responses;
    }
  }

  while (done < budget) {
    const std::size_t n = std::min(options.query_chunk, budget - done);
    try {
      t.responses.middleRows(static_cast<Eigen::Index>(done), static_cast<Eigen::Index>(n)) =
          victim.checked_query(std::span<const Image>(t.queries).subspan(done, n));
    } catch (const QueryError& e) {
      std::string where;
      if (!options.checkpoint_path.empty()) {
        write_file_bytes_atomic(options.checkpoint_path, encode_responses(t, done));
        where = "; progress saved to " + options.checkpoint_path;
      }
      throw QueryError(std::string(e.what()) + " after " + std::to_string(done) + " of " + std::to_string(budget) +
                       " transfer queries" + where);
    }
    done += n;
  }
  if (!options.checkpoint_path.empty() && fs::exists(options.checkpoint_path)) fs::remove(options.checkpoint_path);
  return t;
}

void save_transfer_set(const TransferSet& t, const std::string& dir) {
  t.validate();
  fs::create_directories(dir);
  LabeledImageDataset ds;
  ds.dataset_id = "transfer:" + t.victim_digest.substr(0, 16);
  ds.shape = t.shape;
  ds.split = Split::kProbe;
  ds.images = t.queries;
  for (Eigen::Index c = 0; c < t.responses.cols(); ++c) ds.class_names.push_back("class" + std::to_string(c));
  for (Eigen::Index i = 0; i < t.responses.rows(); ++i) {
    Eigen::Index arg;
    t.responses.row(i).maxCoeff(&arg);
    ds.labels.push_back(static_cast<int>(arg));
  }
  for (const auto& q : t.queries) {
    if (!on_8bit_grid(q)) throw InvalidArgument("transfer queries must lie on the 8-bit grid to be archived exactly");
  }
  save_dataset_archive((fs::path(dir) / "queries.tar").string(), {&ds});
  write_file_bytes_atomic((fs::path(dir) / "responses.bin").string(), encode_responses(t, t.size()));
}

TransferSet load_transfer_set(const std::string& dir) {
  const auto ds = load_dataset((fs::path(dir) / "queries.tar").string(), DatasetFormat::kArchive, Split::kProbe);
  const auto blob = (fs::path(dir) / "responses.bin").string();
  auto d = decode_responses(read_file_bytes(blob), blob);
  TransferSet t;
  t.shape = ds.shape;
  t.queries = ds.images;
  t.responses = std::move(d.responses);
  t.pool_indices = std::move(d.pool_indices);
  t.seed = d.seed;
  t.victim_digest = std::move(d.victim_digest);
  t.validate();
  return t;
}

TrainedModel train_surrogate(const TransferSet& transfer, const std::string& architecture,
                             const nn::TrainHyper& hyper, const SurrogateOptions& options) {
  transfer.validate();
  if (transfer.size() == 0) throw InvalidArgument("train_surrogate: empty transfer set");
  Eigen::MatrixXd targets = transfer.responses;
  if (options.hard_labels) {
    std::vector<int> top(transfer.size());
    for (Eigen::Index i = 0; i < targets.rows(); ++i) {
      Eigen::Index arg;
      targets.row(i).maxCoeff(&arg);
      top[static_cast<std::size_t>(i)] = static_cast<int>(arg);
    }
    targets = nn::one_hot(top, static_cast<int>(transfer.responses.cols()));
  }
  nlohmann::json manifest = {{"role", "surrogate"},
                             {"victim_digest", transfer.victim_digest},
                             {"transfer_size", transfer.size()},
                             {"transfer_seed", transfer.seed},
                             {"targets", options.hard_labels ? "hard_labels" : "probabilities"}};
  return train_on_targets(transfer.queries, transfer.shape, targets, architecture, hyper, std::move(manifest));
}

double top1_agreement(const Classifier& a, const Classifier& b, std::span<const Image> queries) {
  if (queries.empty()) throw InvalidArgument("agreement needs at least one query");
  const auto la = predict_labels(a, queries);
  const auto lb = predict_labels(b, queries);
  std::size_t same = 0;
  for (std::size_t i = 0; i < la.size(); ++i) same += la[i] == lb[i];
  return static_cast<double>(same) / static_cast<double>(la.size());
}

double mean_kl(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols() || p.rows() == 0) throw InvalidArgument("mean_kl: shape mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      if (p(i, c) > 0.0) total += p(i, c) * (std::log(p(i, c)) - std::log(std::max(q(i, c), 1e-12)));
    }
  }
  return total / static_cast<double>(p.rows());
}

namespace {

SideVerdicts verdicts_for(const TrainedModel& model, const SurvivalInputs& in, std::span<const MarkedPair> pairs,
                          std::span<const Image> probe) {
  SideVerdicts s;
  s.whitebox_marked = whitebox_verify(WhiteBoxSuspect::from_model(model), *in.secret, *in.marker_fn,
                                      ProbeSource::kMarkedSet, probe, in.whitebox);
  s.blackbox = blackbox_verify(BlackBoxSuspect::from_model(model, model.weights_digest()), pairs);
  s.blackbox.order_seed = in.order_seed;
  s.blackbox.secret_digest = s.whitebox_marked.secret_digest;
  s.accuracy = evaluate_accuracy(model, *in.test);
  return s;
}

nlohmann::json side_json(const SideVerdicts& s) {
  return {{"accuracy", s.accuracy},
          {"whitebox_marked_probe", to_json(s.whitebox_marked)},
          {"blackbox", to_json(s.blackbox)}};
}

}  // namespace

SurvivalReport extraction_survival_report(const TrainedModel& victim, const TrainedModel& surrogate,
                                          const SurvivalInputs& in) {
  if (!in.secret || !in.marked || !in.test || !in.marker_fn) {
    throw InvalidArgument("survival report: secret, marked set, test set and marker features are required");
  }
  if (victim.class_count() != surrogate.class_count() || victim.class_count() != in.secret->carriers.class_count()) {
    throw InvalidArgument("survival report: victim, surrogate and secret disagree on the class count");
  }
  const auto pairs = marked_pairs(*in.secret, *in.marked, in.order_seed);
  const auto probe = marked_probe_images(*in.secret, *in.marked);
  SurvivalReport r;
  r.victim = verdicts_for(victim, in, pairs, probe);
  r.surrogate = verdicts_for(surrogate, in, pairs, probe);
  r.accuracy_gap_pp = 100.0 * (r.victim.accuracy - r.surrogate.accuracy);
  r.agreement = in.heldout_queries.empty() ? 0.0 : top1_agreement(victim, surrogate, in.heldout_queries);
  r.failure_regime = r.agreement < in.agreement_floor;
  return r;
}

nlohmann::json to_json(const SurvivalReport& r) {
  return {{"victim", side_json(r.victim)},
          {"surrogate", side_json(r.surrogate)},
          {"accuracy_gap_pp", r.accuracy_gap_pp},
          {"agreement", r.agreement},
          {"failure_regime", r.failure_regime}};
}

}  // namespace radmark
