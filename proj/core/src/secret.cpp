#include "radmark/secret.hpp"

#include "radmark/binio.hpp"
#include "radmark/digest.hpp"
#include "radmark/error.hpp"

namespace radmark {

namespace {
constexpr char kSecretMagic[4] = {'R', 'M', 'R', 'K'};
}

void EmbedParams::validate() const {
  if (!(lambda_pixel >= 0.0) || !(lambda_feature >= 0.0)) throw InvalidArgument("embed params: lambdas must be >= 0");
  if (steps < 0) throw InvalidArgument("embed params: steps must be >= 0");
  if (!(step_size > 0.0)) throw InvalidArgument("embed params: step_size must be > 0");
  if (linf_budget && !(*linf_budget > 0.0 && *linf_budget <= 1.0)) {
    throw InvalidArgument("embed params: linf_budget must lie in (0,1]");
  }
}

nlohmann::json to_json(const EmbedParams& p) {
  nlohmann::json j = {{"lambda_pixel", p.lambda_pixel}, {"lambda_feature", p.lambda_feature},
                      {"steps", p.steps},               {"step_size", p.step_size},
                      {"quantize_8bit", p.quantize_8bit}, {"seed", p.seed}};
  j["linf_budget"] = p.linf_budget ? nlohmann::json(*p.linf_budget) : nlohmann::json(nullptr);
  return j;
}

EmbedParams embed_params_from_json(const nlohmann::json& j) {
  EmbedParams p;
  p.lambda_pixel = j.value("lambda_pixel", p.lambda_pixel);
  p.lambda_feature = j.value("lambda_feature", p.lambda_feature);
  p.steps = j.value("steps", p.steps);
  p.step_size = j.value("step_size", p.step_size);
  p.quantize_8bit = j.value("quantize_8bit", p.quantize_8bit);
  p.seed = j.value("seed", p.seed);
  if (j.contains("linf_budget") && !j["linf_budget"].is_null()) p.linf_budget = j["linf_budget"].get<double>();
  p.validate();
  return p;
}

void WatermarkSecret::validate(int class_count) const {
  if (carriers.class_count() != class_count) {
    throw SchemaError("secret: carriers cover " + std::to_string(carriers.class_count()) + " classes, dataset has " +
                      std::to_string(class_count));
  }
  std::size_t expected = 0;
  for (const auto& [c, idx] : selection.per_class_indices) {
    for (auto i : idx) {
      if (!clean_originals.contains({c, i})) {
        throw SchemaError("secret: selected sample (" + std::to_string(c) + "," + std::to_string(i) +
                          ") has no clean original");
      }
      ++expected;
    }
  }
  if (expected != clean_originals.size()) throw SchemaError("secret: clean originals not covered by the selection");
}

bool WatermarkSecret::operator==(const WatermarkSecret& o) const {
  if (!(carriers == o.carriers) || !(selection == o.selection) || !(image_shape == o.image_shape) ||
      !(embed_params == o.embed_params) || marker_model_digest != o.marker_model_digest ||
      schema_version != o.schema_version || clean_originals.size() != o.clean_originals.size()) {
    return false;
  }
  auto it = o.clean_originals.begin();
  for (const auto& [k, img] : clean_originals) {
    if (k != it->first || img.size() != it->second.size() || img != it->second) return false;
    ++it;
  }
  return true;
}

std::vector<std::uint8_t> encode_secret(const WatermarkSecret& s) {
  ByteWriter w;
  w.raw(std::string_view(kSecretMagic, 4));
  w.u32(s.schema_version);

  ByteWriter car;
  car.u32(static_cast<std::uint32_t>(s.carriers.class_count()));
  car.u32(static_cast<std::uint32_t>(s.carriers.feature_dim()));
  car.u64(s.carriers.seed);
  for (int r = 0; r < s.carriers.class_count(); ++r) {
    for (int c = 0; c < s.carriers.feature_dim(); ++c) car.f32(static_cast<float>(s.carriers.vectors(r, c)));
  }
  w.section(car.bytes());

  ByteWriter sel;
  sel.f64(s.selection.wm_ratio);
  sel.u64(s.selection.seed);
  sel.u32(static_cast<std::uint32_t>(s.selection.per_class_indices.size()));
  for (const auto& [c, idx] : s.selection.per_class_indices) {
    sel.u32(static_cast<std::uint32_t>(c));
    sel.u64(idx.size());
    for (auto i : idx) sel.u64(i);
  }
  w.section(sel.bytes());

  w.section(to_json(s.embed_params).dump());

  ByteWriter orig;
  orig.u32(static_cast<std::uint32_t>(s.image_shape.channels));
  orig.u32(static_cast<std::uint32_t>(s.image_shape.height));
  orig.u32(static_cast<std::uint32_t>(s.image_shape.width));
  orig.u64(s.clean_originals.size());
  for (const auto& [key, img] : s.clean_originals) {
    if (img.size() != s.image_shape.size()) throw InvalidArgument("secret: original image has wrong size");
    if (!on_8bit_grid(img)) {
      throw InvalidArgument("secret: clean original (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                            ") is not on the 8-bit grid and cannot be stored exactly");
    }
    orig.u32(static_cast<std::uint32_t>(key.first));
    orig.u64(key.second);
    for (Eigen::Index i = 0; i < img.size(); ++i) orig.u8(to_byte(img[i]));
  }
  w.section(orig.bytes());

  w.section(s.marker_model_digest);
  return w.take();
}

WatermarkSecret decode_secret(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.remaining() < 8) throw CorruptionError("secret file truncated before header");
  const auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), kSecretMagic)) throw CorruptionError("not a watermark secret file");
  WatermarkSecret s;
  s.schema_version = r.u32();
  if (s.schema_version != kSecretSchemaVersion) {
    throw UnsupportedSchemaError("unsupported secret schema_version " + std::to_string(s.schema_version) +
                                 " (this build reads " + std::to_string(kSecretSchemaVersion) + ")");
  }

  {
    ByteReader car(r.section());
    const auto m = car.u32();
    const auto d = car.u32();
    s.carriers.seed = car.u64();
    if (static_cast<std::uint64_t>(m) * d * 4 != car.remaining()) throw CorruptionError("secret: carrier block size mismatch");
    s.carriers.vectors.resize(m, d);
    for (std::uint32_t i = 0; i < m; ++i) {
      for (std::uint32_t j = 0; j < d; ++j) s.carriers.vectors(i, j) = car.f32();
    }
  }
  {
    ByteReader sel(r.section());
    s.selection.wm_ratio = sel.f64();
    s.selection.seed = sel.u64();
    const auto classes = sel.u32();
    for (std::uint32_t k = 0; k < classes; ++k) {
      const int c = static_cast<int>(sel.u32());
      const auto n = sel.u64();
      if (n > sel.remaining() / 8) throw CorruptionError("secret: selection block truncated");
      auto& idx = s.selection.per_class_indices[c];
      idx.resize(static_cast<std::size_t>(n));
      for (auto& i : idx) i = static_cast<std::size_t>(sel.u64());
    }
    if (!sel.done()) throw CorruptionError("secret: trailing bytes in selection block");
  }
  try {
    s.embed_params = embed_params_from_json(nlohmann::json::parse(r.section_string()));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(std::string("secret: embed params are not valid JSON: ") + e.what());
  }
  {
    ByteReader orig(r.section());
    s.image_shape.channels = static_cast<int>(orig.u32());
    s.image_shape.height = static_cast<int>(orig.u32());
    s.image_shape.width = static_cast<int>(orig.u32());
    const auto n = orig.u64();
    const std::size_t per = 12 + static_cast<std::size_t>(s.image_shape.size());
    if (n > orig.remaining() / per) throw CorruptionError("secret: originals block truncated");
    for (std::uint64_t k = 0; k < n; ++k) {
      const int c = static_cast<int>(orig.u32());
      const auto idx = static_cast<std::size_t>(orig.u64());
      const auto px = orig.raw(static_cast<std::size_t>(s.image_shape.size()));
      Image img(s.image_shape.size());
      for (Eigen::Index i = 0; i < img.size(); ++i) img[i] = from_byte(px[static_cast<std::size_t>(i)]);
      s.clean_originals.emplace(WatermarkSecret::SampleKey{c, idx}, std::move(img));
    }
    if (!orig.done()) throw CorruptionError("secret: trailing bytes in originals block");
  }
  s.marker_model_digest = r.section_string();
  if (!r.done()) throw CorruptionError("secret: trailing bytes after last section");
  return s;
}

void save_secret(const WatermarkSecret& secret, const std::string& path) {
  write_file_bytes_atomic(path, encode_secret(secret));
}

WatermarkSecret load_secret(const std::string& path) { return decode_secret(read_file_bytes(path)); }

std::string secret_digest(const WatermarkSecret& secret) { return sha256_hex(encode_secret(secret)); }

}  // namespace radmark
