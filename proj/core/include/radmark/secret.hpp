#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>
#include <string>
#include <utility>

#include "radmark/carriers.hpp"
#include "radmark/dataset.hpp"
#include "radmark/embed_params.hpp"

namespace radmark {

inline constexpr std::uint32_t kSecretSchemaVersion = 1;

// Everything only the dataset owner knows: carriers, which samples were
// marked, their clean originals and how they were marked.
struct WatermarkSecret {
  using SampleKey = std::pair<int, std::size_t>;  // (class, dataset index)

  CarrierSet carriers;
  MarkingSelection selection;
  ImageShape image_shape;
  std::map<SampleKey, Image> clean_originals;
  EmbedParams embed_params;
  std::string marker_model_digest;
  std::uint32_t schema_version = kSecretSchemaVersion;

  // Checks key agreement with the selection and the carrier class count.
  void validate(int class_count) const;
  bool operator==(const WatermarkSecret& o) const;
};

// Little-endian container: "RMRK", u32 schema_version, then u64
// length-prefixed sections: carriers (f32 row-major), selection, embed params
// (JSON), clean originals (8 bits per channel), marker digest (hex).
void save_secret(const WatermarkSecret& secret, const std::string& path);
WatermarkSecret load_secret(const std::string& path);

std::vector<std::uint8_t> encode_secret(const WatermarkSecret& secret);
WatermarkSecret decode_secret(std::span<const std::uint8_t> bytes);

std::string secret_digest(const WatermarkSecret& secret);

}  // namespace radmark
