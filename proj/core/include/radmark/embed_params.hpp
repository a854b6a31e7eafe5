#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>

namespace radmark {

// Hyperparameters of the feature-space marking objective
//   -(phi(x~) - phi(x))^T u + lambda_pixel |x~ - x|_2 + lambda_feature |phi(x~) - phi(x)|_2
// minimized by plain gradient descent from x~ = x.
struct EmbedParams {
  double lambda_pixel = 0.05;
  double lambda_feature = 0.05;
  int steps = 200;
  double step_size = 2.0 / 255.0;
  std::optional<double> linf_budget;
  bool quantize_8bit = true;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const EmbedParams&) const = default;
};

nlohmann::json to_json(const EmbedParams& p);
EmbedParams embed_params_from_json(const nlohmann::json& j);

}  // namespace radmark
