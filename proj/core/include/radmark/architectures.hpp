#pragma once

#include <string>
#include <vector>

#include "radmark/image.hpp"
#include "radmark/nn/network.hpp"

namespace radmark {

// Supported tags:
//   desk_cnn    three conv blocks + 128-wide fully connected feature layer
//   residual    conv net with identity-skip units (d=128)
//   dense       densely-connected conv net (d=128)
//   legacy      shallow AlexNet-style net: two convs + two FC layers (d=128)
//   tiny_smooth conv + tanh + linear + tanh, smooth everywhere (d=16)
std::vector<std::string> architecture_tags();
nn::Network build_architecture(const std::string& tag, const ImageShape& input, int class_count);

}  // namespace radmark
