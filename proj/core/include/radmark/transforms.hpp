#pragma once

#include <string>

#include "radmark/image.hpp"

namespace radmark {

// Input transformations for robustness checks. Spec strings:
//   rotate:<degrees>   bilinear rotation about the centre, edge pixels replicated
//   rescale:<factor>   bilinear down-scale by factor in (0,1] and back up
//   crop:<size>        centre crop to size x size, resized back
//   jpeg:<quality>     8x8 block DCT per channel with the standard luminance
//                      table scaled to quality in [1,100]
// Results are snapped to the 8-bit grid.
Image apply_transform(const Image& img, const ImageShape& shape, const std::string& spec);

// Throws InvalidArgument for an unknown or malformed spec.
void validate_transform(const std::string& spec);

}  // namespace radmark
