#include "radmark/architectures.hpp"

#include "radmark/error.hpp"

namespace radmark {

using nn::Conv2d;
using nn::DenseConcat;
using nn::Flatten;
using nn::GlobalAvgPool;
using nn::Linear;
using nn::MaxPool2;
using nn::Relu;
using nn::Residual;
using nn::Sequential;
using nn::Tanh;

std::vector<std::string> architecture_tags() { return {"desk_cnn", "residual", "dense", "legacy", "tiny_smooth"}; }

namespace {

Sequential conv_relu(int in, int out, int k = 3) {
  Sequential s;
  s.add<Conv2d>(in, out, k).add<Relu>();
  return s;
}

Sequential residual_unit(int ch) {
  Sequential inner;
  inner.add<Conv2d>(ch, ch).add<Relu>().add<Conv2d>(ch, ch);
  Sequential s;
  s.add<Residual>(std::move(inner)).add<Relu>();
  return s;
}

void append(Sequential& dst, Sequential src) { dst.add_layer(std::make_unique<Sequential>(std::move(src))); }

}  // namespace

nn::Network build_architecture(const std::string& tag, const ImageShape& in, int classes) {
  const int C = in.channels, H = in.height, W = in.width;
  Sequential body;
  if (tag == "desk_cnn") {
    if (H % 8 || W % 8) throw InvalidArgument("desk_cnn needs height and width divisible by 8");
    append(body, conv_relu(C, 16));
    body.add<MaxPool2>();
    append(body, conv_relu(16, 32));
    body.add<MaxPool2>();
    append(body, conv_relu(32, 64));
    body.add<MaxPool2>();
    body.add<Flatten>().add<Linear>(64 * (H / 8) * (W / 8), 128).add<Relu>();
  } else if (tag == "residual") {
    if (H % 8 || W % 8) throw InvalidArgument("residual needs height and width divisible by 8");
    append(body, conv_relu(C, 16));
    append(body, residual_unit(16));
    body.add<MaxPool2>();
    append(body, conv_relu(16, 32));
    append(body, residual_unit(32));
    body.add<MaxPool2>();
    append(body, conv_relu(32, 64));
    body.add<MaxPool2>();
    body.add<Flatten>().add<Linear>(64 * (H / 8) * (W / 8), 128).add<Relu>();
  } else if (tag == "dense") {
    if (H % 8 || W % 8) throw InvalidArgument("dense needs height and width divisible by 8");
    append(body, conv_relu(C, 16));
    body.add<DenseConcat>(conv_relu(16, 12)).add<DenseConcat>(conv_relu(28, 12));
    body.add<MaxPool2>();
    append(body, conv_relu(40, 32, 1));
    body.add<DenseConcat>(conv_relu(32, 16)).add<DenseConcat>(conv_relu(48, 16));
    body.add<MaxPool2>();
    append(body, conv_relu(64, 32, 1));
    body.add<MaxPool2>();
    body.add<Flatten>().add<Linear>(32 * (H / 8) * (W / 8), 128).add<Relu>();
  } else if (tag == "legacy") {
    if (H % 4 || W % 4) throw InvalidArgument("legacy needs height and width divisible by 4");
    append(body, conv_relu(C, 24, 5));
    body.add<MaxPool2>();
    append(body, conv_relu(24, 48));
    body.add<MaxPool2>();
    body.add<Flatten>().add<Linear>(48 * (H / 4) * (W / 4), 256).add<Relu>().add<Linear>(256, 128).add<Relu>();
  } else if (tag == "tiny_smooth") {
    body.add<Conv2d>(C, 4).add<Tanh>().add<Flatten>().add<Linear>(4 * H * W, 16).add<Tanh>();
  } else {
    throw InvalidArgument("unsupported architecture: " + tag);
  }
  return nn::Network(tag, in, std::move(body), classes);
}

}  // namespace radmark
