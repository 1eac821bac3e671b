#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sketchclean {

struct Shape3 {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t count() const { return channels * height * width; }
  bool operator==(const Shape3&) const = default;
};

std::string to_string(const Shape3& shape);

/// C x H x W activation tensor.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(std::size_t channels, std::size_t height, std::size_t width, double fill = 0.0);
  FeatureMap(Shape3 shape, std::vector<double> values);

  const Shape3& shape() const { return shape_; }
  std::size_t channels() const { return shape_.channels; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  std::size_t size() const { return values_.size(); }

  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return values_[(c * shape_.height + y) * shape_.width + x];
  }
  double& at(std::size_t c, std::size_t y, std::size_t x) { return values_[(c * shape_.height + y) * shape_.width + x]; }

  std::span<const double> plane(std::size_t c) const {
    return std::span<const double>(values_).subspan(c * shape_.height * shape_.width, shape_.height * shape_.width);
  }
  std::span<double> plane(std::size_t c) {
    return std::span<double>(values_).subspan(c * shape_.height * shape_.width, shape_.height * shape_.width);
  }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  bool operator==(const FeatureMap&) const = default;

 private:
  Shape3 shape_;
  std::vector<double> values_;
};

enum class LayerKind : std::uint8_t { kDown = 0, kFlat = 1, kUp = 2 };
enum class Activation : std::uint8_t { kRelu = 0, kLogistic = 1 };

/// 3x3 convolution, padding 1. Down: stride 2. Flat: stride 1. Up: nearest 2x
/// upsample followed by a stride-1 convolution.
struct ConvLayer {
  LayerKind kind = LayerKind::kFlat;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::vector<double> weights;  // [out][in][3][3]
  std::vector<double> bias;     // [out]

  ConvLayer() = default;
  ConvLayer(LayerKind kind, std::size_t in_channels, std::size_t out_channels);

  std::size_t stride() const { return kind == LayerKind::kDown ? 2 : 1; }
  double weight(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const {
    return weights[((o * in_channels + i) * 3 + ky) * 3 + kx];
  }
  double& weight(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) {
    return weights[((o * in_channels + i) * 3 + ky) * 3 + kx];
  }
};

/// Activations of the encoder-decoder graph, in evaluation order.
enum class Stage : std::uint8_t { A, B, C, D, E, F, G, H, I, J, K, L, M, Output };

std::string to_string(Stage stage);
Stage parse_stage(const std::string& name);

enum class OutputMode : std::uint8_t { kDouble = 0, kSame = 1 };

/// Encoder activation concatenated (after the decoder input) in front of a decoder stage's convolution.
struct SkipConnection {
  Stage encoder;
  Stage decoder;
  bool operator==(const SkipConnection&) const = default;
};

struct NetConfig {
  std::size_t input_size = 64;
  std::size_t base_width = 8;
  OutputMode output_mode = OutputMode::kDouble;
  std::vector<SkipConnection> skip_wiring = default_skip_wiring();

  /// B into the J stage and C into the H stage.
  static std::vector<SkipConnection> default_skip_wiring();

  std::size_t output_size() const { return output_mode == OutputMode::kDouble ? 2 * input_size : input_size; }
  /// Throws ConfigError.
  void validate() const;
  bool operator==(const NetConfig&) const = default;
};

struct NetworkLayer {
  Stage stage;
  ConvLayer conv;
  Activation activation = Activation::kRelu;
  std::vector<Stage> skip_sources;  // concatenated after the previous activation, in order
};

struct Network {
  NetConfig config;
  std::vector<NetworkLayer> layers;

  std::size_t parameter_count() const;
};

/// Cached activations for backward().
struct ForwardTrace {
  FeatureMap input;
  std::vector<FeatureMap> conv_inputs;  // tensor each convolution saw (after concat / upsample)
  std::vector<FeatureMap> outputs;      // post-activation
};

struct LayerGradient {
  std::vector<double> weights;
  std::vector<double> bias;
};

struct NetworkGradients {
  std::vector<LayerGradient> layers;
  FeatureMap input;
};

/// Builds the graph; parameters initialized with init_params(seed).
Network build_scnet(const NetConfig& cfg, std::uint64_t init_seed);

/// Stage shapes implied by `cfg` without allocating parameters.
std::vector<std::pair<Stage, Shape3>> activation_shapes(const NetConfig& cfg);

/// He-style uniform weights (variance 2 / fan_in), zero biases. Values are
/// rounded to float so checkpoints store them exactly.
void init_params(Network& net, std::uint64_t seed);

FeatureMap conv2d_direct(const FeatureMap& input, const ConvLayer& layer);
FeatureMap upsample_nearest(const FeatureMap& input);
FeatureMap upconv(const FeatureMap& input, const ConvLayer& layer);
FeatureMap concat_skip(const FeatureMap& decoder, const FeatureMap& encoder);

/// Accumulates into `grad`; writes the input gradient when `grad_input` is non-null.
void conv2d_backward(const FeatureMap& input, const ConvLayer& layer, const FeatureMap& grad_output,
                     LayerGradient& grad, FeatureMap* grad_input);

/// Returns probabilities in (0,1) of shape 1 x out x out. Input is ink=1 polarity.
FeatureMap forward(const Network& net, const FeatureMap& input);
FeatureMap forward(const Network& net, const FeatureMap& input, ForwardTrace& trace);

/// `output_grad` is dL/d(probabilities).
NetworkGradients backward(const Network& net, const ForwardTrace& trace, const FeatureMap& output_grad);
NetworkGradients backward(const Network& net, const FeatureMap& input, const FeatureMap& output_grad);

/// Parameters and gradients flattened in layer order (weights then bias per layer).
std::vector<double> flatten_parameters(const Network& net);
void assign_parameters(Network& net, std::span<const double> flat);
std::vector<double> flatten_gradients(const NetworkGradients& grads);

NetworkGradients zero_gradients(const Network& net);

}  // namespace sketchclean
