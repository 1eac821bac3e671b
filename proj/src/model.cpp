#include "sketchclean/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sketchclean/errors.hpp"
#include "sketchclean/rng.hpp"

namespace sketchclean {

std::string to_string(const Shape3& shape) {
  return std::to_string(shape.channels) + "x" + std::to_string(shape.height) + "x" + std::to_string(shape.width);
}

FeatureMap::FeatureMap(std::size_t channels, std::size_t height, std::size_t width, double fill)
    : shape_{channels, height, width}, values_(channels * height * width, fill) {}

FeatureMap::FeatureMap(Shape3 shape, std::vector<double> values) : shape_(shape), values_(std::move(values)) {
  if (values_.size() != shape_.count()) throw ArgumentError("feature map value count does not match its shape");
}

ConvLayer::ConvLayer(LayerKind kind, std::size_t in_channels, std::size_t out_channels)
    : kind(kind),
      in_channels(in_channels),
      out_channels(out_channels),
      weights(out_channels * in_channels * 9, 0.0),
      bias(out_channels, 0.0) {}

std::string to_string(Stage stage) {
  if (stage == Stage::Output) return "out";
  return std::string(1, static_cast<char>('A' + static_cast<int>(stage)));
}

Stage parse_stage(const std::string& name) {
  if (name == "out") return Stage::Output;
  if (name.size() == 1 && name[0] >= 'A' && name[0] <= 'M') return static_cast<Stage>(name[0] - 'A');
  throw ConfigError("unknown stage name: " + name);
}

std::vector<SkipConnection> NetConfig::default_skip_wiring() { return {{Stage::B, Stage::J}, {Stage::C, Stage::H}}; }

namespace {

struct StageSpec {
  Stage stage;
  LayerKind kind;
  std::size_t width_multiple;  // output channels = multiple * base_width (0: single output channel)
};

// Fixed graph: A,B flat; C,D,E down; F,G up; H flat; I up; J flat; K up (flat in
// same mode); L,M flat; Output flat with logistic.
std::vector<StageSpec> stage_plan(OutputMode mode) {
  return {{Stage::A, LayerKind::kFlat, 1},
          {Stage::B, LayerKind::kFlat, 2},
          {Stage::C, LayerKind::kDown, 4},
          {Stage::D, LayerKind::kDown, 8},
          {Stage::E, LayerKind::kDown, 16},
          {Stage::F, LayerKind::kUp, 16},
          {Stage::G, LayerKind::kUp, 16},
          {Stage::H, LayerKind::kFlat, 8},
          {Stage::I, LayerKind::kUp, 8},
          {Stage::J, LayerKind::kFlat, 4},
          {Stage::K, mode == OutputMode::kDouble ? LayerKind::kUp : LayerKind::kFlat, 4},
          {Stage::L, LayerKind::kFlat, 2},
          {Stage::M, LayerKind::kFlat, 1},
          {Stage::Output, LayerKind::kFlat, 0}};
}

std::size_t spatial_out(LayerKind kind, std::size_t n) {
  switch (kind) {
    case LayerKind::kDown:
      return (n + 1) / 2;
    case LayerKind::kUp:
      return 2 * n;
    case LayerKind::kFlat:
      break;
  }
  return n;
}

struct PlannedLayer {
  Stage stage;
  LayerKind kind;
  std::size_t in_channels;
  std::size_t out_channels;
  std::vector<Stage> skips;
  Shape3 out_shape;
};

std::vector<PlannedLayer> plan_layers(const NetConfig& cfg) {
  cfg.validate();
  std::map<Stage, Shape3> shapes;
  std::vector<PlannedLayer> plan;
  Shape3 current{1, cfg.input_size, cfg.input_size};
  for (const auto& spec : stage_plan(cfg.output_mode)) {
    PlannedLayer layer{spec.stage, spec.kind, current.channels, 0, {}, {}};
    for (const auto& skip : cfg.skip_wiring) {
      if (skip.decoder != spec.stage) continue;
      const auto it = shapes.find(skip.encoder);
      if (it == shapes.end()) {
        throw ConfigError("skip source " + to_string(skip.encoder) + " is not evaluated before " +
                          to_string(skip.decoder));
      }
      if (it->second.height != current.height || it->second.width != current.width) {
        throw ConfigError("skip " + to_string(skip.encoder) + "->" + to_string(skip.decoder) +
                          " joins mismatched resolutions " + to_string(it->second) + " and " + to_string(current));
      }
      layer.skips.push_back(skip.encoder);
      layer.in_channels += it->second.channels;
    }
    layer.out_channels = spec.width_multiple == 0 ? 1 : spec.width_multiple * cfg.base_width;
    const std::size_t side = spatial_out(spec.kind, current.height);
    layer.out_shape = {layer.out_channels, side, side};
    shapes[spec.stage] = layer.out_shape;
    current = layer.out_shape;
    plan.push_back(std::move(layer));
  }
  return plan;
}

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void require_shape(const FeatureMap& map, std::size_t channels, const char* what) {
  if (map.channels() != channels) {
    throw ArgumentError(std::string(what) + ": expected " + std::to_string(channels) + " input channels, got " +
                        std::to_string(map.channels()));
  }
}

// Output range [lo, hi) along one axis for which `o * stride + k - 1` is a valid input index.
std::pair<std::size_t, std::size_t> valid_range(std::size_t out_n, std::size_t in_n, std::size_t stride,
                                                std::size_t k) {
  std::size_t lo = 0;
  while (lo < out_n && lo * stride + k < 1) ++lo;
  std::size_t hi = out_n;
  while (hi > lo && (hi - 1) * stride + k - 1 >= in_n) --hi;
  return {lo, hi};
}

FeatureMap convolve(const FeatureMap& input, const ConvLayer& layer) {
  const std::size_t stride = layer.kind == LayerKind::kDown ? 2 : 1;
  const std::size_t h = input.height();
  const std::size_t w = input.width();
  const std::size_t oh = stride == 2 ? (h + 1) / 2 : h;
  const std::size_t ow = stride == 2 ? (w + 1) / 2 : w;
  FeatureMap out(layer.out_channels, oh, ow);
  for (std::size_t o = 0; o < layer.out_channels; ++o) {
    auto dst = out.plane(o);
    std::fill(dst.begin(), dst.end(), layer.bias[o]);
    for (std::size_t i = 0; i < layer.in_channels; ++i) {
      const auto src = input.plane(i);
      for (std::size_t ky = 0; ky < 3; ++ky) {
        const auto [ylo, yhi] = valid_range(oh, h, stride, ky);
        for (std::size_t kx = 0; kx < 3; ++kx) {
          const double wv = layer.weight(o, i, ky, kx);
          const auto [xlo, xhi] = valid_range(ow, w, stride, kx);
          for (std::size_t y = ylo; y < yhi; ++y) {
            const double* in_row = src.data() + (y * stride + ky - 1) * w;
            double* out_row = dst.data() + y * ow;
            if (stride == 1) {
              const double* in_shift = in_row + kx - 1;
              for (std::size_t x = xlo; x < xhi; ++x) out_row[x] += wv * in_shift[x];
            } else {
              for (std::size_t x = xlo; x < xhi; ++x) out_row[x] += wv * in_row[x * 2 + kx - 1];
            }
          }
        }
      }
    }
  }
  return out;
}

FeatureMap downsample_sum(const FeatureMap& grad) {
  FeatureMap out(grad.channels(), grad.height() / 2, grad.width() / 2);
  for (std::size_t c = 0; c < grad.channels(); ++c) {
    for (std::size_t y = 0; y < out.height(); ++y) {
      for (std::size_t x = 0; x < out.width(); ++x) {
        out.at(c, y, x) = grad.at(c, 2 * y, 2 * x) + grad.at(c, 2 * y, 2 * x + 1) + grad.at(c, 2 * y + 1, 2 * x) +
                          grad.at(c, 2 * y + 1, 2 * x + 1);
      }
    }
  }
  return out;
}

void add_into(FeatureMap& dst, std::span<const double> src) {
  auto d = dst.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += src[i];
}

}  // namespace

void NetConfig::validate() const {
  if (input_size == 0 || input_size % 8 != 0) throw ConfigError("input_size must be a positive multiple of 8");
  if (base_width < 1) throw ConfigError("base_width must be at least 1");
  for (const auto& skip : skip_wiring) {
    if (skip.encoder > Stage::E) throw ConfigError("skip source must be an encoder stage (A-E)");
    if (skip.decoder <= Stage::E) throw ConfigError("skip target must be a decoder stage (F-M or out)");
  }
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.conv.weights.size() + layer.conv.bias.size();
  return n;
}

std::vector<std::pair<Stage, Shape3>> activation_shapes(const NetConfig& cfg) {
  std::vector<std::pair<Stage, Shape3>> out;
  for (const auto& layer : plan_layers(cfg)) out.emplace_back(layer.stage, layer.out_shape);
  return out;
}

Network build_scnet(const NetConfig& cfg, std::uint64_t init_seed) {
  Network net{cfg, {}};
  for (auto& planned : plan_layers(cfg)) {
    NetworkLayer layer{planned.stage, ConvLayer(planned.kind, planned.in_channels, planned.out_channels),
                       planned.stage == Stage::Output ? Activation::kLogistic : Activation::kRelu,
                       std::move(planned.skips)};
    net.layers.push_back(std::move(layer));
  }
  init_params(net, init_seed);
  return net;
}

void init_params(Network& net, std::uint64_t seed) {
  Rng rng(mix_seed(seed));
  for (auto& layer : net.layers) {
    const double fan_in = static_cast<double>(layer.conv.in_channels * 9);
    const double bound = std::sqrt(6.0 / fan_in);  // uniform(-b, b) has variance b^2 / 3
    for (double& w : layer.conv.weights) w = static_cast<double>(static_cast<float>(rng.uniform(-bound, bound)));
    std::fill(layer.conv.bias.begin(), layer.conv.bias.end(), 0.0);
  }
}

FeatureMap conv2d_direct(const FeatureMap& input, const ConvLayer& layer) {
  if (layer.kind == LayerKind::kUp) throw ArgumentError("conv2d_direct: up layers go through upconv");
  require_shape(input, layer.in_channels, "conv2d_direct");
  return convolve(input, layer);
}

FeatureMap upsample_nearest(const FeatureMap& input) {
  FeatureMap out(input.channels(), input.height() * 2, input.width() * 2);
  for (std::size_t c = 0; c < input.channels(); ++c) {
    for (std::size_t y = 0; y < out.height(); ++y) {
      for (std::size_t x = 0; x < out.width(); ++x) out.at(c, y, x) = input.at(c, y / 2, x / 2);
    }
  }
  return out;
}

FeatureMap upconv(const FeatureMap& input, const ConvLayer& layer) {
  if (layer.kind != LayerKind::kUp) throw ArgumentError("upconv: layer kind must be up");
  require_shape(input, layer.in_channels, "upconv");
  return convolve(upsample_nearest(input), layer);
}

FeatureMap concat_skip(const FeatureMap& decoder, const FeatureMap& encoder) {
  if (decoder.height() != encoder.height() || decoder.width() != encoder.width()) {
    throw ArgumentError("concat_skip: spatial dimensions differ (" + to_string(decoder.shape()) + " vs " +
                        to_string(encoder.shape()) + ")");
  }
  std::vector<double> values;
  values.reserve(decoder.size() + encoder.size());
  values.insert(values.end(), decoder.values().begin(), decoder.values().end());
  values.insert(values.end(), encoder.values().begin(), encoder.values().end());
  return FeatureMap({decoder.channels() + encoder.channels(), decoder.height(), decoder.width()}, std::move(values));
}

void conv2d_backward(const FeatureMap& input, const ConvLayer& layer, const FeatureMap& grad_output,
                     LayerGradient& grad, FeatureMap* grad_input) {
  // `input` is the tensor the stride-1/2 convolution saw (already upsampled for up layers).
  const std::size_t stride = layer.kind == LayerKind::kDown ? 2 : 1;
  const std::size_t h = input.height();
  const std::size_t w = input.width();
  const std::size_t oh = grad_output.height();
  const std::size_t ow = grad_output.width();
  if (grad_output.channels() != layer.out_channels) throw ArgumentError("conv2d_backward: gradient channel mismatch");
  if (grad_input != nullptr && grad_input->shape() != input.shape()) *grad_input = FeatureMap(input.channels(), h, w);

  for (std::size_t o = 0; o < layer.out_channels; ++o) {
    const auto g = grad_output.plane(o);
    double bias_acc = 0.0;
    for (double v : g) bias_acc += v;
    grad.bias[o] += bias_acc;
    for (std::size_t i = 0; i < layer.in_channels; ++i) {
      const auto src = input.plane(i);
      double* gin = grad_input != nullptr ? grad_input->plane(i).data() : nullptr;
      for (std::size_t ky = 0; ky < 3; ++ky) {
        const auto [ylo, yhi] = valid_range(oh, h, stride, ky);
        for (std::size_t kx = 0; kx < 3; ++kx) {
          const auto [xlo, xhi] = valid_range(ow, w, stride, kx);
          const double wv = layer.weight(o, i, ky, kx);
          double acc = 0.0;
          for (std::size_t y = ylo; y < yhi; ++y) {
            const std::size_t in_off = (y * stride + ky - 1) * w;
            const double* g_row = g.data() + y * ow;
            if (stride == 1) {
              const double* in_shift = src.data() + in_off + kx - 1;
              for (std::size_t x = xlo; x < xhi; ++x) acc += g_row[x] * in_shift[x];
              if (gin != nullptr) {
                double* gin_shift = gin + in_off + kx - 1;
                for (std::size_t x = xlo; x < xhi; ++x) gin_shift[x] += wv * g_row[x];
              }
            } else {
              for (std::size_t x = xlo; x < xhi; ++x) acc += g_row[x] * src[in_off + 2 * x + kx - 1];
              if (gin != nullptr) {
                for (std::size_t x = xlo; x < xhi; ++x) gin[in_off + 2 * x + kx - 1] += wv * g_row[x];
              }
            }
          }
          grad.weights[((o * layer.in_channels + i) * 3 + ky) * 3 + kx] += acc;
        }
      }
    }
  }
}

FeatureMap forward(const Network& net, const FeatureMap& input, ForwardTrace& trace) {
  const std::size_t n = net.config.input_size;
  if (input.channels() != 1 || input.height() != n || input.width() != n) {
    throw ArgumentError("forward: expected input 1x" + std::to_string(n) + "x" + std::to_string(n) + ", got " +
                        to_string(input.shape()));
  }
  trace.input = input;
  trace.conv_inputs.clear();
  trace.outputs.clear();
  trace.conv_inputs.reserve(net.layers.size());
  trace.outputs.reserve(net.layers.size());

  std::map<Stage, std::size_t> index;
  const FeatureMap* current = &trace.input;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const auto& layer = net.layers[li];
    FeatureMap conv_in = *current;
    for (Stage s : layer.skip_sources) conv_in = concat_skip(conv_in, trace.outputs[index.at(s)]);
    require_shape(conv_in, layer.conv.in_channels, "forward");
    if (layer.conv.kind == LayerKind::kUp) conv_in = upsample_nearest(conv_in);
    FeatureMap out = convolve(conv_in, layer.conv);
    if (layer.activation == Activation::kRelu) {
      for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
    } else {
      for (double& v : out.values()) v = logistic(v);
    }
    trace.conv_inputs.push_back(std::move(conv_in));
    trace.outputs.push_back(std::move(out));
    index[layer.stage] = li;
    current = &trace.outputs.back();
  }
  return trace.outputs.back();
}

FeatureMap forward(const Network& net, const FeatureMap& input) {
  ForwardTrace trace;
  return forward(net, input, trace);
}

NetworkGradients zero_gradients(const Network& net) {
  NetworkGradients grads;
  grads.layers.reserve(net.layers.size());
  for (const auto& layer : net.layers) {
    grads.layers.push_back({std::vector<double>(layer.conv.weights.size(), 0.0),
                            std::vector<double>(layer.conv.bias.size(), 0.0)});
  }
  return grads;
}

NetworkGradients backward(const Network& net, const ForwardTrace& trace, const FeatureMap& output_grad) {
  if (trace.outputs.size() != net.layers.size()) throw ArgumentError("backward: trace does not match network");
  if (output_grad.shape() != trace.outputs.back().shape()) {
    throw ArgumentError("backward: output gradient shape " + to_string(output_grad.shape()) +
                        " does not match output " + to_string(trace.outputs.back().shape()));
  }
  NetworkGradients grads = zero_gradients(net);

  std::map<Stage, std::size_t> index;
  for (std::size_t li = 0; li < net.layers.size(); ++li) index[net.layers[li].stage] = li;

  // d loss / d (post-activation output) per layer; skip gradients accumulate into encoder entries.
  std::vector<FeatureMap> out_grads(net.layers.size());
  out_grads.back() = output_grad;
  FeatureMap input_grad(trace.input.channels(), trace.input.height(), trace.input.width());

  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const auto& layer = net.layers[li];
    FeatureMap& g = out_grads[li];
    if (g.size() == 0) g = FeatureMap(trace.outputs[li].channels(), trace.outputs[li].height(), trace.outputs[li].width());
    const auto out = trace.outputs[li].values();
    auto gv = g.values();
    if (layer.activation == Activation::kRelu) {
      for (std::size_t k = 0; k < gv.size(); ++k) gv[k] = out[k] > 0.0 ? gv[k] : 0.0;
    } else {
      for (std::size_t k = 0; k < gv.size(); ++k) gv[k] *= out[k] * (1.0 - out[k]);
    }

    FeatureMap conv_in_grad;
    conv2d_backward(trace.conv_inputs[li], layer.conv, g, grads.layers[li], &conv_in_grad);
    if (layer.conv.kind == LayerKind::kUp) conv_in_grad = downsample_sum(conv_in_grad);

    // Split [previous | skip_0 | skip_1 ...] channel blocks.
    const std::size_t plane = conv_in_grad.height() * conv_in_grad.width();
    std::size_t offset = conv_in_grad.channels();
    for (auto it = layer.skip_sources.rbegin(); it != layer.skip_sources.rend(); ++it) {
      const std::size_t src = index.at(*it);
      const std::size_t c = trace.outputs[src].channels();
      offset -= c;
      FeatureMap& target = out_grads[src];
      if (target.size() == 0) target = FeatureMap(c, trace.outputs[src].height(), trace.outputs[src].width());
      add_into(target, conv_in_grad.values().subspan(offset * plane, c * plane));
    }
    FeatureMap& prev = li == 0 ? input_grad : out_grads[li - 1];
    if (li > 0 && prev.size() == 0) {
      prev = FeatureMap(trace.outputs[li - 1].channels(), trace.outputs[li - 1].height(), trace.outputs[li - 1].width());
    }
    add_into(prev, conv_in_grad.values().subspan(0, offset * plane));
  }
  grads.input = std::move(input_grad);
  return grads;
}

NetworkGradients backward(const Network& net, const FeatureMap& input, const FeatureMap& output_grad) {
  ForwardTrace trace;
  forward(net, input, trace);
  return backward(net, trace, output_grad);
}

std::vector<double> flatten_parameters(const Network& net) {
  std::vector<double> flat;
  flat.reserve(net.parameter_count());
  for (const auto& layer : net.layers) {
    flat.insert(flat.end(), layer.conv.weights.begin(), layer.conv.weights.end());
    flat.insert(flat.end(), layer.conv.bias.begin(), layer.conv.bias.end());
  }
  return flat;
}

void assign_parameters(Network& net, std::span<const double> flat) {
  if (flat.size() != net.parameter_count()) throw ArgumentError("parameter vector length mismatch");
  std::size_t k = 0;
  for (auto& layer : net.layers) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(k), layer.conv.weights.size(), layer.conv.weights.begin());
    k += layer.conv.weights.size();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(k), layer.conv.bias.size(), layer.conv.bias.begin());
    k += layer.conv.bias.size();
  }
}

std::vector<double> flatten_gradients(const NetworkGradients& grads) {
  std::vector<double> flat;
  for (const auto& layer : grads.layers) {
    flat.insert(flat.end(), layer.weights.begin(), layer.weights.end());
    flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
  }
  return flat;
}

}  // namespace sketchclean
