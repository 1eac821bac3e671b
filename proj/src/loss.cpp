#include "sketchclean/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sketchclean/errors.hpp"

namespace sketchclean {

namespace {

void require_same_shape(const FeatureMap& a, const FeatureMap& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ArgumentError(std::string(what) + ": shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

// Standard normal CDF of (x - mean) / sigma.
double normal_cdf(double x, double mean, double sigma) {
  return 0.5 * std::erfc(-(x - mean) / (sigma * std::numbers::sqrt2));
}

}  // namespace

void LossConfig::validate() const {
  if (!(lambda_bal > 0.0)) throw ConfigError("lambda_bal must be positive");
  if (!(pos_threshold >= 0.0 && pos_threshold <= 1.0)) throw ConfigError("pos_threshold must lie in [0,1]");
  if (num_bins < 2) throw ConfigError("num_bins must be at least 2");
  if (!(kde_sigma > 0.0)) throw ConfigError("kde_sigma must be positive");
  if (!(lambda1 >= 0.0 && lambda2 >= 0.0) || !(lambda1 + lambda2 > 0.0)) {
    throw ConfigError("lambda1, lambda2 must be non-negative with a positive sum");
  }
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw ConfigError("epsilon must lie in (0, 0.5)");
}

bool is_positive(double y, const LossConfig& cfg) { return (1.0 - y) < cfg.pos_threshold; }

BalanceWeights class_balance_weights(const FeatureMap& y, const LossConfig& cfg) {
  BalanceWeights w;
  for (double v : y.values()) {
    if (is_positive(v, cfg)) {
      ++w.positives;
    } else {
      ++w.negatives;
    }
  }
  const double total = static_cast<double>(w.positives + w.negatives);
  if (total == 0.0) return w;
  w.alpha = cfg.lambda_bal * static_cast<double>(w.positives) / total;
  w.beta = static_cast<double>(w.negatives) / total;
  return w;
}

LossValue bdcn_loss(const FeatureMap& yhat, const FeatureMap& y, const LossConfig& cfg) {
  require_same_shape(yhat, y, "bdcn_loss");
  const BalanceWeights w = class_balance_weights(y, cfg);
  LossValue out{0.0, FeatureMap(yhat.channels(), yhat.height(), yhat.width())};
  const auto p = yhat.values();
  const auto t = y.values();
  auto g = out.gradient.values();
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double q = std::clamp(p[j], cfg.epsilon, 1.0 - cfg.epsilon);
    if (is_positive(t[j], cfg)) {
      out.value -= w.beta * std::log(q);
      g[j] = -w.beta / q;
    } else {
      out.value -= w.alpha * std::log(1.0 - q);
      g[j] = w.alpha / (1.0 - q);
    }
  }
  return out;
}

KdeDensity::KdeDensity(const FeatureMap& y, double sigma) : samples_(y.values().begin(), y.values().end()), sigma_(sigma) {
  if (!(sigma > 0.0)) throw ArgumentError("kde sigma must be positive");
}

double KdeDensity::operator()(double g) const {
  if (samples_.empty()) return 0.0;
  const double norm = 1.0 / (sigma_ * std::sqrt(2.0 * std::numbers::pi));
  double acc = 0.0;
  for (double v : samples_) {
    const double z = v - g;
    acc += norm * std::exp(-(z * z) / (2.0 * sigma_ * sigma_));
  }
  return acc / static_cast<double>(samples_.size());
}

KdeDensity kde_density(const FeatureMap& y, double sigma) { return KdeDensity(y, sigma); }

std::vector<double> pixel_bin_masses(double intensity, std::size_t num_bins, double sigma) {
  std::vector<double> masses(num_bins);
  double previous = normal_cdf(0.0, intensity, sigma);
  double total = 0.0;
  for (std::size_t k = 0; k < num_bins; ++k) {
    const double edge = static_cast<double>(k + 1) / static_cast<double>(num_bins);
    const double cdf = normal_cdf(edge, intensity, sigma);
    masses[k] = std::max(cdf - previous, 0.0);
    total += masses[k];
    previous = cdf;
  }
  if (total > 0.0) {
    for (double& m : masses) m /= total;
  }
  return masses;
}

std::vector<double> bin_probabilities(const FeatureMap& y, const LossConfig& cfg) {
  if (cfg.num_bins < 2) throw ArgumentError("num_bins must be at least 2");
  if (!(cfg.kde_sigma > 0.0)) throw ArgumentError("kde_sigma must be positive");
  std::vector<double> hist(cfg.num_bins, 0.0);
  for (double v : y.values()) {
    // Raw (untruncated) per-pixel bin integrals; truncation is applied once to the average.
    double previous = normal_cdf(0.0, v, cfg.kde_sigma);
    for (std::size_t k = 0; k < cfg.num_bins; ++k) {
      const double cdf = normal_cdf(static_cast<double>(k + 1) / static_cast<double>(cfg.num_bins), v, cfg.kde_sigma);
      hist[k] += std::max(cdf - previous, 0.0);
      previous = cdf;
    }
  }
  double total = 0.0;
  for (double& h : hist) {
    h /= static_cast<double>(std::max<std::size_t>(y.size(), 1));
    total += h;
  }
  if (total > 0.0) {
    for (double& h : hist) h /= total;
  }
  return hist;
}

PmaxResult pixel_pmax(double intensity, std::size_t num_bins, double sigma) {
  const auto masses = pixel_bin_masses(intensity, num_bins, sigma);
  const double best = *std::max_element(masses.begin(), masses.end());
  for (std::size_t k = 0; k < masses.size(); ++k) {
    if (masses[k] >= best - 1e-12) return {masses[k], k};
  }
  return {best, 0};
}

FeatureMap pmax_weights(const FeatureMap& y, const LossConfig& cfg) {
  FeatureMap out(y.channels(), y.height(), y.width());
  const auto t = y.values();
  auto w = out.values();
  // Targets are usually near-binary; cache by exact intensity.
  double last_v = std::numeric_limits<double>::quiet_NaN();
  double last_w = 0.0;
  for (std::size_t j = 0; j < t.size(); ++j) {
    if (t[j] != last_v) {
      last_v = t[j];
      last_w = pixel_pmax(t[j], cfg.num_bins, cfg.kde_sigma).weight;
    }
    w[j] = last_w;
  }
  return out;
}

LossValue kde_loss(const FeatureMap& yhat, const FeatureMap& y, const FeatureMap& weights, const LossConfig& cfg) {
  require_same_shape(yhat, y, "kde_loss");
  require_same_shape(weights, y, "kde_loss");
  LossValue out{0.0, FeatureMap(yhat.channels(), yhat.height(), yhat.width())};
  const auto p = yhat.values();
  const auto t = y.values();
  const auto pm = weights.values();
  auto g = out.gradient.values();
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (!is_positive(t[j], cfg)) continue;
    const double q = std::clamp(p[j], cfg.epsilon, 1.0 - cfg.epsilon);
    out.value -= pm[j] * std::log(q);
    g[j] = -pm[j] / q;
  }
  return out;
}

LossValue combined_loss(const FeatureMap& yhat, const FeatureMap& y, const LossConfig& cfg) {
  require_same_shape(yhat, y, "combined_loss");
  LossValue l1 = bdcn_loss(yhat, y, cfg);
  const LossValue l2 = kde_loss(yhat, y, pmax_weights(y, cfg), cfg);
  LossValue out{cfg.lambda1 * l1.value + cfg.lambda2 * l2.value, std::move(l1.gradient)};
  auto g = out.gradient.values();
  const auto g2 = l2.gradient.values();
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = cfg.lambda1 * g[j] + cfg.lambda2 * g2[j];
  return out;
}

}  // namespace sketchclean
