#pragma once

#include <cstddef>
#include <vector>

#include "sketchclean/model.hpp"

namespace sketchclean {

/// Hyperparameters of the class-balanced and KDE-weighted cross-entropies.
struct LossConfig {
  double lambda_bal = 1.1;     // weight of positives over negatives in the balance term
  double pos_threshold = 0.5;  // white-background intensity below which a pixel is ink
  std::size_t num_bins = 10;
  double kde_sigma = 0.05;
  double lambda1 = 0.8;  // balanced cross-entropy
  double lambda2 = 0.2;  // KDE-weighted cross-entropy
  double epsilon = 1e-7;

  /// Throws ConfigError.
  void validate() const;
  bool operator==(const LossConfig&) const = default;
};

/// Scalar loss and its gradient with respect to the predictions.
struct LossValue {
  double value = 0.0;
  FeatureMap gradient;
};

struct BalanceWeights {
  double alpha = 0.0;  // applied to negatives
  double beta = 0.0;   // applied to positives
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

// All ground truths `y` below are targets in ink=1 polarity. A pixel is
// positive when its white-background intensity 1 - y is below pos_threshold.

bool is_positive(double y, const LossConfig& cfg);

BalanceWeights class_balance_weights(const FeatureMap& y, const LossConfig& cfg);

/// -alpha * sum_neg log(1 - yhat) - beta * sum_pos log(yhat), yhat clamped to [eps, 1 - eps].
LossValue bdcn_loss(const FeatureMap& yhat, const FeatureMap& y, const LossConfig& cfg);

/// Image-level Gaussian kernel density of the ground-truth intensities.
class KdeDensity {
 public:
  KdeDensity(const FeatureMap& y, double sigma);
  double operator()(double g) const;

 private:
  std::vector<double> samples_;
  double sigma_;
};

KdeDensity kde_density(const FeatureMap& y, double sigma);

/// Kernel mass of one intensity in each of K equal bins over [0,1], truncated
/// to [0,1] and renormalized to sum to 1.
std::vector<double> pixel_bin_masses(double intensity, std::size_t num_bins, double sigma);

/// Averaged per-pixel bin integrals of the image KDE, renormalized over [0,1].
std::vector<double> bin_probabilities(const FeatureMap& y, const LossConfig& cfg);

struct PmaxResult {
  double weight = 0.0;
  std::size_t bin = 0;
};

/// Largest bin mass for one intensity; ties (within 1e-12) go to the lower bin.
PmaxResult pixel_pmax(double intensity, std::size_t num_bins, double sigma);

/// Per-pixel P_max field, shape of `y`.
FeatureMap pmax_weights(const FeatureMap& y, const LossConfig& cfg);

/// -sum_g P_max_g * y_g * log(yhat_g) with y binarized at pos_threshold.
LossValue kde_loss(const FeatureMap& yhat, const FeatureMap& y, const FeatureMap& weights, const LossConfig& cfg);

/// lambda1 * bdcn_loss + lambda2 * kde_loss.
LossValue combined_loss(const FeatureMap& yhat, const FeatureMap& y, const LossConfig& cfg);

}  // namespace sketchclean
