#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sketchclean/loss.hpp"
#include "sketchclean/raster.hpp"

namespace sketchclean {

/// Reconstruction quality of one prediction, or the mean over a test set.
struct MetricReport {
  double mse = 0.0;
  double l1 = 0.0;
  double bdcn_loss = 0.0;
  double psnr = 0.0;  // dB; +infinity when mse == 0
  double ssim = 0.0;
  std::size_t n_pairs = 0;
  std::size_t psnr_infinite_count = 0;  // entries excluded from the PSNR mean
};

double mse(const SketchRaster& a, const SketchRaster& b);
double l1(const SketchRaster& a, const SketchRaster& b);
/// Peak 1.0: -10 log10(mse), +infinity for identical rasters.
double psnr(const SketchRaster& a, const SketchRaster& b);
double psnr_from_mse(double mse_value);

/// Mean local SSIM over all valid 11x11 Gaussian (sigma 1.5) windows, C1 = 0.01^2, C2 = 0.03^2.
double ssim(const SketchRaster& a, const SketchRaster& b);

/// Balanced cross-entropy between white-background rasters (converted to ink polarity).
double bdcn_metric(const SketchRaster& prediction, const SketchRaster& truth, const LossConfig& cfg);

FeatureMap to_ink_feature(const SketchRaster& raster);

/// `prediction` and `truth` are white-background rasters.
MetricReport measure_pair(const SketchRaster& prediction, const SketchRaster& truth, const LossConfig& cfg);

/// Per-metric arithmetic mean; infinite PSNRs are excluded from the PSNR mean.
MetricReport aggregate(std::span<const MetricReport> reports);

struct NamedReport {
  std::string id;
  MetricReport report;
};

std::string metrics_csv(std::span<const NamedReport> rows);
std::string metrics_summary_json(const MetricReport& summary);

}  // namespace sketchclean
