#include "sketchclean/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "sketchclean/errors.hpp"

namespace sketchclean {

namespace {

void require_same_shape(const SketchRaster& a, const SketchRaster& b, const char* what) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw ArgumentError(std::string(what) + ": raster shapes differ");
  }
  if (a.empty()) throw ArgumentError(std::string(what) + ": empty raster");
}

constexpr std::size_t kWindow = 11;
constexpr double kWindowSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::vector<double> ssim_window() {
  std::vector<double> w(kWindow * kWindow);
  const double centre = (kWindow - 1) / 2.0;
  double sum = 0.0;
  for (std::size_t r = 0; r < kWindow; ++r) {
    for (std::size_t c = 0; c < kWindow; ++c) {
      const double dy = static_cast<double>(r) - centre;
      const double dx = static_cast<double>(c) - centre;
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * kWindowSigma * kWindowSigma));
      w[r * kWindow + c] = v;
      sum += v;
    }
  }
  for (double& v : w) v /= sum;
  return w;
}

nlohmann::json psnr_json(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

}  // namespace

double mse(const SketchRaster& a, const SketchRaster& b) {
  require_same_shape(a, b, "mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.values()[i] - b.values()[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double l1(const SketchRaster& a, const SketchRaster& b) {
  require_same_shape(a, b, "l1");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a.values()[i] - b.values()[i]);
  return acc / static_cast<double>(a.size());
}

double psnr_from_mse(double mse_value) {
  if (mse_value == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse_value);
}

double psnr(const SketchRaster& a, const SketchRaster& b) { return psnr_from_mse(mse(a, b)); }

double ssim(const SketchRaster& a, const SketchRaster& b) {
  require_same_shape(a, b, "ssim");
  if (a.height() < kWindow || a.width() < kWindow) throw ArgumentError("ssim: raster smaller than the 11x11 window");
  static const std::vector<double> window = ssim_window();
  const std::size_t rows = a.height() - kWindow + 1;
  const std::size_t cols = a.width() - kWindow + 1;
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      double mu_a = 0.0, mu_b = 0.0, e_aa = 0.0, e_bb = 0.0, e_ab = 0.0;
      for (std::size_t i = 0; i < kWindow; ++i) {
        for (std::size_t j = 0; j < kWindow; ++j) {
          const double w = window[i * kWindow + j];
          const double va = a.at(r + i, c + j);
          const double vb = b.at(r + i, c + j);
          mu_a += w * va;
          mu_b += w * vb;
          e_aa += w * (va * va);
          e_bb += w * (vb * vb);
          e_ab += w * (va * vb);
        }
      }
      const double var_a = e_aa - mu_a * mu_a;
      const double var_b = e_bb - mu_b * mu_b;
      const double cov = e_ab - mu_a * mu_b;
      const double num = (2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2);
      const double den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
      total += num / den;
    }
  }
  return total / static_cast<double>(rows * cols);
}

FeatureMap to_ink_feature(const SketchRaster& raster) {
  FeatureMap out(1, raster.height(), raster.width());
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 - raster.values()[i];
  return out;
}

double bdcn_metric(const SketchRaster& prediction, const SketchRaster& truth, const LossConfig& cfg) {
  require_same_shape(prediction, truth, "bdcn_metric");
  return bdcn_loss(to_ink_feature(prediction), to_ink_feature(truth), cfg).value;
}

MetricReport measure_pair(const SketchRaster& prediction, const SketchRaster& truth, const LossConfig& cfg) {
  MetricReport r;
  r.mse = mse(prediction, truth);
  r.l1 = l1(prediction, truth);
  r.bdcn_loss = bdcn_metric(prediction, truth, cfg);
  r.psnr = psnr_from_mse(r.mse);
  r.ssim = ssim(prediction, truth);
  r.n_pairs = 1;
  r.psnr_infinite_count = std::isinf(r.psnr) ? 1 : 0;
  return r;
}

MetricReport aggregate(std::span<const MetricReport> reports) {
  if (reports.empty()) throw ArgumentError("aggregate: no reports");
  // Terms are summed in sorted order so the mean does not depend on list order.
  const auto ordered_sum = [](std::vector<double> terms) {
    std::sort(terms.begin(), terms.end());
    double acc = 0.0;
    for (double t : terms) acc += t;
    return acc;
  };
  std::vector<double> mse_terms, l1_terms, bdcn_terms, ssim_terms, psnr_terms;
  MetricReport out;
  double psnr_weight = 0.0;
  for (const auto& r : reports) {
    const std::size_t count = std::max<std::size_t>(r.n_pairs, 1);
    const double n = static_cast<double>(count);
    mse_terms.push_back(n * r.mse);
    l1_terms.push_back(n * r.l1);
    bdcn_terms.push_back(n * r.bdcn_loss);
    ssim_terms.push_back(n * r.ssim);
    out.n_pairs += count;
    out.psnr_infinite_count += r.psnr_infinite_count;
    const double finite_n = n - static_cast<double>(r.psnr_infinite_count);
    if (!std::isinf(r.psnr) && finite_n > 0.0) {
      psnr_terms.push_back(finite_n * r.psnr);
      psnr_weight += finite_n;
    }
  }
  const double total = static_cast<double>(out.n_pairs);
  out.mse = ordered_sum(std::move(mse_terms)) / total;
  out.l1 = ordered_sum(std::move(l1_terms)) / total;
  out.bdcn_loss = ordered_sum(std::move(bdcn_terms)) / total;
  out.ssim = ordered_sum(std::move(ssim_terms)) / total;
  out.psnr = psnr_weight > 0.0 ? ordered_sum(std::move(psnr_terms)) / psnr_weight
                               : std::numeric_limits<double>::infinity();
  return out;
}

std::string metrics_csv(std::span<const NamedReport> rows) {
  std::ostringstream out;
  out.precision(10);
  out << "id,mse,l1,bdcn_loss,psnr,ssim\n";
  for (const auto& row : rows) {
    out << row.id << ',' << row.report.mse << ',' << row.report.l1 << ',' << row.report.bdcn_loss << ',';
    if (std::isinf(row.report.psnr)) {
      out << "inf";
    } else {
      out << row.report.psnr;
    }
    out << ',' << row.report.ssim << '\n';
  }
  return out.str();
}

std::string metrics_summary_json(const MetricReport& summary) {
  nlohmann::json j = {{"mse", summary.mse},
                      {"l1", summary.l1},
                      {"bdcn_loss", summary.bdcn_loss},
                      {"psnr", psnr_json(summary.psnr)},
                      {"ssim", summary.ssim},
                      {"n_pairs", summary.n_pairs},
                      {"psnr_infinite_count", summary.psnr_infinite_count}};
  return j.dump(2);
}

}  // namespace sketchclean
