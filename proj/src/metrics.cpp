// Copyright 2026 The xrf Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
#include "xrf/metrics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "xrf/drr.hpp"
#include "xrf/image_io.hpp"
#include "xrf/plot.hpp"
#include "xrf/rng.hpp"

namespace xrf::metrics {

namespace {

using Dense = Eigen::MatrixXd;

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("metric inputs must be non-empty and equally sized");
  }
}

Dense covariance(const Matrix& x, const Eigen::RowVectorXd& mu, CovarianceMode mode) {
  const Dense centred = x.rowwise() - mu;
  const double denom = mode == CovarianceMode::kSample ? static_cast<double>(x.rows() - 1)
                                                       : static_cast<double>(x.rows());
  return (centred.transpose() * centred) / denom;
}

Dense psd_sqrt(const Dense& m) {
  Eigen::SelfAdjointEigenSolver<Dense> es(0.5 * (m + m.transpose()));
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double kernel(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& y, double dim) {
  const double k = x.dot(y) / dim + 1.0;
  return k * k * k;
}

std::vector<std::size_t> draw_without_replacement(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.uniform_index(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace

double psnr(std::span<const double> a, std::span<const double> b, double max_val) {
  check_pair(a, b);
  double sse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sse += (a[i] - b[i]) * (a[i] - b[i]);
  const double mse = sse / static_cast<double>(a.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(max_val * max_val / mse));
}

double ssim(std::span<const double> a, std::span<const double> b, int height, int width,
            const SsimOptions& opts) {
  check_pair(a, b);
  if (static_cast<std::size_t>(height) * width != a.size()) {
    throw std::invalid_argument("ssim: image size does not match height x width");
  }
  if (opts.window < 1 || !(opts.sigma > 0.0)) throw std::invalid_argument("ssim: bad window");
  const int r = opts.window / 2;
  std::vector<double> g(static_cast<std::size_t>(2 * r + 1));
  for (int k = -r; k <= r; ++k) g[k + r] = std::exp(-(k * k) / (2.0 * opts.sigma * opts.sigma));
  const double c1 = (opts.k1 * opts.max_val) * (opts.k1 * opts.max_val);
  const double c2 = (opts.k2 * opts.max_val) * (opts.k2 * opts.max_val);
  auto px = [&](std::span<const double> img, int y, int x) {
    return img[static_cast<std::size_t>(y) * width + x];
  };
  double total = 0.0;
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      double wsum = 0.0, ma = 0.0, mb = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        const int y = i + dy;
        if (y < 0 || y >= height) continue;
        for (int dx = -r; dx <= r; ++dx) {
          const int x = j + dx;
          if (x < 0 || x >= width) continue;
          const double w = g[dy + r] * g[dx + r];
          wsum += w;
          ma += w * px(a, y, x);
          mb += w * px(b, y, x);
        }
      }
      ma /= wsum;
      mb /= wsum;
      double va = 0.0, vb = 0.0, cov = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        const int y = i + dy;
        if (y < 0 || y >= height) continue;
        for (int dx = -r; dx <= r; ++dx) {
          const int x = j + dx;
          if (x < 0 || x >= width) continue;
          const double w = g[dy + r] * g[dx + r];
          const double da = px(a, y, x) - ma;
          const double db = px(b, y, x) - mb;
          va += w * (da * da);
          vb += w * (db * db);
          cov += w * (da * db);
        }
      }
      va /= wsum;
      vb /= wsum;
      cov /= wsum;
      total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
  }
  return total / (static_cast<double>(height) * width);
}

double fid(const Matrix& real, const Matrix& fake, CovarianceMode mode) {
  if (real.rows() < 2 || fake.rows() < 2) throw std::invalid_argument("fid: need at least 2 samples per set");
  if (real.cols() != fake.cols()) throw std::invalid_argument("fid: feature dimensions differ");
  const Eigen::RowVectorXd mu_r = real.colwise().mean();
  const Eigen::RowVectorXd mu_f = fake.colwise().mean();
  const Dense cov_r = covariance(real, mu_r, mode);
  const Dense cov_f = covariance(fake, mu_f, mode);
  const Dense root_r = psd_sqrt(cov_r);
  const Dense inner = root_r * cov_f * root_r;
  Eigen::SelfAdjointEigenSolver<Dense> es(0.5 * (inner + inner.transpose()), Eigen::EigenvaluesOnly);
  double trace_sqrt = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double ev = es.eigenvalues()[i];
    if (ev < -1e-6) throw std::runtime_error("fid: covariance product is not positive semidefinite");
    trace_sqrt += std::sqrt(std::max(ev, 0.0));
  }
  const double mean_term = (mu_r - mu_f).squaredNorm();
  return mean_term + cov_r.trace() + cov_f.trace() - 2.0 * trace_sqrt;
}

KidResult kid(const Matrix& real, const Matrix& fake, int subset_size, int n_subsets,
              std::uint64_t seed) {
  if (subset_size < 2) throw std::invalid_argument("kid: subset_size must be >= 2");
  if (n_subsets < 1) throw std::invalid_argument("kid: n_subsets must be >= 1");
  if (real.cols() != fake.cols()) throw std::invalid_argument("kid: feature dimensions differ");
  if (real.rows() < subset_size || fake.rows() < subset_size) {
    throw std::invalid_argument("kid: subset_size exceeds the number of samples");
  }
  const double dim = static_cast<double>(real.cols());
  const double m = subset_size;
  Rng rng(seed);
  std::vector<double> values;
  for (int s = 0; s < n_subsets; ++s) {
    const auto ir = draw_without_replacement(rng, static_cast<std::size_t>(real.rows()), subset_size);
    const auto jf = draw_without_replacement(rng, static_cast<std::size_t>(fake.rows()), subset_size);
    double kxx = 0.0, kyy = 0.0, kxy = 0.0;
    for (int i = 0; i < subset_size; ++i) {
      const Eigen::RowVectorXd xi = real.row(static_cast<Eigen::Index>(ir[i]));
      const Eigen::RowVectorXd yi = fake.row(static_cast<Eigen::Index>(jf[i]));
      for (int j = 0; j < subset_size; ++j) {
        const Eigen::RowVectorXd xj = real.row(static_cast<Eigen::Index>(ir[j]));
        const Eigen::RowVectorXd yj = fake.row(static_cast<Eigen::Index>(jf[j]));
        if (i != j) {
          kxx += kernel(xi, xj, dim);
          kyy += kernel(yi, yj, dim);
        }
        kxy += kernel(xi, yj, dim);
      }
    }
    values.push_back(kxx / (m * (m - 1)) + kyy / (m * (m - 1)) - 2.0 * kxy / (m * m));
  }
  KidResult r;
  r.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  double var = 0.0;
  for (double v : values) var += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(var / values.size());
  return r;
}

MetricReport evaluate_stack(const std::filesystem::path& pred_manifest,
                            const std::filesystem::path& ref_manifest,
                            const objective::FeatureExtractor& fx, const EvalOptions& opts) {
  const drr::DatasetManifest pm = drr::load_manifest(pred_manifest);
  const drr::DatasetManifest rm = drr::load_manifest(ref_manifest);
  if (pm.height != rm.height || pm.width != rm.width) {
    throw std::invalid_argument("evaluate_stack: prediction and reference resolutions differ");
  }
  const auto pred = drr::load_views(pm, pred_manifest.parent_path());
  const auto ref = drr::load_views(rm, ref_manifest.parent_path());
  const int h = rm.height;
  const int w = rm.width;

  MetricReport report;
  report.n_pred = pred.size();
  report.n_ref = ref.size();
  report.extractor = fx.descriptor();
  Matrix ref_images(static_cast<Eigen::Index>(ref.size()), h * w);
  Matrix pred_images(static_cast<Eigen::Index>(ref.size()), h * w);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const auto& r = ref[i];
    auto match = std::find_if(pred.begin(), pred.end(), [&](const drr::RadiographImage& p) {
      return std::abs(p.pose.theta_deg - r.pose.theta_deg) < 1e-6;
    });
    if (match == pred.end()) {
      throw std::runtime_error("evaluate_stack: prediction has no view at theta = " +
                               std::to_string(r.pose.theta_deg) + " deg");
    }
    std::vector<double> a(r.pixels.size()), b(r.pixels.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      a[k] = std::round(match->pixels[k] * 255.0);
      b[k] = std::round(r.pixels[k] * 255.0);
      pred_images(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = match->pixels[k];
      ref_images(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = r.pixels[k];
    }
    ViewMetrics vm;
    vm.theta_deg = r.pose.theta_deg;
    vm.psnr = psnr(a, b, 255.0);
    vm.ssim = ssim(a, b, h, w);
    report.views.push_back(vm);
  }
  double sp = 0.0, ss = 0.0;
  for (const auto& v : report.views) {
    sp += v.psnr;
    ss += v.ssim;
  }
  report.mean_psnr = sp / report.views.size();
  report.mean_ssim = ss / report.views.size();

  const Matrix fr = objective::pooled_features(fx, ref_images, h, w);
  const Matrix ff = objective::pooled_features(fx, pred_images, h, w);
  if (fr.rows() >= 2) {
    report.fid = fid(fr, ff, opts.covariance);
    const int subset = std::min<int>(opts.kid_subset_size, static_cast<int>(fr.rows()));
    if (subset >= 2) report.kid = kid(fr, ff, subset, opts.kid_subsets, opts.seed);
  }
  return report;
}

void write_report(const MetricReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  nlohmann::json j;
  j["note"] =
      "FID/KID use features from " + report.extractor +
      "; values are comparable between runs of this tool only, not with Inception-based scores.";
  j["feature_extractor"] = report.extractor;
  j["n_pred"] = report.n_pred;
  j["n_ref"] = report.n_ref;
  j["mean_psnr_db"] = report.mean_psnr;
  j["mean_ssim"] = report.mean_ssim;
  j["fid"] = report.fid;
  j["kid_mean"] = report.kid.mean;
  j["kid_std"] = report.kid.std;
  j["views"] = nlohmann::json::array();
  for (const auto& v : report.views) {
    j["views"].push_back({{"theta_deg", v.theta_deg}, {"psnr_db", v.psnr}, {"ssim", v.ssim}});
  }
  std::ofstream(out_dir / "report.json") << j.dump(2) << '\n';
  std::ofstream csv(out_dir / "per_view.csv");
  csv.precision(17);
  csv << "theta_deg,psnr_db,ssim\n";
  std::vector<double> xs, ys;
  for (const auto& v : report.views) {
    csv << v.theta_deg << ',' << v.psnr << ',' << v.ssim << '\n';
    xs.push_back(v.theta_deg);
    ys.push_back(v.psnr);
  }
  if (xs.size() >= 2) plot::write_line_plot(out_dir / "psnr_by_angle.png", {{xs, ys}});
}

}  // namespace xrf::metrics
