// Copyright 2026 The shiftreg Authors.
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_dec_float.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace oracle {

using hp = boost::multiprecision::cpp_dec_float_50;

namespace {

hp hp_log_beta_pdf(hp y, hp a, hp b) {
  using boost::multiprecision::log;
  return (a - 1) * log(y) + (b - 1) * log(1 - y) -
         (boost::math::lgamma(a) + boost::math::lgamma(b) - boost::math::lgamma(a + b));
}

}  // namespace

double log_gamma_hp(double x) { return static_cast<double>(boost::math::lgamma(hp(x))); }

double mixture_nll_hp(const shiftreg::betamix::MixtureParams& p, double y) {
  using boost::multiprecision::exp;
  using boost::multiprecision::log;
  hp s = 0;
  for (std::size_t k = 0; k < p.k(); ++k) {
    s += hp(p.weights[k]) * exp(hp_log_beta_pdf(hp(y), hp(p.alphas[k]), hp(p.betas[k])));
  }
  return static_cast<double>(-log(s));
}

std::pair<double, double> mixture_mean_var_hp(const shiftreg::betamix::MixtureParams& p) {
  // Raw moments: E[y] = a/(a+b), E[y²] = a(a+1)/((a+b)(a+b+1)).
  hp m1 = 0, m2 = 0;
  for (std::size_t k = 0; k < p.k(); ++k) {
    const hp a = p.alphas[k], b = p.betas[k], w = p.weights[k];
    m1 += w * a / (a + b);
    m2 += w * a * (a + 1) / ((a + b) * (a + b + 1));
  }
  return {static_cast<double>(m1), static_cast<double>(m2 - m1 * m1)};
}

double beta_density_integral(double a, double b, std::size_t n) {
  const double lb = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  long double sum = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const double s = std::sin(std::numbers::pi * t / 2.0);
    const double c = std::cos(std::numbers::pi * t / 2.0);
    // y = sin²(πt/2), 1 − y = cos²(πt/2): no cancellation near either end.
    const double ly = 2.0 * std::log(s);
    const double l1y = 2.0 * std::log(c);
    const double jac = 0.5 * std::numbers::pi * std::sin(std::numbers::pi * t);
    sum += std::exp((a - 1.0) * ly + (b - 1.0) * l1y - lb) * jac;
  }
  return static_cast<double>(sum / static_cast<long double>(n));
}

Point point(const std::vector<double>& x, const std::vector<double>& y) {
  long double a = 0, s = 0, b = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double e = static_cast<long double>(x[i]) - y[i];
    a += e < 0 ? -e : e;
    s += e * e;
    b += e;
  }
  const long double n = static_cast<long double>(x.size());
  return {static_cast<double>(a / n), static_cast<double>(std::sqrt(s / n)), static_cast<double>(b / n)};
}

double gaussian_nll(const std::vector<double>& mu, const std::vector<double>& sd, const std::vector<double>& y) {
  long double t = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const long double v = static_cast<long double>(sd[i]) * sd[i];
    const long double r = static_cast<long double>(y[i]) - mu[i];
    t += 0.5L * std::log(2.0L * std::numbers::pi_v<long double> * v) + r * r / (2.0L * v);
  }
  return static_cast<double>(t / static_cast<long double>(y.size()));
}

double normal_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = 0.5 * std::erfc(-mid / std::numbers::sqrt2);
    (cdf < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double interval_sharpness(const std::vector<double>& mu, const std::vector<double>& sd, const std::vector<double>& y,
                          double alpha, double range) {
  const double z = normal_quantile(1.0 - alpha / 2.0);
  long double t = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double l = mu[i] - z * sd[i];
    const double u = mu[i] + z * sd[i];
    long double s = u - l;
    if (y[i] < l) s += 2.0L / alpha * (l - y[i]);
    if (y[i] > u) s += 2.0L / alpha * (y[i] - u);
    t += s;
  }
  return static_cast<double>(t / static_cast<long double>(y.size()) / range);
}

double ace(const std::vector<double>& mu, const std::vector<double>& sd, const std::vector<double>& y,
           const std::vector<double>& levels) {
  long double t = 0;
  for (double p : levels) {
    const double z = normal_quantile(0.5 + p / 2.0);
    int hit = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] >= mu[i] - z * sd[i] && y[i] <= mu[i] + z * sd[i]) ++hit;
    }
    t += static_cast<long double>(hit) / static_cast<long double>(y.size()) - p;
  }
  return static_cast<double>(t / static_cast<long double>(levels.size()));
}

std::vector<std::size_t> ranks(const std::vector<double>& score) {
  std::vector<std::size_t> r(score.size(), 0);
  for (std::size_t i = 0; i < score.size(); ++i) {
    for (std::size_t j = 0; j < score.size(); ++j) {
      if (score[j] < score[i] || (score[j] == score[i] && j < i)) ++r[i];
    }
  }
  return r;
}

double r_auc(const std::vector<double>& mu, const std::vector<double>& y, const std::vector<double>& score) {
  const auto r = ranks(score);
  const std::size_t n = y.size();
  std::vector<long double> curve(n + 1, 0.0L);
  for (std::size_t k = 1; k <= n; ++k) {
    long double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (r[i] < k) s += (static_cast<long double>(mu[i]) - y[i]) * (static_cast<long double>(mu[i]) - y[i]);
    }
    curve[k] = s / static_cast<long double>(k);
  }
  long double area = 0;
  for (std::size_t k = 1; k <= n; ++k) area += (curve[k] + curve[k - 1]) / (2.0L * static_cast<long double>(n));
  return static_cast<double>(area);
}

double f1_at(const std::vector<double>& mu, const std::vector<double>& y, const std::vector<double>& score, double T,
             std::size_t retained) {
  const auto r = ranks(score);
  int tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const bool good = std::fabs(mu[i] - y[i]) < T;
    const bool kept = r[i] < retained;
    if (kept && good) ++tp;
    if (kept && !good) ++fp;
    if (!kept && good) ++fn;
  }
  if (2 * tp + fp + fn == 0) return 1.0;
  return 2.0 * tp / (2.0 * tp + fp + fn);
}

double f1_auc(const std::vector<double>& mu, const std::vector<double>& y, const std::vector<double>& score, double T) {
  const std::size_t n = y.size();
  long double area = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    area += (static_cast<long double>(f1_at(mu, y, score, T, k)) + f1_at(mu, y, score, T, k - 1)) /
            (2.0L * static_cast<long double>(n));
  }
  return static_cast<double>(area);
}

double roc_auc(const std::vector<double>& id, const std::vector<double>& ood) {
  long double c = 0;
  for (double o : ood) {
    for (double i : id) c += o > i ? 1.0L : (o == i ? 0.5L : 0.0L);
  }
  return static_cast<double>(c / (static_cast<long double>(id.size()) * ood.size()));
}

shiftreg::network::Weights finite_difference(const shiftreg::network::Weights& w,
                                             const std::function<double(const shiftreg::network::Weights&)>& f,
                                             double h) {
  auto probe = w;
  auto grad = shiftreg::network::zeros_like(w);
  auto pt = shiftreg::network::tensors(probe);
  auto gt = shiftreg::network::tensors(grad);
  for (std::size_t t = 0; t < pt.size(); ++t) {
    for (Eigen::Index i = 0; i < pt[t].size(); ++i) {
      const double orig = pt[t].data[i];
      pt[t].data[i] = orig + h;
      const double up = f(probe);
      pt[t].data[i] = orig - h;
      const double down = f(probe);
      pt[t].data[i] = orig;
      gt[t].data[i] = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

double max_rel_error(const shiftreg::network::Weights& a, const shiftreg::network::Weights& b, double abs_floor) {
  auto& ma = const_cast<shiftreg::network::Weights&>(a);
  auto& mb = const_cast<shiftreg::network::Weights&>(b);
  const auto ta = shiftreg::network::tensors(ma);
  const auto tb = shiftreg::network::tensors(mb);
  double worst = 0.0;
  for (std::size_t t = 0; t < ta.size(); ++t) {
    for (Eigen::Index i = 0; i < ta[t].size(); ++i) {
      const double x = ta[t].data[i], y = tb[t].data[i];
      const double diff = std::fabs(x - y);
      if (diff < abs_floor) continue;
      worst = std::max(worst, diff / std::max(std::fabs(x), std::fabs(y)));
    }
  }
  return worst;
}

void lamb_step(std::vector<double>& w, const std::vector<double>& g, LambScalarState& s, double lr, double b1,
               double b2, double eps, double wd, double rmin, double rmax) {
  if (s.m.empty()) {
    s.m.assign(w.size(), 0.0);
    s.v.assign(w.size(), 0.0);
  }
  ++s.t;
  std::vector<double> u(w.size());
  double wn = 0, un = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    s.m[i] = b1 * s.m[i] + (1 - b1) * g[i];
    s.v[i] = b2 * s.v[i] + (1 - b2) * g[i] * g[i];
    const double mh = s.m[i] / (1 - std::pow(b1, s.t));
    const double vh = s.v[i] / (1 - std::pow(b2, s.t));
    u[i] = mh / (std::sqrt(vh) + eps) + wd * w[i];
    wn += w[i] * w[i];
    un += u[i] * u[i];
  }
  wn = std::sqrt(wn);
  un = std::sqrt(un);
  double r = (wn == 0 || un == 0) ? 1.0 : std::min(rmax, std::max(rmin, wn / un));
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * r * u[i];
}

}  // namespace oracle
