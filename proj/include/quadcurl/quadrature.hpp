// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace quadcurl {

/// Quadrature rule on a reference simplex. Points are reference coordinates
/// (the first `dim` entries are used); weights sum to the reference measure.
struct QuadRule {
  std::vector<Eigen::Vector3d> points;
  std::vector<double> weights;
  int order = 0;

  std::size_t size() const { return weights.size(); }
};

inline constexpr int kMaxQuadratureOrder = 24;

namespace detail {

// P_n(t) and P_n'(t) by the three-term recurrence
inline std::pair<double, double> legendre(int n, double t) {
  double p0 = 1.0, p1 = t;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return {p1, n * (t * p1 - p0) / (t * t - 1.0)};
}

}  // namespace detail

/// Gauss-Legendre nodes and weights on [0, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int npts) {
  if (npts < 1) throw std::invalid_argument("gauss_legendre: need at least one point");
  std::vector<double> x(npts), w(npts);
  for (int i = 0; i < (npts + 1) / 2; ++i) {
    double t = std::cos(std::numbers::pi * (i + 0.75) / (npts + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = detail::legendre(npts, t);
      const double dt = p / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    const double dp = detail::legendre(npts, t).second;
    const double wt = 2.0 / ((1.0 - t * t) * dp * dp);
    x[i] = 0.5 * (1.0 - t);
    x[npts - 1 - i] = 0.5 * (1.0 + t);
    w[i] = w[npts - 1 - i] = 0.5 * wt;
  }
  return {std::move(x), std::move(w)};
}

/// Rule on [0, 1] exact for polynomials of degree <= d.
inline QuadRule line_rule(int d) {
  if (d < 0 || d > 2 * kMaxQuadratureOrder) throw std::invalid_argument("line_rule: unsupported degree");
  const int npts = d / 2 + 1;
  auto [x, w] = gauss_legendre(npts);
  QuadRule r;
  r.order = 2 * npts - 1;
  for (int i = 0; i < npts; ++i) {
    r.points.emplace_back(x[i], 0.0, 0.0);
    r.weights.push_back(w[i]);
  }
  return r;
}

/// Rule on the reference triangle {s, t >= 0, s + t <= 1} (area 1/2) via the
/// collapsed map s = a, t = b (1 - a).
inline QuadRule triangle_rule(int d) {
  if (d < 1 || d > kMaxQuadratureOrder) throw std::invalid_argument("triangle_rule: unsupported degree");
  const int npts = (d + 3) / 2;  // 2 npts - 1 >= d + 1
  auto [x, w] = gauss_legendre(npts);
  QuadRule r;
  r.order = d;
  for (int i = 0; i < npts; ++i)
    for (int j = 0; j < npts; ++j) {
      const double a = x[i], b = x[j];
      r.points.emplace_back(a, b * (1.0 - a), 0.0);
      r.weights.push_back(w[i] * w[j] * (1.0 - a));
    }
  return r;
}

/// Rule on the reference tetrahedron (volume 1/6) exact for all monomials of
/// total degree <= d. Conical product of Gauss-Legendre rules through the
/// collapsed map x = a, y = b (1 - a), z = c (1 - a)(1 - b), whose Jacobian
/// (1 - a)^2 (1 - b) raises the degree by at most two per direction. All
/// weights are positive.
inline QuadRule quadrature_rule(int d) {
  if (d < 1 || d > kMaxQuadratureOrder)
    throw std::invalid_argument("quadrature_rule: unsupported exactness degree");
  const int npts = (d + 4) / 2;  // 2 npts - 1 >= d + 2
  auto [x, w] = gauss_legendre(npts);
  QuadRule r;
  r.order = d;
  r.points.reserve(static_cast<std::size_t>(npts) * npts * npts);
  for (int i = 0; i < npts; ++i)
    for (int j = 0; j < npts; ++j)
      for (int k = 0; k < npts; ++k) {
        const double a = x[i], b = x[j], c = x[k];
        r.points.emplace_back(a, b * (1.0 - a), c * (1.0 - a) * (1.0 - b));
        r.weights.push_back(w[i] * w[j] * w[k] * (1.0 - a) * (1.0 - a) * (1.0 - b));
      }
  return r;
}

}  // namespace quadcurl
