// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <map>
#include <stdexcept>
#include <string>

#include "quadcurl/fe_space.hpp"

namespace quadcurl {

/// Linear combination of partial derivatives of the separable potential
/// b(x, y, z) = q(x) q(y) q(z), q(t) = 256 t^4 (1 - t)^4. Curl, divergence and
/// partial derivatives act exactly on the multi-indices, so every derived
/// field is represented without truncation.
class DerivativeCombination {
 public:
  using Index = std::array<int, 3>;

  static DerivativeCombination potential() {
    DerivativeCombination d;
    d.terms_[{0, 0, 0}] = 1.0;
    return d;
  }

  DerivativeCombination partial(int axis) const {
    DerivativeCombination out;
    for (const auto& [idx, c] : terms_) {
      Index j = idx;
      ++j[axis];
      if (j[axis] <= kDegree) out.terms_[j] += c;
    }
    return out;
  }

  DerivativeCombination& operator+=(const DerivativeCombination& o) {
    for (const auto& [idx, c] : o.terms_) terms_[idx] += c;
    prune();
    return *this;
  }
  friend DerivativeCombination operator+(DerivativeCombination a, const DerivativeCombination& b) { return a += b; }
  friend DerivativeCombination operator-(DerivativeCombination a, const DerivativeCombination& b) {
    return a += b.scaled(-1.0);
  }
  DerivativeCombination scaled(double s) const {
    DerivativeCombination out = *this;
    for (auto& [idx, c] : out.terms_) c *= s;
    return out;
  }

  /// Per-axis derivative values q^{(j)}(x_a) shared by all combinations at one point.
  using Tables = std::array<std::array<double, 9>, 3>;
  static Tables tables_at(const Vec3& x) { return {derivatives_at(x[0]), derivatives_at(x[1]), derivatives_at(x[2])}; }

  double evaluate(const Tables& d) const {
    double s = 0.0;
    for (const auto& [idx, c] : terms_) s += c * d[0][idx[0]] * d[1][idx[1]] * d[2][idx[2]];
    return s;
  }
  double operator()(const Vec3& x) const { return evaluate(tables_at(x)); }

  const std::map<Index, double>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  /// Highest total polynomial degree among the terms (3 * kDegree minus the order).
  int polynomial_degree() const {
    int deg = 0;
    for (const auto& [idx, c] : terms_) deg = std::max(deg, 3 * kDegree - idx[0] - idx[1] - idx[2]);
    return deg;
  }

  static constexpr int kDegree = 8;

  /// q^{(j)}(t) for j = 0..8 by Horner evaluation of the derivative tables.
  static std::array<double, 9> derivatives_at(double t) {
    static const auto table = [] {
      // 256 t^4 (1 - t)^4 = 256 (t^4 - 4t^5 + 6t^6 - 4t^7 + t^8)
      std::array<std::array<double, kDegree + 1>, kDegree + 1> c{};
      c[0] = {0, 0, 0, 0, 256, -1024, 1536, -1024, 256};
      for (int j = 1; j <= kDegree; ++j)
        for (int p = 1; p <= kDegree; ++p) c[j][p - 1] = p * c[j - 1][p];
      return c;
    }();
    std::array<double, 9> out{};
    for (int j = 0; j <= kDegree; ++j) {
      double v = 0.0;
      for (int p = kDegree - j; p >= 0; --p) v = v * t + table[j][p];
      out[j] = v;
    }
    return out;
  }

 private:
  void prune() {
    for (auto it = terms_.begin(); it != terms_.end();)
      it = (it->second == 0.0) ? terms_.erase(it) : std::next(it);
  }

  std::map<Index, double> terms_;
};

/// Vector field whose components are derivative combinations.
struct PotentialField {
  std::array<DerivativeCombination, 3> c;

  Vec3 operator()(const Vec3& x) const {
    const auto t = DerivativeCombination::tables_at(x);
    return Vec3(c[0].evaluate(t), c[1].evaluate(t), c[2].evaluate(t));
  }

  PotentialField curl() const {
    return {{c[2].partial(1) - c[1].partial(2), c[0].partial(2) - c[2].partial(0), c[1].partial(0) - c[0].partial(1)}};
  }
  DerivativeCombination div() const { return c[0].partial(0) + c[1].partial(1) + c[2].partial(2); }
  /// Jacobian as a matrix field: entry (i, j) is d c_i / d x_j.
  std::function<Mat3(const Vec3&)> gradient() const {
    std::array<DerivativeCombination, 9> d;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) d[3 * i + j] = c[i].partial(j);
    return [d](const Vec3& x) {
      const auto t = DerivativeCombination::tables_at(x);
      Mat3 g;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) g(i, j) = d[3 * i + j].evaluate(t);
      return g;
    };
  }
  PotentialField operator+(const PotentialField& o) const { return {{c[0] + o.c[0], c[1] + o.c[1], c[2] + o.c[2]}}; }
  PotentialField scaled(double s) const { return {{c[0].scaled(s), c[1].scaled(s), c[2].scaled(s)}}; }
  int polynomial_degree() const {
    return std::max({c[0].polynomial_degree(), c[1].polynomial_degree(), c[2].polynomial_degree()});
  }
  VectorField field() const {
    return [self = *this](const Vec3& x) { return self(x); };
  }
};

enum class Problem { A, B };

inline const char* problem_name(Problem p) { return p == Problem::A ? "A" : "B"; }

/// Exact fields of the manufactured case on the unit cube.
///
/// u = curl(b, b, b), phi = curl u, r = -curl phi, p = 0, m = g = 0.
/// b and its derivatives up to order three vanish on the boundary, so u, phi
/// and r satisfy every essential condition and r needs no gradient correction.
struct ManufacturedCase {
  Problem problem = Problem::A;
  PotentialField u, curl_u, curlcurl_u, r, curl_r, f;
  std::string notes;

  VectorField u_exact() const { return u.field(); }
  VectorField curl_u_exact() const { return curl_u.field(); }
  VectorField curlcurl_u_exact() const { return curlcurl_u.field(); }
  VectorField phi_exact() const { return curl_u.field(); }
  std::function<Mat3(const Vec3&)> grad_phi_exact() const { return curl_u.gradient(); }
  VectorField r_exact() const { return r.field(); }
  VectorField curl_r_exact() const { return curl_r.field(); }
  VectorField f_exact() const { return f.field(); }

  /// Exactness degree that integrates (f, v) without error for degree-2
  /// test functions, capped by the available rules.
  int load_quadrature_degree() const { return std::min(f.polynomial_degree() + 2, kMaxQuadratureOrder); }
};

inline ManufacturedCase manufactured_solution(Problem problem) {
  const DerivativeCombination b = DerivativeCombination::potential();
  const PotentialField potential{{b, b, b}};
  ManufacturedCase mc;
  mc.problem = problem;
  mc.u = potential.curl();
  mc.curl_u = mc.u.curl();
  mc.curlcurl_u = mc.curl_u.curl();
  mc.r = mc.curlcurl_u.scaled(-1.0);
  mc.curl_r = mc.r.curl();
  const PotentialField quad_curl = mc.curlcurl_u.curl().curl();
  mc.f = (problem == Problem::A) ? quad_curl : quad_curl + mc.u;
  mc.notes =
      "potential b = (64 x(1-x) y(1-y) z(1-z))^4 on the unit cube; all fields are exact derivative "
      "combinations of b (separable degree-8 factors), u = curl(b,b,b), phi = curl u, r = -curl curl u, "
      "p = m = g = 0, f = curl^4 u" +
      std::string(problem == Problem::B ? " + u" : "");
  return mc;
}

}  // namespace quadcurl
