#pragma once

// Test-only dense reference computations. Deliberately independent of the
// library: plain loops for assembly and a cyclic Jacobi eigensolver instead
// of the library's symmetric solver.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace oracle {

struct Eig {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns
};

inline Eig jacobi(Eigen::MatrixXd a, int max_sweeps = 100) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0, scale = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      scale += a(i, i) * a(i, i);
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j) off += a(i, j) * a(i, j);
    }
    if (off <= 1e-34 * std::max(scale, 1e-300)) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::sort(idx.begin(), idx.end(), [&](auto x, auto y) { return a(x, x) < a(y, y); });
  Eig out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = a(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(i)]);
    out.vectors.col(i) = v.col(idx[static_cast<std::size_t>(i)]);
  }
  return out;
}

template <class F>
Eigen::MatrixXd spectral(const Eigen::MatrixXd& m, F f) {
  const Eig e = jacobi(m);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.rows(), m.cols());
  for (Eigen::Index k = 0; k < m.rows(); ++k) out += f(e.values(k)) * e.vectors.col(k) * e.vectors.col(k).transpose();
  return out;
}

/// n x n block matrix from group sizes and per-block values, assembled entry by entry.
inline Eigen::MatrixXd assemble(const std::vector<Eigen::Index>& sizes, const std::vector<double>& diag,
                                const std::vector<std::optional<double>>& within, const Eigen::MatrixXd& cross) {
  std::vector<Eigen::Index> group;
  for (std::size_t k = 0; k < sizes.size(); ++k) group.insert(group.end(), static_cast<std::size_t>(sizes[k]), k);
  const auto n = static_cast<Eigen::Index>(group.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto k = group[static_cast<std::size_t>(i)], l = group[static_cast<std::size_t>(j)];
      if (i == j) m(i, j) = diag[static_cast<std::size_t>(k)];
      else if (k == l) m(i, j) = *within[static_cast<std::size_t>(k)];
      else m(i, j) = cross(k, l);
    }
  }
  return m;
}

inline Eigen::MatrixXd assemble_corr(const std::vector<Eigen::Index>& sizes,
                                     const std::vector<std::optional<double>>& within, const Eigen::MatrixXd& cross) {
  return assemble(sizes, std::vector<double>(sizes.size(), 1.0), within, cross);
}

/// Eigenvalues of a 2 x 2 symmetric matrix in closed form, ascending.
inline std::pair<double, double> eig2(double a, double b, double d) {
  const double mid = 0.5 * (a + d), rad = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
  return {mid - rad, mid + rad};
}

/// Cholesky success as a positive-definiteness oracle.
inline bool cholesky_ok(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double s = m(j, j);
    for (Eigen::Index k = 0; k < j; ++k) s -= l(j, k) * l(j, k);
    if (!(s > 0.0)) return false;
    l(j, j) = std::sqrt(s);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double t = m(i, j);
      for (Eigen::Index k = 0; k < j; ++k) t -= l(i, k) * l(j, k);
      l(i, j) = t / l(j, j);
    }
  }
  return true;
}

}  // namespace oracle
