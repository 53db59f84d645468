#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "blockcorr/block_corr.hpp"
#include "blockcorr/detail/reduced.hpp"
#include "blockcorr/detail/symmetric.hpp"

namespace blockcorr {

struct SpectrumEntry {
  double value;
  Index multiplicity;
};

/// Eigenvalue multiset of an n x n matrix, stored as (value, multiplicity) pairs.
using Spectrum = std::vector<SpectrumEntry>;

/// The K x K matrices attached to a block correlation matrix.
///
/// `a` is the companion matrix whose eigenvalues, together with the scalar
/// eigenvalues 1 - rho_kk of multiplicity n_k - 1, make up the spectrum of C.
/// `astar` holds the raw correlations rho_kl; diagonal entries of singleton
/// groups are not determined by C and are stored as 0 with their indices in
/// `undefined_diagonal`.
struct CompanionPair {
  BlockSpec spec;
  Eigen::MatrixXd a;
  Eigen::MatrixXd astar;
  std::vector<Index> undefined_diagonal;
  Spectrum scalar_eigs;

  Eigen::MatrixXd astar_with(double singleton_fill) const {
    Eigen::MatrixXd out = astar;
    for (Index k : undefined_diagonal) out(k, k) = singleton_fill;
    return out;
  }
};

inline CompanionPair companion(const BlockCorr& b) {
  CompanionPair out;
  out.spec = b.spec();
  out.a = detail::reduce(as_block_matrix(b)).matrix;
  out.astar = b.astar(0.0);
  out.undefined_diagonal = b.spec().singletons();
  for (Index k = 0; k < b.K(); ++k) {
    if (auto w = b.within(k)) out.scalar_eigs.push_back({1.0 - *w, b.spec().size(k) - 1});
  }
  return out;
}

/// Eigenvalues of expand(b) without forming the n x n matrix.
inline Spectrum reduced_spectrum(const BlockCorr& b) {
  const CompanionPair cp = companion(b);
  Spectrum out;
  const Eigen::VectorXd ev = detail::sym_eigenvalues(cp.a);
  for (Index i = 0; i < ev.size(); ++i) out.push_back({ev(i), 1});
  out.insert(out.end(), cp.scalar_eigs.begin(), cp.scalar_eigs.end());
  return out;
}

/// Expands the multiset into a sorted (ascending) list of n values.
inline std::vector<double> flatten(const Spectrum& s) {
  std::vector<double> out;
  for (const auto& e : s) out.insert(out.end(), static_cast<std::size_t>(e.multiplicity), e.value);
  std::sort(out.begin(), out.end());
  return out;
}

inline double min_eigenvalue(const Spectrum& s) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& e : s)
    if (e.multiplicity > 0) m = std::min(m, e.value);
  return m;
}

struct DefinitenessCheck {
  bool positive_definite;
  double lambda_min;
};

inline constexpr double kDefaultPdTol = 1e-12;

/// C is positive definite iff min(spectrum) > tol and |rho_kk| < 1 for every defined rho_kk.
inline DefinitenessCheck is_positive_definite(const BlockCorr& b, double tol = kDefaultPdTol) {
  const double lmin = min_eigenvalue(reduced_spectrum(b));
  bool ok = lmin > tol;
  for (Index k = 0; k < b.K(); ++k) {
    if (auto w = b.within(k); w && std::abs(*w) >= 1.0) ok = false;
  }
  return {ok, lmin};
}

}  // namespace blockcorr
