#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "blockcorr/block_corr.hpp"
#include "blockcorr/canonical.hpp"
#include "blockcorr/detail/symmetric.hpp"
#include "blockcorr/error.hpp"

// Clustered factor (CF) representations of block correlation matrices.
//
// C admits Z_i = beta_k' f + eps_i for i in group k iff A* = [rho_kl] is
// positive semidefinite with rho_kk < 1. Singleton groups leave rho_kk free;
// they are completed with 1 - eps, which maximizes lambda_min(A*) over the
// admissible range because lambda_min is nondecreasing in each diagonal entry.

namespace blockcorr {

inline constexpr double kDefaultPsdTol = 1e-10;
inline constexpr double kDefaultCompletionEps = 1e-8;
inline constexpr double kDefaultRankTol = 1e-8;

struct SingletonCompletion {
  std::map<Index, double> diagonals;
  double lambda_min;
  bool feasible;
};

struct AdmissibilityReport {
  bool admissible = false;
  double lambda_min_astar = 0.0;
  std::map<Index, double> completed_diagonals;
  Index rank = 0;
  double tol_used = 0.0;
  bool c_positive_definite = false;
  double lambda_min_c = 0.0;
  /// lambda_min(A*) lies within the tolerance band around zero.
  bool boundary = false;
  std::vector<std::string> warnings;
};

struct FactorLoadings {
  Eigen::MatrixXd B;  // K x r
  Index r = 0;
};

inline SingletonCompletion complete_singletons(const BlockCorr& b, double eps = kDefaultCompletionEps) {
  const auto singles = b.spec().singletons();
  if (singles.empty()) throw InvalidArgument("complete_singletons needs at least one singleton group");
  SingletonCompletion out;
  for (Index k : singles) out.diagonals[k] = 1.0 - eps;
  out.lambda_min = detail::sym_lambda_min(b.astar(1.0 - eps));
  out.feasible = out.lambda_min >= -eps;
  return out;
}

/// A* with singleton diagonals filled by the completion rule.
inline Eigen::MatrixXd completed_astar(const BlockCorr& b, double eps = kDefaultCompletionEps) {
  return b.astar(1.0 - eps);
}

inline AdmissibilityReport check_admissible(const BlockCorr& b, double tol = kDefaultPsdTol,
                                            double eps = kDefaultCompletionEps) {
  AdmissibilityReport rep;
  rep.tol_used = tol * static_cast<double>(b.K());

  const auto pd = is_positive_definite(b);
  rep.c_positive_definite = pd.positive_definite;
  rep.lambda_min_c = pd.lambda_min;
  if (!pd.positive_definite) {
    rep.warnings.push_back("NonsingularityWarning: C is not positive definite (lambda_min = " +
                           std::to_string(pd.lambda_min) + ")");
  }

  bool within_ok = true;
  for (Index k = 0; k < b.K(); ++k) {
    if (auto w = b.within(k); w && *w >= 1.0) within_ok = false;
  }

  bool psd = false;
  double band = rep.tol_used;
  if (b.spec().has_singletons()) {
    const auto comp = complete_singletons(b, eps);
    rep.completed_diagonals = comp.diagonals;
    rep.lambda_min_astar = comp.lambda_min;
    psd = comp.feasible;
    band = std::max(band, eps);
  } else {
    rep.lambda_min_astar = detail::sym_lambda_min(b.astar(0.0));
    psd = rep.lambda_min_astar >= -rep.tol_used;
  }
  rep.admissible = psd && within_ok;
  rep.rank = detail::numerical_rank(detail::sym_eigenvalues(completed_astar(b, eps)), kDefaultRankTol);
  rep.boundary = std::abs(rep.lambda_min_astar) <= band;
  if (rep.boundary && !rep.completed_diagonals.empty()) {
    rep.warnings.push_back("BoundaryWarning: lambda_min(A*) is within " + std::to_string(band) +
                           " of zero with singleton diagonals at 1 - eps");
  }
  return rep;
}

/// Minimal number of factors, rank(A*), for an admissible matrix.
inline Index minimal_rank(const BlockCorr& b, double rank_tol = kDefaultRankTol) {
  const auto rep = check_admissible(b);
  if (!rep.admissible) throw NotAdmissible(rep.lambda_min_astar);
  return detail::numerical_rank(detail::sym_eigenvalues(completed_astar(b)), rank_tol);
}

/// Loadings B (K x r) with BB' = A*, rotated so the leading r x r block is
/// lower triangular and each column's first nonzero entry is nonnegative.
inline FactorLoadings loadings(const BlockCorr& b, Index r) {
  const auto rep = check_admissible(b);
  if (!rep.admissible) throw NotAdmissible(rep.lambda_min_astar);
  const Index K = b.K();
  if (r > K) throw InvalidArgument("at most K = " + std::to_string(K) + " factors are needed");
  const Eigen::MatrixXd astar = completed_astar(b);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(astar);
  const Index minimal = detail::numerical_rank(es.eigenvalues(), kDefaultRankTol);
  if (r < minimal) throw RankTooSmall(r, minimal);

  FactorLoadings out{Eigen::MatrixXd::Zero(K, r), r};
  if (r == 0) return out;
  // Eigenvalues are ascending; take the top r.
  for (Index j = 0; j < r; ++j) {
    const Index src = K - 1 - j;
    out.B.col(j) = es.eigenvectors().col(src) * std::sqrt(std::max(es.eigenvalues()(src), 0.0));
  }

  // B' = QR  =>  B Q = R' is lower trapezoidal.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(out.B.transpose());
  const Eigen::MatrixXd q = qr.householderQ();
  out.B = (out.B * q).eval();
  for (Index i = 0; i < std::min(K, r); ++i)
    for (Index j = i + 1; j < r; ++j) out.B(i, j) = 0.0;

  const double scale = out.B.cwiseAbs().maxCoeff();
  for (Index j = 0; j < r; ++j) {
    for (Index i = 0; i < K; ++i) {
      if (std::abs(out.B(i, j)) > 1e-12 * scale) {
        if (out.B(i, j) < 0.0) out.B.col(j) *= -1.0;
        break;
      }
    }
  }
  return out;
}

/// Loadings with the minimal number of factors.
inline FactorLoadings loadings(const BlockCorr& b) { return loadings(b, minimal_rank(b)); }

/// Block correlation matrix implied by group loadings: rho_kl = beta_k' beta_l.
inline BlockCorr from_loadings(const Eigen::MatrixXd& B, const BlockSpec& spec) {
  if (B.rows() != spec.K()) {
    throw DimensionMismatch("loadings have " + std::to_string(B.rows()) + " rows but K = " +
                            std::to_string(spec.K()));
  }
  Eigen::MatrixXd rho = B * B.transpose();
  rho = (rho + rho.transpose()).eval() * 0.5;
  return BlockCorr::from_matrix(spec, rho);
}

/// Free parameters in a lower-triangular K x r loading matrix: r(2K - r + 1)/2.
inline Index dof(Index K, Index r) {
  if (K < 0 || r < 0) throw InvalidArgument("K and r must be nonnegative");
  if (r > K) throw InvalidArgument("r = " + std::to_string(r) + " exceeds K = " + std::to_string(K));
  return r * (K + (K - r) + 1) / 2;
}

}  // namespace blockcorr
