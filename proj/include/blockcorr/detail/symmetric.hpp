#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>

namespace blockcorr::detail {

/// Eigenvalues of a symmetric matrix, ascending.
inline Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline double sym_lambda_min(const Eigen::MatrixXd& m) { return sym_eigenvalues(m).minCoeff(); }

/// f(M) = Q f(Lambda) Q' for symmetric M.
template <class F>
Eigen::MatrixXd sym_apply(const Eigen::MatrixXd& m, F&& f) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd fl = es.eigenvalues().unaryExpr(f);
  const auto& q = es.eigenvectors();
  Eigen::MatrixXd out = q * fl.asDiagonal() * q.transpose();
  return (out + out.transpose()) * 0.5;
}

/// Number of eigenvalues exceeding rank_tol * lambda_max; 0 when lambda_max <= 0.
inline Eigen::Index numerical_rank(const Eigen::VectorXd& eigenvalues, double rank_tol) {
  if (eigenvalues.size() == 0) return 0;
  const double lmax = eigenvalues.maxCoeff();
  if (lmax <= 0.0) return 0;
  const double cut = rank_tol * lmax;
  return static_cast<Eigen::Index>((eigenvalues.array() > cut).count());
}

}  // namespace blockcorr::detail
