#pragma once

#include <Eigen/Core>

#include <cmath>
#include <utility>

#include "blockcorr/block_corr.hpp"
#include "blockcorr/detail/symmetric.hpp"

namespace blockcorr::detail {

// A block-patterned symmetric matrix M leaves two kinds of subspaces
// invariant. On span{1_{G_k} / sqrt(n_k)} it acts as the K x K matrix
//   R_kk = a_k + (n_k - 1) b_k,   R_kl = c_kl sqrt(n_k n_l),
// and on the (n_k - 1)-dimensional complement inside group k it is the
// scalar a_k - b_k. Spectral functions therefore reduce to one K x K
// eigenproblem plus K scalar evaluations.

struct ReducedForm {
  Eigen::MatrixXd matrix;       // K x K
  Eigen::VectorXd scalars;      // a_k - b_k, meaningful only for n_k >= 2
};

inline ReducedForm reduce(const BlockMatrix& m) {
  const Index K = m.spec.K();
  const Eigen::VectorXd n = m.spec.sizes_vector();
  ReducedForm out{Eigen::MatrixXd(K, K), Eigen::VectorXd::Zero(K)};
  for (Index k = 0; k < K; ++k) {
    const double b = m.within[static_cast<std::size_t>(k)].value_or(0.0);
    out.matrix(k, k) = m.diagonal(k) + (n(k) - 1.0) * b;
    out.scalars(k) = m.diagonal(k) - b;
    for (Index l = 0; l < K; ++l)
      if (l != k) out.matrix(k, l) = m.cross(k, l) * std::sqrt(n(k) * n(l));
  }
  return out;
}

/// Inverse of reduce() for a reduced matrix F and scalar values f_k.
inline BlockMatrix unreduce(const BlockSpec& spec, const Eigen::MatrixXd& f, const Eigen::VectorXd& scalars) {
  const Index K = spec.K();
  const Eigen::VectorXd n = spec.sizes_vector();
  BlockMatrix out{spec, Eigen::VectorXd(K), WithinValues(static_cast<std::size_t>(K)), Eigen::MatrixXd::Zero(K, K)};
  for (Index k = 0; k < K; ++k) {
    if (spec.is_singleton(k)) {
      out.diagonal(k) = f(k, k);
    } else {
      const double w = (f(k, k) - scalars(k)) / n(k);
      out.within[static_cast<std::size_t>(k)] = w;
      out.diagonal(k) = w + scalars(k);
    }
    for (Index l = 0; l < K; ++l)
      if (l != k) out.cross(k, l) = f(k, l) / std::sqrt(n(k) * n(l));
  }
  return out;
}

/// Spectral function f(M) of a block-patterned symmetric matrix, computed
/// entirely at K x K scale.
template <class F>
BlockMatrix block_apply(const BlockMatrix& m, F&& f) {
  ReducedForm r = reduce(m);
  Eigen::MatrixXd fr = sym_apply(r.matrix, f);
  Eigen::VectorXd fs = r.scalars;
  for (Index k = 0; k < m.spec.K(); ++k) fs(k) = m.spec.is_singleton(k) ? 0.0 : f(r.scalars(k));
  return unreduce(m.spec, fr, fs);
}

}  // namespace blockcorr::detail
