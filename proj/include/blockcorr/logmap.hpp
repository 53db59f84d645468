#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "blockcorr/block_corr.hpp"
#include "blockcorr/canonical.hpp"
#include "blockcorr/detail/reduced.hpp"
#include "blockcorr/detail/symmetric.hpp"
#include "blockcorr/error.hpp"

// Matrix-logarithm parametrization of block correlation matrices.
//
// log C of a block correlation matrix is again block-patterned: d_k on the
// diagonal of group k, w_k off the diagonal inside group k and g_kl in block
// (k, l). The off-diagonal values (w, g) form the unconstrained vector eta,
// and every eta maps to exactly one nonsingular block correlation matrix.

namespace blockcorr {

/// Off-diagonal part of a log-domain block matrix.
struct LogOffDiagonal {
  BlockSpec spec;
  WithinValues w;     // nullopt for singleton groups
  Eigen::MatrixXd g;  // K x K symmetric, zero diagonal
};

/// log C in compact form.
struct LogBlock {
  BlockSpec spec;
  Eigen::VectorXd d;
  WithinValues w;
  Eigen::MatrixXd g;

  static LogBlock with_diagonal(const LogOffDiagonal& off, Eigen::VectorXd d) {
    if (d.size() != off.spec.K()) throw DimensionMismatch("diagonal needs one value per group");
    return LogBlock{off.spec, std::move(d), off.w, off.g};
  }

  BlockMatrix as_block_matrix() const { return BlockMatrix{spec, d, w, g}; }
  Eigen::MatrixXd to_dense() const { return as_block_matrix().to_dense(); }
};

enum class EtaOrder {
  /// All within values w_k (non-singleton groups, in group order), then g_kl
  /// for k < l in row-major order.
  WithinThenCross,
  /// Row-major walk over the upper triangle (diagonal included) of the K x K
  /// table holding w_k on the diagonal and g_kl off it; singleton diagonals skipped.
  Paper,
};

inline const char* to_string(EtaOrder o) { return o == EtaOrder::Paper ? "paper" : "wg"; }

inline EtaOrder parse_eta_order(const std::string& s) {
  if (s == "wg") return EtaOrder::WithinThenCross;
  if (s == "paper") return EtaOrder::Paper;
  throw InvalidArgument("unknown eta order '" + s + "' (expected 'wg' or 'paper')");
}

struct EtaVector {
  BlockSpec spec;
  Eigen::VectorXd values;
  EtaOrder order = EtaOrder::WithinThenCross;
};

/// q = K(K+1)/2 - #singletons.
inline Index eta_length(const BlockSpec& spec) {
  const Index K = spec.K();
  return K * (K + 1) / 2 - static_cast<Index>(spec.singletons().size());
}

namespace detail {

/// Slot of each eta entry: (k, l) with k == l meaning w_k.
inline std::vector<std::pair<Index, Index>> eta_slots(const BlockSpec& spec, EtaOrder order) {
  std::vector<std::pair<Index, Index>> slots;
  const Index K = spec.K();
  if (order == EtaOrder::WithinThenCross) {
    for (Index k = 0; k < K; ++k)
      if (!spec.is_singleton(k)) slots.emplace_back(k, k);
    for (Index k = 0; k < K; ++k)
      for (Index l = k + 1; l < K; ++l) slots.emplace_back(k, l);
  } else {
    for (Index k = 0; k < K; ++k) {
      if (!spec.is_singleton(k)) slots.emplace_back(k, k);
      for (Index l = k + 1; l < K; ++l) slots.emplace_back(k, l);
    }
  }
  return slots;
}

}  // namespace detail

inline LogBlock log_block(const BlockCorr& b) {
  const auto pd = is_positive_definite(b, 0.0);
  if (!pd.positive_definite) throw NotPositiveDefinite(pd.lambda_min);
  BlockMatrix m = detail::block_apply(as_block_matrix(b), [](double x) { return std::log(x); });
  return LogBlock{b.spec(), std::move(m.diagonal), std::move(m.within), std::move(m.cross)};
}

/// Matrix exponential of an assembled log-domain block matrix, at K x K scale.
inline BlockMatrix exp_block(const LogBlock& l) {
  return detail::block_apply(l.as_block_matrix(), [](double x) { return std::exp(x); });
}

inline EtaVector encode_eta(const LogBlock& l, EtaOrder order = EtaOrder::WithinThenCross) {
  const auto slots = detail::eta_slots(l.spec, order);
  EtaVector out{l.spec, Eigen::VectorXd(static_cast<Index>(slots.size())), order};
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto [k, m] = slots[i];
    out.values(static_cast<Index>(i)) = k == m ? *l.w[static_cast<std::size_t>(k)] : l.g(k, m);
  }
  return out;
}

inline LogOffDiagonal decode_eta(const EtaVector& e) {
  const auto slots = detail::eta_slots(e.spec, e.order);
  if (static_cast<Index>(slots.size()) != e.values.size()) {
    throw DimensionMismatch("eta has length " + std::to_string(e.values.size()) + " but the block spec needs " +
                            std::to_string(slots.size()));
  }
  const Index K = e.spec.K();
  LogOffDiagonal out{e.spec, WithinValues(static_cast<std::size_t>(K)), Eigen::MatrixXd::Zero(K, K)};
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto [k, m] = slots[i];
    const double v = e.values(static_cast<Index>(i));
    if (k == m) {
      out.w[static_cast<std::size_t>(k)] = v;
    } else {
      out.g(k, m) = v;
      out.g(m, k) = v;
    }
  }
  return out;
}

/// Same vector, other ordering convention.
inline EtaVector reorder(const EtaVector& e, EtaOrder order) {
  if (e.order == order) return e;
  const LogOffDiagonal off = decode_eta(e);
  return encode_eta(LogBlock::with_diagonal(off, Eigen::VectorXd::Zero(e.spec.K())), order);
}

struct InverseMapResult {
  BlockCorr corr;
  Eigen::VectorXd d;
  Index iterations = 0;
  /// max_k |diag_k - 1| before each update, plus the final value.
  std::vector<double> residuals;
};

inline constexpr double kDefaultInverseTol = 1e-12;
inline constexpr Index kDefaultInverseMaxIter = 1000;

/// Finds the diagonal d that makes exp(log-block(d, eta)) a correlation matrix,
/// by the substitution d <- d - log(diag exp(...)).
inline InverseMapResult inverse_map_detailed(const EtaVector& e, double tol = kDefaultInverseTol,
                                             Index max_iter = kDefaultInverseMaxIter) {
  if (!e.values.allFinite()) throw InvalidArgument("eta must be finite");
  const LogOffDiagonal off = decode_eta(e);
  const Index K = e.spec.K();

  InverseMapResult out;
  out.d = Eigen::VectorXd::Zero(K);
  for (Index it = 0;; ++it) {
    const BlockMatrix m = exp_block(LogBlock::with_diagonal(off, out.d));
    const double residual = (m.diagonal.array() - 1.0).abs().maxCoeff();
    out.residuals.push_back(residual);
    if (!std::isfinite(residual) || (m.diagonal.array() <= 0.0).any()) throw NoConvergence(it, residual);
    if (residual <= tol) {
      WithinValues within(static_cast<std::size_t>(K));
      Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(K, K);
      for (Index k = 0; k < K; ++k) {
        if (auto w = m.within[static_cast<std::size_t>(k)]; w && !e.spec.is_singleton(k)) {
          within[static_cast<std::size_t>(k)] = std::clamp(*w / m.diagonal(k), -1.0, 1.0);
        }
        for (Index l = k + 1; l < K; ++l) {
          cross(k, l) = std::clamp(m.cross(k, l) / std::sqrt(m.diagonal(k) * m.diagonal(l)), -1.0, 1.0);
          cross(l, k) = cross(k, l);
        }
      }
      out.corr = BlockCorr(e.spec, std::move(within), std::move(cross));
      out.iterations = it;
      return out;
    }
    if (it >= max_iter) throw NoConvergence(it, residual);
    out.d.array() -= m.diagonal.array().log();
  }
}

inline BlockCorr inverse_map(const EtaVector& e, double tol = kDefaultInverseTol,
                             Index max_iter = kDefaultInverseMaxIter) {
  return inverse_map_detailed(e, tol, max_iter).corr;
}

/// Random nonsingular block correlation matrix: eta ~ N(0, scale^2 I), mapped back.
inline BlockCorr sample(const BlockSpec& spec, double scale, std::uint64_t seed) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidArgument("scale must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  EtaVector e{spec, Eigen::VectorXd(eta_length(spec)), EtaOrder::WithinThenCross};
  for (Index i = 0; i < e.values.size(); ++i) e.values(i) = normal(rng);
  return inverse_map(e);
}

/// Strictly-lower-triangular entries, stacked column by column.
inline Eigen::VectorXd vecl(const Eigen::MatrixXd& m) {
  const Index n = m.rows();
  Eigen::VectorXd out(n * (n - 1) / 2);
  Index i = 0;
  for (Index c = 0; c < n; ++c)
    for (Index r = c + 1; r < n; ++r) out(i++) = m(r, c);
  return out;
}

/// gamma = vecl(log C) for an arbitrary nonsingular correlation matrix.
inline Eigen::VectorXd gamma(const DenseCorr& c) {
  const double lmin = detail::sym_lambda_min(c.matrix());
  if (!(lmin > 0.0)) throw NotPositiveDefinite(lmin);
  return vecl(detail::sym_apply(c.matrix(), [](double x) { return std::log(x); }));
}

}  // namespace blockcorr
