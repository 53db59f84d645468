#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "blockcorr/block_spec.hpp"
#include "blockcorr/error.hpp"

namespace blockcorr {

/// Within-group values, one per group. Singleton groups hold std::nullopt.
using WithinValues = std::vector<std::optional<double>>;

/// Compact block correlation matrix.
///
/// Stores the within-group correlations rho_kk (undefined for singleton
/// groups) and the symmetric cross-group correlations rho_kl, k != l.
/// Immutable after construction.
class BlockCorr {
 public:
  BlockCorr() = default;

  BlockCorr(BlockSpec spec, WithinValues within, Eigen::MatrixXd cross)
      : spec_(std::move(spec)), within_(std::move(within)), cross_(std::move(cross)) {
    validate();
  }

  /// Builds from a full K x K matrix; diagonal entries of singleton groups are ignored.
  static BlockCorr from_matrix(BlockSpec spec, const Eigen::MatrixXd& rho) {
    const Index K = spec.K();
    if (rho.rows() != K || rho.cols() != K) {
      throw DimensionMismatch("rho must be " + std::to_string(K) + "x" + std::to_string(K));
    }
    WithinValues within(static_cast<std::size_t>(K));
    for (Index k = 0; k < K; ++k)
      if (!spec.is_singleton(k)) within[static_cast<std::size_t>(k)] = rho(k, k);
    return BlockCorr(std::move(spec), std::move(within), rho);
  }

  static BlockCorr identity(BlockSpec spec) {
    const Index K = spec.K();
    return from_matrix(std::move(spec), Eigen::MatrixXd::Zero(K, K));
  }

  const BlockSpec& spec() const noexcept { return spec_; }
  Index K() const noexcept { return spec_.K(); }

  std::optional<double> within(Index k) const { return within_.at(static_cast<std::size_t>(k)); }
  const WithinValues& within_values() const noexcept { return within_; }

  /// Cross-group correlation rho_kl; requires k != l.
  double cross(Index k, Index l) const {
    if (k == l) throw InvalidArgument("cross() needs two distinct groups");
    return cross_(k, l);
  }

  /// Cross-group values with a zero diagonal.
  const Eigen::MatrixXd& cross_values() const noexcept { return cross_; }

  /// A* with singleton diagonals replaced by `singleton_fill`.
  Eigen::MatrixXd astar(double singleton_fill) const {
    Eigen::MatrixXd a = cross_;
    for (Index k = 0; k < K(); ++k) a(k, k) = within(k).value_or(singleton_fill);
    return a;
  }

  friend bool operator==(const BlockCorr& a, const BlockCorr& b) {
    return a.spec_ == b.spec_ && a.within_ == b.within_ && a.cross_ == b.cross_;
  }

 private:
  void validate() {
    const Index K = spec_.K();
    if (static_cast<Index>(within_.size()) != K) throw DimensionMismatch("need one within value per group");
    if (cross_.rows() != K || cross_.cols() != K) {
      throw DimensionMismatch("cross matrix must be " + std::to_string(K) + "x" + std::to_string(K));
    }
    for (Index k = 0; k < K; ++k) {
      const auto& w = within_[static_cast<std::size_t>(k)];
      if (spec_.is_singleton(k) && w) {
        throw InvalidArgument("group " + std::to_string(k) + " is a singleton; its within correlation is undefined");
      }
      if (!spec_.is_singleton(k)) {
        if (!w) throw InvalidArgument("group " + std::to_string(k) + " needs a within correlation");
        check_value(*w, k, k);
      }
      cross_(k, k) = 0.0;
      for (Index l = k + 1; l < K; ++l) {
        if (cross_(k, l) != cross_(l, k)) {
          throw InvalidArgument("rho is not symmetric at (" + std::to_string(k) + ", " + std::to_string(l) + ")");
        }
        check_value(cross_(k, l), k, l);
      }
    }
  }

  static void check_value(double v, Index k, Index l) {
    if (!std::isfinite(v) || std::abs(v) > 1.0) {
      throw InvalidArgument("rho(" + std::to_string(k) + ", " + std::to_string(l) + ") = " + std::to_string(v) +
                            " is outside [-1, 1]");
    }
  }

  BlockSpec spec_;
  WithinValues within_;
  Eigen::MatrixXd cross_;
};

/// Dense n x n correlation matrix: symmetric, unit diagonal, entries in [-1, 1].
class DenseCorr {
 public:
  DenseCorr() = default;

  explicit DenseCorr(Eigen::MatrixXd m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw DimensionMismatch("correlation matrix must be square");
    for (Index i = 0; i < m_.rows(); ++i) {
      if (m_(i, i) != 1.0) throw InvalidArgument("diagonal entry " + std::to_string(i) + " is not 1");
      for (Index j = 0; j < i; ++j) {
        if (m_(i, j) != m_(j, i)) {
          throw InvalidArgument("matrix is not symmetric at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
        }
        if (!std::isfinite(m_(i, j)) || std::abs(m_(i, j)) > 1.0) {
          throw InvalidArgument("entry (" + std::to_string(i) + ", " + std::to_string(j) + ") is outside [-1, 1]");
        }
      }
    }
  }

  const Eigen::MatrixXd& matrix() const noexcept { return m_; }
  Index n() const noexcept { return m_.rows(); }
  double operator()(Index i, Index j) const { return m_(i, j); }

 private:
  Eigen::MatrixXd m_;
};

/// General symmetric matrix with block pattern: `diagonal` on the diagonal of
/// group k, `within` off the diagonal inside group k, `cross` in block (k, l).
struct BlockMatrix {
  BlockSpec spec;
  Eigen::VectorXd diagonal;
  WithinValues within;
  Eigen::MatrixXd cross;

  Eigen::MatrixXd to_dense() const {
    const Index n = spec.n();
    Eigen::MatrixXd out(n, n);
    for (Index k = 0; k < spec.K(); ++k) {
      for (Index l = 0; l < spec.K(); ++l) {
        auto blk = out.block(spec.offset(k), spec.offset(l), spec.size(k), spec.size(l));
        if (k == l) {
          blk.setConstant(within[static_cast<std::size_t>(k)].value_or(0.0));
          blk.diagonal().setConstant(diagonal(k));
        } else {
          blk.setConstant(cross(k, l));
        }
      }
    }
    return out;
  }
};

inline BlockMatrix as_block_matrix(const BlockCorr& b) {
  return BlockMatrix{b.spec(), Eigen::VectorXd::Ones(b.K()), b.within_values(), b.cross_values()};
}

inline DenseCorr expand(const BlockCorr& b) { return DenseCorr(as_block_matrix(b).to_dense()); }

/// Recovers the compact form of a block-structured correlation matrix.
///
/// Each block is represented by the mean of its entries (off-diagonal
/// entries only for diagonal blocks). Throws NotBlockStructured if any entry
/// deviates from its block mean by more than `tol`; pass an infinite tol to
/// project an arbitrary correlation matrix onto the block pattern.
inline BlockCorr compress(const DenseCorr& d, const BlockSpec& spec, double tol) {
  if (d.n() != spec.n()) {
    throw DimensionMismatch("matrix is " + std::to_string(d.n()) + "x" + std::to_string(d.n()) +
                            " but the block spec has n = " + std::to_string(spec.n()));
  }
  const Index K = spec.K();
  const auto& m = d.matrix();
  WithinValues within(static_cast<std::size_t>(K));
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(K, K);

  // Anchored mean: exact whenever all entries are equal.
  auto summarize = [&](Index k, Index l) -> double {
    const Index r0 = spec.offset(k), c0 = spec.offset(l);
    double anchor = std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0;
    Index count = 0;
    for (Index i = 0; i < spec.size(k); ++i) {
      for (Index j = 0; j < spec.size(l); ++j) {
        if (k == l && i == j) continue;
        const double v = m(r0 + i, c0 + j);
        if (count == 0) anchor = v;
        sum += v - anchor;
        ++count;
      }
    }
    const double mean = anchor + sum / static_cast<double>(count);
    double dev = 0.0;
    for (Index i = 0; i < spec.size(k); ++i) {
      for (Index j = 0; j < spec.size(l); ++j) {
        if (k == l && i == j) continue;
        dev = std::max(dev, std::abs(m(r0 + i, c0 + j) - mean));
      }
    }
    if (dev > tol) throw NotBlockStructured(k, l, dev);
    return std::clamp(mean, -1.0, 1.0);
  };

  for (Index k = 0; k < K; ++k) {
    if (!spec.is_singleton(k)) within[static_cast<std::size_t>(k)] = summarize(k, k);
    for (Index l = k + 1; l < K; ++l) {
      cross(k, l) = summarize(k, l);
      cross(l, k) = cross(k, l);
    }
  }
  return BlockCorr(spec, std::move(within), std::move(cross));
}

}  // namespace blockcorr
