#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "blockcorr/block_corr.hpp"
#include "blockcorr/cf.hpp"
#include "blockcorr/detail/reduced.hpp"
#include "blockcorr/detail/symmetric.hpp"
#include "blockcorr/error.hpp"

// Estimation of block correlation matrices from i.i.d. observations and
// bootstrap tests of the clustered factor hypotheses.
//
// H_F: lambda_min(A*) >= 0 is tested with statistic lambda_min(A*_hat).
// H_{F,r}: rank(A*) <= r is tested with the trailing eigenvalue mass
// sum_{j > r} |lambda_j(A*_hat)|. In both cases the null is imposed by
// recentering: each bootstrap replicate A*_b is mapped to
// P + (A*_b - A*_hat), where P is the projection of A*_hat onto the null
// (negative eigenvalues clipped, or only the top r eigenpairs kept).

namespace blockcorr {

/// T x n observations with one group label per column.
struct DataMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> labels;
};

/// Observations with columns sorted by group.
struct GroupedData {
  Eigen::MatrixXd values;
  BlockSpec spec;
  std::vector<std::string> groups;
  /// column_order[j] = original index of sorted column j.
  std::vector<Index> column_order;

  static GroupedData from_sorted(Eigen::MatrixXd values, BlockSpec spec) {
    if (values.cols() != spec.n()) throw DimensionMismatch("data has " + std::to_string(values.cols()) +
                                                          " columns but the block spec has n = " +
                                                          std::to_string(spec.n()));
    GroupedData g{std::move(values), spec, {}, {}};
    for (Index k = 0; k < spec.K(); ++k) g.groups.push_back(std::to_string(k + 1));
    g.column_order.resize(static_cast<std::size_t>(spec.n()));
    std::iota(g.column_order.begin(), g.column_order.end(), Index{0});
    return g;
  }
};

/// Sorts columns by group. Groups are ordered by first appearance of their
/// label; columns keep their relative order inside a group.
inline GroupedData group_columns(const DataMatrix& d) {
  if (static_cast<Index>(d.labels.size()) != d.values.cols()) {
    throw DimensionMismatch("need one label per column (" + std::to_string(d.values.cols()) + " columns, " +
                            std::to_string(d.labels.size()) + " labels)");
  }
  GroupedData out;
  std::vector<std::vector<Index>> members;
  for (Index j = 0; j < d.values.cols(); ++j) {
    const auto& label = d.labels[static_cast<std::size_t>(j)];
    auto it = std::find(out.groups.begin(), out.groups.end(), label);
    if (it == out.groups.end()) {
      out.groups.push_back(label);
      members.emplace_back();
      it = out.groups.end() - 1;
    }
    members[static_cast<std::size_t>(it - out.groups.begin())].push_back(j);
  }
  std::vector<Index> sizes;
  for (const auto& m : members) {
    sizes.push_back(static_cast<Index>(m.size()));
    out.column_order.insert(out.column_order.end(), m.begin(), m.end());
  }
  out.spec = BlockSpec(sizes);
  out.values.resize(d.values.rows(), d.values.cols());
  for (Index j = 0; j < d.values.cols(); ++j)
    out.values.col(j) = d.values.col(out.column_order[static_cast<std::size_t>(j)]);
  return out;
}

namespace detail {

/// Correlation matrix of the rows of x weighted by integer counts (all ones
/// for the plain sample correlation). Rows of x should be roughly centered.
inline Eigen::MatrixXd weighted_correlation(const Eigen::MatrixXd& x, const Eigen::VectorXd& counts) {
  const double total = counts.sum();
  const Eigen::RowVectorXd mean = (counts.transpose() * x) / total;
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  Eigen::MatrixXd cov = centered.transpose() * (counts.asDiagonal() * centered);
  const Index n = x.cols();
  Eigen::VectorXd sd(n);
  for (Index j = 0; j < n; ++j) {
    if (!(cov(j, j) > 0.0)) throw ZeroVariance(j);
    sd(j) = std::sqrt(cov(j, j));
  }
  Eigen::MatrixXd corr(n, n);
  for (Index i = 0; i < n; ++i) {
    corr(i, i) = 1.0;
    for (Index j = 0; j < i; ++j) {
      const double r = std::clamp(cov(i, j) / (sd(i) * sd(j)), -1.0, 1.0);
      corr(i, j) = r;
      corr(j, i) = r;
    }
  }
  return corr;
}

/// Rows sorted lexicographically, so results do not depend on row order.
inline Eigen::MatrixXd canonical_rows(const Eigen::MatrixXd& x) {
  std::vector<Index> idx(static_cast<std::size_t>(x.rows()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::sort(idx.begin(), idx.end(), [&](Index a, Index b) {
    for (Index j = 0; j < x.cols(); ++j) {
      if (x(a, j) != x(b, j)) return x(a, j) < x(b, j);
    }
    return false;
  });
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) out.row(i) = x.row(idx[static_cast<std::size_t>(i)]);
  return out;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of bootstrap replicate `rep`; independent of how replicates are scheduled.
inline std::uint64_t replicate_seed(std::uint64_t seed, Index rep) {
  return splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(rep));
}

inline Eigen::MatrixXd block_astar(const Eigen::MatrixXd& corr, const BlockSpec& spec, double eps) {
  return compress(DenseCorr(corr), spec, std::numeric_limits<double>::infinity()).astar(1.0 - eps);
}

/// A*_b for every bootstrap replicate (rows resampled with replacement).
inline std::vector<Eigen::MatrixXd> bootstrap_astars(const Eigen::MatrixXd& x, const BlockSpec& spec, Index reps,
                                                     std::uint64_t seed, unsigned threads, double eps) {
  std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(reps));
  const Index T = x.rows();
  auto run = [&](Index begin, Index stride) {
    Eigen::VectorXd counts(T);
    for (Index b = begin; b < reps; b += stride) {
      std::mt19937_64 rng(replicate_seed(seed, b));
      std::uniform_int_distribution<Index> pick(0, T - 1);
      counts.setZero();
      for (Index t = 0; t < T; ++t) counts(pick(rng)) += 1.0;
      out[static_cast<std::size_t>(b)] = block_astar(weighted_correlation(x, counts), spec, eps);
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(reps)));
  if (workers == 1) {
    run(0, 1);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        run(static_cast<Index>(w), static_cast<Index>(workers));
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

/// Eigenvalues in descending order.
inline Eigen::VectorXd descending_eigenvalues(const Eigen::MatrixXd& m) {
  Eigen::VectorXd ev = sym_eigenvalues(m);
  return ev.reverse().eval();
}

inline double trailing_mass(const Eigen::VectorXd& descending, Index r) {
  return descending.tail(descending.size() - r).cwiseAbs().sum();
}

}  // namespace detail

struct BlockEstimate {
  BlockCorr corr;
  /// Groups whose estimated within correlation reached 1.
  std::vector<Index> boundary_groups;
  std::vector<std::string> warnings;
};

inline BlockEstimate estimate_block(const GroupedData& d) {
  const Index T = d.values.rows();
  if (T < 2) throw InvalidArgument("need at least two observations");
  if (d.values.cols() != d.spec.n()) throw DimensionMismatch("data columns do not match the block spec");
  const Eigen::MatrixXd corr = detail::weighted_correlation(d.values, Eigen::VectorXd::Ones(T));
  BlockEstimate out{compress(DenseCorr(corr), d.spec, std::numeric_limits<double>::infinity()), {}, {}};
  if (T <= d.spec.n()) {
    out.warnings.push_back("T = " + std::to_string(T) + " does not exceed n = " + std::to_string(d.spec.n()) +
                           "; the sample correlation matrix is singular");
  }
  for (Index k = 0; k < d.spec.K(); ++k) {
    if (auto w = out.corr.within(k); w && *w >= 1.0 - 1e-12) {
      out.boundary_groups.push_back(k);
      out.warnings.push_back("group " + d.groups.at(static_cast<std::size_t>(k)) +
                             " has within correlation 1 (boundary)");
    }
  }
  return out;
}

inline BlockEstimate estimate_block(const DataMatrix& d) { return estimate_block(group_columns(d)); }

struct BootstrapOptions {
  Index reps = 499;
  double level = 0.05;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  double eps = kDefaultCompletionEps;
};

struct TrailEntry {
  Index r;
  double statistic;
  double p_value;
  bool rejected;
  Index dof;
};

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  Index bootstrap_reps = 0;
  double level = 0.05;
  bool reject = false;
  /// Sequential rank tests; empty for test_cf.
  std::vector<TrailEntry> trail;
  /// Selected number of factors; set by select_rank unless the H_F pretest rejected.
  std::optional<Index> selected_rank;
  /// H_F pretest run by select_rank when requested.
  std::optional<double> pretest_statistic;
  std::optional<double> pretest_p_value;
};

namespace detail {

inline void check_options(const BootstrapOptions& o) {
  if (o.reps < 99) throw InvalidArgument("reps must be at least 99 (got " + std::to_string(o.reps) + ")");
  if (!(o.level > 0.0 && o.level < 1.0)) throw InvalidArgument("level must lie in (0, 1)");
}

inline double bootstrap_p_value(Index hits, Index reps) {
  return static_cast<double>(1 + hits) / static_cast<double>(reps + 1);
}

struct Prepared {
  Eigen::MatrixXd x;
  Eigen::MatrixXd astar;
};

inline Prepared prepare(const GroupedData& d, double eps) {
  if (d.values.rows() < 2) throw InvalidArgument("need at least two observations");
  Eigen::MatrixXd x = canonical_rows(d.values);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  Eigen::MatrixXd astar = block_astar(weighted_correlation(x, Eigen::VectorXd::Ones(x.rows())), d.spec, eps);
  return {std::move(x), std::move(astar)};
}

}  // namespace detail

/// Bootstrap test of H_F: lambda_min(A*) >= 0 against the lower-tail alternative.
inline TestResult test_cf(const GroupedData& d, const BootstrapOptions& opt = {}) {
  detail::check_options(opt);
  const auto prep = detail::prepare(d, opt.eps);
  const Eigen::MatrixXd null_astar = detail::sym_apply(prep.astar, [](double x) { return std::max(x, 0.0); });

  TestResult res;
  res.statistic = detail::sym_lambda_min(prep.astar);
  res.bootstrap_reps = opt.reps;
  res.level = opt.level;
  const auto boot = detail::bootstrap_astars(prep.x, d.spec, opt.reps, opt.seed, opt.threads, opt.eps);
  Index hits = 0;
  for (const auto& ab : boot) {
    const double s = detail::sym_lambda_min(null_astar + (ab - prep.astar));
    if (s <= res.statistic) ++hits;
  }
  res.p_value = detail::bootstrap_p_value(hits, opt.reps);
  res.reject = res.p_value <= opt.level;
  return res;
}

inline TestResult test_cf(const DataMatrix& d, const BootstrapOptions& opt = {}) {
  return test_cf(group_columns(d), opt);
}

enum class RankPretest { None, TestCf };

/// Sequential selection of the number of factors: test H_{F,0}, H_{F,1}, ...
/// and stop at the first hypothesis that is not rejected.
inline TestResult select_rank(const GroupedData& d, const BootstrapOptions& opt = {},
                              RankPretest pretest = RankPretest::None) {
  detail::check_options(opt);
  TestResult res;
  res.bootstrap_reps = opt.reps;
  res.level = opt.level;
  if (pretest == RankPretest::TestCf) {
    const TestResult h = test_cf(d, opt);
    res.pretest_statistic = h.statistic;
    res.pretest_p_value = h.p_value;
    if (h.reject) {
      res.statistic = h.statistic;
      res.p_value = h.p_value;
      res.reject = true;
      return res;
    }
  }

  const auto prep = detail::prepare(d, opt.eps);
  const Index K = d.spec.K();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(prep.astar);
  const Eigen::VectorXd lambda = es.eigenvalues().reverse();
  const Eigen::MatrixXd q = es.eigenvectors().rowwise().reverse();
  const auto boot = detail::bootstrap_astars(prep.x, d.spec, opt.reps, opt.seed, opt.threads, opt.eps);

  for (Index r = 0; r < K; ++r) {
    Eigen::MatrixXd null_astar = Eigen::MatrixXd::Zero(K, K);
    for (Index j = 0; j < r; ++j) null_astar += std::max(lambda(j), 0.0) * q.col(j) * q.col(j).transpose();
    const double stat = detail::trailing_mass(lambda, r);
    Index hits = 0;
    for (const auto& ab : boot) {
      const Eigen::VectorXd lb = detail::descending_eigenvalues(null_astar + (ab - prep.astar));
      if (detail::trailing_mass(lb, r) >= stat) ++hits;
    }
    const double p = detail::bootstrap_p_value(hits, opt.reps);
    const bool rejected = p <= opt.level;
    res.trail.push_back({r, stat, p, rejected, dof(K, r)});
    res.statistic = stat;
    res.p_value = p;
    res.reject = rejected;
    if (!rejected) {
      res.selected_rank = r;
      return res;
    }
  }
  res.selected_rank = K;
  return res;
}

inline TestResult select_rank(const DataMatrix& d, const BootstrapOptions& opt = {},
                              RankPretest pretest = RankPretest::None) {
  return select_rank(group_columns(d), opt, pretest);
}

/// Sequential procedure on an exactly known matrix: H_{F,r} is rejected while
/// the trailing eigenvalue mass exceeds rank_tol * lambda_max(A*).
inline TestResult select_rank_population(const BlockCorr& b, double rank_tol = kDefaultRankTol,
                                         double eps = kDefaultCompletionEps) {
  const Eigen::VectorXd lambda = detail::descending_eigenvalues(completed_astar(b, eps));
  const Index K = b.K();
  const double cut = rank_tol * std::max(lambda(0), 0.0);
  TestResult res;
  res.level = 0.0;
  for (Index r = 0; r < K; ++r) {
    const double stat = detail::trailing_mass(lambda, r);
    const bool rejected = stat > cut;
    res.trail.push_back({r, stat, rejected ? 0.0 : 1.0, rejected, dof(K, r)});
    res.statistic = stat;
    res.p_value = rejected ? 0.0 : 1.0;
    res.reject = rejected;
    if (!rejected) {
      res.selected_rank = r;
      return res;
    }
  }
  res.selected_rank = K;
  return res;
}

/// T Gaussian draws with correlation expand(b); the square root is taken at K x K scale.
inline Eigen::MatrixXd simulate(const BlockCorr& b, Index T, std::uint64_t seed) {
  const BlockMatrix root =
      detail::block_apply(as_block_matrix(b), [](double x) { return std::sqrt(std::max(x, 0.0)); });
  const Eigen::MatrixXd s = root.to_dense();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd e(T, b.spec().n());
  for (Index i = 0; i < e.size(); ++i) e.data()[i] = normal(rng);
  return e * s;
}

}  // namespace blockcorr
