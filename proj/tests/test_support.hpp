#pragma once

#include <Eigen/Core>

#include <random>
#include <vector>

#include "blockcorr/blockcorr.hpp"
#include "oracle/dense_oracle.hpp"

namespace testing_support {

using blockcorr::BlockCorr;
using blockcorr::BlockSpec;
using blockcorr::Index;

inline BlockCorr counterexample9x9() {
  Eigen::MatrixXd r(3, 3);
  r << 0.70, 0.58, 0.54, 0.58, 0.63, 0.19, 0.54, 0.19, 0.71;
  return BlockCorr::from_matrix(BlockSpec{3, 3, 3}, r);
}

inline BlockCorr example6x6() {
  Eigen::MatrixXd r(2, 2);
  r << 0.4, 0.3, 0.3, 0.6;
  return BlockCorr::from_matrix(BlockSpec{3, 3}, r);
}

inline BlockCorr make(BlockSpec spec, std::initializer_list<double> rowmajor) {
  const Index K = spec.K();
  Eigen::MatrixXd r(K, K);
  auto it = rowmajor.begin();
  for (Index i = 0; i < K; ++i)
    for (Index j = 0; j < K; ++j) r(i, j) = *it++;
  return BlockCorr::from_matrix(std::move(spec), r);
}

/// Random partition with K in [1, max_k] and n <= max_n.
inline BlockSpec random_spec(std::mt19937_64& rng, Index max_k, Index max_n, bool allow_singletons = true) {
  std::uniform_int_distribution<Index> pick_k(1, max_k);
  const Index K = pick_k(rng);
  const Index min_size = allow_singletons ? 1 : 2;
  std::uniform_int_distribution<Index> pick_n(K * min_size, max_n);
  const Index n = pick_n(rng);
  std::vector<Index> sizes(static_cast<std::size_t>(K), min_size);
  std::uniform_int_distribution<Index> pick_group(0, K - 1);
  for (Index extra = n - K * min_size; extra > 0; --extra) ++sizes[static_cast<std::size_t>(pick_group(rng))];
  return BlockSpec(sizes);
}

/// Random positive definite matrix with lambda_min(C) >= min_lambda. Mixes
/// between eta draws (any sign pattern, CF or not) and factor-plus-noise draws.
inline BlockCorr random_pd(std::mt19937_64& rng, Index max_k, Index max_n, double min_lambda = 1e-3) {
  const BlockSpec spec = random_spec(rng, max_k, max_n);
  if (std::bernoulli_distribution(0.5)(rng)) {
    std::uniform_real_distribution<double> scale(0.05, 0.4);
    for (;;) {
      BlockCorr b = blockcorr::sample(spec, scale(rng), rng());
      if (blockcorr::is_positive_definite(b).lambda_min >= min_lambda) return b;
    }
  }
  const Index K = spec.K();
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> norm(0.0, 0.95);
  Eigen::MatrixXd B = Eigen::MatrixXd::NullaryExpr(K, K, [&] { return normal(rng); });
  for (Index k = 0; k < K; ++k) B.row(k) *= norm(rng) / B.row(k).norm();
  return blockcorr::from_loadings(B, spec);
}

inline Eigen::MatrixXd corr_oracle(const BlockCorr& b) {
  return oracle::assemble_corr(b.spec().sizes(), b.within_values(), b.cross_values());
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testing_support
