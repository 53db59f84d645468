#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"

using namespace blockcorr;
using namespace testing_support;

namespace {

// Dense matrix logarithm of the 6 x 6 example computed independently
// (Schur-Pade logm in double precision), frozen here.
constexpr double kD1 = -0.185367008512023;
constexpr double kD2 = -0.38357641096889233;
constexpr double kW1 = 0.3254586152539681;
constexpr double kW2 = 0.5327143209052626;
constexpr double kG12 = 0.1622265066342908;

double round_to(double x, int decimals) {
  const double s = std::pow(10.0, decimals);
  return std::round(x * s) / s;
}

Eigen::MatrixXd dense_log(const Eigen::MatrixXd& c) {
  return oracle::spectral(c, [](double x) { return std::log(x); });
}

Eigen::MatrixXd dense_exp(const Eigen::MatrixXd& c) {
  return oracle::spectral(c, [](double x) { return std::exp(x); });
}

}  // namespace

TEST(LogBlock, SixBySixExample) {
  const auto l = log_block(example6x6());
  EXPECT_NEAR(l.d(0), kD1, 1e-12);
  EXPECT_NEAR(l.d(1), kD2, 1e-12);
  EXPECT_NEAR(*l.w[0], kW1, 1e-12);
  EXPECT_NEAR(*l.w[1], kW2, 1e-12);
  EXPECT_NEAR(l.g(0, 1), kG12, 1e-12);
  EXPECT_EQ(l.g(0, 1), l.g(1, 0));
  // Rounded as printed: -.19, -.38 (two decimals); .162, .533 (three decimals).
  EXPECT_EQ(round_to(l.d(0), 2), -0.19);
  EXPECT_EQ(round_to(l.d(1), 2), -0.38);
  EXPECT_EQ(round_to(l.g(0, 1), 3), 0.162);
  EXPECT_EQ(round_to(*l.w[1], 3), 0.533);
}

TEST(LogBlock, Identity) {
  const auto l = log_block(BlockCorr::identity(BlockSpec{2, 1, 3}));
  EXPECT_LT(l.d.cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT(std::abs(*l.w[0]), 1e-15);
  EXPECT_FALSE(l.w[1].has_value());
  EXPECT_LT(l.g.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(LogBlock, RejectsSingular) {
  EXPECT_THROW(log_block(make(BlockSpec{2, 2}, {0.5, 1.0, 1.0, 0.5})), NotPositiveDefinite);
  EXPECT_THROW(log_block(make(BlockSpec{2}, {1.0})), NotPositiveDefinite);
}

TEST(ExpBlock, InvertsLogOnSixBySix) {
  const BlockMatrix m = exp_block(log_block(example6x6()));
  EXPECT_NEAR(m.diagonal(0), 1.0, 1e-12);
  EXPECT_NEAR(m.diagonal(1), 1.0, 1e-12);
  EXPECT_NEAR(*m.within[0], 0.4, 1e-12);
  EXPECT_NEAR(*m.within[1], 0.6, 1e-12);
  EXPECT_NEAR(m.cross(0, 1), 0.3, 1e-12);
}

TEST(ExpBlock, ZeroIsIdentity) {
  const BlockSpec spec{3, 1, 2};
  const LogBlock zero{spec, Eigen::VectorXd::Zero(3), WithinValues{0.0, std::nullopt, 0.0}, Eigen::MatrixXd::Zero(3, 3)};
  EXPECT_LT(max_abs_diff(exp_block(zero).to_dense(), Eigen::MatrixXd::Identity(6, 6)), 1e-15);
}

TEST(Eta, SixBySixOrders) {
  const auto l = log_block(example6x6());
  const auto wg = encode_eta(l);
  ASSERT_EQ(wg.values.size(), 3);
  EXPECT_NEAR(wg.values(0), kW1, 1e-12);
  EXPECT_NEAR(wg.values(1), kW2, 1e-12);
  EXPECT_NEAR(wg.values(2), kG12, 1e-12);
  const auto displayed = encode_eta(l, EtaOrder::Paper);
  EXPECT_NEAR(displayed.values(0), kW1, 1e-12);
  EXPECT_NEAR(displayed.values(1), kG12, 1e-12);
  EXPECT_NEAR(displayed.values(2), kW2, 1e-12);
  EXPECT_EQ(reorder(wg, EtaOrder::Paper).values, displayed.values);
  EXPECT_EQ(reorder(displayed, EtaOrder::WithinThenCross).values, wg.values);
}

TEST(Eta, LengthSkipsSingletons) {
  EXPECT_EQ(eta_length(BlockSpec{3, 3}), 3);
  EXPECT_EQ(eta_length(BlockSpec{5, 3, 1, 2}), 9);
  EXPECT_EQ(eta_length(BlockSpec{1}), 0);
}

TEST(Eta, ZeroDecodesToZero) {
  const EtaVector e{BlockSpec{2, 1, 4}, Eigen::VectorXd::Zero(5), EtaOrder::WithinThenCross};
  const auto off = decode_eta(e);
  EXPECT_EQ(off.w[0], 0.0);
  EXPECT_FALSE(off.w[1].has_value());
  EXPECT_EQ(off.g, Eigen::MatrixXd::Zero(3, 3));
}

TEST(Eta, LengthMismatch) {
  const EtaVector e{BlockSpec{3, 3}, Eigen::VectorXd::Zero(4), EtaOrder::WithinThenCross};
  EXPECT_THROW(decode_eta(e), DimensionMismatch);
}

TEST(Eta, CodecRoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const BlockSpec spec = random_spec(rng, 7, 30);
    for (auto order : {EtaOrder::WithinThenCross, EtaOrder::Paper}) {
      const EtaVector e{spec, Eigen::VectorXd::NullaryExpr(eta_length(spec), [&] { return u(rng); }), order};
      const auto l = LogBlock::with_diagonal(decode_eta(e), Eigen::VectorXd::Zero(spec.K()));
      EXPECT_EQ(encode_eta(l, order).values, e.values);
    }
  }
}

TEST(InverseMap, SixBySixExample) {
  EtaVector e{BlockSpec{3, 3}, Eigen::VectorXd(3), EtaOrder::Paper};
  e.values << kW1, kG12, kW2;
  const auto b = inverse_map(e);
  EXPECT_NEAR(*b.within(0), 0.4, 1e-8);
  EXPECT_NEAR(b.cross(0, 1), 0.3, 1e-8);
  EXPECT_NEAR(*b.within(1), 0.6, 1e-8);
}

TEST(InverseMap, ZeroIsIdentity) {
  const EtaVector e{BlockSpec{4, 1, 2}, Eigen::VectorXd::Zero(eta_length(BlockSpec{4, 1, 2})),
                    EtaOrder::WithinThenCross};
  EXPECT_EQ(inverse_map(e), BlockCorr::identity(BlockSpec{4, 1, 2}));
}

TEST(InverseMap, Errors) {
  EtaVector e{BlockSpec{3, 4}, Eigen::Vector3d(0.5, -0.1, 0.3), EtaOrder::WithinThenCross};
  EXPECT_THROW(inverse_map(e, 1e-12, 1), NoConvergence);
  e.values(1) = std::nan("");
  EXPECT_THROW(inverse_map(e), InvalidArgument);
}

// Dense fixed point on the assembled n x n log matrix, using the Jacobi
// oracle: d_i <- d_i - log(exp(L)_ii) until the diagonal is 1.
BlockCorr dense_inverse(const EtaVector& e) {
  const auto off = decode_eta(e);
  const BlockSpec& spec = e.spec;
  std::vector<double> d(static_cast<std::size_t>(spec.K()), 0.0);
  Eigen::MatrixXd c;
  for (int it = 0; it < 5000; ++it) {
    c = dense_exp(oracle::assemble(spec.sizes(), d, off.w, off.g));
    double res = 0.0;
    for (Index k = 0; k < spec.K(); ++k) {
      const double diag = c(spec.offset(k), spec.offset(k));
      res = std::max(res, std::abs(diag - 1.0));
      d[static_cast<std::size_t>(k)] -= std::log(diag);
    }
    if (res < 1e-13) break;
  }
  const Eigen::VectorXd s = c.diagonal().cwiseSqrt().cwiseInverse();
  c = s.asDiagonal() * c * s.asDiagonal();
  c = ((c + c.transpose()) / 2).eval();
  c.diagonal().setOnes();
  return compress(DenseCorr(c), spec, 1e-9);
}

TEST(InverseMap, RandomRoundTripAndDenseCrossCheck) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const BlockSpec spec{5, 3, 1, 2};
  for (int trial = 0; trial < 25; ++trial) {
    const EtaVector e{spec, Eigen::VectorXd::NullaryExpr(eta_length(spec), [&] { return u(rng); }),
                      EtaOrder::WithinThenCross};
    const auto b = inverse_map(e);
    EXPECT_TRUE(is_positive_definite(b).positive_definite);
    EXPECT_LE((encode_eta(log_block(b)).values - e.values).cwiseAbs().maxCoeff(), 1e-8);
    const auto dense = dense_inverse(e);
    EXPECT_LE(max_abs_diff(expand(dense).matrix(), expand(b).matrix()), 1e-9);
  }
}

TEST(InverseMap, ResidualDecreasesMonotonically) {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 100; ++trial) {
    const BlockSpec spec = random_spec(rng, 6, 30);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    const EtaVector e{spec, Eigen::VectorXd::NullaryExpr(eta_length(spec), [&] { return u(rng); }),
                      EtaOrder::WithinThenCross};
    const auto res = inverse_map_detailed(e);
    for (std::size_t i = 1; i < res.residuals.size(); ++i) {
      ASSERT_LE(res.residuals[i], res.residuals[i - 1]) << "trial " << trial << " iteration " << i;
    }
  }
}

TEST(Sample, PositiveDefiniteAndDeterministic) {
  const BlockSpec spec{4, 1, 3, 2};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto b = sample(spec, 0.3, seed);
    EXPECT_TRUE(is_positive_definite(b).positive_definite);
    EXPECT_EQ(b, sample(spec, 0.3, seed));
  }
  EXPECT_NE(sample(spec, 0.3, 1), sample(spec, 0.3, 2));
  EXPECT_THROW(sample(spec, 0.0, 1), InvalidArgument);
}

TEST(Sample, SmallScaleApproachesIdentity) {
  const auto b = sample(BlockSpec{3, 2, 4}, 1e-9, 7);
  EXPECT_LT(max_abs_diff(expand(b).matrix(), Eigen::MatrixXd::Identity(9, 9)), 1e-7);
}

TEST(Gamma, VeclOrderAndBlockDuplicates) {
  Eigen::MatrixXd m(3, 3);
  m << 0, 1, 2, 1, 0, 3, 2, 3, 0;
  Eigen::VectorXd expected(3);
  expected << 1, 2, 3;
  EXPECT_EQ(vecl(m), expected);

  const Eigen::VectorXd g = gamma(expand(example6x6()));
  ASSERT_EQ(g.size(), 15);
  EXPECT_NEAR(g(0), kW1, 1e-12);  // (2,1)
  EXPECT_NEAR(g(2), kG12, 1e-12); // (4,1)
  EXPECT_NEAR(g(14), kW2, 1e-12); // (6,5)
}

class LogmapOracle : public ::testing::Test {
 protected:
  std::mt19937_64 rng{31337};
};

TEST_F(LogmapOracle, LogMatchesDense) {
  for (int trial = 0; trial < 60; ++trial) {
    const auto b = random_pd(rng, 6, 60);
    const auto l = log_block(b);
    EXPECT_LE(max_abs_diff(l.to_dense(), dense_log(corr_oracle(b))), 1e-10);
  }
}

TEST_F(LogmapOracle, ExpMatchesDense) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const BlockSpec spec = random_spec(rng, 5, 12);
    const Index K = spec.K();
    LogBlock l{spec, Eigen::VectorXd::NullaryExpr(K, [&] { return u(rng); }), WithinValues(K),
               Eigen::MatrixXd::Zero(K, K)};
    for (Index k = 0; k < K; ++k) {
      if (!spec.is_singleton(k)) l.w[static_cast<std::size_t>(k)] = u(rng);
      for (Index j = k + 1; j < K; ++j) l.g(k, j) = l.g(j, k) = u(rng);
    }
    const Eigen::MatrixXd dense = dense_exp(l.to_dense());
    EXPECT_LE(max_abs_diff(exp_block(l).to_dense(), dense), 1e-10 * std::max(1.0, dense.cwiseAbs().maxCoeff()));
  }
}
