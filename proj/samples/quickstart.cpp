// Checks a block correlation matrix for a CF representation and round-trips
// it through the log parametrization.

#include <iostream>

#include "blockcorr/blockcorr.hpp"

int main() {
  using namespace blockcorr;

  Eigen::MatrixXd rho(3, 3);
  rho << 0.70, 0.58, 0.54,
         0.58, 0.63, 0.19,
         0.54, 0.19, 0.71;
  const BlockCorr c = BlockCorr::from_matrix(BlockSpec{3, 3, 3}, rho);

  const auto report = check_admissible(c);
  std::cout << "lambda_min(C)  = " << report.lambda_min_c << "\n"
            << "lambda_min(A*) = " << report.lambda_min_astar << "\n"
            << "admissible     = " << std::boolalpha << report.admissible << "\n";

  const EtaVector eta = encode_eta(log_block(c), EtaOrder::WithinThenCross);
  std::cout << "eta = " << eta.values.transpose() << "\n";

  const BlockCorr back = inverse_map(eta);
  std::cout << "max |rho - rho'| = " << (back.astar(0.0) - c.astar(0.0)).cwiseAbs().maxCoeff() << "\n";

  // A one-factor matrix needs a single loading column.
  Eigen::VectorXd beta(3);
  beta << 0.7, 0.6, 0.5;
  const auto f = loadings(from_loadings(beta, BlockSpec{3, 3, 3}));
  std::cout << "factors = " << f.r << ", B = " << f.B.transpose() << "\n";
}
