#include "apo/nn/init.hpp"

#include <Eigen/QR>
#include <random>

#include "apo/common/error.hpp"

namespace apo::nn {

DenseMatrix orthogonal_matrix(std::size_t rows, std::size_t cols, double gain, Rng& rng) {
  require(gain > 0.0, "orthogonal_matrix: gain must be positive");
  require(rows > 0 && cols > 0, "orthogonal_matrix: empty shape");
  std::normal_distribution<double> normal(0.0, 1.0);

  const bool tall = rows >= cols;
  const auto n = static_cast<Eigen::Index>(tall ? rows : cols);
  const auto k = static_cast<Eigen::Index>(tall ? cols : rows);
  Eigen::MatrixXd a(n, k);
  // Fill in the orientation the caller sees (row-major rows x cols).
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const double x = normal(rng);
      if (tall)
        a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = x;
      else
        a(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)) = x;
    }

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
  const Eigen::MatrixXd& packed = qr.matrixQR();
  // Sign fix makes the distribution uniform (Haar) over orthogonal matrices.
  for (Eigen::Index j = 0; j < k; ++j)
    if (packed(j, j) < 0.0) q.col(j) *= -1.0;

  DenseMatrix w(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      w(r, c) = gain * (tall ? q(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))
                             : q(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)));
  return w;
}

void orthogonal_init(MlpNet& net, double hidden_gain, double output_gain, std::uint64_t seed) {
  require(hidden_gain > 0.0 && output_gain > 0.0, "orthogonal_init: gains must be positive");
  Rng rng(seed);
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    const LayerShape& l = net.layer(i);
    const double gain = (i + 1 == net.num_layers()) ? output_gain : hidden_gain;
    net.set_weight(i, orthogonal_matrix(l.rows, l.cols, gain, rng));
    net.set_bias(i, std::vector<double>(l.rows, 0.0));
  }
}

}  // namespace apo::nn
