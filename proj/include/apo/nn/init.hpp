#pragma once

#include <cstdint>

#include "apo/common/rng.hpp"
#include "apo/nn/mlp.hpp"

namespace apo::nn {

// Random matrix with orthonormal rows or columns (whichever dimension is
// smaller), scaled by `gain`: W^T W = gain^2 I when rows >= cols, otherwise
// W W^T = gain^2 I. Draws rows*cols standard normals from `rng`.
DenseMatrix orthogonal_matrix(std::size_t rows, std::size_t cols, double gain, Rng& rng);

// Hidden layers get `hidden_gain`, the output layer `output_gain`; all biases
// are zeroed. Deterministic in `seed`.
void orthogonal_init(MlpNet& net, double hidden_gain, double output_gain, std::uint64_t seed);

}  // namespace apo::nn
