#pragma once

#include <cstdint>
#include <vector>

#include "afenet/image.hpp"

namespace afenet {

/// Orthonormal DCT-II matrix of size n x n, row-major: row u holds
/// a(u) cos(pi (2x + 1) u / 2n).
std::vector<double> dct_matrix(std::int64_t n);

/// Orthonormal 2-D DCT-II, computed separably as D_h X D_w^T.
Plane dct2(const Plane& x);

/// Inverse of dct2 (the 2-D DCT-III), D_h^T C D_w.
Plane idct2(const Plane& coeffs);

}  // namespace afenet
