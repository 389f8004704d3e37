#pragma once

#include <complex>

namespace shubin::detail {

// Unnormalized DFT of length N (rank 1) or N x N (rank 2), out of place.
// sign = -1 forward, +1 backward. Safe to call from several threads.
void dft(const std::complex<double>* in, std::complex<double>* out, int rank, int N, int sign);

}  // namespace shubin::detail
