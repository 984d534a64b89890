#pragma once

#include <complex>
#include <vector>

namespace ctbench {

// FFTW-backed transforms. Unnormalized forward; inverse divides by N.
// Safe to call from multiple threads (plan creation is serialized).

void fft_inplace(std::vector<std::complex<double>>& data, bool inverse);

/// 2D transform of an nx-major grid (data[v * nx + u]).
void fft2_inplace(std::vector<std::complex<double>>& data, int nx, int ny, bool inverse);

/// Smallest power of two >= n.
int next_pow2(int n);

} // namespace ctbench
