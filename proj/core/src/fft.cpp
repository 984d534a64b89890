#include "ctbench/fft.hpp"

#include <mutex>

#include <fftw3.h>

#include "ctbench/errors.hpp"

namespace ctbench {

namespace {
// FFTW planning is not thread-safe; execution of distinct plans is.
std::mutex g_plan_mutex;
} // namespace

void fft_inplace(std::vector<std::complex<double>>& data, bool inverse) {
    if (data.empty()) return;
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(g_plan_mutex);
        plan = fftw_plan_dft_1d(static_cast<int>(data.size()), p, p,
                                inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
    }
    if (!plan) throw NumericalError("fftw planning failed");
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(g_plan_mutex);
        fftw_destroy_plan(plan);
    }
    if (inverse) {
        const double scale = 1.0 / static_cast<double>(data.size());
        for (auto& c : data) c *= scale;
    }
}

void fft2_inplace(std::vector<std::complex<double>>& data, int nx, int ny, bool inverse) {
    if (nx <= 0 || ny <= 0 || data.size() != static_cast<std::size_t>(nx) * ny)
        throw DataError("fft2: buffer size does not match dimensions");
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(g_plan_mutex);
        // Row-major: slowest dimension first.
        plan = fftw_plan_dft_2d(ny, nx, p, p, inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                FFTW_ESTIMATE);
    }
    if (!plan) throw NumericalError("fftw planning failed");
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(g_plan_mutex);
        fftw_destroy_plan(plan);
    }
    if (inverse) {
        const double scale = 1.0 / static_cast<double>(data.size());
        for (auto& c : data) c *= scale;
    }
}

int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

} // namespace ctbench
