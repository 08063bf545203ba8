// Compiled with vectorization-friendly flags (see core/CMakeLists.txt): the
// log/cos/sin/sqrt passes below account for most of the simulation budget on
// a single core. Inputs are constrained so no pass can produce NaN or inf.

#include "sim_rng.hpp"

#include <cmath>
#include <stdexcept>

namespace impulse::detail {

void fill_normals(Xoshiro256pp& rng, double* z, int n) {
    if (n <= 0 || n > kChunkNormals) throw std::invalid_argument("fill_normals: bad chunk size");

    constexpr int kHalf = kChunkNormals / 2;
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    constexpr double kScale = 0x1.0p-53;

    double u1[kHalf], u2[kHalf], radius[kHalf], zc[kHalf], zs[kHalf];

    const int pairs = (n + 1) / 2;
    for (int i = 0; i < pairs; ++i) {
        u1[i] = (double(rng.next() >> 11) + 1.0) * kScale;  // (0, 1]
        u2[i] = double(rng.next() >> 11) * kScale;          // [0, 1)
    }
    for (int i = 0; i < pairs; ++i) radius[i] = std::sqrt(-2.0 * std::log(u1[i]));
    for (int i = 0; i < pairs; ++i) zc[i] = std::cos(kTwoPi * u2[i]);
    for (int i = 0; i < pairs; ++i) zs[i] = std::sin(kTwoPi * u2[i]);
    for (int i = 0; i < pairs; ++i) zc[i] *= radius[i];
    for (int i = 0; i < pairs; ++i) zs[i] *= radius[i];

    for (int i = 0; i < pairs; ++i) z[i] = zc[i];
    for (int j = 0; j < n - pairs; ++j) z[pairs + j] = zs[j];
}

}  // namespace impulse::detail
