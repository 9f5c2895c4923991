#ifndef SRL_FFT_HPP
#define SRL_FFT_HPP

#include "srl/core.hpp"

#include <unsupported/Eigen/FFT>

#include <vector>

namespace srl::fft {

//
// Sign conventions used throughout:
//   forward  X_m = sum_n x_n exp(-2 pi i n m / N)
//   backward x_n = sum_m X_m exp(+2 pi i n m / N)   (unscaled)
//

inline Eigen::FFT<double>& engine()
{
    thread_local Eigen::FFT<double> e = [] {
        Eigen::FFT<double> f;
        f.SetFlag(Eigen::FFT<double>::Unscaled);
        return f;
    }();
    return e;
}

inline void transform(std::vector<Complex>& data, bool backward)
{
    thread_local std::vector<Complex> scratch;
    scratch.resize(data.size());
    if (backward)
        engine().inv(scratch, data);
    else
        engine().fwd(scratch, data);
    data.swap(scratch);
}

/// Transform a flattened array of shape radix^dims along one axis (axis 0 most significant).
inline void transform_axis(std::vector<Complex>& data, long radix, int dims, int axis, bool backward)
{
    std::vector<Complex> line(static_cast<std::size_t>(radix));
    const long total = ipow(radix, dims);
    const long stride = ipow(radix, dims - 1 - axis);
    for (long base = 0; base < total; ++base) {
        if ((base / stride) % radix != 0)
            continue;
        for (long k = 0; k < radix; ++k)
            line[std::size_t(k)] = data[std::size_t(base + k * stride)];
        transform(line, backward);
        for (long k = 0; k < radix; ++k)
            data[std::size_t(base + k * stride)] = line[std::size_t(k)];
    }
}

inline void transform_all_axes(std::vector<Complex>& data, long radix, int dims, bool backward)
{
    for (int axis = 0; axis < dims; ++axis)
        transform_axis(data, radix, dims, axis, backward);
}

/// Signed frequency index of FFT slot k for length n: 0..n/2-1, -n/2..-1.
inline long signed_frequency(long k, long n) noexcept { return k < n / 2 ? k : k - n; }

} // namespace srl::fft

#endif // SRL_FFT_HPP
