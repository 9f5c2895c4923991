#ifndef SRL_CORE_HPP
#define SRL_CORE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace srl {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr double pi = std::numbers::pi;
inline constexpr double infinity = std::numeric_limits<double>::infinity();

//
// errors
//

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (axis out of range, p < 1, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The position grid is too narrow or too coarse for the requested basis.
class DomainTooNarrow : public Error {
public:
    using Error::Error;
};

/// Operands live on different grids or carry different hbar.
class GridMismatch : public Error {
public:
    using Error::Error;
};

/// A phase-space shift that is not an exact unitary on the periodic grid.
class IncompatibleTranslation : public Error {
public:
    using Error::Error;
};

class NumericalFailure : public Error {
public:
    using Error::Error;
};

/// Direction of a quantum gradient: (i/hbar)[p, .] or [x/(i hbar), .].
enum class GradientKind { x, xi };

/// Planck constant h = 2 pi hbar; every operator and norm carries one.
struct SemiclassicalParam {
    double hbar = 1.0;

    explicit SemiclassicalParam(double hbar_) : hbar(hbar_)
    {
        if (!(hbar_ > 0.0) || !std::isfinite(hbar_))
            throw InvalidArgument("hbar must be a positive finite number");
    }

    [[nodiscard]] double h() const noexcept { return 2.0 * pi * hbar; }
};

inline double planck_h(double hbar) noexcept { return 2.0 * pi * hbar; }

inline bool is_infinite_exponent(double p) noexcept { return std::isinf(p) && p > 0; }

/// Hoelder conjugate exponent, with 1' = inf and inf' = 1.
inline double conjugate_exponent(double p)
{
    if (p < 1.0)
        throw InvalidArgument("exponent must be >= 1");
    if (p == 1.0)
        return infinity;
    if (is_infinite_exponent(p))
        return 1.0;
    return p / (p - 1.0);
}

inline long ipow(long base, int exp)
{
    long r = 1;
    for (int i = 0; i < exp; ++i)
        r *= base;
    return r;
}

//
// mixed-radix multi-indices, axis 0 most significant (lexicographic order)
//

inline void unflatten(long index, long radix, int dim, std::vector<long>& out)
{
    out.resize(std::size_t(dim));
    for (int a = dim - 1; a >= 0; --a) {
        out[std::size_t(a)] = index % radix;
        index /= radix;
    }
}

inline long flatten(const std::vector<long>& digits, long radix)
{
    long index = 0;
    for (long d : digits)
        index = index * radix + d;
    return index;
}

inline long wrap_index(long i, long m) noexcept
{
    const long r = i % m;
    return r < 0 ? r + m : r;
}

//
// deterministic parallel loop: every index writes only its own slot, so the
// result does not depend on the thread count
//

inline unsigned& default_thread_count()
{
    static unsigned n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                         unsigned threads = 0)
{
    if (threads == 0)
        threads = default_thread_count();
    threads = unsigned(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count || failed.load())
                    return;
                try {
                    body(i);
                } catch (...) {
                    if (!failed.exchange(true))
                        failure = std::current_exception();
                    return;
                }
            }
        });
    }
    pool.clear();
    if (failure)
        std::rethrow_exception(failure);
}

/// Largest entrywise deviation of A from its conjugate transpose.
inline double hermitian_defect(const CMatrix& a)
{
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

} // namespace srl

#endif // SRL_CORE_HPP
