#pragma once
#include <complex>
#include <vector>
#include <cmath>

namespace btx {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;
inline const cplx iu{0.0, 1.0};

inline double sq(double x) { return x * x; }
inline cplx sq(cplx x) { return x * x; }

inline bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// principal roots; arguments must avoid the negative real axis for continuity
inline cplx psqrt(cplx z) { return std::sqrt(z); }
inline cplx pquart(cplx z) { return std::pow(z, 0.25); }

using Polyline = std::vector<cplx>;

} // namespace btx
