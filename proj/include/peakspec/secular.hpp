#pragma once

#include <vector>

namespace peakspec::secular {

// Robin Laplacian on the interval (-L, L): the operator f -> -f'' with the
// boundary condition f'(+-L) = +-r f(+-L), realized by the quadratic form
//
//     b(f,f) = int_{-L}^{L} |f'|^2 dt - r (|f(L)|^2 + |f(-L)|^2).
//
// Its spectrum splits into even and odd parity families whose eigenvalues
// are roots of transcendental secular equations:
//
//     negative branch, E = -k^2:   even  k tanh(kL) = r
//                                  odd   k coth(kL) = r
//     zero eigenvalue:             even iff r = 0,  odd iff rL = 1
//     positive branch, E = +k^2:   even  k tan(kL) = -r
//                                  odd   k cot(kL) = r
//
// There is exactly one negative eigenvalue for 0 < rL <= 1, exactly two for
// rL > 1 and none for r <= 0.
struct IntervalRobinSpec {
    double half_length;  // L > 0
    double robin;        // r, the boundary coupling

    void validate() const;  // throws std::invalid_argument on bad parameters
};

enum class Parity { even, odd };
enum class SpectralSign { negative, zero, positive };

struct SecularRoot {
    Parity parity;
    int index_within_parity;  // 1-based within its parity family
    double eigenvalue;        // -k^2, 0 or +k^2
    double wavenumber;        // k >= 0
    SpectralSign sign;
};

// Absolute tolerance for detecting the degenerate zero-eigenvalue cases
// r = 0 and rL = 1, where the secular branches collapse to the explicit
// constant/linear eigenfunctions.
inline constexpr double kZeroBranchTol = 1e-12;

// Default enumeration window; eigenvalue indices beyond it are out of scope.
inline constexpr int kDefaultIndexWindow = 12;

// First `count` roots merged across parities in nondecreasing eigenvalue
// order; numeric ties break even-before-odd.
std::vector<SecularRoot> enumerate_roots(const IntervalRobinSpec& spec, int count);

// j-th eigenvalue of the interval Robin operator, 1-based, nondecreasing.
// Roots are solved by bracketed bisection refined by safeguarded Newton to
// relative tolerance 1e-13.
double interval_eigenvalue(const IntervalRobinSpec& spec, int j,
                           int index_window = kDefaultIndexWindow);

// Quadratic-correction shape of the ground eigenvalue at unit half-length:
// the smooth bounded function x -> (E_1(x) + x) / x^2 for x > 0, where
// E_1(x) is the ground eigenvalue at L = 1, r = x.
double ground_energy_correction(double x);

// L^2-normalized eigenfunction of the j-th eigenvalue evaluated at t,
// |t| <= L.  The sign is fixed so that the value at t = L is nonnegative,
// which makes r -> Phi_j continuous across the branch switch at rL = 1.
double eigenfunction(const IntervalRobinSpec& spec, int j, double t);

// Squared L^2 norm of the central difference in r of the normalized
// eigenfunction family, (Phi_{r+h} - Phi_{r-h}) / (2h), integrated by
// composite Gauss quadrature (64 panels, 4 points each).  Throws if the
// j-th root changes branch within [r-h, r+h].
double eigenfunction_r_derivative_norm(const IntervalRobinSpec& spec, int j, double h);

}  // namespace peakspec::secular
