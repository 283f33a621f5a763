#include "peakspec/secular.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

#include "peakspec/quadrature.hpp"

namespace peakspec::secular {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kRootRelTol = 1e-13;

// Bisection refined by safeguarded Newton steps.  The bracket [lo, hi] must
// carry a sign change of f; fp is the derivative (may return 0 to force a
// bisection step).  Converges to relative tolerance kRootRelTol.
double solve_bracketed(const std::function<double(double)>& f,
                       const std::function<double(double)>& fp, double lo, double hi) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0)
        throw std::runtime_error("secular: internal bracket failure [" +
                                 std::to_string(lo) + ", " + std::to_string(hi) + "]");
    // bisection with Newton acceleration, run to machine-level width
    double x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 250; ++iter) {
        const double fx = f(x);
        if (fx == 0.0) return x;
        if ((flo < 0.0) == (fx < 0.0)) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
        if (hi - lo <= 1e-15 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)))) break;
        const double d = fp(x);
        double next = 0.5 * (lo + hi);
        if (d != 0.0) {
            const double newton = x - fx / d;
            if (newton > lo && newton < hi) next = newton;
        }
        // a Newton candidate equal to the current point cannot make
        // progress; fall back to the bracket midpoint
        if (next == x) next = 0.5 * (lo + hi);
        x = next;
    }
    return 0.5 * (lo + hi);
}

// k tanh(kL) - r, increasing from 0 to +inf; one root iff r > 0.
double negative_even_wavenumber(double L, double r) {
    auto f = [&](double k) { return k * std::tanh(k * L) - r; };
    auto fp = [&](double k) {
        const double t = std::tanh(k * L);
        return t + k * L * (1.0 - t * t);
    };
    double hi = std::max(r, 1.0 / L) + 1.0;
    while (f(hi) < 0.0) hi *= 2.0;
    return solve_bracketed(f, fp, 0.0, hi);
}

// k coth(kL) - r, increasing from 1/L to +inf; one root iff rL > 1.
// Near k = 0 the product k coth(kL) is evaluated by its series to avoid
// cancellation.
double negative_odd_wavenumber(double L, double r) {
    auto val = [&](double k) {
        const double x = k * L;
        if (x < 1e-5) return 1.0 / L + k * x / 3.0 - k * x * x * x / 45.0;
        return k / std::tanh(x);
    };
    auto f = [&](double k) { return val(k) - r; };
    auto fp = [&](double k) {
        const double x = k * L;
        if (x < 1e-5) return 2.0 * x / 3.0;
        const double c = 1.0 / std::tanh(x);
        return c + k * L * (1.0 - c * c);
    };
    double hi = std::max(r, 1.0 / L) + 1.0;
    while (f(hi) < 0.0) hi *= 2.0;
    return solve_bracketed(f, fp, 0.0, hi);
}

// Roots of k tan(kL) = -r written pole-free as h(k) = k sin(kL) + r cos(kL).
// The m-th bracket is kL in ((2m-1) pi/2, (2m+1) pi/2) for m >= 1; for r < 0
// there is one extra root with kL in (0, pi/2).
double positive_even_wavenumber(double L, double r, int m) {
    auto f = [&](double k) { return k * std::sin(k * L) + r * std::cos(k * L); };
    auto fp = [&](double k) {
        return std::sin(k * L) + k * L * std::cos(k * L) - r * L * std::sin(k * L);
    };
    const double lo = (m == 0) ? 0.0 : (2.0 * m - 1.0) * kPi / (2.0 * L);
    const double hi = (2.0 * m + 1.0) * kPi / (2.0 * L);
    return solve_bracketed(f, fp, lo, hi);
}

// Roots of k cot(kL) = r written pole-free as w(k) = k cos(kL) - r sin(kL).
// To keep the k -> 0 endpoint regular the first bracket uses w(k)/k, whose
// limit at 0 is 1 - rL.  Brackets: kL in (m pi, (m+1) pi), the m = 0 one
// only when rL < 1.
double positive_odd_wavenumber(double L, double r, int m) {
    if (m == 0) {
        auto f = [&](double k) {
            const double x = k * L;
            if (x < 1e-8) return 1.0 - r * L;  // limit of cos(x) - r sin(x)/k * ...
            return std::cos(x) - r * std::sin(x) / k;
        };
        auto fp = [&](double k) {
            const double x = k * L;
            if (x < 1e-8) return 0.0;
            return -L * std::sin(x) - r * (L * std::cos(x) * k - std::sin(x)) / (k * k);
        };
        return solve_bracketed(f, fp, 0.0, kPi / L);
    }
    auto f = [&](double k) { return k * std::cos(k * L) - r * std::sin(k * L); };
    auto fp = [&](double k) {
        return std::cos(k * L) - k * L * std::sin(k * L) - r * L * std::cos(k * L);
    };
    return solve_bracketed(f, fp, m * kPi / L, (m + 1) * kPi / L);
}

struct BranchFlags {
    bool has_negative_even;
    bool has_negative_odd;
    bool has_zero_even;
    bool has_zero_odd;
    bool has_first_positive_even;  // the extra root with kL in (0, pi/2)
    bool has_first_positive_odd;   // the root with kL in (0, pi)
};

BranchFlags classify(const IntervalRobinSpec& spec) {
    const double r = spec.robin;
    const double rl = spec.robin * spec.half_length;
    BranchFlags b{};
    b.has_zero_even = std::abs(r) <= kZeroBranchTol;
    b.has_zero_odd = std::abs(rl - 1.0) <= kZeroBranchTol;
    b.has_negative_even = r > kZeroBranchTol;
    b.has_negative_odd = rl > 1.0 + kZeroBranchTol;
    b.has_first_positive_even = r < -kZeroBranchTol;
    b.has_first_positive_odd = rl < 1.0 - kZeroBranchTol;
    return b;
}

}  // namespace

void IntervalRobinSpec::validate() const {
    if (!(half_length > 0.0))
        throw std::invalid_argument("IntervalRobinSpec: half_length must be positive");
    if (!std::isfinite(robin))
        throw std::invalid_argument("IntervalRobinSpec: robin parameter must be finite");
}

std::vector<SecularRoot> enumerate_roots(const IntervalRobinSpec& spec, int count) {
    spec.validate();
    if (count < 1) throw std::invalid_argument("enumerate_roots: count must be >= 1");
    const double L = spec.half_length;
    const double r = spec.robin;
    const BranchFlags flags = classify(spec);

    // Each parity family is produced in increasing eigenvalue order; a
    // two-way merge then yields the global ordering with even-before-odd
    // tie breaking.
    std::vector<SecularRoot> even, odd;
    int even_idx = 0, odd_idx = 0;

    if (flags.has_negative_even) {
        const double k = negative_even_wavenumber(L, r);
        even.push_back({Parity::even, ++even_idx, -k * k, k, SpectralSign::negative});
    }
    if (flags.has_zero_even)
        even.push_back({Parity::even, ++even_idx, 0.0, 0.0, SpectralSign::zero});
    if (flags.has_negative_odd) {
        const double k = negative_odd_wavenumber(L, r);
        odd.push_back({Parity::odd, ++odd_idx, -k * k, k, SpectralSign::negative});
    }
    if (flags.has_zero_odd)
        odd.push_back({Parity::odd, ++odd_idx, 0.0, 0.0, SpectralSign::zero});

    int next_even_interval = flags.has_first_positive_even ? 0 : 1;
    int next_odd_interval = flags.has_first_positive_odd ? 0 : 1;
    auto grow_even = [&]() {
        const double k = positive_even_wavenumber(L, r, next_even_interval++);
        even.push_back({Parity::even, ++even_idx, k * k, k, SpectralSign::positive});
    };
    auto grow_odd = [&]() {
        const double k = positive_odd_wavenumber(L, r, next_odd_interval++);
        odd.push_back({Parity::odd, ++odd_idx, k * k, k, SpectralSign::positive});
    };

    std::vector<SecularRoot> merged;
    merged.reserve(count);
    std::size_t ie = 0, io = 0;
    while (static_cast<int>(merged.size()) < count) {
        if (ie == even.size()) grow_even();
        if (io == odd.size()) grow_odd();
        if (even[ie].eigenvalue <= odd[io].eigenvalue)
            merged.push_back(even[ie++]);
        else
            merged.push_back(odd[io++]);
    }
    return merged;
}

double interval_eigenvalue(const IntervalRobinSpec& spec, int j, int index_window) {
    if (j < 1) throw std::invalid_argument("interval_eigenvalue: index must be >= 1");
    if (j > index_window)
        throw std::invalid_argument("interval_eigenvalue: index " + std::to_string(j) +
                                    " exceeds the configured window " +
                                    std::to_string(index_window));
    return enumerate_roots(spec, j)[j - 1].eigenvalue;
}

double ground_energy_correction(double x) {
    if (!(x > 0.0))
        throw std::invalid_argument("ground_energy_correction: argument must be positive");
    const double e1 = interval_eigenvalue({1.0, x}, 1);
    return (e1 + x) / (x * x);
}

namespace {

// Closed-form normalized eigenfunction for a secular root, sign fixed so the
// value at t = L is nonnegative.
double eigenfunction_value(const IntervalRobinSpec& spec, const SecularRoot& root, double t) {
    const double L = spec.half_length;
    const double k = root.wavenumber;
    switch (root.sign) {
        case SpectralSign::negative: {
            if (root.parity == Parity::even) {
                // cosh profile; norm^2 = L + sinh(2kL)/(2k)
                const double norm = std::sqrt(L + std::sinh(2.0 * k * L) / (2.0 * k));
                return std::cosh(k * t) / norm;
            }
            const double norm = std::sqrt(std::sinh(2.0 * k * L) / (2.0 * k) - L);
            return std::sinh(k * t) / norm;
        }
        case SpectralSign::zero: {
            if (root.parity == Parity::even) return 1.0 / std::sqrt(2.0 * L);
            return t * std::sqrt(1.5 / (L * L * L));
        }
        case SpectralSign::positive: {
            if (root.parity == Parity::even) {
                const double norm2 = L + std::sin(2.0 * k * L) / (2.0 * k);
                double v = std::cos(k * t) / std::sqrt(norm2);
                return std::cos(k * L) >= 0.0 ? v : -v;
            }
            const double norm2 = L - std::sin(2.0 * k * L) / (2.0 * k);
            double v = std::sin(k * t) / std::sqrt(norm2);
            return std::sin(k * L) >= 0.0 ? v : -v;
        }
    }
    return 0.0;
}

}  // namespace

double eigenfunction(const IntervalRobinSpec& spec, int j, double t) {
    if (std::abs(t) > spec.half_length)
        throw std::invalid_argument("eigenfunction: evaluation point outside (-L, L)");
    const auto roots = enumerate_roots(spec, j);
    return eigenfunction_value(spec, roots[j - 1], t);
}

double eigenfunction_r_derivative_norm(const IntervalRobinSpec& spec, int j, double h) {
    if (!(h > 0.0))
        throw std::invalid_argument("eigenfunction_r_derivative_norm: step must be positive");
    const IntervalRobinSpec lo{spec.half_length, spec.robin - h};
    const IntervalRobinSpec hi{spec.half_length, spec.robin + h};
    const SecularRoot root_lo = enumerate_roots(lo, j)[j - 1];
    const SecularRoot root_hi = enumerate_roots(hi, j)[j - 1];
    if (root_lo.parity != root_hi.parity || root_lo.sign != root_hi.sign ||
        root_lo.index_within_parity != root_hi.index_within_parity)
        throw std::runtime_error(
            "eigenfunction_r_derivative_norm: branch crossing within [r-h, r+h]");
    auto diff_sq = [&](double t) {
        const double d = (eigenfunction_value(hi, root_hi, t) -
                          eigenfunction_value(lo, root_lo, t)) /
                         (2.0 * h);
        return d * d;
    };
    return quadrature::composite<quadrature::GaussRule4>(diff_sq, -spec.half_length,
                                                         spec.half_length, 64);
}

}  // namespace peakspec::secular
