#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "peakspec/grid1d.hpp"
#include "peakspec/quadrature.hpp"
#include "peakspec/secular.hpp"

using namespace peakspec;
using secular::IntervalRobinSpec;

namespace {
constexpr double kPi = 3.14159265358979323846;

// independent quadrature of the squared eigenfunction (normalization oracle)
double eigenfunction_norm_sq(const IntervalRobinSpec& spec, int j) {
    return quadrature::composite<quadrature::GaussRule4>(
        [&](double t) {
            const double v = secular::eigenfunction(spec, j, t);
            return v * v;
        },
        -spec.half_length, spec.half_length, 96);
}
}  // namespace

TEST_CASE("Neumann interval values") {
    CHECK(secular::interval_eigenvalue({1.0, 0.0}, 1) == 0.0);  // constant ground state
    CHECK(std::abs(secular::interval_eigenvalue({1.0, 0.0}, 2) - kPi * kPi / 4.0) < 1e-12);
    CHECK(std::abs(secular::interval_eigenvalue({1.0, 0.0}, 3) - kPi * kPi) < 1e-11);
}

TEST_CASE("ground state with unit coupling matches the grid oracle") {
    const double secular_value = secular::interval_eigenvalue({1.0, 1.0}, 1);
    CHECK(secular_value == doctest::Approx(-1.439228839890645).epsilon(1e-12));
    const double oracle = grid1d::robin_interval_eigenvalue_extrapolated(1.0, 1.0, 1, 800);
    CHECK(std::abs(secular_value - oracle) < 1e-8);
}

TEST_CASE("secular matches the grid oracle over a small (L, r) set") {
    for (double L : {0.3, 1.0, 2.5})
        for (double r : {-0.8, 0.0, 0.7, 3.0})
            for (int j = 1; j <= 4; ++j) {
                const double exact = secular::interval_eigenvalue({L, r}, j);
                const double oracle = grid1d::robin_interval_eigenvalue_extrapolated(L, r, j, 800);
                CHECK(std::abs(exact - oracle) <= 1e-8 * std::max(1.0, std::abs(exact)));
            }
}

TEST_CASE("scaling identity to relative 1e-11 on randomized triples") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> dL(0.1, 4.0), dr(-1.0, 4.0);
    std::uniform_int_distribution<int> dj(1, 6);
    for (int i = 0; i < 100; ++i) {
        const double L = dL(rng), r = dr(rng);
        const int j = dj(rng);
        const double lhs = secular::interval_eigenvalue({L, r}, j);
        const double rhs = secular::interval_eigenvalue({1.0, r * L}, j) / (L * L);
        CHECK(std::abs(lhs - rhs) <= 1e-11 * std::max(1.0, std::abs(rhs)));
    }
}

TEST_CASE("ground correction function is bounded and pinned at x = 30") {
    // boundedness witness over a log grid in [1e-3, 50]
    double sup = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const double x = 1e-3 * std::pow(50.0 / 1e-3, i / 200.0);
        const double value = secular::ground_energy_correction(x);
        CHECK(std::isfinite(value));
        sup = std::max(sup, std::abs(value));
    }
    CHECK(sup < 2.0);
    // the exact large-x behavior: E_1(1, r) = -r^2 + O(r^2 e^{-2r}), hence
    // the correction tends to -1 + 1/x; at x = 30 the exponential tail is
    // far below double precision
    CHECK(secular::ground_energy_correction(30.0) ==
          doctest::Approx(-1.0 + 1.0 / 30.0).epsilon(1e-9));
}

TEST_CASE("second-eigenvalue correction shape is bounded") {
    // (E_2(1, x) - pi^2/4 + 2x) / x^2 stays bounded on [1e-3, 50]
    double sup = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const double x = 1e-3 * std::pow(50.0 / 1e-3, i / 200.0);
        const double e2 = secular::interval_eigenvalue({1.0, x}, 2);
        const double shape = (e2 - kPi * kPi / 4.0 + 2.0 * x) / (x * x);
        CHECK(std::isfinite(shape));
        sup = std::max(sup, std::abs(shape));
    }
    CHECK(sup < 2.0);
}

TEST_CASE("eigenfunction values and normalization") {
    CHECK(secular::eigenfunction({1.0, 0.0}, 1, 0.3) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-13));
    // second Neumann eigenfunction is sin(pi t / 2), already normalized
    CHECK(secular::eigenfunction({1.0, 0.0}, 2, 1.0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(secular::eigenfunction({1.0, 0.0}, 2, 0.5) ==
          doctest::Approx(std::sin(kPi / 4.0)).epsilon(1e-12));

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dL(0.2, 2.5), dr(-1.0, 3.0);
    std::uniform_int_distribution<int> dj(1, 4);
    for (int i = 0; i < 20; ++i) {
        const IntervalRobinSpec spec{dL(rng), dr(rng)};
        const int j = dj(rng);
        CHECK(eigenfunction_norm_sq(spec, j) == doctest::Approx(1.0).epsilon(1e-10));
        // sign convention at the right end
        CHECK(secular::eigenfunction(spec, j, spec.half_length) >= 0.0);
    }
}

TEST_CASE("eigenfunction is continuous across the zero-coupling branch switch") {
    // r -> Phi_{j,L,r} should not jump when the second eigenvalue crosses 0
    const double L = 1.0;
    for (double t : {-0.8, -0.2, 0.4, 1.0}) {
        const double below = secular::eigenfunction({L, 1.0 - 1e-7}, 2, t);
        const double above = secular::eigenfunction({L, 1.0 + 1e-7}, 2, t);
        CHECK(below == doctest::Approx(above).epsilon(1e-5));
    }
}

TEST_CASE("monotonicity in the coupling") {
    for (double L : {0.3, 1.0, 2.0})
        for (int j = 1; j <= 4; ++j) {
            double previous = secular::interval_eigenvalue({L, -1.0}, j);
            for (double r = -0.5; r <= 3.01; r += 0.5) {
                const double value = secular::interval_eigenvalue({L, r}, j);
                CHECK(value <= previous + 1e-11 * std::max(1.0, std::abs(previous)));
                previous = value;
            }
        }
}

TEST_CASE("negative eigenvalue count") {
    auto negatives = [](double L, double r) {
        const auto roots = secular::enumerate_roots({L, r}, 4);
        int count = 0;
        for (const auto& root : roots)
            if (root.sign == secular::SpectralSign::negative) ++count;
        return count;
    };
    CHECK(negatives(1.0, -2.0) == 0);
    CHECK(negatives(1.0, 0.0) == 0);
    CHECK(negatives(2.0, 0.2) == 1);   // rL = 0.4
    CHECK(negatives(1.0, 1.0) == 1);   // rL = 1 exactly: odd mode sits at zero
    CHECK(negatives(0.5, 3.0) == 2);   // rL = 1.5
    CHECK(negatives(2.0, 4.0) == 2);
}

TEST_CASE("Neumann derivative of the second eigenvalue") {
    const double h = 1e-5;
    const double derivative =
        (secular::interval_eigenvalue({1.0, h}, 2) - secular::interval_eigenvalue({1.0, 0.0}, 2)) /
        h;
    CHECK(std::abs(derivative - (-2.0)) < 1e-3);
}

TEST_CASE("deep-well limit of the second eigenvalue") {
    CHECK(std::abs(secular::interval_eigenvalue({12.0, 1.0}, 2) + 1.0) < 1e-6);
}

TEST_CASE("coupling-derivative norm of the eigenfunction family") {
    const double value = secular::eigenfunction_r_derivative_norm({1.0, 0.5}, 1, 1e-4);
    CHECK(std::isfinite(value));
    CHECK(value > 0.0);

    // sweep: the squared norm divided by L^2 stays below one constant
    double sup_ratio = 0.0;
    for (double L : {0.1, 0.5, 1.0, 2.0})
        for (double r : {0.1, 0.35, 0.8, 1.4, 1.9})
            for (int j : {1, 2}) {
                // keep clear of the branch switch at rL = 1
                if (std::abs(r * L - 1.0) < 0.05) continue;
                const double norm = secular::eigenfunction_r_derivative_norm({L, r}, j, 1e-5);
                sup_ratio = std::max(sup_ratio, norm / (L * L));
            }
    CHECK(sup_ratio < 3.0);  // empirical supremum, recorded with margin
    MESSAGE("sup of derivative-norm / L^2 over the sweep: ", sup_ratio);
}

TEST_CASE("product family coupling-derivative bound") {
    // s-derivative of Phi_j(t1; L, s^p) Phi_k(t2; Lt, s^q) in L^2 of the
    // rectangle, against C (L^2 + Lt^2)
    const double p = 1.2, q = 1.5, h = 1e-5;
    double sup_ratio = 0.0;
    for (double L : {0.25, 1.0})
        for (double Lt : {0.5, 2.0})
            for (int j : {1, 2}) {
                const int k = 1;
                for (double s : {0.4, 0.7, 0.95}) {
                    const double rp = std::pow(s, p), rq = std::pow(s, q);
                    const double drho_p = p * std::pow(s, p - 1.0);
                    const double drho_q = q * std::pow(s, q - 1.0);
                    auto d_ds = [&](double t1, double t2) {
                        const double f_p_hi =
                            secular::eigenfunction({L, rp + drho_p * h}, j, t1);
                        const double f_p_lo =
                            secular::eigenfunction({L, rp - drho_p * h}, j, t1);
                        const double f_q_hi =
                            secular::eigenfunction({Lt, rq + drho_q * h}, k, t2);
                        const double f_q_lo =
                            secular::eigenfunction({Lt, rq - drho_q * h}, k, t2);
                        return (f_p_hi * f_q_hi - f_p_lo * f_q_lo) / (2.0 * h);
                    };
                    const double integral = quadrature::composite<quadrature::GaussRule4>(
                        [&](double t1) {
                            return quadrature::composite<quadrature::GaussRule4>(
                                [&](double t2) {
                                    const double v = d_ds(t1, t2);
                                    return v * v;
                                },
                                -Lt, Lt, 24);
                        },
                        -L, L, 24);
                    sup_ratio = std::max(sup_ratio, integral / (L * L + Lt * Lt));
                }
            }
    CHECK(sup_ratio < 8.0);  // empirical constant, recorded with margin
    MESSAGE("sup of product derivative-norm / (L^2 + Lt^2): ", sup_ratio);
}

TEST_CASE("error paths") {
    CHECK_THROWS_AS(secular::interval_eigenvalue({-1.0, 0.0}, 1), std::invalid_argument);
    CHECK_THROWS_AS(secular::interval_eigenvalue({1.0, 0.0}, 0), std::invalid_argument);
    CHECK_THROWS_AS(secular::interval_eigenvalue({1.0, 0.0}, 13), std::invalid_argument);
    CHECK_THROWS_AS(secular::eigenfunction({1.0, 0.0}, 1, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(secular::ground_energy_correction(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(secular::ground_energy_correction(0.0), std::invalid_argument);
    // branch crossing: at rL = 1 the second eigenvalue switches branch
    CHECK_THROWS_AS(secular::eigenfunction_r_derivative_norm({1.0, 1.0}, 2, 1e-3),
                    std::runtime_error);
}
