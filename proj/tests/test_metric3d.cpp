#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "peakspec/eigensolve.hpp"
#include "peakspec/metric3d.hpp"

using namespace peakspec;
using namespace peakspec::metric3d;

namespace {
PeakParams make_params(double alpha) {
    return PeakParams{1.2, 1.5, 0.5, alpha, bracket_constant(1.2, 1.5)};
}

Eigen::Matrix3d jacobian(double t1, double t2, double s, double p, double q) {
    Eigen::Matrix3d dx = Eigen::Matrix3d::Zero();
    dx(0, 0) = std::pow(s, p);
    dx(1, 1) = std::pow(s, q);
    dx(2, 2) = 1.0;
    dx(0, 2) = p * std::pow(s, p - 1.0) * t1;
    dx(1, 2) = q * std::pow(s, q - 1.0) * t2;
    return dx;
}
}  // namespace

TEST_CASE("metric matrix against the explicit inversion oracle") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dt(-1.0, 1.0), ds(0.05, 0.95), de(1.05, 1.95);
    for (int i = 0; i < 200; ++i) {
        const double p = de(rng);
        const double q = std::min(1.99, p + 0.2);
        const double t1 = dt(rng), t2 = dt(rng), s = ds(rng);
        const Eigen::Matrix3d dx = jacobian(t1, t2, s, p, q);
        const Eigen::Matrix3d oracle = (dx.transpose() * dx).inverse();
        const Eigen::Matrix3d mine = metric_matrix(t1, t2, s, p, q);
        CHECK((mine - oracle).cwiseAbs().maxCoeff() <= 1e-13 * oracle.cwiseAbs().maxCoeff());
        // positive definiteness
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(mine);
        CHECK(es.eigenvalues()[0] > 0.0);
    }
}

TEST_CASE("metric matrix on the axis") {
    const double p = 1.2, q = 1.5, s = 0.37;
    const Eigen::Matrix3d g = metric_matrix(0.0, 0.0, s, p, q);
    CHECK(g(0, 0) == doctest::Approx(std::pow(s, -2.0 * p)).epsilon(1e-14));
    CHECK(g(1, 1) == doctest::Approx(std::pow(s, -2.0 * q)).epsilon(1e-14));
    CHECK(g(2, 2) == 1.0);
    CHECK(g(0, 1) == 0.0);
    CHECK(g(0, 2) == 0.0);
    CHECK(g(1, 2) == 0.0);
    // Gram determinant of the straightening map on the axis
    const Eigen::Matrix3d dx = jacobian(0.0, 0.0, s, p, q);
    CHECK((dx.transpose() * dx).determinant() ==
          doctest::Approx(std::pow(s, 2.0 * (p + q))).epsilon(1e-13));
    CHECK_THROWS_AS(metric_matrix(0.0, 0.0, -0.1, p, q), std::invalid_argument);
}

TEST_CASE("comparison constant dominates every correction coefficient") {
    const double p = 1.2, q = 1.5;
    const double c = bracket_constant(p, q);
    CHECK(c == doctest::Approx(13.07).epsilon(1e-12));
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> da(1.0, 1e4), ds(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double alpha = da(rng);
        const double s = ds(rng);
        const double ap = std::pow(alpha, 1.0 - p), aq = std::pow(alpha, 1.0 - q);
        const double ap2 = std::pow(alpha, 2.0 - 2.0 * p), aq2 = std::pow(alpha, 2.0 - 2.0 * q);
        CHECK(1.0 + ap + aq <= 1.0 + c * ap);
        CHECK(1.0 + p * p * (ap + 2.0 * ap2) <= 1.0 + c * ap);
        CHECK(1.0 + q * q * (aq + 2.0 * aq2) <= 1.0 + c * ap);
        CHECK(std::sqrt(p * p * ap2 * std::pow(s, 2.0 * p - 2.0) + 1.0) <= 1.0 + c * ap);
        CHECK(std::sqrt(p * p * ap2 + 1.0) <= 1.0 + c * ap);
    }
    CHECK_THROWS_AS(bracket_constant(1.5, 1.2), std::invalid_argument);
}

TEST_CASE("transverse grids are exactly symmetric") {
    const auto grid = TensorGrid3::make(make_params(8.0), 10, 12, 40);
    const int n1 = grid.n1(), n2 = grid.n2();
    for (int i = 0; i <= n1; ++i)
        CHECK(grid.t1_nodes[i] == -grid.t1_nodes[n1 - i]);
    for (int i = 0; i <= n2; ++i)
        CHECK(grid.t2_nodes[i] == -grid.t2_nodes[n2 - i]);
    CHECK(grid.s_nodes.back() == 0.5);
}

TEST_CASE("bracket gap is a nonnegative quadratic form") {
    const PeakParams params = make_params(8.0);
    const auto grid = TensorGrid3::make(params, 8, 8, 32);
    const auto minus = assemble_peak_form(params, grid, FormKind::bracket_minus);
    const auto plus = assemble_peak_form(params, grid, FormKind::bracket_plus);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int i = 0; i < 40; ++i) {
        Eigen::VectorXd u(minus.dimension());
        for (Eigen::Index k = 0; k < u.size(); ++k) u[k] = dist(rng);
        const double gap = u.dot(plus.stiffness * u) - u.dot(minus.stiffness * u);
        CHECK(gap >= -1e-12 * std::abs(u.dot(plus.stiffness * u)));
    }
}

TEST_CASE("mass matrices are positive on the diagonal") {
    const PeakParams params = make_params(16.0);
    const auto grid = TensorGrid3::make(params, 8, 8, 32);
    for (const auto kind :
         {FormKind::exact_weighted, FormKind::bracket_minus, FormKind::bracket_plus}) {
        const auto pencil = assemble_peak_form(params, grid, kind);
        double min_diag = 1e300;
        for (Eigen::Index i = 0; i < pencil.dimension(); ++i)
            min_diag = std::min(min_diag, pencil.mass.coeff(i, i));
        CHECK(min_diag > 0.0);
    }
}

TEST_CASE("gradient-form ordering holds sample by sample") {
    const PeakParams params = make_params(8.0);
    const auto grid = TensorGrid3::make(params, 8, 8, 32);
    const auto report = gradient_sandwich_check(params, grid, 100, 2024);
    CHECK(report.ordered == report.samples);
    CHECK(report.max_relative_violation == 0.0);

    // the two-sided gap shrinks as alpha grows
    const auto far = gradient_sandwich_check(make_params(64.0),
                                             TensorGrid3::make(make_params(64.0), 8, 8, 32), 100,
                                             2024);
    CHECK(far.mean_relative_gap < report.mean_relative_gap);
}

TEST_CASE("gradient forms collapse to the axial term for t-constant states") {
    const PeakParams params = make_params(8.0);
    const auto grid = TensorGrid3::make(params, 8, 8, 32);
    const auto lower = assemble_gradient_form(params, grid, GradientBound::lower_estimate);
    const auto exact = assemble_gradient_form(params, grid, GradientBound::exact_metric);
    const auto upper = assemble_gradient_form(params, grid, GradientBound::upper_estimate);
    const int npt = grid.n1() + 1;
    const int ns_kept = static_cast<int>(lower.rows()) / (npt * npt);
    Eigen::VectorXd u(lower.rows());
    for (int i1 = 0; i1 < npt; ++i1)
        for (int i2 = 0; i2 < npt; ++i2)
            for (int k = 0; k < ns_kept; ++k) {
                const double s = grid.s_nodes[k + 1];
                u[(static_cast<long>(i1) * npt + i2) * ns_kept + k] =
                    std::sin(6.0 * s) + 0.3 * s;
            }
    const double ap = std::pow(params.alpha, 1.0 - params.p);
    const double aq = std::pow(params.alpha, 1.0 - params.q);
    const double base = u.dot(exact * u);
    CHECK(u.dot(lower * u) == doctest::Approx((1.0 - ap - aq) * base).epsilon(1e-12));
    CHECK(u.dot(upper * u) == doctest::Approx((1.0 + ap + aq) * base).epsilon(1e-12));
}

TEST_CASE("discrete two-sided comparison at moderate coupling") {
    const PeakParams params = make_params(32.0);
    const auto grid = TensorGrid3::make(params, 8, 8, 40);
    const auto report = sandwich_check(params, grid, 40, 99, 3, 1e-9);
    CHECK(report.form_violations_lower == 0);
    CHECK(report.form_violations_upper == 0);
    CHECK(report.eigen_ok_lower);
    CHECK(report.eigen_ok_upper);
    CHECK(report.residuals_converged);
    CHECK_FALSE(report.minus_semibounded);  // kappa > 1 at this alpha
    CHECK(report.e_exact[0] < 0.0);
}

TEST_CASE("exact form turns negative at large coupling") {
    const PeakParams params = make_params(64.0);
    const auto grid = TensorGrid3::make(params, 8, 8, 40);
    const auto pencil = assemble_peak_form(params, grid, FormKind::exact_weighted);
    const double est = surrogate_bottom_estimate(params, grid);
    eigensolve::SparseOptions opts;
    opts.shift = est - 0.5 * std::abs(est) - 1.0;
    opts.tensor_dims = {9, 9, static_cast<int>(pencil.dimension()) / 81};
    const auto r = eigensolve::sparse_smallest(pencil, 1, 1e-8, opts);
    CHECK(r.values[0] < 0.0);
}

TEST_CASE("conjugation is a congruence: spectra agree") {
    const PeakParams params = make_params(16.0);
    const auto grid = TensorGrid3::make(params, 8, 8, 32);
    const auto weighted = assemble_peak_form(params, grid, FormKind::exact_weighted);
    const auto flat = conjugated(weighted, conjugation_weights(params, grid));
    const double est = surrogate_bottom_estimate(params, grid);
    eigensolve::SparseOptions opts;
    opts.shift = est - 0.5 * std::abs(est) - 1.0;
    opts.tensor_dims = {9, 9, static_cast<int>(weighted.dimension()) / 81};
    const auto rw = eigensolve::sparse_smallest(weighted, 2, 1e-9 * (1 + std::abs(est)), opts);
    const auto rf = eigensolve::sparse_smallest(flat, 2, 1e-9 * (1 + std::abs(est)), opts);
    for (int j = 0; j < 2; ++j)
        CHECK(rw.values[j] ==
              doctest::Approx(rf.values[j]).epsilon(1e-7).scale(std::abs(rw.values[j]) + 1.0));
}

TEST_CASE("transverse parity symmetry of the assembled pencil") {
    const PeakParams params = make_params(16.0);
    const auto grid = TensorGrid3::make(params, 8, 8, 32);
    const auto raw = assemble_peak_form(params, grid, FormKind::exact_weighted);
    const auto sym = symmetrized(raw, grid);
    // symmetrization is idempotent noise removal: the matrices agree to
    // assembly roundoff, and eigenvalues to solver tolerance
    const double est = surrogate_bottom_estimate(params, grid);
    eigensolve::SparseOptions opts;
    opts.shift = est - 0.5 * std::abs(est) - 1.0;
    opts.tensor_dims = {9, 9, static_cast<int>(raw.dimension()) / 81};
    const auto r1 = eigensolve::sparse_smallest(raw, 2, 1e-9 * (1 + std::abs(est)), opts);
    const auto r2 = eigensolve::sparse_smallest(sym, 2, 1e-9 * (1 + std::abs(est)), opts);
    for (int j = 0; j < 2; ++j)
        CHECK(r1.values[j] ==
              doctest::Approx(r2.values[j]).epsilon(1e-8).scale(std::abs(r1.values[j]) + 1.0));
}

TEST_CASE("tip-condition insensitivity trend (smoke)") {
    const PeakParams params = make_params(16.0);
    const auto study = tip_sensitivity_study(params, 8, 8, 48, 1.1, {1e-2, 1e-3});
    REQUIRE(study.size() == 2);
    CHECK(std::abs(study[1].difference()) < std::abs(study[0].difference()));
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(make_params(0.5).validate(), std::invalid_argument);
    PeakParams bad_order{1.5, 1.2, 0.5, 8.0, 1.0};
    CHECK_THROWS_AS(bad_order.validate(), std::invalid_argument);
    PeakParams bad_a{1.2, 1.5, 1.5, 8.0, 1.0};
    CHECK_THROWS_AS(bad_a.validate(), std::invalid_argument);
    CHECK_THROWS_AS(TensorGrid3::make(make_params(8.0), 4, 8, 32), std::invalid_argument);
    CHECK_THROWS_AS(TensorGrid3::make(make_params(8.0), 8, 8, 16), std::invalid_argument);
    // the minus form stops being a semibounded continuum bracket once
    // kappa >= 1, and the flag says so
    CHECK(make_params(8.0).kappa() > 1.0);
    CHECK_FALSE(make_params(8.0).minus_form_semibounded());
}
