#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "peakspec/eigensolve.hpp"
#include "peakspec/grid1d.hpp"

using namespace peakspec;
using grid1d::Domain;
using grid1d::Grid1D;
using grid1d::ModelPotentialSpec;

namespace {
constexpr double kPi = 3.14159265358979323846;
const ModelPotentialSpec kUnitSpec{0.0, 1.0, 1.2, 1.5};
}  // namespace

TEST_CASE("Dirichlet Laplacian on the unit interval") {
    const Grid1D grid = Grid1D::uniform(1e-9, 1.0, 2000);
    const auto pencil = grid1d::assemble_sturm_liouville(grid, [](double) { return 0.0; });
    const auto result = eigensolve::tridiag_smallest(pencil, 2);
    CHECK(result.values[0] == doctest::Approx(kPi * kPi).epsilon(1e-4));
    CHECK(result.values[1] == doctest::Approx(4.0 * kPi * kPi).epsilon(1e-4));
}

TEST_CASE("unit model operator has a negative ground state") {
    const Grid1D grid = grid1d::default_model_grid(kUnitSpec, 320);
    const auto values = grid1d::model_eigenvalues(kUnitSpec, grid, Domain::full(), 2);
    CHECK(values[0] < 0.0);
    CHECK(values[0] < values[1]);
}

TEST_CASE("Richardson reference constant") {
    const auto ref = grid1d::reference_model_eigenvalues(1.2, 1.5, 1);
    CHECK(ref.values[0] == doctest::Approx(-0.0363601677).epsilon(3e-7));
    CHECK(ref.richardson_disagreement < 1e-6);
}

TEST_CASE("truncation bracket on nested grids") {
    for (double b : {0.5, 1.0, 2.0}) {
        const Grid1D grid = grid1d::default_model_grid(kUnitSpec, 640, {b});
        const auto full = grid1d::model_eigenvalues(kUnitSpec, grid, Domain::full(), 5);
        const auto inner = grid1d::model_eigenvalues(kUnitSpec, grid, Domain::inner(b), 5);
        for (int j = 0; j < 5; ++j) CHECK(inner[j] >= full[j] - 1e-12 * std::abs(full[j]));
    }
}

TEST_CASE("coupling monotonicity of the model operator") {
    const ModelPotentialSpec with_p{1.0, 1.0, 1.2, 1.5};
    const ModelPotentialSpec without_p{0.0, 1.0, 1.2, 1.5};
    const Grid1D grid = grid1d::default_model_grid(without_p, 640);
    const auto upper = grid1d::model_eigenvalues(without_p, grid, Domain::full(), 3);
    const auto lower = grid1d::model_eigenvalues(with_p, grid, Domain::full(), 3);
    for (int j = 0; j < 3; ++j) CHECK(lower[j] <= upper[j] + 1e-12);
}

TEST_CASE("scaling covariance on exactly scaled grids") {
    const double p = 1.2, q = 1.5;
    for (double c : {0.5, 2.0, 5.0}) {
        const ModelPotentialSpec original{0.7, 1.3, p, q};
        const ModelPotentialSpec scaled{0.7 * std::pow(c, p - 2.0), 1.3 * std::pow(c, q - 2.0), p,
                                        q};
        const Grid1D grid = grid1d::default_model_grid(original, 480);
        Grid1D scaled_grid = grid;
        for (auto& node : scaled_grid.nodes) node *= c;
        const auto lhs = grid1d::model_eigenvalues(original, grid, Domain::full(), 3);
        const auto rhs = grid1d::model_eigenvalues(scaled, scaled_grid, Domain::full(), 3);
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(lhs[j] - c * c * rhs[j]) <= 1e-9 * std::max(1.0, std::abs(lhs[j])));
    }
}

TEST_CASE("monotone convergence under conforming refinement") {
    const Grid1D g1 = grid1d::default_model_grid(kUnitSpec, 320);
    const Grid1D g2 = g1.refined();
    const Grid1D g3 = g2.refined();
    const auto e1 = grid1d::model_eigenvalues(kUnitSpec, g1, Domain::full(), 3);
    const auto e2 = grid1d::model_eigenvalues(kUnitSpec, g2, Domain::full(), 3);
    const auto e3 = grid1d::model_eigenvalues(kUnitSpec, g3, Domain::full(), 3);
    for (int j = 0; j < 3; ++j) {
        CHECK(e2[j] <= e1[j] + 1e-10 * std::max(1.0, std::abs(e1[j])));
        CHECK(e3[j] <= e2[j] + 1e-10 * std::max(1.0, std::abs(e2[j])));
    }
    // successive Richardson estimates agree at the finest default grid
    const auto ref = grid1d::reference_model_eigenvalues(1.2, 1.5, 1, 640);
    CHECK(ref.richardson_disagreement <= 1e-6);
}

TEST_CASE("discrete Hardy quotient") {
    const Grid1D grid = Grid1D::uniform(0.02, 8.0, 400);
    const int n = static_cast<int>(grid.nodes.size());

    SUBCASE("hat function at mid-grid") {
        Eigen::VectorXd coeff = Eigen::VectorXd::Zero(n);
        coeff[n / 2] = 1.0;
        CHECK(grid1d::hardy_quotient(grid, coeff) >= 1.0);
    }
    SUBCASE("random coefficient sweep") {
        std::mt19937_64 rng(41);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        double min_quotient = 1e300;
        for (int i = 0; i < 200; ++i) {
            Eigen::VectorXd coeff(n);
            for (int k = 0; k < n; ++k) coeff[k] = dist(rng);
            coeff[0] = coeff[n - 1] = 0.0;
            min_quotient = std::min(min_quotient, grid1d::hardy_quotient(grid, coeff));
        }
        CHECK(min_quotient >= 0.98);
    }
    SUBCASE("support near the far end gives a large quotient") {
        Eigen::VectorXd coeff = Eigen::VectorXd::Zero(n);
        coeff[n - 3] = 1.0;
        CHECK(grid1d::hardy_quotient(grid, coeff) > 10.0);
    }
    SUBCASE("boundary and degeneracy errors") {
        Eigen::VectorXd coeff = Eigen::VectorXd::Ones(n);
        CHECK_THROWS_AS(grid1d::hardy_quotient(grid, coeff), std::invalid_argument);
        Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
        CHECK_THROWS_AS(grid1d::hardy_quotient(grid, zero), std::invalid_argument);
    }
}

TEST_CASE("cutoff pair and localization constant") {
    const grid1d::CutoffPair cutoffs{0.8};
    for (double s : {0.1, 0.42, 0.5, 0.55, 0.6, 0.7}) {
        const double c1 = cutoffs.chi1(s), c2 = cutoffs.chi2(s);
        CHECK(c1 * c1 + c2 * c2 == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK(cutoffs.chi1(0.39) == 1.0);   // left of the ramp (b/2 = 0.4)
    CHECK(cutoffs.chi1(0.61) == 0.0);   // right of the ramp (3b/4 = 0.6)
    CHECK(cutoffs.chi2(0.39) == 0.0);
    CHECK(cutoffs.chi2(0.61) == 1.0);

    // K between theta'_max^2 and 2 theta'_max^2, with the quintic-ramp
    // maximum slope (pi/2) * (15/8) / (b/4)
    const double theta_max = 0.5 * kPi * (15.0 / 8.0) / (0.25 * 0.8);
    const double K = cutoffs.shift_constant();
    CHECK(K >= theta_max * theta_max * (1.0 - 1e-9));
    CHECK(K <= 2.0 * theta_max * theta_max);
    MESSAGE("shift constant for b = 0.8: ", K);

    // narrowing the transition scales the constant like width^-2
    const double K_half = grid1d::CutoffPair{0.4}.shift_constant();
    CHECK(K_half == doctest::Approx(4.0 * K).epsilon(1e-9));
}

TEST_CASE("localization shift inequality for the truncated model operator") {
    const auto report = grid1d::ims_inequality_check(1.2, 1.5, 8.0, 0.5, 3);
    CHECK(!report.below_alpha_gate);
    CHECK(report.all_pass());
    for (const auto& entry : report.entries) {
        CHECK(entry.truncated >= entry.full - 1e-10 * std::max(1.0, std::abs(entry.full)));
        CHECK(entry.truncated <= entry.full + report.shift_constant);
    }
    const auto gated = grid1d::ims_inequality_check(1.2, 1.5, 2.0, 0.5, 2);
    CHECK(gated.below_alpha_gate);
}

TEST_CASE("outer-domain lower bound") {
    const double alpha = 8.0, b = 0.5, p = 1.2, q = 1.5;
    const ModelPotentialSpec spec{std::pow(alpha, p - 1.0), std::pow(alpha, q - 1.0), p, q};
    const Grid1D grid = grid1d::default_model_grid(spec, 640, {b / 4.0});
    const auto values = grid1d::model_eigenvalues(spec, grid, Domain::outer(b / 4.0), 1);
    const double bound = -(std::pow(4.0 / b, p) * spec.c1 + std::pow(4.0 / b, q) * spec.c2);
    CHECK(values[0] >= bound);
}

TEST_CASE("grid construction and domain errors") {
    CHECK_THROWS_AS(Grid1D::graded(0.0, 1.0, 32, 1.1), std::invalid_argument);
    CHECK_THROWS_AS(Grid1D::graded(1e-4, 1.0, 32, 1.6), std::invalid_argument);
    CHECK_THROWS_AS(Grid1D::graded(1e-9, 1.0, 8, 1.1), std::invalid_argument);  // too few cells
    const Grid1D grid = grid1d::default_model_grid(kUnitSpec, 320);
    CHECK_THROWS_AS(grid1d::assemble_model(kUnitSpec, grid, Domain::inner(0.123456)),
                    std::invalid_argument);
    ModelPotentialSpec bad{0.0, 1.0, 1.5, 1.2};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    // required nodes are snapped exactly
    const Grid1D with_node = grid1d::default_model_grid(kUnitSpec, 320, {1.0});
    CHECK(with_node.find_node(1.0).has_value());
}

TEST_CASE("interval grid oracle has a clean even-order error expansion") {
    const double exact = -1.439228839890645;  // unit-coupling ground state
    const double e1 = grid1d::robin_interval_eigenvalue(1.0, 1.0, 1, 400) - exact;
    const double e2 = grid1d::robin_interval_eigenvalue(1.0, 1.0, 1, 800) - exact;
    const double e4 = grid1d::robin_interval_eigenvalue(1.0, 1.0, 1, 1600) - exact;
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.02));
    CHECK(e2 / e4 == doctest::Approx(4.0).epsilon(0.02));
}
