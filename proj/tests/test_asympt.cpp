#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "peakspec/asympt.hpp"

using namespace peakspec;
using asympt::SweepRecord;

namespace {
std::vector<SweepRecord> synthetic_records(const std::vector<double>& alphas,
                                           double (*law)(double)) {
    std::vector<SweepRecord> records;
    for (double alpha : alphas) {
        SweepRecord rec;
        rec.alpha = alpha;
        rec.j = 1;
        rec.e_exact = law(alpha);
        rec.converged = true;
        records.push_back(rec);
    }
    return records;
}
}  // namespace

TEST_CASE("leading fit recovers an exact power law") {
    const auto records = synthetic_records(
        {8, 16, 32, 64, 128, 256}, [](double a) { return -2.0 * std::pow(a, 1.5); });
    const auto fit = asympt::fit_leading(records, 1);
    REQUIRE(fit.valid);
    CHECK(fit.exponent == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(fit.coefficient == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.points >= 4);
}

TEST_CASE("correction fit isolates the remainder exponent") {
    const auto records = synthetic_records({8, 16, 32, 64, 128, 256, 512, 1024}, [](double a) {
        return -2.0 * a * a + 0.3 * std::pow(a, 1.7);
    });
    asympt::PowerLawFit leading;
    leading.valid = true;
    leading.exponent = 2.0;
    leading.coefficient = -2.0;
    const auto correction = asympt::fit_correction(records, 1, leading, 1.2, 1.5, 2.0);
    REQUIRE(correction.resolved);
    CHECK(correction.fit.exponent == doctest::Approx(1.7).epsilon(1e-6));
    CHECK(correction.fit.coefficient == doctest::Approx(0.3).epsilon(1e-5));
    // predicted remainder offsets at (p, q) = (1.2, 1.5)
    CHECK(correction.binding_offset == doctest::Approx(0.2).epsilon(1e-12));
    CHECK((1.5 - 1.2) / (2.0 - 1.5) == doctest::Approx(0.6));
    CHECK(correction.within_slack);  // 1.7 <= 2.0 - 0.2 + 0.15
}

TEST_CASE("fit rejects sign changes and short lists") {
    const auto mixed = synthetic_records({8, 16, 32, 64}, [](double a) { return 100.0 - a * a; });
    const auto fit = asympt::fit_leading(mixed, 1);
    CHECK_FALSE(fit.valid);
    CHECK(fit.note.find("sign") != std::string::npos);

    const auto short_list =
        synthetic_records({8, 16, 32}, [](double a) { return -a * a; });
    CHECK_FALSE(asympt::fit_leading(short_list, 1).valid);
}

TEST_CASE("remainder below the numeric floor is reported as unresolved") {
    const auto records =
        synthetic_records({8, 16, 32, 64, 128}, [](double a) { return -2.0 * a * a; });
    asympt::PowerLawFit leading;
    leading.valid = true;
    leading.exponent = 2.0;
    leading.coefficient = -2.0;
    const auto correction = asympt::fit_correction(records, 1, leading, 1.2, 1.5, 2.0);
    CHECK_FALSE(correction.resolved);
    CHECK(correction.note.find("unresolved") != std::string::npos);
}

TEST_CASE("two-sided remainder constants are stable on enveloped data") {
    // records inside the predicted two-sided envelope: the per-alpha fitted
    // constants of e - A1 alpha^2 against alpha^{2-(p-1)} above and
    // -(alpha^{2-(p-1)} + alpha^{2-(q-p)/(2-q)}) below stay within +-20%
    // across the top half of the sweep
    const double a1 = -0.0363601677;
    const std::vector<double> alphas = {8, 16, 32, 64, 128, 256};
    std::vector<double> lower_constants;
    for (std::size_t i = alphas.size() / 2; i < alphas.size(); ++i) {
        const double a = alphas[i];
        const double e = a1 * a * a - 0.05 * std::pow(a, 1.8);
        const double deviation = e - a1 * a * a;
        CHECK(deviation <= 1e-12);  // upper-side constant C is zero here
        lower_constants.push_back(-deviation /
                                  (std::pow(a, 1.8) + std::pow(a, 1.4)));
    }
    const auto [lo, hi] = std::minmax_element(lower_constants.begin(), lower_constants.end());
    CHECK(*hi / *lo <= 1.2);
}

TEST_CASE("semibound check flags synthetic violations and gates low alpha") {
    const double a1 = -0.0363601677;
    const auto bad = synthetic_records({8, 16, 32, 64}, [](double a) { return -a * a * a; });
    const auto report = asympt::semibound_check(bad, a1, 4.0, 2.0);
    CHECK_FALSE(report.passed);
    CHECK(report.violating_alphas.size() == 4);

    const auto gated = asympt::semibound_check(bad, a1, 100.0, 2.0);
    CHECK(gated.checked == 0);
    CHECK(gated.skipped == 4);
    CHECK(gated.note.find("skipped") != std::string::npos);

    const auto good =
        synthetic_records({8, 16, 32, 64}, [](double a) { return -0.04 * a * a; });
    CHECK(asympt::semibound_check(good, a1, 4.0, 2.0).passed);
}

TEST_CASE("small end-to-end sweep") {
    asympt::SweepConfig config;
    config.alphas = {1.0, 8.0, 16.0};
    config.j_max = 2;
    config.grid.n1 = 8;
    config.grid.n2 = 8;
    config.grid.ns = 40;
    config.form_samples = 8;
    config.alpha_threshold = 4.0;
    const auto result = asympt::sweep(config);

    REQUIRE(result.records.size() == 6);
    CHECK(result.target_exponent == doctest::Approx(2.0));
    CHECK(result.reference_disagreement < 1e-6);
    CHECK(result.model_reference[0] == doctest::Approx(-0.0363601677).epsilon(1e-4));

    for (std::size_t i = 0; i + 1 < result.records.size(); ++i) {
        const auto& a = result.records[i];
        const auto& b = result.records[i + 1];
        CHECK((a.alpha < b.alpha || (a.alpha == b.alpha && a.j < b.j)));
    }
    for (const auto& rec : result.records) {
        CHECK(rec.note.empty());
        CHECK(rec.converged);
        CHECK(rec.sandwich_ok);
        CHECK(rec.form_sandwich_ok);
        CHECK(rec.e_minus <= rec.e_exact);
        CHECK(rec.e_exact <= rec.e_plus);
        CHECK(rec.below_threshold == (rec.alpha < 4.0));
        CHECK_FALSE(rec.minus_semibounded);  // kappa > 1 throughout this range
        const double predicted =
            result.model_reference[rec.j - 1] * std::pow(rec.alpha, 2.0);
        CHECK(rec.e_model1d == doctest::Approx(predicted).epsilon(1e-12));
        CHECK(rec.ratio ==
              doctest::Approx(rec.e_exact / std::pow(rec.alpha, 2.0)).epsilon(1e-12));
    }
    CHECK(result.sandwich_threshold_found);
    CHECK(result.sandwich_threshold == 1.0);

    // the j = 1 ratio trend toward the model constant along the doubling tail
    const double r8 = std::abs(result.records[2].ratio - result.model_reference[0]);
    const double r16 = std::abs(result.records[4].ratio - result.model_reference[0]);
    CHECK(r16 < r8);
}

TEST_CASE("sweep input validation") {
    asympt::SweepConfig config;
    config.alphas = {8.0, 4.0};
    CHECK_THROWS_AS(asympt::sweep(config), std::invalid_argument);
    config.alphas = {0.5, 2.0};
    CHECK_THROWS_AS(asympt::sweep(config), std::invalid_argument);
    config.alphas = {};
    CHECK_THROWS_AS(asympt::sweep(config), std::invalid_argument);
}
