#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "peakspec/grid1d.hpp"
#include "peakspec/metric3d.hpp"

namespace peakspec::asympt {

struct SweepGridConfig {
    int n1 = 24;
    int n2 = 24;
    int ns = 96;
    double s_ratio = 1.1;
    double s_min_factor = 1e-3;
};

struct SolverConfig {
    double tol_scale = 1e-9;  // residual tolerance relative to the pencil's bottom scale
    int block_size = 0;
    int max_iterations = 300;
};

struct SweepConfig {
    double p = 1.2;
    double q = 1.5;
    double a = 0.5;  // fixed truncation height across sweeps
    std::optional<double> c_bracket;  // default: bracket_constant(p, q)
    std::vector<double> alphas = {8.0, 16.0, 32.0, 64.0};
    int j_max = 3;
    SweepGridConfig grid;
    SolverConfig solver;
    double alpha_threshold = 4.0;  // records below it are flagged, not asserted
    int form_samples = 32;         // random vectors for the per-alpha form comparison
    std::uint64_t seed = 12345;
    int threads = 0;  // 0: PEAKSPEC_THREADS / hardware

    double target_exponent() const { return 2.0 * (q - 1.0) / (2.0 - q); }
};

struct SweepRecord {
    double alpha = 0.0;
    int j = 0;
    double e_exact = 0.0;
    double e_minus = 0.0;
    double e_plus = 0.0;
    double e_model1d = 0.0;  // alpha^{2(q-1)/(2-q)} * E_j(A_{0,1}) prediction
    double ratio = 0.0;      // e_exact / alpha^{2(q-1)/(2-q)}
    int n1 = 0, n2 = 0, ns = 0;
    double s_min = 0.0;
    double residual_max = 0.0;
    bool converged = false;
    bool sandwich_ok = false;       // e_minus <= e_exact <= e_plus
    bool form_sandwich_ok = false;  // random-vector form ordering at this alpha
    bool below_threshold = false;
    bool minus_semibounded = false;  // kappa < 1 for this alpha
    std::string note;
};

struct SweepResult {
    std::vector<SweepRecord> records;          // sorted by (alpha, j)
    std::vector<double> model_reference;       // E_j(A_{0,1})
    double reference_disagreement = 0.0;       // Richardson agreement indicator
    double sandwich_threshold = 0.0;           // smallest alpha with the sandwich holding
    bool sandwich_threshold_found = false;
    double target_exponent = 0.0;
};

// One record per (alpha, j); deterministic for a fixed config.  Alpha
// entries are independent jobs run on a fixed-size worker pool; failures
// are annotated per record rather than thrown.
SweepResult sweep(const SweepConfig& config);

struct PowerLawFit {
    double exponent = 0.0;
    double coefficient = 0.0;  // sign restored from the data
    double r_squared = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    int points = 0;
    bool valid = false;
    std::string note;
};

// Least-squares fit of log|e_exact| against log alpha over the largest-alpha
// window (top `window_fraction` of the list, never fewer than 4 points).
// Sign changes within the window invalidate the fit (pre-asymptotic data).
PowerLawFit fit_leading(const std::vector<SweepRecord>& records, int j,
                        double window_fraction = 0.5);

struct CorrectionFit {
    PowerLawFit fit;
    bool resolved = false;      // remainder above the numeric floor
    bool within_slack = false;  // exponent <= target - binding offset + 0.15
    double binding_offset = 0.0;
    std::string note;
};

// Fits the remainder e_exact - coefficient * alpha^exponent of the leading
// fit to a power law and compares the decay against the predicted
// remainder offsets p-1 and (q-p)/(2-q).
CorrectionFit fit_correction(const std::vector<SweepRecord>& records, int j,
                             const PowerLawFit& leading, double p, double q,
                             double target_exponent, double window_fraction = 0.5);

struct SemiboundReport {
    double bound_constant = 0.0;  // K = 2 |E_1(A_{0,1})|
    int checked = 0;
    int skipped = 0;  // records below the alpha threshold
    std::vector<double> violating_alphas;
    bool passed = true;
    std::string note;
};

// Verifies e_exact(j=1) >= -K alpha^{2(q-1)/(2-q)} with K = 2|E_1(A_{0,1})|
// for records at or above the alpha threshold.
SemiboundReport semibound_check(const std::vector<SweepRecord>& records, double a1_reference,
                                double alpha_threshold, double target_exponent);

}  // namespace peakspec::asympt
