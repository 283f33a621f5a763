#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "peakspec/grid1d.hpp"
#include "peakspec/pencil.hpp"

namespace peakspec::metric3d {

// Geometry/coupling parameters of the rescaled peak problem.  The physical
// peak domain {(x1/x3^p, x2/x3^q) in (-1,1)^2, 0 < x3 < a} is straightened
// by the change of variables X(t1,t2,s) = (s^p t1, s^q t2, s); after the
// alpha-dilation the box becomes
//     (-alpha^{1-p}, alpha^{1-p}) x (-alpha^{1-q}, alpha^{1-q}) x (0, a)
// with a Robin boundary term on the four lateral faces and a Dirichlet
// condition at s = a.
struct PeakParams {
    double p;
    double q;
    double a;          // truncation height, in (0, 1)
    double alpha;      // scaled coupling, >= 1
    double c_bracket;  // the constant c of the +- comparison forms

    void validate() const;
    double t1_halfwidth() const;  // alpha^{1-p}
    double t2_halfwidth() const;  // alpha^{1-q}
    double kappa() const;         // c_bracket * alpha^{1-p}
    // The minus comparison form is a semibounded lower bound in the
    // continuum only while kappa < 1; the discrete pencil exists either way
    // and this flag is carried into sweep records.
    bool minus_form_semibounded() const { return kappa() < 1.0; }
    double hardy_coefficient() const { return ((p + q) * (p + q) - 2.0 * (p + q)) / 4.0; }
};

// Default comparison constant c = 2 + 3p^2 + 3q^2.  For alpha >= 1 it
// dominates every correction coefficient appearing in the two-sided
// gradient estimates and in the lateral boundary weights:
//     1 + alpha^{1-p} + alpha^{1-q}            <= 1 + c alpha^{1-p}
//     1 + p^2(alpha^{1-p} + 2 alpha^{2-2p})    <= 1 + c alpha^{1-p}
//     sqrt(p^2 alpha^{2-2p} s^{2p-2} + 1)      <= 1 + c alpha^{1-p}
// and c >= (p+q) + (p+q)^2 bounds the pointwise spectral radius of the
// metric's off-diagonal part, which makes the discrete upper bracket exact
// at quadrature level.
double bracket_constant(double p, double q);

struct TensorGrid3 {
    std::vector<double> t1_nodes;  // uniform, symmetric about 0
    std::vector<double> t2_nodes;
    std::vector<double> s_nodes;  // graded, in (0, a]

    int n1() const { return static_cast<int>(t1_nodes.size()) - 1; }
    int n2() const { return static_cast<int>(t2_nodes.size()) - 1; }
    int ns() const { return static_cast<int>(s_nodes.size()) - 1; }
    double s_min() const { return s_nodes.front(); }
    void validate() const;

    static TensorGrid3 make(const PeakParams& params, int n1 = 24, int n2 = 24, int ns = 96,
                            double s_ratio = 1.1, double s_min_factor = 1e-3);
};

enum class FormKind { exact_weighted, bracket_minus, bracket_plus };
enum class TipCondition { dirichlet, natural };

// Inverse first fundamental form G = (DX^T DX)^{-1} of the straightening
// map, in closed form.  Symmetric positive definite for s > 0.
Eigen::Matrix3d metric_matrix(double t1, double t2, double s, double p, double q);

// Trilinear finite-element pencil of the peak form on the tensor grid.
//
//   exact_weighted : stiffness int <grad u, G grad u> s^{p+q} minus the
//                    lateral boundary integrals with the exact area weights
//                    s^q sqrt(p^2 alpha^{2-2p} s^{2p-2} + 1) (t1-faces) and
//                    the p/q-swapped twin (t2-faces); mass int u^2 s^{p+q}.
//   bracket_minus  : comparison form (1-kappa) * (flat gradient, weighted)
//                    minus unweighted-coupling boundary terms, returned in
//                    flat variables via the nodal map u -> s^{-(p+q)/2} u;
//                    mass is the conjugated (unweighted) mass.
//   bracket_plus   : same with (1+kappa).
//
// Dirichlet rows are eliminated at s = a always and at s = s_min iff
// tip_condition is dirichlet; all four lateral faces carry the boundary
// terms.  Quadrature: 3-point Gauss per direction per (face) cell.
OperatorPencil assemble_peak_form(const PeakParams& params, const TensorGrid3& grid,
                                  FormKind kind,
                                  TipCondition tip_condition = TipCondition::dirichlet);

// Diagonal of the nodal conjugation map between the weighted and flat
// spaces, s^{-(p+q)/2} per retained dof.
Eigen::VectorXd conjugation_weights(const PeakParams& params, const TensorGrid3& grid,
                                    TipCondition tip_condition = TipCondition::dirichlet);

// Congruence (D K D, D M D); leaves the spectrum unchanged.
OperatorPencil conjugated(const OperatorPencil& pencil, const Eigen::VectorXd& d);

// Pencil averaged with its image under (t1,t2) -> (-t1,-t2).
OperatorPencil symmetrized(const OperatorPencil& pencil, const TensorGrid3& grid,
                           TipCondition tip_condition = TipCondition::dirichlet);

// Gradient-only comparison forms of the two-sided metric estimate.
enum class GradientBound { lower_estimate, exact_metric, upper_estimate };
Eigen::SparseMatrix<double> assemble_gradient_form(const PeakParams& params,
                                                   const TensorGrid3& grid, GradientBound kind,
                                                   TipCondition tip_condition = TipCondition::dirichlet);

struct GradientOrderingReport {
    int samples = 0;
    int ordered = 0;  // samples with lower <= exact <= upper
    double max_relative_violation = 0.0;
    double mean_relative_gap = 0.0;  // (upper - lower) / |exact|, averaged
};

// Evaluates the three gradient forms on random coefficient vectors and
// checks the two-sided ordering sample by sample.
GradientOrderingReport gradient_sandwich_check(const PeakParams& params,
                                               const TensorGrid3& grid, int samples,
                                               std::uint64_t seed);

struct SandwichReport {
    double alpha = 0.0;
    bool minus_semibounded = false;
    int form_samples = 0;
    int form_violations_lower = 0;
    int form_violations_upper = 0;
    double max_form_violation_rel = 0.0;
    std::vector<double> e_minus, e_exact, e_plus;  // j = 1..j_max
    bool eigen_ok_lower = true;
    bool eigen_ok_upper = true;
    bool residuals_converged = true;

    bool pass() const {
        return form_violations_lower == 0 && form_violations_upper == 0 && eigen_ok_lower &&
               eigen_ok_upper;
    }
};

// Discrete two-sided comparison: form values p^-(u) <= r~(u) <= p^+(u) on
// random coefficient vectors (r~ = exact form conjugated to flat variables
// by the nodal diagonal map) and the eigenvalue ordering
// E_j(minus) <= E_j(exact) <= E_j(plus) for j <= j_max.
SandwichReport sandwich_check(const PeakParams& params, const TensorGrid3& grid, int samples,
                              std::uint64_t seed, int j_max, double solver_tol_scale = 1e-9);

// Bottom-of-spectrum estimate from the one-dimensional reduction: the
// s-fiber operator with each transverse direction frozen at its interval
// Robin ground energy.  Used to seed the sparse solver's shift.
double surrogate_bottom_estimate(const PeakParams& params, const TensorGrid3& grid);

struct TipSensitivityEntry {
    double s_min_factor;
    double e_dirichlet;
    double e_natural;
    double difference() const { return e_dirichlet - e_natural; }
};

// E_1 with both tip conditions along a sequence of s_min factors.
std::vector<TipSensitivityEntry> tip_sensitivity_study(const PeakParams& params, int n1, int n2,
                                                       int ns, double s_ratio,
                                                       const std::vector<double>& s_min_factors,
                                                       double solver_tol_scale = 1e-10);

}  // namespace peakspec::metric3d
