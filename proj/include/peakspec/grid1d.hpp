#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "peakspec/pencil.hpp"

namespace peakspec::grid1d {

// Half-line Schroedinger model operator
//
//     f -> -f'' + ( kappa / s^2 - c1 / s^p - c2 / s^q ) f,
//     kappa = ((p+q)^2 - 2(p+q)) / 4,   1 < p < q < 2,
//
// in its Friedrichs realization on (0, infinity).  For the admissible
// exponent range kappa is positive, so the s -> 0 end needs no
// Hardy-critical regularization and a Dirichlet truncation at small s_min
// is spectrally harmless for the low eigenvalues.
struct ModelPotentialSpec {
    double c1;  // coefficient of -1/s^p, >= 0
    double c2;  // coefficient of -1/s^q, >= 0
    double p;
    double q;

    void validate() const;
    double hardy_coefficient() const { return ((p + q) * (p + q) - 2.0 * (p + q)) / 4.0; }
    double potential(double s) const;
    // Characteristic length of the -c2/s^q well, (1/c2)^{1/(2-q)}.
    double well_scale() const;
};

enum class Grading { geometric, uniform };

struct Grid1D {
    std::vector<double> nodes;  // strictly increasing
    Grading grading = Grading::geometric;

    double s_min() const { return nodes.front(); }
    double s_max() const { return nodes.back(); }
    int cells() const { return static_cast<int>(nodes.size()) - 1; }
    void validate() const;

    // Geometric grading from the left end (first cell ~ s_min*(ratio-1)),
    // capped at the uniform cell width that makes the total cell count land
    // exactly on `cells`.  Nodes listed in `required` are snapped onto the
    // grid so nested subdomain comparisons stay conforming.
    static Grid1D graded(double s_min, double s_max, int cells, double ratio,
                         const std::vector<double>& required = {});
    static Grid1D uniform(double a, double b, int cells);

    // Conforming refinement: every cell split in half (nested FE spaces).
    Grid1D refined() const;
    // Subgrid between two existing nodes (used for inner/outer truncations).
    Grid1D restricted(double lo, double hi) const;
    // Index of the node equal to s (within tolerance), if any.
    std::optional<int> find_node(double s) const;
};

// Default discretization box for the model operator: s in
// [1e-4, 60] * well_scale with geometric grading ratio 1.12 near the left
// end, transitioning to uniform cells.
Grid1D default_model_grid(const ModelPotentialSpec& spec, int cells = 640,
                          const std::vector<double>& required = {});

struct Domain {
    enum class Kind { full, inner, outer };
    Kind kind = Kind::full;
    double b = 0.0;  // truncation point for inner/outer

    static Domain full() { return {Kind::full, 0.0}; }
    static Domain inner(double b) { return {Kind::inner, b}; }
    static Domain outer(double b) { return {Kind::outer, b}; }
};

// Linear finite-element pencil of int |f'|^2 + V f^2 with Dirichlet
// conditions at both grid ends; the potential is integrated cell-wise by
// 4-point Gauss.
OperatorPencil assemble_sturm_liouville(const Grid1D& grid,
                                        const std::function<double(double)>& potential);

// The model-operator pencil (Friedrichs realization on the truncated box).
// For inner(b)/outer(b) the grid must contain b as a node.
OperatorPencil assemble_model(const ModelPotentialSpec& spec, const Grid1D& grid,
                              const Domain& domain = Domain::full());

// Ascending eigenvalues E_1..E_{j_max} of the assembled pencil
// (tridiagonal bisection path).
std::vector<double> model_eigenvalues(const ModelPotentialSpec& spec, const Grid1D& grid,
                                      const Domain& domain, int j_max);

// Rayleigh quotient int |f'|^2 / int f^2/(4 s^2) of the finite-element
// interpolant with the given nodal coefficients (must vanish at both ends).
// The continuum Hardy inequality makes this >= 1 up to quadrature error.
double hardy_quotient(const Grid1D& grid, const Eigen::VectorXd& coefficients);

// Complementary smooth cutoff pair chi1^2 + chi2^2 = 1 built from a quintic
// ramp on [b/2, 3b/4]; chi1 = 1 left of the ramp, chi2 = 1 right of it.
struct CutoffPair {
    double b;
    double chi1(double s) const;
    double chi2(double s) const;
    double chi1_derivative(double s) const;
    double chi2_derivative(double s) const;
    // K = sup|chi1'|^2 + sup|chi2'|^2, the additive localization cost.
    double shift_constant() const;
};

struct ImsCheckEntry {
    int j;
    double truncated;  // E_j on (0, b), Dirichlet at b
    double full;       // E_j on the full default box
    bool pass;         // truncated <= full + K
};

struct ImsCheckReport {
    double alpha;
    double b;
    double shift_constant;  // K
    bool below_alpha_gate;  // alpha below the configured threshold alpha0
    std::vector<ImsCheckEntry> entries;
    bool all_pass() const;
};

// Verifies the localization shift bound
//     E_j(truncated at b) <= E_j(full) + K,  K = |chi1'|_inf^2 + |chi2'|_inf^2
// on the discrete operators with c1 = alpha^{p-1}, c2 = alpha^{q-1} for
// j <= j_max.  alpha0 is the gate below which the report is only
// informational.
ImsCheckReport ims_inequality_check(double p, double q, double alpha, double b, int j_max,
                                    double alpha0 = 4.0, int cells = 640);

// Independent uniform-grid discretization of the interval Robin operator on
// (-L, L): the finite-difference oracle for the secular module.
OperatorPencil robin_interval_pencil(double half_length, double robin, int cells);
double robin_interval_eigenvalue(double half_length, double robin, int j, int cells);
// Two-step Richardson extrapolation over cells, 2*cells, 4*cells.
double robin_interval_eigenvalue_extrapolated(double half_length, double robin, int j,
                                              int base_cells = 800);

struct ReferenceEigenvalues {
    std::vector<double> values;      // Richardson-extrapolated E_j
    double richardson_disagreement;  // |last two Richardson estimates| (j = 1)
};

// Richardson-extrapolated reference E_j of the unit model operator
// (c1 = 0, c2 = 1) over three nested grids; E_1 is the constant the
// strong-coupling fits are compared against.
ReferenceEigenvalues reference_model_eigenvalues(double p, double q, int j_max,
                                                 int base_cells = 640);

}  // namespace peakspec::grid1d
