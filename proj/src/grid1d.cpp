#include "peakspec/grid1d.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "peakspec/eigensolve.hpp"
#include "peakspec/quadrature.hpp"

namespace peakspec::grid1d {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kNodeSnapTol = 1e-9;
}  // namespace

void ModelPotentialSpec::validate() const {
    if (!(c1 >= 0.0) || !(c2 >= 0.0))
        throw std::invalid_argument("ModelPotentialSpec: c1, c2 must be nonnegative");
    if (!(1.0 < p && p < q && q < 2.0))
        throw std::invalid_argument("ModelPotentialSpec: exponents must satisfy 1 < p < q < 2");
}

double ModelPotentialSpec::potential(double s) const {
    return hardy_coefficient() / (s * s) - c1 * std::pow(s, -p) - c2 * std::pow(s, -q);
}

double ModelPotentialSpec::well_scale() const {
    if (c2 > 0.0) return std::pow(1.0 / c2, 1.0 / (2.0 - q));
    if (c1 > 0.0) return std::pow(1.0 / c1, 1.0 / (2.0 - p));
    return 1.0;
}

void Grid1D::validate() const {
    if (nodes.size() < 2) throw std::invalid_argument("Grid1D: needs at least two nodes");
    if (!(nodes.front() > 0.0)) throw std::invalid_argument("Grid1D: s_min must be positive");
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
        if (!(nodes[i] < nodes[i + 1]))
            throw std::invalid_argument("Grid1D: nodes must be strictly increasing");
}

Grid1D Grid1D::graded(double s_min, double s_max, int cells, double ratio,
                      const std::vector<double>& required) {
    if (!(s_min > 0.0 && s_max > s_min))
        throw std::invalid_argument("Grid1D::graded: need 0 < s_min < s_max");
    if (cells < 2) throw std::invalid_argument("Grid1D::graded: need at least 2 cells");
    if (!(ratio > 1.0 && ratio <= 1.5))
        throw std::invalid_argument("Grid1D::graded: ratio must lie in (1, 1.5]");

    const double range = s_max - s_min;
    const double ratio_pure = std::pow(s_max / s_min, 1.0 / cells);

    Grid1D g;
    g.nodes.resize(cells + 1);
    g.nodes[0] = s_min;
    if (ratio_pure > ratio) {
        // The capped ramp cannot cover the range within the cell budget;
        // fall back to the exact covering ratio.
        if (ratio_pure > 1.5)
            throw std::invalid_argument(
                "Grid1D::graded: too few cells for the requested range (pure geometric "
                "ratio would exceed 1.5)");
        g.grading = Grading::geometric;
        for (int k = 1; k < cells; ++k) g.nodes[k] = s_min * std::pow(ratio_pure, k);
    } else {
        // Geometric ramp h0 * ratio^k until the width catches the uniform
        // width that spends the remaining cells exactly.
        const double h0 = s_min * (ratio - 1.0);
        std::vector<double> widths;
        widths.reserve(cells);
        double consumed = 0.0;
        int m = 0;
        for (; m < cells - 1; ++m) {
            const double h_uniform = (range - consumed) / (cells - m);
            const double h_geo = h0 * std::pow(ratio, m);
            if (h_geo >= h_uniform) break;
            widths.push_back(h_geo);
            consumed += h_geo;
        }
        const double h_uniform = (range - consumed) / (cells - m);
        for (int k = m; k < cells; ++k) widths.push_back(h_uniform);
        g.grading = (m == 0) ? Grading::uniform : Grading::geometric;
        for (int k = 0; k < cells; ++k) g.nodes[k + 1] = g.nodes[k] + widths[k];
    }
    g.nodes[cells] = s_max;

    // Snap the nearest node onto each required location (conforming
    // subdomain boundaries).
    for (double target : required) {
        if (!(target > s_min && target < s_max))
            throw std::invalid_argument("Grid1D::graded: required node outside range");
        const auto it = std::lower_bound(g.nodes.begin(), g.nodes.end(), target);
        std::size_t idx = static_cast<std::size_t>(it - g.nodes.begin());
        if (idx > 0 && target - g.nodes[idx - 1] < g.nodes[idx] - target) --idx;
        if (idx == 0 || idx == g.nodes.size() - 1)
            throw std::invalid_argument("Grid1D::graded: required node collides with an end");
        g.nodes[idx] = target;
    }
    g.validate();
    return g;
}

Grid1D Grid1D::uniform(double a, double b, int cells) {
    if (!(b > a)) throw std::invalid_argument("Grid1D::uniform: empty range");
    Grid1D g;
    g.grading = Grading::uniform;
    g.nodes.resize(cells + 1);
    for (int i = 0; i <= cells; ++i) g.nodes[i] = a + (b - a) * i / cells;
    g.nodes[cells] = b;
    return g;
}

Grid1D Grid1D::refined() const {
    Grid1D g;
    g.grading = grading;
    g.nodes.reserve(nodes.size() * 2 - 1);
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        g.nodes.push_back(nodes[i]);
        g.nodes.push_back(0.5 * (nodes[i] + nodes[i + 1]));
    }
    g.nodes.push_back(nodes.back());
    return g;
}

std::optional<int> Grid1D::find_node(double s) const {
    const auto it = std::lower_bound(nodes.begin(), nodes.end(), s - kNodeSnapTol * std::max(1.0, std::abs(s)));
    if (it == nodes.end()) return std::nullopt;
    if (std::abs(*it - s) <= kNodeSnapTol * std::max(1.0, std::abs(s)))
        return static_cast<int>(it - nodes.begin());
    return std::nullopt;
}

Grid1D Grid1D::restricted(double lo, double hi) const {
    const auto ilo = find_node(lo);
    const auto ihi = find_node(hi);
    if (!ilo || !ihi || *ilo >= *ihi)
        throw std::invalid_argument("Grid1D::restricted: bounds are not grid nodes");
    Grid1D g;
    g.grading = grading;
    g.nodes.assign(nodes.begin() + *ilo, nodes.begin() + *ihi + 1);
    return g;
}

Grid1D default_model_grid(const ModelPotentialSpec& spec, int cells,
                          const std::vector<double>& required) {
    spec.validate();
    const double scale = spec.well_scale();
    double s_max = 60.0 * scale;
    for (double rq : required) s_max = std::max(s_max, 2.0 * rq);
    return Grid1D::graded(1e-4 * scale, s_max, cells, 1.12, required);
}

namespace {

Grid1D domain_grid(const Grid1D& grid, const Domain& domain) {
    switch (domain.kind) {
        case Domain::Kind::full:
            return grid;
        case Domain::Kind::inner:
            return grid.restricted(grid.s_min(), domain.b);
        case Domain::Kind::outer:
            return grid.restricted(domain.b, grid.s_max());
    }
    throw std::logic_error("domain_grid: unreachable");
}

std::string domain_tag(const Domain& domain) {
    switch (domain.kind) {
        case Domain::Kind::full:
            return "full";
        case Domain::Kind::inner:
            return "inner(" + std::to_string(domain.b) + ")";
        case Domain::Kind::outer:
            return "outer(" + std::to_string(domain.b) + ")";
    }
    return {};
}

}  // namespace

OperatorPencil assemble_sturm_liouville(const Grid1D& g,
                                        const std::function<double(double)>& potential) {
    g.validate();
    const int n_nodes = static_cast<int>(g.nodes.size());
    const int n = n_nodes - 2;  // interior unknowns, Dirichlet at both ends
    if (n < 1) throw std::invalid_argument("assemble_sturm_liouville: grid too small");

    std::vector<Eigen::Triplet<double>> kt, mt;
    kt.reserve(3 * n);
    mt.reserve(3 * n);
    auto add = [&](std::vector<Eigen::Triplet<double>>& t, int i, int j, double v) {
        // global node index -> interior index; Dirichlet rows/cols dropped
        const int ii = i - 1, jj = j - 1;
        if (ii >= 0 && ii < n && jj >= 0 && jj < n) t.emplace_back(ii, jj, v);
    };

    using Rule = quadrature::GaussRule4;
    for (int c = 0; c + 1 < n_nodes; ++c) {
        const double a = g.nodes[c], b = g.nodes[c + 1];
        const double h = b - a;
        // gradient term
        add(kt, c, c, 1.0 / h);
        add(kt, c + 1, c + 1, 1.0 / h);
        add(kt, c, c + 1, -1.0 / h);
        add(kt, c + 1, c, -1.0 / h);
        // potential term, 4-point Gauss
        double v00 = 0.0, v01 = 0.0, v11 = 0.0;
        for (std::size_t qp = 0; qp < Rule::nodes.size(); ++qp) {
            const double s = 0.5 * (a + b) + 0.5 * h * Rule::nodes[qp];
            const double w = 0.5 * h * Rule::weights[qp];
            const double phi0 = (b - s) / h, phi1 = (s - a) / h;
            const double V = potential(s) * w;
            v00 += V * phi0 * phi0;
            v01 += V * phi0 * phi1;
            v11 += V * phi1 * phi1;
        }
        add(kt, c, c, v00);
        add(kt, c, c + 1, v01);
        add(kt, c + 1, c, v01);
        add(kt, c + 1, c + 1, v11);
        // mass (exact for linear elements)
        add(mt, c, c, h / 3.0);
        add(mt, c + 1, c + 1, h / 3.0);
        add(mt, c, c + 1, h / 6.0);
        add(mt, c + 1, c, h / 6.0);
    }

    OperatorPencil pencil;
    pencil.stiffness.resize(n, n);
    pencil.mass.resize(n, n);
    pencil.stiffness.setFromTriplets(kt.begin(), kt.end());
    pencil.mass.setFromTriplets(mt.begin(), mt.end());
    for (int i = 0; i < n; ++i)
        if (!(pencil.mass.coeff(i, i) > 0.0))
            throw std::runtime_error(
                "assemble_sturm_liouville: nonpositive mass diagonal (degenerate cell)");
    std::ostringstream id;
    id << "sl1d[" << g.s_min() << "," << g.s_max() << "]x" << g.cells();
    pencil.grid_id = id.str();
    pencil.boundary_tags = {BoundaryCondition::dirichlet, BoundaryCondition::dirichlet};
    return pencil;
}

OperatorPencil assemble_model(const ModelPotentialSpec& spec, const Grid1D& grid,
                              const Domain& domain) {
    spec.validate();
    grid.validate();
    const Grid1D g = domain_grid(grid, domain);
    OperatorPencil pencil =
        assemble_sturm_liouville(g, [&spec](double s) { return spec.potential(s); });
    std::ostringstream id;
    id << "model1d[" << g.s_min() << "," << g.s_max() << "]x" << g.cells() << ":"
       << domain_tag(domain);
    pencil.grid_id = id.str();
    return pencil;
}

std::vector<double> model_eigenvalues(const ModelPotentialSpec& spec, const Grid1D& grid,
                                      const Domain& domain, int j_max) {
    const OperatorPencil pencil = assemble_model(spec, grid, domain);
    if (j_max > pencil.dimension())
        throw std::invalid_argument("model_eigenvalues: j_max exceeds pencil dimension");
    return eigensolve::tridiag_smallest(pencil, j_max).values;
}

double hardy_quotient(const Grid1D& grid, const Eigen::VectorXd& coefficients) {
    grid.validate();
    const int n_nodes = static_cast<int>(grid.nodes.size());
    if (coefficients.size() != n_nodes)
        throw std::invalid_argument("hardy_quotient: coefficient/node count mismatch");
    if (coefficients[0] != 0.0 || coefficients[n_nodes - 1] != 0.0)
        throw std::invalid_argument("hardy_quotient: coefficients must vanish at both ends");

    using Rule = quadrature::GaussRule4;
    double num = 0.0, den = 0.0;
    for (int c = 0; c + 1 < n_nodes; ++c) {
        const double a = grid.nodes[c], b = grid.nodes[c + 1];
        const double h = b - a;
        const double f0 = coefficients[c], f1 = coefficients[c + 1];
        num += (f1 - f0) * (f1 - f0) / h;
        for (std::size_t qp = 0; qp < Rule::nodes.size(); ++qp) {
            const double s = 0.5 * (a + b) + 0.5 * h * Rule::nodes[qp];
            const double w = 0.5 * h * Rule::weights[qp];
            const double f = (f0 * (b - s) + f1 * (s - a)) / h;
            den += w * f * f / (4.0 * s * s);
        }
    }
    if (den == 0.0) throw std::invalid_argument("hardy_quotient: zero denominator");
    return num / den;
}

namespace {

// Quintic smoothstep and its derivative on [0, 1].
double smoothstep5(double x) { return x * x * x * (10.0 + x * (-15.0 + 6.0 * x)); }
double smoothstep5_derivative(double x) { return 30.0 * x * x * (1.0 - x) * (1.0 - x); }

}  // namespace

double CutoffPair::chi1(double s) const {
    const double xi = (s - 0.5 * b) / (0.25 * b);
    if (xi <= 0.0) return 1.0;
    if (xi >= 1.0) return 0.0;
    return std::cos(0.5 * kPi * smoothstep5(xi));
}

double CutoffPair::chi2(double s) const {
    const double xi = (s - 0.5 * b) / (0.25 * b);
    if (xi <= 0.0) return 0.0;
    if (xi >= 1.0) return 1.0;
    return std::sin(0.5 * kPi * smoothstep5(xi));
}

double CutoffPair::chi1_derivative(double s) const {
    const double xi = (s - 0.5 * b) / (0.25 * b);
    if (xi <= 0.0 || xi >= 1.0) return 0.0;
    const double theta_prime = 0.5 * kPi * smoothstep5_derivative(xi) / (0.25 * b);
    return -theta_prime * std::sin(0.5 * kPi * smoothstep5(xi));
}

double CutoffPair::chi2_derivative(double s) const {
    const double xi = (s - 0.5 * b) / (0.25 * b);
    if (xi <= 0.0 || xi >= 1.0) return 0.0;
    const double theta_prime = 0.5 * kPi * smoothstep5_derivative(xi) / (0.25 * b);
    return theta_prime * std::cos(0.5 * kPi * smoothstep5(xi));
}

double CutoffPair::shift_constant() const {
    // The two sup norms coincide by the mirror symmetry of the ramp; dense
    // sampling is plenty for a smooth one-dimensional maximum.
    const int samples = 200001;
    double sup1 = 0.0, sup2 = 0.0;
    for (int i = 0; i <= samples; ++i) {
        const double s = 0.5 * b + 0.25 * b * (static_cast<double>(i) / samples);
        sup1 = std::max(sup1, std::abs(chi1_derivative(s)));
        sup2 = std::max(sup2, std::abs(chi2_derivative(s)));
    }
    return sup1 * sup1 + sup2 * sup2;
}

bool ImsCheckReport::all_pass() const {
    for (const auto& e : entries)
        if (!e.pass) return false;
    return true;
}

ImsCheckReport ims_inequality_check(double p, double q, double alpha, double b, int j_max,
                                    double alpha0, int cells) {
    if (!(alpha >= 1.0)) throw std::invalid_argument("ims_inequality_check: alpha must be >= 1");
    if (!(b > 0.0)) throw std::invalid_argument("ims_inequality_check: b must be positive");
    const ModelPotentialSpec spec{std::pow(alpha, p - 1.0), std::pow(alpha, q - 1.0), p, q};
    const Grid1D grid = default_model_grid(spec, cells, {b});
    const std::vector<double> full = model_eigenvalues(spec, grid, Domain::full(), j_max);
    const std::vector<double> truncated =
        model_eigenvalues(spec, grid, Domain::inner(b), j_max);

    ImsCheckReport report;
    report.alpha = alpha;
    report.b = b;
    report.shift_constant = CutoffPair{b}.shift_constant();
    report.below_alpha_gate = alpha < alpha0;
    for (int j = 1; j <= j_max; ++j) {
        ImsCheckEntry e;
        e.j = j;
        e.truncated = truncated[j - 1];
        e.full = full[j - 1];
        e.pass = e.truncated <= e.full + report.shift_constant;
        report.entries.push_back(e);
    }
    return report;
}

OperatorPencil robin_interval_pencil(double half_length, double robin, int cells) {
    if (!(half_length > 0.0))
        throw std::invalid_argument("robin_interval_pencil: half_length must be positive");
    if (cells < 4) throw std::invalid_argument("robin_interval_pencil: too few cells");
    const int n = cells + 1;
    const double h = 2.0 * half_length / cells;

    std::vector<Eigen::Triplet<double>> kt, mt;
    kt.reserve(3 * n);
    mt.reserve(3 * n);
    for (int c = 0; c < cells; ++c) {
        kt.emplace_back(c, c, 1.0 / h);
        kt.emplace_back(c + 1, c + 1, 1.0 / h);
        kt.emplace_back(c, c + 1, -1.0 / h);
        kt.emplace_back(c + 1, c, -1.0 / h);
        mt.emplace_back(c, c, h / 3.0);
        mt.emplace_back(c + 1, c + 1, h / 3.0);
        mt.emplace_back(c, c + 1, h / 6.0);
        mt.emplace_back(c + 1, c, h / 6.0);
    }
    // Robin boundary term -r (f(L)^2 + f(-L)^2)
    kt.emplace_back(0, 0, -robin);
    kt.emplace_back(n - 1, n - 1, -robin);

    OperatorPencil pencil;
    pencil.stiffness.resize(n, n);
    pencil.mass.resize(n, n);
    pencil.stiffness.setFromTriplets(kt.begin(), kt.end());
    pencil.mass.setFromTriplets(mt.begin(), mt.end());
    pencil.grid_id = "robin1d[" + std::to_string(half_length) + "]x" + std::to_string(cells);
    pencil.boundary_tags = {BoundaryCondition::natural, BoundaryCondition::natural};
    return pencil;
}

double robin_interval_eigenvalue(double half_length, double robin, int j, int cells) {
    const OperatorPencil pencil = robin_interval_pencil(half_length, robin, cells);
    return eigensolve::tridiag_smallest(pencil, j).values[j - 1];
}

double robin_interval_eigenvalue_extrapolated(double half_length, double robin, int j,
                                              int base_cells) {
    const double e1 = robin_interval_eigenvalue(half_length, robin, j, base_cells);
    const double e2 = robin_interval_eigenvalue(half_length, robin, j, 2 * base_cells);
    const double e3 = robin_interval_eigenvalue(half_length, robin, j, 4 * base_cells);
    const double r1 = (4.0 * e2 - e1) / 3.0;
    const double r2 = (4.0 * e3 - e2) / 3.0;
    return (16.0 * r2 - r1) / 15.0;
}

ReferenceEigenvalues reference_model_eigenvalues(double p, double q, int j_max,
                                                 int base_cells) {
    const ModelPotentialSpec spec{0.0, 1.0, p, q};
    const Grid1D g1 = default_model_grid(spec, base_cells);
    const Grid1D g2 = g1.refined();
    const Grid1D g3 = g2.refined();
    const auto e1 = model_eigenvalues(spec, g1, Domain::full(), j_max);
    const auto e2 = model_eigenvalues(spec, g2, Domain::full(), j_max);
    const auto e3 = model_eigenvalues(spec, g3, Domain::full(), j_max);

    ReferenceEigenvalues ref;
    ref.values.resize(j_max);
    ref.richardson_disagreement = 0.0;
    for (int j = 0; j < j_max; ++j) {
        const double r1 = (4.0 * e2[j] - e1[j]) / 3.0;
        const double r2 = (4.0 * e3[j] - e2[j]) / 3.0;
        ref.values[j] = (16.0 * r2 - r1) / 15.0;
        if (j == 0) ref.richardson_disagreement = std::abs(r2 - r1);
    }
    return ref;
}

}  // namespace peakspec::grid1d
