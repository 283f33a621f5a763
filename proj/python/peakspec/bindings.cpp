#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "peakspec/asympt.hpp"
#include "peakspec/eigensolve.hpp"
#include "peakspec/grid1d.hpp"
#include "peakspec/metric3d.hpp"
#include "peakspec/secular.hpp"

namespace py = pybind11;
using namespace peakspec;

PYBIND11_MODULE(_peakspec, m) {
    m.doc() = "spectral toolkit for Robin Laplacians on non-isotropic peak domains";

    m.def(
        "interval_eigenvalue",
        [](double half_length, double robin, int j) {
            return secular::interval_eigenvalue({half_length, robin}, j);
        },
        py::arg("half_length"), py::arg("robin"), py::arg("j"),
        "j-th eigenvalue of the interval Robin operator on (-L, L)");
    m.def("ground_energy_correction", &secular::ground_energy_correction, py::arg("x"),
          "(E_1(L=1, r=x) + x) / x^2");
    m.def(
        "eigenfunction",
        [](double half_length, double robin, int j, double t) {
            return secular::eigenfunction({half_length, robin}, j, t);
        },
        py::arg("half_length"), py::arg("robin"), py::arg("j"), py::arg("t"),
        "normalized interval Robin eigenfunction, sign fixed at t = L");

    m.def(
        "model_eigenvalues",
        [](double c1, double c2, double p, double q, int j_max, int cells) {
            const grid1d::ModelPotentialSpec spec{c1, c2, p, q};
            const grid1d::Grid1D grid = grid1d::default_model_grid(spec, cells);
            return grid1d::model_eigenvalues(spec, grid, grid1d::Domain::full(), j_max);
        },
        py::arg("c1"), py::arg("c2"), py::arg("p"), py::arg("q"), py::arg("j_max") = 3,
        py::arg("cells") = 640, "low eigenvalues of the half-line model operator");
    m.def(
        "reference_model_eigenvalues",
        [](double p, double q, int j_max) {
            const auto ref = grid1d::reference_model_eigenvalues(p, q, j_max);
            return std::make_pair(ref.values, ref.richardson_disagreement);
        },
        py::arg("p"), py::arg("q"), py::arg("j_max") = 1,
        "Richardson-extrapolated model eigenvalues and the agreement indicator");

    m.def("bracket_constant", &metric3d::bracket_constant, py::arg("p"), py::arg("q"),
          "default comparison constant 2 + 3p^2 + 3q^2");
    m.def("metric_matrix", &metric3d::metric_matrix, py::arg("t1"), py::arg("t2"), py::arg("s"),
          py::arg("p"), py::arg("q"), "inverse first fundamental form of the straightening map");

    m.def(
        "peak_eigenvalues",
        [](double p, double q, double a, double alpha, int j_max, int n1, int n2, int ns,
           const std::string& kind) {
            metric3d::PeakParams params{p, q, a, alpha, metric3d::bracket_constant(p, q)};
            const auto grid = metric3d::TensorGrid3::make(params, n1, n2, ns);
            metric3d::FormKind form = metric3d::FormKind::exact_weighted;
            if (kind == "bracket_minus") form = metric3d::FormKind::bracket_minus;
            else if (kind == "bracket_plus") form = metric3d::FormKind::bracket_plus;
            else if (kind != "exact") throw std::invalid_argument("kind: exact|bracket_minus|bracket_plus");
            const auto pencil = metric3d::assemble_peak_form(params, grid, form);
            const double est = metric3d::surrogate_bottom_estimate(params, grid);
            eigensolve::SparseOptions opts;
            if (form != metric3d::FormKind::bracket_minus)
                opts.shift = est - 0.5 * std::abs(est) - 1.0;
            opts.tensor_dims = {n1 + 1, n2 + 1,
                                static_cast<int>(pencil.dimension()) / ((n1 + 1) * (n2 + 1))};
            const auto r = eigensolve::sparse_smallest(pencil, j_max,
                                                       1e-9 * (1.0 + std::abs(est)), opts);
            return std::make_pair(r.values, r.all_converged());
        },
        py::arg("p"), py::arg("q"), py::arg("a"), py::arg("alpha"), py::arg("j_max") = 3,
        py::arg("n1") = 16, py::arg("n2") = 16, py::arg("ns") = 64, py::arg("kind") = "exact",
        "low eigenvalues of the straightened peak form");

    m.def(
        "sweep_records",
        [](double p, double q, double a, const std::vector<double>& alphas, int j_max, int n1,
           int n2, int ns) {
            asympt::SweepConfig config;
            config.p = p;
            config.q = q;
            config.a = a;
            config.alphas = alphas;
            config.j_max = j_max;
            config.grid.n1 = n1;
            config.grid.n2 = n2;
            config.grid.ns = ns;
            const auto result = asympt::sweep(config);
            py::list out;
            for (const auto& rec : result.records) {
                py::dict d;
                d["alpha"] = rec.alpha;
                d["j"] = rec.j;
                d["e_exact"] = rec.e_exact;
                d["e_minus"] = rec.e_minus;
                d["e_plus"] = rec.e_plus;
                d["ratio"] = rec.ratio;
                d["converged"] = rec.converged;
                d["sandwich_ok"] = rec.sandwich_ok;
                out.append(d);
            }
            return out;
        },
        py::arg("p") = 1.2, py::arg("q") = 1.5, py::arg("a") = 0.5,
        py::arg("alphas") = std::vector<double>{8.0, 16.0}, py::arg("j_max") = 2,
        py::arg("n1") = 12, py::arg("n2") = 12, py::arg("ns") = 48,
        "alpha sweep with two-sided bracket records");
}
