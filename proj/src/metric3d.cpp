#include "peakspec/metric3d.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "peakspec/eigensolve.hpp"
#include "peakspec/quadrature.hpp"
#include "peakspec/runtime.hpp"
#include "peakspec/secular.hpp"

namespace peakspec {

int configured_threads() {
    if (const char* env = std::getenv("PEAKSPEC_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace peakspec

namespace peakspec::metric3d {

void PeakParams::validate() const {
    if (!(1.0 < p && p < q && q < 2.0))
        throw std::invalid_argument("PeakParams: exponents must satisfy 1 < p < q < 2");
    if (!(0.0 < a && a < 1.0))
        throw std::invalid_argument("PeakParams: truncation height a must lie in (0, 1)");
    if (!(alpha >= 1.0)) throw std::invalid_argument("PeakParams: alpha must be >= 1");
    if (!(c_bracket > 0.0)) throw std::invalid_argument("PeakParams: c_bracket must be positive");
}

double PeakParams::t1_halfwidth() const { return std::pow(alpha, 1.0 - p); }
double PeakParams::t2_halfwidth() const { return std::pow(alpha, 1.0 - q); }
double PeakParams::kappa() const { return c_bracket * std::pow(alpha, 1.0 - p); }

double bracket_constant(double p, double q) {
    if (!(1.0 < p && p < q && q < 2.0))
        throw std::invalid_argument("bracket_constant: exponents must satisfy 1 < p < q < 2");
    return 2.0 + 3.0 * p * p + 3.0 * q * q;
}

void TensorGrid3::validate() const {
    if (n1() < 8 || n2() < 8) throw std::invalid_argument("TensorGrid3: n1, n2 must be >= 8");
    if (ns() < 32) throw std::invalid_argument("TensorGrid3: ns must be >= 32");
    if (!(s_min() > 0.0)) throw std::invalid_argument("TensorGrid3: s_min must be positive");
    for (const auto* nodes : {&t1_nodes, &t2_nodes, &s_nodes})
        for (std::size_t i = 0; i + 1 < nodes->size(); ++i)
            if (!((*nodes)[i] < (*nodes)[i + 1]))
                throw std::invalid_argument("TensorGrid3: nodes must be strictly increasing");
}

TensorGrid3 TensorGrid3::make(const PeakParams& params, int n1, int n2, int ns, double s_ratio,
                              double s_min_factor) {
    params.validate();
    TensorGrid3 g;
    // mirrored construction keeps the transverse grids exactly symmetric
    auto symmetric_uniform = [](double halfwidth, int n) {
        std::vector<double> nodes(n + 1);
        for (int i = 0; 2 * i <= n; ++i) {
            nodes[i] = -halfwidth + 2.0 * halfwidth * i / n;
            nodes[n - i] = -nodes[i];
        }
        if (n % 2 == 0) nodes[n / 2] = 0.0;
        return nodes;
    };
    g.t1_nodes = symmetric_uniform(params.t1_halfwidth(), n1);
    g.t2_nodes = symmetric_uniform(params.t2_halfwidth(), n2);
    g.s_nodes = grid1d::Grid1D::graded(s_min_factor * params.a, params.a, ns, s_ratio).nodes;
    g.validate();
    return g;
}

Eigen::Matrix3d metric_matrix(double t1, double t2, double s, double p, double q) {
    if (!(s > 0.0)) throw std::invalid_argument("metric_matrix: s must be positive");
    Eigen::Matrix3d G;
    const double sp = std::pow(s, -2.0 * p);
    const double sq = std::pow(s, -2.0 * q);
    const double s1 = 1.0 / s;
    const double s2 = s1 * s1;
    G(0, 0) = sp + p * p * s2 * t1 * t1;
    G(1, 1) = sq + q * q * s2 * t2 * t2;
    G(2, 2) = 1.0;
    G(0, 1) = G(1, 0) = q * p * s2 * t1 * t2;
    G(0, 2) = G(2, 0) = -p * s1 * t1;
    G(1, 2) = G(2, 1) = -q * s1 * t2;
    return G;
}

namespace {

using quadrature::GaussRule3;

struct DofMap {
    int npt1 = 0, npt2 = 0;
    int is_lo = 0, is_hi = 0;  // retained s-node index range, inclusive
    int ns_kept = 0;

    long dof(int i1, int i2, int is) const {
        if (is < is_lo || is > is_hi) return -1;
        return (static_cast<long>(i1) * npt2 + i2) * ns_kept + (is - is_lo);
    }
    long size() const { return static_cast<long>(npt1) * npt2 * ns_kept; }
};

DofMap make_dof_map(const TensorGrid3& grid, TipCondition tip) {
    DofMap map;
    map.npt1 = grid.n1() + 1;
    map.npt2 = grid.n2() + 1;
    map.is_lo = (tip == TipCondition::dirichlet) ? 1 : 0;
    map.is_hi = grid.ns() - 1;  // the s = a plane is always eliminated
    map.ns_kept = map.is_hi - map.is_lo + 1;
    if (map.ns_kept < 2) throw std::invalid_argument("make_dof_map: no interior s nodes");
    return map;
}

enum class VolumeKind { exact, minus, plus, grad_lower, grad_exact, grad_upper };

struct VolumeCoefficients {
    // symmetric 3x3 metric (c11..c33) and the mass weight, all already
    // multiplied by s^{p+q}
    double c11, c22, c33, c12, c13, c23;
    double mass;
};

VolumeCoefficients volume_coefficients(const PeakParams& params, VolumeKind kind, double t1,
                                       double t2, double s) {
    const double p = params.p, q = params.q;
    const double weight = std::pow(s, p + q);
    VolumeCoefficients c{};
    c.c12 = c.c13 = c.c23 = 0.0;
    c.mass = weight;
    switch (kind) {
        case VolumeKind::exact:
        case VolumeKind::grad_exact: {
            const Eigen::Matrix3d G = metric_matrix(t1, t2, s, p, q);
            c.c11 = weight * G(0, 0);
            c.c22 = weight * G(1, 1);
            c.c33 = weight * G(2, 2);
            c.c12 = weight * G(0, 1);
            c.c13 = weight * G(0, 2);
            c.c23 = weight * G(1, 2);
            return c;
        }
        case VolumeKind::minus:
        case VolumeKind::plus: {
            const double f = (kind == VolumeKind::plus) ? 1.0 + params.kappa()
                                                        : 1.0 - params.kappa();
            c.c11 = f * weight * std::pow(s, -2.0 * p);
            c.c22 = f * weight * std::pow(s, -2.0 * q);
            c.c33 = f * weight;
            return c;
        }
        case VolumeKind::grad_lower: {
            const double ap = std::pow(params.alpha, 1.0 - p);
            const double aq = std::pow(params.alpha, 1.0 - q);
            c.c11 = (1.0 - p * p * ap) * weight * std::pow(s, -2.0 * p);
            c.c22 = (1.0 - q * q * aq) * weight * std::pow(s, -2.0 * q);
            c.c33 = (1.0 - ap - aq) * weight;
            return c;
        }
        case VolumeKind::grad_upper: {
            const double ap = std::pow(params.alpha, 1.0 - p);
            const double aq = std::pow(params.alpha, 1.0 - q);
            const double ap2 = std::pow(params.alpha, 2.0 - 2.0 * p);
            const double aq2 = std::pow(params.alpha, 2.0 - 2.0 * q);
            c.c11 = (1.0 + p * p * (ap + 2.0 * ap2)) * weight * std::pow(s, -2.0 * p);
            c.c22 = (1.0 + q * q * (aq + 2.0 * aq2)) * weight * std::pow(s, -2.0 * q);
            c.c33 = (1.0 + ap + aq) * weight;
            return c;
        }
    }
    throw std::logic_error("volume_coefficients: unreachable");
}

// Lateral boundary weight on the t1 = +-extent faces (area measure in
// (t2, s)); t2-faces use the p/q-swapped twin.
double face_weight_t1(const PeakParams& params, VolumeKind kind, double s) {
    const double p = params.p, q = params.q;
    if (kind == VolumeKind::exact) {
        const double g = params.p * std::pow(params.alpha, 1.0 - p) * std::pow(s, p - 1.0);
        return std::pow(s, q) * std::sqrt(g * g + 1.0);
    }
    return std::pow(s, q);
}

double face_weight_t2(const PeakParams& params, VolumeKind kind, double s) {
    const double p = params.p, q = params.q;
    if (kind == VolumeKind::exact) {
        const double g = params.q * std::pow(params.alpha, 1.0 - q) * std::pow(s, q - 1.0);
        return std::pow(s, p) * std::sqrt(g * g + 1.0);
    }
    return std::pow(s, p);
}

struct TripletBlock {
    std::vector<Eigen::Triplet<double>> stiffness;
    std::vector<Eigen::Triplet<double>> mass;
};

// Volume assembly over a contiguous range of s-cells (one slab).
void assemble_volume_slab(const PeakParams& params, const TensorGrid3& grid, VolumeKind kind,
                          const DofMap& map, int is_begin, int is_end, bool with_mass,
                          TripletBlock& out) {
    const auto& xg = GaussRule3::nodes;
    const auto& wg = GaussRule3::weights;
    const int n1 = grid.n1(), n2 = grid.n2();

    double val1[2][3], val2[2][3], val3[2][3];
    for (int g = 0; g < 3; ++g) {
        val1[0][g] = val2[0][g] = val3[0][g] = 0.5 * (1.0 - xg[g]);
        val1[1][g] = val2[1][g] = val3[1][g] = 0.5 * (1.0 + xg[g]);
    }

    double local_k[8][8], local_m[8][8];
    long gdof[8];
    double grad[8][3], val[8];

    for (int is = is_begin; is < is_end; ++is) {
        const double s0 = grid.s_nodes[is], s1 = grid.s_nodes[is + 1];
        const double hs = s1 - s0;
        for (int i1 = 0; i1 < n1; ++i1) {
            const double a1 = grid.t1_nodes[i1], b1 = grid.t1_nodes[i1 + 1];
            const double h1 = b1 - a1;
            for (int i2 = 0; i2 < n2; ++i2) {
                const double a2 = grid.t2_nodes[i2], b2 = grid.t2_nodes[i2 + 1];
                const double h2 = b2 - a2;

                for (int l = 0; l < 8; ++l)
                    for (int m = 0; m < 8; ++m) local_k[l][m] = local_m[l][m] = 0.0;

                for (int g1 = 0; g1 < 3; ++g1) {
                    const double t1 = 0.5 * (a1 + b1) + 0.5 * h1 * xg[g1];
                    for (int g2 = 0; g2 < 3; ++g2) {
                        const double t2 = 0.5 * (a2 + b2) + 0.5 * h2 * xg[g2];
                        for (int g3 = 0; g3 < 3; ++g3) {
                            const double s = 0.5 * (s0 + s1) + 0.5 * hs * xg[g3];
                            const double w = 0.125 * h1 * h2 * hs * wg[g1] * wg[g2] * wg[g3];
                            const VolumeCoefficients c =
                                volume_coefficients(params, kind, t1, t2, s);
                            for (int a = 0; a < 2; ++a)
                                for (int b = 0; b < 2; ++b)
                                    for (int cc = 0; cc < 2; ++cc) {
                                        const int l = (a << 2) | (b << 1) | cc;
                                        const double v1 = val1[a][g1], v2 = val2[b][g2],
                                                     v3 = val3[cc][g3];
                                        const double d1 = (a == 0 ? -1.0 : 1.0) / h1;
                                        const double d2 = (b == 0 ? -1.0 : 1.0) / h2;
                                        const double d3 = (cc == 0 ? -1.0 : 1.0) / hs;
                                        val[l] = v1 * v2 * v3;
                                        grad[l][0] = d1 * v2 * v3;
                                        grad[l][1] = v1 * d2 * v3;
                                        grad[l][2] = v1 * v2 * d3;
                                    }
                            for (int l = 0; l < 8; ++l) {
                                const double g0 = grad[l][0], g1v = grad[l][1], g2v = grad[l][2];
                                const double t0 = c.c11 * g0 + c.c12 * g1v + c.c13 * g2v;
                                const double t1v = c.c12 * g0 + c.c22 * g1v + c.c23 * g2v;
                                const double t2v = c.c13 * g0 + c.c23 * g1v + c.c33 * g2v;
                                for (int m = l; m < 8; ++m) {
                                    local_k[l][m] += w * (t0 * grad[m][0] + t1v * grad[m][1] +
                                                          t2v * grad[m][2]);
                                    if (with_mass) local_m[l][m] += w * c.mass * val[l] * val[m];
                                }
                            }
                        }
                    }
                }

                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b)
                        for (int cc = 0; cc < 2; ++cc)
                            gdof[(a << 2) | (b << 1) | cc] = map.dof(i1 + a, i2 + b, is + cc);

                for (int l = 0; l < 8; ++l) {
                    if (gdof[l] < 0) continue;
                    for (int m = l; m < 8; ++m) {
                        if (gdof[m] < 0) continue;
                        const double kv = local_k[l][m];
                        out.stiffness.emplace_back(gdof[l], gdof[m], kv);
                        if (m != l) out.stiffness.emplace_back(gdof[m], gdof[l], kv);
                        if (with_mass) {
                            const double mv = local_m[l][m];
                            out.mass.emplace_back(gdof[l], gdof[m], mv);
                            if (m != l) out.mass.emplace_back(gdof[m], gdof[l], mv);
                        }
                    }
                }
            }
        }
    }
}

// Robin boundary terms on the four lateral faces, subtracted from the
// stiffness.
void assemble_faces(const PeakParams& params, const TensorGrid3& grid, VolumeKind kind,
                    const DofMap& map, TripletBlock& out) {
    const auto& xg = GaussRule3::nodes;
    const auto& wg = GaussRule3::weights;
    const int n1 = grid.n1(), n2 = grid.n2(), ns = grid.ns();

    // t1 faces: i1 = 0 and i1 = n1, bilinear cells in (t2, s)
    for (const int i1 : {0, n1}) {
        for (int i2 = 0; i2 < n2; ++i2) {
            const double a2 = grid.t2_nodes[i2], b2 = grid.t2_nodes[i2 + 1];
            const double h2 = b2 - a2;
            for (int is = 0; is < ns; ++is) {
                const double s0 = grid.s_nodes[is], s1 = grid.s_nodes[is + 1];
                const double hs = s1 - s0;
                double local[4][4] = {};
                for (int g2 = 0; g2 < 3; ++g2)
                    for (int g3 = 0; g3 < 3; ++g3) {
                        const double s = 0.5 * (s0 + s1) + 0.5 * hs * xg[g3];
                        const double w = 0.25 * h2 * hs * wg[g2] * wg[g3] *
                                         face_weight_t1(params, kind, s);
                        const double v2[2] = {0.5 * (1.0 - xg[g2]), 0.5 * (1.0 + xg[g2])};
                        const double v3[2] = {0.5 * (1.0 - xg[g3]), 0.5 * (1.0 + xg[g3])};
                        for (int b = 0; b < 2; ++b)
                            for (int c = 0; c < 2; ++c)
                                for (int bb = 0; bb < 2; ++bb)
                                    for (int cb = 0; cb < 2; ++cb)
                                        local[b * 2 + c][bb * 2 + cb] -=
                                            w * v2[b] * v3[c] * v2[bb] * v3[cb];
                    }
                for (int b = 0; b < 2; ++b)
                    for (int c = 0; c < 2; ++c) {
                        const long di = map.dof(i1, i2 + b, is + c);
                        if (di < 0) continue;
                        for (int bb = 0; bb < 2; ++bb)
                            for (int cb = 0; cb < 2; ++cb) {
                                const long dj = map.dof(i1, i2 + bb, is + cb);
                                if (dj < 0) continue;
                                out.stiffness.emplace_back(di, dj, local[b * 2 + c][bb * 2 + cb]);
                            }
                    }
            }
        }
    }
    // t2 faces: i2 = 0 and i2 = n2, bilinear cells in (t1, s)
    for (const int i2 : {0, n2}) {
        for (int i1 = 0; i1 < n1; ++i1) {
            const double a1 = grid.t1_nodes[i1], b1 = grid.t1_nodes[i1 + 1];
            const double h1 = b1 - a1;
            for (int is = 0; is < ns; ++is) {
                const double s0 = grid.s_nodes[is], s1 = grid.s_nodes[is + 1];
                const double hs = s1 - s0;
                double local[4][4] = {};
                for (int g1 = 0; g1 < 3; ++g1)
                    for (int g3 = 0; g3 < 3; ++g3) {
                        const double s = 0.5 * (s0 + s1) + 0.5 * hs * xg[g3];
                        const double w = 0.25 * h1 * hs * wg[g1] * wg[g3] *
                                         face_weight_t2(params, kind, s);
                        const double v1[2] = {0.5 * (1.0 - xg[g1]), 0.5 * (1.0 + xg[g1])};
                        const double v3[2] = {0.5 * (1.0 - xg[g3]), 0.5 * (1.0 + xg[g3])};
                        for (int b = 0; b < 2; ++b)
                            for (int c = 0; c < 2; ++c)
                                for (int bb = 0; bb < 2; ++bb)
                                    for (int cb = 0; cb < 2; ++cb)
                                        local[b * 2 + c][bb * 2 + cb] -=
                                            w * v1[b] * v3[c] * v1[bb] * v3[cb];
                    }
                for (int b = 0; b < 2; ++b)
                    for (int c = 0; c < 2; ++c) {
                        const long di = map.dof(i1 + b, i2, is + c);
                        if (di < 0) continue;
                        for (int bb = 0; bb < 2; ++bb)
                            for (int cb = 0; cb < 2; ++cb) {
                                const long dj = map.dof(i1 + bb, i2, is + cb);
                                if (dj < 0) continue;
                                out.stiffness.emplace_back(di, dj, local[b * 2 + c][bb * 2 + cb]);
                            }
                    }
            }
        }
    }
}

// Deterministic slab-parallel volume assembly: per-slab triplet blocks are
// concatenated in slab order, so the summation order is independent of the
// thread count.
TripletBlock assemble_kind(const PeakParams& params, const TensorGrid3& grid, VolumeKind kind,
                           const DofMap& map, bool with_mass, bool with_faces) {
    const int ns = grid.ns();
    const int threads = std::max(1, std::min(configured_threads(), ns));
    std::vector<TripletBlock> blocks(threads);
    std::vector<std::thread> pool;
    const int chunk = (ns + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int lo = t * chunk;
        const int hi = std::min(ns, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, t, lo, hi]() {
            assemble_volume_slab(params, grid, kind, map, lo, hi, with_mass, blocks[t]);
        });
    }
    for (auto& th : pool) th.join();
    TripletBlock all;
    for (auto& b : blocks) {
        all.stiffness.insert(all.stiffness.end(), b.stiffness.begin(), b.stiffness.end());
        all.mass.insert(all.mass.end(), b.mass.begin(), b.mass.end());
    }
    if (with_faces) assemble_faces(params, grid, kind, map, all);
    return all;
}

std::string grid_tag(const TensorGrid3& grid, TipCondition tip) {
    std::ostringstream os;
    os << "peak3d " << grid.n1() << "x" << grid.n2() << "x" << grid.ns() << " s_min=" << grid.s_min()
       << (tip == TipCondition::dirichlet ? " tip=dirichlet" : " tip=natural");
    return os.str();
}

std::vector<BoundaryCondition> face_tags(TipCondition tip) {
    // t1-, t1+, t2-, t2+ carry the Robin terms (natural); then tip, then s=a
    return {BoundaryCondition::natural, BoundaryCondition::natural, BoundaryCondition::natural,
            BoundaryCondition::natural,
            tip == TipCondition::dirichlet ? BoundaryCondition::dirichlet
                                           : BoundaryCondition::natural,
            BoundaryCondition::dirichlet};
}

VolumeKind to_volume_kind(FormKind kind) {
    switch (kind) {
        case FormKind::exact_weighted:
            return VolumeKind::exact;
        case FormKind::bracket_minus:
            return VolumeKind::minus;
        case FormKind::bracket_plus:
            return VolumeKind::plus;
    }
    throw std::logic_error("to_volume_kind: unreachable");
}

}  // namespace

Eigen::VectorXd conjugation_weights(const PeakParams& params, const TensorGrid3& grid,
                                    TipCondition tip) {
    const DofMap map = make_dof_map(grid, tip);
    Eigen::VectorXd d(map.size());
    const double e = -0.5 * (params.p + params.q);
    for (int i1 = 0; i1 < map.npt1; ++i1)
        for (int i2 = 0; i2 < map.npt2; ++i2)
            for (int is = map.is_lo; is <= map.is_hi; ++is)
                d[map.dof(i1, i2, is)] = std::pow(grid.s_nodes[is], e);
    return d;
}

OperatorPencil conjugated(const OperatorPencil& pencil, const Eigen::VectorXd& d) {
    if (d.size() != pencil.dimension())
        throw std::invalid_argument("conjugated: weight vector size mismatch");
    OperatorPencil out = pencil;
    for (auto* m : {&out.stiffness, &out.mass})
        for (int c = 0; c < m->outerSize(); ++c)
            for (Eigen::SparseMatrix<double>::InnerIterator it(*m, c); it; ++it)
                it.valueRef() *= d[it.row()] * d[it.col()];
    return out;
}

OperatorPencil assemble_peak_form(const PeakParams& params, const TensorGrid3& grid,
                                  FormKind kind, TipCondition tip) {
    params.validate();
    grid.validate();
    const DofMap map = make_dof_map(grid, tip);
    const TripletBlock block =
        assemble_kind(params, grid, to_volume_kind(kind), map, /*with_mass=*/true,
                      /*with_faces=*/true);
    OperatorPencil pencil;
    const long n = map.size();
    pencil.stiffness.resize(n, n);
    pencil.mass.resize(n, n);
    pencil.stiffness.setFromTriplets(block.stiffness.begin(), block.stiffness.end());
    pencil.mass.setFromTriplets(block.mass.begin(), block.mass.end());
    pencil.grid_id = grid_tag(grid, tip);
    pencil.boundary_tags = face_tags(tip);
    for (long i = 0; i < n; ++i)
        if (!(pencil.mass.coeff(i, i) > 0.0))
            throw std::runtime_error("assemble_peak_form: nonpositive mass diagonal");
    if (kind == FormKind::exact_weighted) return pencil;
    return conjugated(pencil, conjugation_weights(params, grid, tip));
}

OperatorPencil symmetrized(const OperatorPencil& pencil, const TensorGrid3& grid,
                           TipCondition tip) {
    const DofMap map = make_dof_map(grid, tip);
    if (map.size() != pencil.dimension())
        throw std::invalid_argument("symmetrized: pencil/grid mismatch");
    std::vector<long> perm(map.size());
    for (int i1 = 0; i1 < map.npt1; ++i1)
        for (int i2 = 0; i2 < map.npt2; ++i2)
            for (int is = map.is_lo; is <= map.is_hi; ++is)
                perm[map.dof(i1, i2, is)] =
                    map.dof(map.npt1 - 1 - i1, map.npt2 - 1 - i2, is);
    auto average = [&](const Eigen::SparseMatrix<double>& m) {
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(2 * m.nonZeros());
        for (int c = 0; c < m.outerSize(); ++c)
            for (Eigen::SparseMatrix<double>::InnerIterator it(m, c); it; ++it) {
                t.emplace_back(it.row(), it.col(), 0.5 * it.value());
                t.emplace_back(perm[it.row()], perm[it.col()], 0.5 * it.value());
            }
        Eigen::SparseMatrix<double> out(m.rows(), m.cols());
        out.setFromTriplets(t.begin(), t.end());
        return out;
    };
    OperatorPencil out = pencil;
    out.stiffness = average(pencil.stiffness);
    out.mass = average(pencil.mass);
    return out;
}

Eigen::SparseMatrix<double> assemble_gradient_form(const PeakParams& params,
                                                   const TensorGrid3& grid, GradientBound kind,
                                                   TipCondition tip) {
    params.validate();
    grid.validate();
    const DofMap map = make_dof_map(grid, tip);
    VolumeKind vk = VolumeKind::grad_exact;
    if (kind == GradientBound::lower_estimate) vk = VolumeKind::grad_lower;
    if (kind == GradientBound::upper_estimate) vk = VolumeKind::grad_upper;
    const TripletBlock block =
        assemble_kind(params, grid, vk, map, /*with_mass=*/false, /*with_faces=*/false);
    Eigen::SparseMatrix<double> K(map.size(), map.size());
    K.setFromTriplets(block.stiffness.begin(), block.stiffness.end());
    return K;
}

GradientOrderingReport gradient_sandwich_check(const PeakParams& params, const TensorGrid3& grid,
                                               int samples, std::uint64_t seed) {
    const auto lower = assemble_gradient_form(params, grid, GradientBound::lower_estimate);
    const auto exact = assemble_gradient_form(params, grid, GradientBound::exact_metric);
    const auto upper = assemble_gradient_form(params, grid, GradientBound::upper_estimate);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    GradientOrderingReport report;
    report.samples = samples;
    double gap_sum = 0.0;
    for (int i = 0; i < samples; ++i) {
        Eigen::VectorXd u(lower.rows());
        for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = dist(rng);
        const double lo = u.dot(lower * u);
        const double ex = u.dot(exact * u);
        const double hi = u.dot(upper * u);
        const double scale = std::max({std::abs(lo), std::abs(ex), std::abs(hi), 1e-300});
        const double viol = std::max(lo - ex, ex - hi) / scale;
        if (viol <= 1e-12)
            ++report.ordered;
        else
            report.max_relative_violation = std::max(report.max_relative_violation, viol);
        gap_sum += (hi - lo) / std::max(std::abs(ex), 1e-300);
    }
    report.mean_relative_gap = gap_sum / std::max(1, samples);
    return report;
}

double surrogate_bottom_estimate(const PeakParams& params, const TensorGrid3& grid) {
    // s-fiber operator with the transverse directions frozen at their
    // interval Robin ground energies:
    //   -f'' + [ kappa/s^2 + E_1(t1 fiber)/s^{2p} + E_1(t2 fiber)/s^{2q} ] f
    const auto& s_nodes = grid.s_nodes;
    const int n_nodes = static_cast<int>(s_nodes.size());
    const int n = n_nodes - 2;
    const double hardy = params.hardy_coefficient();
    const double w1 = params.t1_halfwidth();
    const double w2 = params.t2_halfwidth();

    auto potential = [&](double s) {
        const double e_t1 =
            secular::interval_eigenvalue({w1, std::pow(s, params.p)}, 1);
        const double e_t2 =
            secular::interval_eigenvalue({w2, std::pow(s, params.q)}, 1);
        return hardy / (s * s) + e_t1 * std::pow(s, -2.0 * params.p) +
               e_t2 * std::pow(s, -2.0 * params.q);
    };

    std::vector<Eigen::Triplet<double>> kt, mt;
    auto add = [&](std::vector<Eigen::Triplet<double>>& t, int i, int j, double v) {
        const int ii = i - 1, jj = j - 1;
        if (ii >= 0 && ii < n && jj >= 0 && jj < n) t.emplace_back(ii, jj, v);
    };
    for (int c = 0; c + 1 < n_nodes; ++c) {
        const double a = s_nodes[c], b = s_nodes[c + 1];
        const double h = b - a;
        add(kt, c, c, 1.0 / h);
        add(kt, c + 1, c + 1, 1.0 / h);
        add(kt, c, c + 1, -1.0 / h);
        add(kt, c + 1, c, -1.0 / h);
        // midpoint-sampled potential is enough for a shift estimate
        const double V = potential(0.5 * (a + b));
        add(kt, c, c, V * h / 3.0);
        add(kt, c, c + 1, V * h / 6.0);
        add(kt, c + 1, c, V * h / 6.0);
        add(kt, c + 1, c + 1, V * h / 3.0);
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
    return eigensolve::tridiag_smallest(pencil, 1).values[0];
}

SandwichReport sandwich_check(const PeakParams& params, const TensorGrid3& grid, int samples,
                              std::uint64_t seed, int j_max, double solver_tol_scale) {
    const auto d = conjugation_weights(params, grid);
    const OperatorPencil exact_w = assemble_peak_form(params, grid, FormKind::exact_weighted);
    const OperatorPencil exact = conjugated(exact_w, d);
    const OperatorPencil minus = assemble_peak_form(params, grid, FormKind::bracket_minus);
    const OperatorPencil plus = assemble_peak_form(params, grid, FormKind::bracket_plus);

    SandwichReport report;
    report.alpha = params.alpha;
    report.minus_semibounded = params.minus_form_semibounded();

    // form values on random flat coefficient vectors
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    report.form_samples = samples;
    for (int i = 0; i < samples; ++i) {
        Eigen::VectorXd u(exact.dimension());
        for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = dist(rng);
        const double lo = u.dot(minus.stiffness * u);
        const double ex = u.dot(exact.stiffness * u);
        const double hi = u.dot(plus.stiffness * u);
        const double scale = std::max({std::abs(lo), std::abs(ex), std::abs(hi), 1e-300});
        if (lo - ex > 1e-10 * scale) {
            ++report.form_violations_lower;
            report.max_form_violation_rel =
                std::max(report.max_form_violation_rel, (lo - ex) / scale);
        }
        if (ex - hi > 1e-10 * scale) {
            ++report.form_violations_upper;
            report.max_form_violation_rel =
                std::max(report.max_form_violation_rel, (ex - hi) / scale);
        }
    }

    // eigenvalue ordering
    const double est = surrogate_bottom_estimate(params, grid);
    const std::array<int, 3> dims = {grid.n1() + 1, grid.n2() + 1,
                                     static_cast<int>(exact.dimension()) /
                                         ((grid.n1() + 1) * (grid.n2() + 1))};
    auto solve = [&](const OperatorPencil& pencil, std::optional<double> shift,
                     double scale_hint, bool verify) {
        eigensolve::SparseOptions opts;
        opts.shift = shift;
        opts.tensor_dims = dims;
        opts.verify_enumeration = verify;
        const double tol = solver_tol_scale * std::max(1.0, std::abs(scale_hint));
        return eigensolve::sparse_smallest(pencil, j_max, tol, opts);
    };
    double minus_scale = std::numeric_limits<double>::max();
    for (Eigen::Index i = 0; i < minus.dimension(); ++i) {
        const double md = minus.mass.coeff(i, i);
        if (md > 0.0) minus_scale = std::min(minus_scale, minus.stiffness.coeff(i, i) / md);
    }
    const auto r_exact = solve(exact, est - 0.5 * std::abs(est) - 1.0, est, true);
    const auto r_plus = solve(plus, est - 0.5 * std::abs(est) - 1.0, est, true);
    const auto r_minus = solve(minus, std::nullopt, minus_scale, false);
    report.e_exact = r_exact.values;
    report.e_plus = r_plus.values;
    report.e_minus = r_minus.values;
    report.residuals_converged =
        r_exact.all_converged() && r_plus.all_converged() && r_minus.all_converged();
    const double slack = 1e-8 * std::max(1.0, std::abs(est));
    for (int j = 0; j < j_max; ++j) {
        if (report.e_minus[j] > report.e_exact[j] + slack) report.eigen_ok_lower = false;
        if (report.e_exact[j] > report.e_plus[j] + slack) report.eigen_ok_upper = false;
    }
    return report;
}

std::vector<TipSensitivityEntry> tip_sensitivity_study(const PeakParams& params, int n1, int n2,
                                                       int ns, double s_ratio,
                                                       const std::vector<double>& s_min_factors,
                                                       double solver_tol_scale) {
    std::vector<TipSensitivityEntry> out;
    for (double f : s_min_factors) {
        const TensorGrid3 grid = TensorGrid3::make(params, n1, n2, ns, s_ratio, f);
        const double est = surrogate_bottom_estimate(params, grid);
        const double tol = solver_tol_scale * std::max(1.0, std::abs(est));
        TipSensitivityEntry e;
        e.s_min_factor = f;
        for (const TipCondition tip : {TipCondition::dirichlet, TipCondition::natural}) {
            const OperatorPencil pencil =
                assemble_peak_form(params, grid, FormKind::exact_weighted, tip);
            eigensolve::SparseOptions opts;
            opts.shift = est - 0.5 * std::abs(est) - 1.0;
            opts.tensor_dims = {n1 + 1, n2 + 1,
                                static_cast<int>(pencil.dimension()) / ((n1 + 1) * (n2 + 1))};
            const auto r = eigensolve::sparse_smallest(pencil, 1, tol, opts);
            if (tip == TipCondition::dirichlet)
                e.e_dirichlet = r.values[0];
            else
                e.e_natural = r.values[0];
        }
        out.push_back(e);
    }
    return out;
}

}  // namespace peakspec::metric3d
