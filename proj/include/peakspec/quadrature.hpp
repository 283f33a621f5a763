#pragma once

#include <array>
#include <cstddef>

namespace peakspec::quadrature {

// Gauss-Legendre rules on the reference interval [-1, 1].
// A rule with n points integrates polynomials of degree 2n-1 exactly.

struct GaussRule3 {
    static constexpr std::array<double, 3> nodes = {
        -0.7745966692414833770358531, 0.0, 0.7745966692414833770358531};
    static constexpr std::array<double, 3> weights = {
        0.5555555555555555555555556, 0.8888888888888888888888889,
        0.5555555555555555555555556};
};

struct GaussRule4 {
    static constexpr std::array<double, 4> nodes = {
        -0.8611363115940525752239465, -0.3399810435848562648026658,
        0.3399810435848562648026658, 0.8611363115940525752239465};
    static constexpr std::array<double, 4> weights = {
        0.3478548451374538573730639, 0.6521451548625461426269361,
        0.6521451548625461426269361, 0.3478548451374538573730639};
};

// Composite Gauss quadrature of f over [a, b] split into `panels` equal cells.
template <typename Rule, typename F>
double composite(F&& f, double a, double b, int panels) {
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int c = 0; c < panels; ++c) {
        const double mid = a + (c + 0.5) * h;
        double cell = 0.0;
        for (std::size_t i = 0; i < Rule::nodes.size(); ++i)
            cell += Rule::weights[i] * f(mid + 0.5 * h * Rule::nodes[i]);
        total += 0.5 * h * cell;
    }
    return total;
}

}  // namespace peakspec::quadrature
