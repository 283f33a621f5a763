#pragma once

#include <Eigen/SparseCore>
#include <string>
#include <vector>

namespace peakspec {

enum class BoundaryCondition { dirichlet, natural };

// Symmetric operator pencil (K, M) for the generalized eigenproblem
// K x = lambda M x.  K is a form ("stiffness-like") matrix in energy units,
// M is a positive-definite ("mass-like") matrix.  Both refer to the same
// set of retained degrees of freedom of the generating grid.
struct OperatorPencil {
    Eigen::SparseMatrix<double> stiffness;
    Eigen::SparseMatrix<double> mass;
    std::string grid_id;
    std::vector<BoundaryCondition> boundary_tags;

    Eigen::Index dimension() const { return stiffness.rows(); }

    // Bandwidth check used to route pencils to the tridiagonal solver.
    bool is_tridiagonal() const {
        for (int k = 0; k < stiffness.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(stiffness, k); it; ++it)
                if (std::abs(it.row() - it.col()) > 1 && it.value() != 0.0) return false;
        for (int k = 0; k < mass.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(mass, k); it; ++it)
                if (std::abs(it.row() - it.col()) > 1 && it.value() != 0.0) return false;
        return true;
    }
};

}  // namespace peakspec
