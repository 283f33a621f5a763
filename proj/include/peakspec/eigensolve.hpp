#pragma once

#include <Eigen/Core>
#include <array>
#include <optional>
#include <vector>

#include "peakspec/pencil.hpp"

namespace peakspec::eigensolve {

struct EigenResult {
    std::vector<double> values;          // ascending
    std::vector<double> residual_norms;  // ||K x - lambda M x||_2 with ||x||_M = 1
    std::vector<bool> converged;         // per pair
    int iterations = 0;
    double tolerance = 0.0;  // the residual tolerance the flags refer to
    Eigen::MatrixXd vectors;  // columns, M-orthonormal

    bool all_converged() const {
        for (bool c : converged)
            if (!c) return false;
        return !converged.empty();
    }
};

// k smallest eigenpairs of a symmetric tridiagonal pencil via Sturm-count
// bisection (absolute tolerance 1e-12 * spectral scale) with eigenvectors
// from two steps of inverse iteration.  Throws on non-tridiagonal input,
// k > dimension, or an indefinite mass matrix.
EigenResult tridiag_smallest(const OperatorPencil& pencil, int k);

// Number of pencil eigenvalues strictly below lambda (Sturm count of
// K - lambda M).  Exposed for counting consistency checks.
int sturm_count(const OperatorPencil& pencil, double lambda);

struct SparseOptions {
    int block_size = 0;                      // 0: k + 4
    int max_iterations = 300;
    std::optional<double> shift;             // sigma for the (K - sigma M) preconditioner
    std::array<int, 3> tensor_dims{0, 0, 0};  // deterministic tensor-mode start when set
    bool verify_enumeration = true;  // inertia certificate against missed eigenvalues
};

// k algebraically smallest eigenpairs of a sparse symmetric pencil with
// positive-definite mass, computed by a blocked locally-optimal
// preconditioned scheme.  The preconditioner is an LDLT factorization of
// (K - sigma M) with sigma below the target cluster; when no shift hint is
// given sigma starts from the smallest diagonal Rayleigh quotient and is
// pushed down with doubled margin whenever a Ritz value undercuts it.
// On max-iteration exhaustion the converged flags report which pairs met
// the tolerance.
EigenResult sparse_smallest(const OperatorPencil& pencil, int k, double tol,
                            const SparseOptions& options = {});

}  // namespace peakspec::eigensolve
