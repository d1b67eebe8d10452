#pragma once

#include <optional>
#include <string>
#include <vector>

#include "daestab/errors.hpp"
#include "daestab/types.hpp"

namespace daestab {

/// Regular matrix pencil lambda*A + B with square real A, B.
///
/// Construction validates shapes and samples det(lambda*A+B) at 2n+1
/// deterministic points; a pencil whose determinant vanishes at every
/// sample is rejected as singular.
struct MatrixPencil {
    Matrix A;
    Matrix B;
    Index n = 0;

    MatrixPencil(Matrix A_, Matrix B_);
};

/// Sampled resolvent norms ||(lambda*A+B)^-1|| at increasing |lambda|.
/// For an index-1 pencil these stay bounded; growth exposes higher index.
struct ResolventProbe {
    std::vector<double> magnitudes; // |lambda| sample points
    std::vector<double> norms;      // min over signs/offsets of the 2-norm
    double scale = 1.0;             // magnitudes are {1e2,1e4,1e6} * scale
    double growth_ratio = 0.0;      // norms.back() / norms.front()
};

/// Spectral projector split of an index-1 pencil.
///
/// P1/P2 project the state space onto X1 (differential part) and
/// X2 = ker A (algebraic part); Q1/Q2 split the range space the same way
/// and satisfy A*Pj = Qj*A, B*Pj = Qj*B. G_inv is the inverse of the
/// auxiliary operator G = A + B*P2. basis_X1/basis_X2 carry orthonormal
/// column bases of X1 and X2 with a deterministic sign convention.
struct PencilDecomposition {
    Matrix P1, P2, Q1, Q2;
    Matrix G_inv;
    Matrix basis_X1; // n x a, columns span X1
    Matrix basis_X2; // n x d, columns span X2
    Index a = 0;     // dim X1
    Index d = 0;     // dim X2, a + d = n
    ResolventProbe resolvent_bound_report;
};

struct DecomposeOptions {
    std::optional<double> lambda0; // force the shift instead of the built-in list
    double cond_limit = 1e12;      // acceptance bound for cond(lambda0*A+B)
    double resolvent_growth_limit = 10.0;
};

/// True iff det(lambda*A+B) is nonzero at at least one of sample_count
/// deterministically sampled lambda values. Pure predicate, never throws
/// on singular input.
bool check_regularity(const Matrix& A, const Matrix& B, int sample_count);
bool check_regularity(const MatrixPencil& pencil, int sample_count);

/// Compute the spectral projector split of a regular index-1 pencil.
///
/// Chooses a shift lambda0 with lambda0*A+B well conditioned, forms
/// M = (lambda0*A+B)^-1 * A, splits the space into ker M and range M
/// (complementary M-invariant subspaces exactly when the pencil has
/// index 1) and assembles the projectors, image-space splits and G^-1.
///
/// Throws SingularPencilError, NotIndexOneError or IllConditionedError.
PencilDecomposition decompose_index_one(const MatrixPencil& pencil,
                                        const DecomposeOptions& opts = {});

/// Per-identity residuals of everything a PencilDecomposition promises,
/// each scaled by max(1, ||A||_F, ||B||_F).
struct VerificationReport {
    struct Item {
        std::string id;
        double residual;
    };
    std::vector<Item> items;
    double max_residual = 0.0;
    bool pass = false;
};

VerificationReport verify_decomposition(const MatrixPencil& pencil,
                                        const PencilDecomposition& dec,
                                        double tol);

/// Orthonormal basis of range(P) for a projector P of known rank, with a
/// deterministic largest-entry-positive sign convention per column.
Matrix projector_range_basis(const Matrix& P, Index rank);

/// Sample ||(lambda*A+B)^-1|| at |lambda| in {1e2, 1e4, 1e6} * scale.
/// scale <= 0 selects max(1, ||B|| / smallest nonzero singular value of A),
/// which keeps the samples in the asymptotic regime for badly scaled
/// pencils; pass 1 for the raw magnitudes.
ResolventProbe probe_resolvent_norms(const Matrix& A, const Matrix& B,
                                     double scale = 0.0);

} // namespace daestab
