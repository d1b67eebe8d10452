#include "daestab/pencil.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace daestab {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Smallest / largest singular value test for invertibility at one lambda.
bool invertible_at(const Matrix& A, const Matrix& B, double lambda) {
    Matrix T = lambda * A + B;
    Eigen::JacobiSVD<Matrix> svd(T);
    const auto& sv = svd.singularValues();
    double smax = sv.size() ? sv(0) : 0.0;
    if (smax == 0.0)
        return false;
    double smin = sv(sv.size() - 1);
    return smin > static_cast<double>(T.rows()) * kEps * smax;
}

double cond2(const Matrix& T) {
    Eigen::JacobiSVD<Matrix> svd(T);
    const auto& sv = svd.singularValues();
    double smin = sv(sv.size() - 1);
    if (smin == 0.0)
        return std::numeric_limits<double>::infinity();
    return sv(0) / smin;
}

double resolvent_norm(const Matrix& A, const Matrix& B, double lambda) {
    Matrix T = lambda * A + B;
    Eigen::JacobiSVD<Matrix> svd(T);
    double smin = svd.singularValues()(T.rows() - 1);
    if (smin == 0.0)
        return std::numeric_limits<double>::infinity();
    return 1.0 / smin;
}

} // namespace

// Column-pivoted QR, then each column's largest-magnitude entry is made
// positive.
Matrix projector_range_basis(const Matrix& P, Index rank) {
    if (rank == 0)
        return Matrix(P.rows(), 0);
    Eigen::ColPivHouseholderQR<Matrix> qr(P);
    Matrix Q = qr.householderQ();
    Matrix basis = Q.leftCols(rank);
    for (Index j = 0; j < basis.cols(); ++j) {
        Index imax = 0;
        basis.col(j).cwiseAbs().maxCoeff(&imax);
        if (basis(imax, j) < 0.0)
            basis.col(j) = -basis.col(j);
    }
    return basis;
}

namespace {

// Thin orthonormalization of the columns of V (assumed full column rank).
Matrix orthonormalize(const Matrix& V) {
    if (V.cols() == 0)
        return V;
    Eigen::HouseholderQR<Matrix> qr(V);
    Matrix Q = qr.householderQ() * Matrix::Identity(V.rows(), V.cols());
    return Q;
}

} // namespace

ResolventProbe probe_resolvent_norms(const Matrix& A, const Matrix& B,
                                     double scale) {
    if (scale <= 0.0) {
        // keep the samples past |lambda| ~ ||B||/sigma_min+(A), where the
        // bounded index-1 limit is actually in force
        Eigen::JacobiSVD<Matrix> asvd(A);
        const auto& sv = asvd.singularValues();
        double smax = sv.size() ? sv(0) : 0.0;
        double smin_nz = 0.0;
        for (Index i = sv.size() - 1; i >= 0; --i)
            if (sv(i) > static_cast<double>(A.rows()) * kEps * smax) {
                smin_nz = sv(i);
                break;
            }
        scale = (smin_nz > 0.0) ? std::max(1.0, B.norm() / smin_nz) : 1.0;
    }
    ResolventProbe probe;
    probe.scale = scale;
    probe.magnitudes = {1e2 * scale, 1e4 * scale, 1e6 * scale};
    for (double m : probe.magnitudes) {
        // min over a few directions guards against landing near a
        // generalized eigenvalue at one particular lambda
        double best = std::numeric_limits<double>::infinity();
        for (double lam : {m, -m, 1.2345 * m, -1.2345 * m})
            best = std::min(best, resolvent_norm(A, B, lam));
        probe.norms.push_back(best);
    }
    double base = std::max(probe.norms.front(), std::numeric_limits<double>::min());
    probe.growth_ratio = probe.norms.back() / base;
    return probe;
}

bool check_regularity(const Matrix& A, const Matrix& B, int sample_count) {
    if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows())
        throw Error("check_regularity: A and B must be square and the same size");
    std::mt19937 rng(0x5eed1u);
    std::uniform_real_distribution<double> dist(-20.0, 20.0);
    std::vector<double> lambdas;
    while (static_cast<int>(lambdas.size()) < sample_count) {
        double lam = dist(rng);
        bool dup = false;
        for (double v : lambdas)
            if (std::abs(v - lam) < 1e-9)
                dup = true;
        if (!dup)
            lambdas.push_back(lam);
    }
    for (double lam : lambdas)
        if (invertible_at(A, B, lam))
            return true;
    return false;
}

bool check_regularity(const MatrixPencil& pencil, int sample_count) {
    return check_regularity(pencil.A, pencil.B, sample_count);
}

MatrixPencil::MatrixPencil(Matrix A_, Matrix B_) : A(std::move(A_)), B(std::move(B_)) {
    if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows())
        throw Error("MatrixPencil: A and B must be square and the same size");
    n = A.rows();
    // det(lambda*A+B) has degree <= n, so n+1 zeros force the identical
    // zero polynomial; the extra samples guard round-off
    if (!check_regularity(A, B, static_cast<int>(2 * n + 1)))
        throw SingularPencilError("MatrixPencil: det(lambda*A+B) vanishes at all samples");
}

PencilDecomposition decompose_index_one(const MatrixPencil& pencil,
                                        const DecomposeOptions& opts) {
    const Matrix& A = pencil.A;
    const Matrix& B = pencil.B;
    const Index n = pencil.n;

    static const double kShifts[] = {1,  -1,  2,  -2,  5,    -5,    10,   -10,
                                     20, -20, 100, -100, 1000, -1000};
    double lambda0 = 0.0;
    bool found = false;
    if (opts.lambda0) {
        lambda0 = *opts.lambda0;
        if (!std::isfinite(cond2(lambda0 * A + B)) ||
            cond2(lambda0 * A + B) > opts.cond_limit)
            throw SingularPencilError("decompose_index_one: requested lambda0 gives a "
                                      "singular or ill-conditioned lambda0*A+B");
        found = true;
    } else {
        for (double s : kShifts) {
            double c = cond2(s * A + B);
            if (std::isfinite(c) && c < opts.cond_limit) {
                lambda0 = s;
                found = true;
                break;
            }
        }
    }
    if (!found)
        throw SingularPencilError("decompose_index_one: no invertible lambda0*A+B among "
                                  "candidate shifts");

    Matrix T = lambda0 * A + B;
    Eigen::PartialPivLU<Matrix> tlu(T);
    Matrix M = tlu.solve(A);

    // rank-revealing split: X2 = ker M = ker A, X1 = range M. The rank
    // decision is taken on the input matrix A; the solve that produces M
    // adds O(eps * cond) noise that a threshold on M could mistake for
    // genuine singular values.
    Eigen::JacobiSVD<Matrix> asvd(A, Eigen::ComputeFullV);
    const auto& asv = asvd.singularValues();
    double amax = asv.size() ? asv(0) : 0.0;
    double thresh = static_cast<double>(n) * kEps * amax;
    Index a = 0;
    for (Index i = 0; i < asv.size(); ++i)
        if (asv(i) > thresh)
            ++a;
    Index d = n - a;

    ResolventProbe probe = probe_resolvent_norms(A, B);
    if (!(probe.growth_ratio <= opts.resolvent_growth_limit))
        throw NotIndexOneError("decompose_index_one: resolvent norm grows with |lambda|");

    PencilDecomposition dec;
    dec.a = a;
    dec.d = d;
    dec.resolvent_bound_report = probe;

    if (d == 0) {
        dec.P1 = Matrix::Identity(n, n);
        dec.P2 = Matrix::Zero(n, n);
        dec.Q1 = Matrix::Identity(n, n);
        dec.Q2 = Matrix::Zero(n, n);
        dec.basis_X1 = Matrix::Identity(n, n);
        dec.basis_X2 = Matrix(n, 0);
        Eigen::PartialPivLU<Matrix> alu(A);
        dec.G_inv = alu.solve(Matrix::Identity(n, n));
        // one refinement pass
        dec.G_inv += dec.G_inv * (Matrix::Identity(n, n) - A * dec.G_inv);
        return dec;
    }

    Eigen::JacobiSVD<Matrix> msvd(M, Eigen::ComputeFullU);
    Matrix V1 = msvd.matrixU().leftCols(a);  // range(M), rank known from A
    Matrix V2 = asvd.matrixV().rightCols(d); // ker(A) = ker(M)

    Matrix S(n, n);
    S.leftCols(a) = V1;
    S.rightCols(d) = V2;
    // index-1 iff ker M = ker M^2, which holds exactly when ker M and
    // range M are complementary; the angle between the computed subspaces
    // decides it without squaring the conditioning of M
    {
        Eigen::JacobiSVD<Matrix> ssvd(S);
        const auto& ssv = ssvd.singularValues();
        if (ssv(n - 1) <= 1e-9 * ssv(0))
            throw NotIndexOneError(
                "decompose_index_one: kernel(M) != kernel(M^2) (kernel and range "
                "of M are not complementary)");
    }
    Eigen::FullPivLU<Matrix> slu(S);
    Matrix Sinv = slu.inverse();
    Matrix P2 = V2 * Sinv.bottomRows(d);
    Matrix P1 = Matrix::Identity(n, n) - P2;

    dec.basis_X1 = (a > 0) ? projector_range_basis(P1, a) : Matrix(n, 0);
    dec.basis_X2 = projector_range_basis(P2, d);

    // image-space split: Y1 = A*X1, Y2 = B*X2
    Matrix W1 = (a > 0) ? orthonormalize(A * dec.basis_X1) : Matrix(n, 0);
    Matrix W2 = orthonormalize(B * dec.basis_X2);
    Matrix Simg(n, n);
    if (a > 0)
        Simg.leftCols(a) = W1;
    Simg.rightCols(d) = W2;
    Eigen::FullPivLU<Matrix> ilu(Simg);
    if (!ilu.isInvertible())
        throw IllConditionedError("decompose_index_one: image subspaces A*X1 and B*X2 "
                                  "do not split the range space");
    Matrix Q2 = W2 * ilu.inverse().bottomRows(d);
    Matrix Q1 = Matrix::Identity(n, n) - Q2;

    // G^-1 assembled from the restrictions A1: X1->Y1 and B2: X2->Y2,
    // which stay well conditioned when G = A + B*P2 itself is badly graded
    Matrix G = A + B * P2;
    Matrix G_inv = Matrix::Zero(n, n);
    if (a > 0) {
        Matrix A1 = W1.transpose() * A * dec.basis_X1; // a x a
        Eigen::FullPivLU<Matrix> a1lu(A1);
        if (!a1lu.isInvertible())
            throw IllConditionedError("decompose_index_one: A restricted to X1 is "
                                      "numerically singular");
        G_inv += dec.basis_X1 * a1lu.solve(W1.transpose() * Q1);
    }
    {
        Matrix B2 = W2.transpose() * B * dec.basis_X2; // d x d
        Eigen::FullPivLU<Matrix> b2lu(B2);
        if (!b2lu.isInvertible())
            throw IllConditionedError("decompose_index_one: B restricted to X2 is "
                                      "numerically singular");
        G_inv += dec.basis_X2 * b2lu.solve(W2.transpose() * Q2);
    }
    G_inv += G_inv * (Matrix::Identity(n, n) - G * G_inv);

    double gres = (G * G_inv - Matrix::Identity(n, n)).norm();
    if (!(gres < 1e-6 * std::sqrt(static_cast<double>(n))))
        throw IllConditionedError("decompose_index_one: G = A + B*P2 is numerically "
                                  "singular (G*G^-1 residual " +
                                  std::to_string(gres) + ")");

    dec.P1 = std::move(P1);
    dec.P2 = std::move(P2);
    dec.Q1 = std::move(Q1);
    dec.Q2 = std::move(Q2);
    dec.G_inv = std::move(G_inv);
    return dec;
}

VerificationReport verify_decomposition(const MatrixPencil& pencil,
                                        const PencilDecomposition& dec,
                                        double tol) {
    const Matrix& A = pencil.A;
    const Matrix& B = pencil.B;
    const Index n = pencil.n;
    const Matrix I = Matrix::Identity(n, n);
    const double scale = std::max({1.0, A.norm(), B.norm()});

    VerificationReport rep;
    auto add = [&](const std::string& id, double res) {
        rep.items.push_back({id, res / scale});
    };

    add("P1_idempotent", (dec.P1 * dec.P1 - dec.P1).norm());
    add("P2_idempotent", (dec.P2 * dec.P2 - dec.P2).norm());
    add("P_cross_zero", (dec.P1 * dec.P2).norm() + (dec.P2 * dec.P1).norm());
    add("P_complement", (dec.P1 + dec.P2 - I).norm());
    add("Q1_idempotent", (dec.Q1 * dec.Q1 - dec.Q1).norm());
    add("Q2_idempotent", (dec.Q2 * dec.Q2 - dec.Q2).norm());
    add("Q_cross_zero", (dec.Q1 * dec.Q2).norm() + (dec.Q2 * dec.Q1).norm());
    add("Q_complement", (dec.Q1 + dec.Q2 - I).norm());
    add("A_P1_eq_Q1_A", (A * dec.P1 - dec.Q1 * A).norm());
    add("A_P2_eq_Q2_A", (A * dec.P2 - dec.Q2 * A).norm());
    add("B_P1_eq_Q1_B", (B * dec.P1 - dec.Q1 * B).norm());
    add("B_P2_eq_Q2_B", (B * dec.P2 - dec.Q2 * B).norm());
    add("A_P2_zero", (A * dec.P2).norm());
    add("Ginv_A_P1", (dec.G_inv * A * dec.P1 - dec.P1).norm());
    add("Ginv_B_P2", (dec.G_inv * B * dec.P2 - dec.P2).norm());
    add("A_Ginv_Q1", (A * dec.G_inv * dec.Q1 - dec.Q1).norm());
    add("B_Ginv_Q2", (B * dec.G_inv * dec.Q2 - dec.Q2).norm());
    add("Ginv_G_identity", (dec.G_inv * (A + B * dec.P2) - I).norm());
    if (dec.basis_X1.cols() > 0) {
        add("basis_X1_in_X1", (dec.P1 * dec.basis_X1 - dec.basis_X1).norm());
        add("basis_X1_orthonormal",
            (dec.basis_X1.transpose() * dec.basis_X1 -
             Matrix::Identity(dec.a, dec.a))
                .norm());
    }
    if (dec.basis_X2.cols() > 0) {
        add("basis_X2_in_X2", (dec.P2 * dec.basis_X2 - dec.basis_X2).norm());
        add("basis_X2_orthonormal",
            (dec.basis_X2.transpose() * dec.basis_X2 -
             Matrix::Identity(dec.d, dec.d))
                .norm());
    }

    rep.max_residual = 0.0;
    for (const auto& item : rep.items)
        rep.max_residual = std::max(rep.max_residual, item.residual);
    rep.pass = rep.max_residual <= tol;
    return rep;
}

} // namespace daestab
