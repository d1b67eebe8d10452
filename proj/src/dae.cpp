#include "daestab/dae.hpp"

#include <cmath>
#include <random>

namespace daestab {

SemilinearDAE::SemilinearDAE(MatrixPencil pencil, RhsFn f, JacFn jac_f,
                             const DecomposeOptions& opts)
    : pencil_(std::move(pencil)), f_(std::move(f)), jac_(std::move(jac_f)),
      dec_(decompose_index_one(pencil_, opts)) {
    GinvQ2_ = dec_.G_inv * dec_.Q2;
    GinvQ1_ = dec_.G_inv * dec_.Q1;
    BPa_ = pencil_.B * dec_.basis_X1;
}

Vector SemilinearDAE::manifold_residual(double t, const Vector& x) const {
    return dec_.Q2 * (pencil_.B * x - f_(t, x));
}

Vector SemilinearDAE::project_z(const Vector& x) const {
    return dec_.basis_X1.transpose() * (dec_.P1 * x);
}

Vector SemilinearDAE::project_u(const Vector& x) const {
    return dec_.basis_X2.transpose() * (dec_.P2 * x);
}

Vector SemilinearDAE::assemble(const Vector& z, const Vector& u) const {
    return dec_.basis_X1 * z + dec_.basis_X2 * u;
}

Vector SemilinearDAE::constraint_map(double t, const Vector& z, const Vector& u) const {
    Vector x = assemble(z, u);
    // G^-1 Q2 f lies in X2, so reading coordinates through basis_X2 is
    // exact (Pd^-1 on X2 equals Pd^T for an orthonormal basis)
    return dec_.basis_X2.transpose() * (GinvQ2_ * f_(t, x)) - u;
}

double SemilinearDAE::constraint_residual(double t, const Vector& z,
                                          const Vector& u) const {
    return constraint_map(t, z, u).norm();
}

Matrix SemilinearDAE::constraint_jacobian(double t, const Vector& z,
                                          const Vector& u) const {
    Vector x = assemble(z, u);
    return dec_.basis_X2.transpose() * GinvQ2_ * jac_(t, x) * dec_.basis_X2 -
           Matrix::Identity(dec_.d, dec_.d);
}

Vector SemilinearDAE::solve_constraint(double t, const Vector& z,
                                       const Vector& u_guess,
                                       const NewtonOptions& opts) const {
    const Index d = dec_.d;
    if (d == 0)
        return Vector(0);
    if (!u_guess.allFinite())
        throw Error("solve_constraint: u_guess is not finite");

    const double tol = opts.tol_scale * (1.0 + z.norm());
    Vector u = u_guess;
    Vector F = constraint_map(t, z, u);
    double fnorm = F.norm();

    auto newton_step = [&](Vector& du) -> bool {
        Matrix J = constraint_jacobian(t, z, u);
        Eigen::JacobiSVD<Matrix> jsvd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const auto& sv = jsvd.singularValues();
        // absolute floor: dF/du = Pd^-1 G^-1 Phi Pd has O(1) scale at a
        // healthy root, so a vanishing smallest singular value signals a
        // basis-invertibility violation rather than bad scaling
        if (sv(d - 1) <= 1e-12 * (1.0 + sv(0)))
            return false;
        du = jsvd.solve(-F);
        return true;
    };

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        if (fnorm <= tol) {
            // polish toward the rounding floor; acceptance gates bound the
            // absolute manifold residual, not just the scaled one
            for (int extra = 0; extra < 3; ++extra) {
                Vector du;
                if (!newton_step(du))
                    break;
                Vector u_try = u + du;
                Vector F_try = constraint_map(t, z, u_try);
                if (!F_try.allFinite() || F_try.norm() >= 0.1 * fnorm)
                    break;
                u = u_try;
                F = F_try;
                fnorm = F.norm();
            }
            return u;
        }
        Vector du;
        if (!newton_step(du))
            throw SingularJacobianError(
                "solve_constraint: constraint Jacobian is singular at an iterate "
                "(possible basis-invertibility violation)");
        double lambda = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opts.max_halvings; ++h) {
            Vector u_try = u + lambda * du;
            Vector F_try = constraint_map(t, z, u_try);
            if (F_try.allFinite() && F_try.norm() < fnorm) {
                u = u_try;
                F = F_try;
                fnorm = F.norm();
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) {
            if (fnorm <= tol)
                return u;
            throw NoConvergenceError("solve_constraint: damped Newton stalled at "
                                     "residual " +
                                     std::to_string(fnorm));
        }
    }
    if (fnorm <= tol)
        return u;
    throw NoConvergenceError("solve_constraint: iteration cap reached at residual " +
                             std::to_string(fnorm));
}

Vector SemilinearDAE::consistent_initialize(double t0, const Vector& x0_guess,
                                            const NewtonOptions& opts) const {
    Vector z0 = project_z(x0_guess);
    Vector u_guess = project_u(x0_guess);
    Vector u0 = solve_constraint(t0, z0, u_guess, opts);
    return assemble(z0, u0);
}

Vector SemilinearDAE::reduced_rhs(double t, const Vector& z, const Vector& u) const {
    Vector x = assemble(z, u);
    return dec_.basis_X1.transpose() * (GinvQ1_ * f_(t, x) - dec_.G_inv * (BPa_ * z));
}

Vector SemilinearDAE::refine_on_manifold(double t, Vector x, int max_steps) const {
    if (dec_.d == 0)
        return x;
    double best = manifold_residual(t, x).norm();
    for (int it = 0; it < max_steps; ++it) {
        Vector F = dec_.basis_X2.transpose() * (GinvQ2_ * f_(t, x)) -
                   dec_.basis_X2.transpose() * (dec_.P2 * x);
        Matrix J = dec_.basis_X2.transpose() * GinvQ2_ * jac_(t, x) * dec_.basis_X2 -
                   Matrix::Identity(dec_.d, dec_.d);
        Eigen::FullPivLU<Matrix> lu(J);
        if (!lu.isInvertible())
            break;
        Vector x_try = x + dec_.basis_X2 * lu.solve(-F);
        double res = manifold_residual(t, x_try).norm();
        if (res < best) {
            x = std::move(x_try);
            best = res;
        } else {
            break;
        }
    }
    return x;
}

double SemilinearDAE::validate_jacobian(int points, unsigned seed,
                                        double box_halfwidth) const {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(-box_halfwidth, box_halfwidth);
    std::uniform_real_distribution<double> tdist(0.0, 10.0);
    double worst = 0.0;
    const Index n = pencil_.n;
    for (int p = 0; p < points; ++p) {
        double t = tdist(rng);
        Vector x(n);
        for (Index i = 0; i < n; ++i)
            x(i) = dist(rng);
        Matrix J = jac_(t, x);
        Matrix Jfd(n, n);
        for (Index j = 0; j < n; ++j) {
            double h = 1e-6 * (1.0 + std::abs(x(j)));
            Vector xp = x, xm = x;
            xp(j) += h;
            xm(j) -= h;
            Jfd.col(j) = (f_(t, xp) - f_(t, xm)) / (2.0 * h);
        }
        double rel = (J - Jfd).norm() / std::max(1.0, J.norm());
        worst = std::max(worst, rel);
    }
    return worst;
}

ReducedState reduce(const SemilinearDAE& dae, double t, const Vector& x) {
    return ReducedState{dae.project_z(x), dae.project_u(x), t};
}

Vector assemble(const SemilinearDAE& dae, const ReducedState& s) {
    return dae.assemble(s.z, s.u);
}

} // namespace daestab
