#pragma once

#include <functional>
#include <optional>
#include <utility>

#include "daestab/pencil.hpp"

namespace daestab {

/// Right-hand side f(t, x) and its state Jacobian df/dx.
using RhsFn = std::function<Vector(double, const Vector&)>;
using JacFn = std::function<Matrix(double, const Vector&)>;

struct NewtonOptions {
    int max_iter = 50;
    int max_halvings = 8;
    double tol_scale = 1e-10; // tolerance is tol_scale * (1 + ||z||)
};

/// Semilinear differential-algebraic equation d/dt[Ax] + Bx = f(t, x)
/// with a regular index-1 pencil. The spectral decomposition is computed
/// at construction; instances are immutable and safe to share across
/// threads as long as f and jac_f are pure.
class SemilinearDAE {
  public:
    SemilinearDAE(MatrixPencil pencil, RhsFn f, JacFn jac_f,
                  const DecomposeOptions& opts = {});

    const MatrixPencil& pencil() const { return pencil_; }
    const PencilDecomposition& dec() const { return dec_; }
    Index n() const { return pencil_.n; }
    Index dim_z() const { return dec_.a; }
    Index dim_u() const { return dec_.d; }

    Vector f(double t, const Vector& x) const { return f_(t, x); }
    Matrix jac_f(double t, const Vector& x) const { return jac_(t, x); }

    /// Q2*(B*x - f(t,x)); zero iff (t, x) lies on the consistency manifold.
    Vector manifold_residual(double t, const Vector& x) const;

    /// Differential / algebraic coordinates of a state.
    Vector project_z(const Vector& x) const; // z = basis_X1^T * P1 * x
    Vector project_u(const Vector& x) const; // u = basis_X2^T * P2 * x
    Vector assemble(const Vector& z, const Vector& u) const;

    /// Solve the algebraic constraint F(t,z,u) = Pd^-1 G^-1 Q2 f - u = 0
    /// by damped Newton from u_guess.
    /// Throws NoConvergenceError or SingularJacobianError.
    Vector solve_constraint(double t, const Vector& z, const Vector& u_guess,
                            const NewtonOptions& opts = {}) const;

    /// ||F(t,z,u)|| for diagnostics.
    double constraint_residual(double t, const Vector& z, const Vector& u) const;

    /// Keep the differential part of x0_guess, recompute the algebraic
    /// part from the constraint. Result lies on the consistency manifold.
    Vector consistent_initialize(double t0, const Vector& x0_guess,
                                 const NewtonOptions& opts = {}) const;

    /// dz/dt = Pa^-1 G^-1 [ -B Pa z + Q1 f(t, Pa z + Pd u) ];
    /// u must already solve the constraint at (t, z).
    Vector reduced_rhs(double t, const Vector& z, const Vector& u) const;

    /// Newton-polish the algebraic part of an assembled state in x-space.
    /// Reaches the representation floor of the state itself, which the
    /// (z, u) coordinates cannot when u mixes large components.
    Vector refine_on_manifold(double t, Vector x, int max_steps = 2) const;

    /// d/du of the constraint map F at (t, z, u), a d x d matrix.
    Matrix constraint_jacobian(double t, const Vector& z, const Vector& u) const;

    /// Opt-in validation: max relative finite-difference error of jac_f
    /// over random probe points.
    double validate_jacobian(int points = 20, unsigned seed = 7,
                             double box_halfwidth = 2.0) const;

  private:
    Vector constraint_map(double t, const Vector& z, const Vector& u) const;

    MatrixPencil pencil_;
    RhsFn f_;
    JacFn jac_;
    PencilDecomposition dec_;
    // cached products
    Matrix GinvQ2_;   // G^-1 * Q2
    Matrix GinvQ1_;   // G^-1 * Q1
    Matrix BPa_;      // B * basis_X1
};

/// Differential/algebraic coordinates of a state at a time.
struct ReducedState {
    Vector z;
    Vector u;
    double t = 0.0;
};

ReducedState reduce(const SemilinearDAE& dae, double t, const Vector& x);
Vector assemble(const SemilinearDAE& dae, const ReducedState& s);

} // namespace daestab
