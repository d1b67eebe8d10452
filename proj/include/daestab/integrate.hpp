#pragma once

#include <optional>
#include <string>
#include <vector>

#include "daestab/dae.hpp"

namespace daestab {

struct IntegrationOptions {
    double t_end = 1.0;
    double h_init = 1e-3;
    double h_min = 1e-12;
    double h_max = 0.0; // 0 means auto: t_end - t0
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double escape_norm = 1e6; // blow-up threshold on ||x||
    int record_every = 1;     // output decimation over accepted steps
    NewtonOptions newton;
};

enum class TrajectoryStatus { Completed, EscapeDetected, SolverFailure };

struct EscapeInfo {
    double T_estimate = 0.0;
    double T_lower = 0.0; // last accepted step interval bracketing the
    double T_upper = 0.0; // escape_norm crossing
    double fit_exponent = 0.0; // p in ||x|| ~ c (T - t)^-p
    double fit_residual = 0.0; // RMS residual of the log-log fit
};

struct SolverFailureInfo {
    double t_fail = 0.0;
    std::string reason;
};

struct StepStats {
    long accepted = 0;
    long rejected = 0;
    double min_h = 0.0;
    double max_h = 0.0;
    double last_h = 0.0;
};

/// Recorded solution samples plus per-sample diagnostics.
///
/// constraint_residuals hold ||Q2[Bx - f]||; dae_residuals hold the
/// finite-difference residual ||D(Ax) + Bx - f|| where D is a high-order
/// differentiation stencil on the recorded grid.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
    std::vector<double> constraint_residuals;
    std::vector<double> dae_residuals;
    std::vector<double> step_sizes; // step that produced each sample, 0 for the first
    TrajectoryStatus status = TrajectoryStatus::Completed;
    std::optional<EscapeInfo> escape;
    std::optional<SolverFailureInfo> failure;
    StepStats stats;
};

/// Integrate the reduced differential equation with an embedded explicit
/// Runge-Kutta 5(4) pair, solving the algebraic constraint at every stage
/// and assembling x = Pa z + Pd u at accepted steps. Terminates at t_end,
/// on finite-escape detection, or on solver failure.
///
/// Throws InconsistentInitialValueError if x0 is off the consistency
/// manifold; integration-time constraint failures are reported through
/// the returned status, not exceptions.
Trajectory integrate(const SemilinearDAE& dae, double t0, const Vector& x0,
                     const IntegrationOptions& opts);

/// Maximum Euclidean norm over recorded states.
double max_norm(const Trajectory& traj);

/// First-derivative finite-difference weights at x0 for arbitrary nodes.
std::vector<double> fd_weights_first_derivative(const std::vector<double>& nodes,
                                                double x0);

} // namespace daestab
