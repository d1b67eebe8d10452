#pragma once

#include "daestab/dae.hpp"
#include "daestab/stability.hpp"

namespace daestab {
namespace circuit {

/// Scalar nonlinearity families used by the filter model.
struct NonlinearitySpec {
    enum class Kind { Zero, OddPower, Sine, NegSquare, Square, Cube };
    Kind kind = Kind::Zero;
    double alpha = 1.0; // OddPower / Sine coefficient
    int m = 1;          // OddPower: y -> alpha * y^(2m-1)

    double value(double y) const;
    double deriv(double y) const;
    bool bounded() const { return kind == Kind::Zero || kind == Kind::Sine; }

    static NonlinearitySpec zero();
    static NonlinearitySpec odd_power(double alpha, int m);
    static NonlinearitySpec sine(double alpha);
    static NonlinearitySpec neg_square(); // y -> -y^2
    static NonlinearitySpec square();     // y -> y^2
    static NonlinearitySpec cube();       // y -> y^3
};

/// Input voltage families.
struct SourceSpec {
    enum class Kind {
        Zero,
        PowerDecay,  // beta * (t + alpha)^-n, alpha > 0
        ExpDecay,    // beta * exp(-alpha t)
        Gaussian,    // beta * exp(-(t-alpha)^2 / sigma^2)
        Sinusoid,    // beta * sin(omega t + theta) + offset
        DampedSine,  // beta * exp(-alpha t) * sin(omega t + theta)
        PowerGrowth, // beta * (t + alpha)^n
    };
    Kind kind = Kind::Zero;
    double beta = 0.0;
    double alpha = 0.0;
    double sigma = 1.0;
    double omega = 1.0;
    double theta = 0.0;
    double offset = 0.0;
    int n = 1;

    double value(double t) const;
    /// sup over t >= 0 of |e(t)|; +infinity for unbounded kinds.
    double sup_abs() const;

    static SourceSpec zero();
    static SourceSpec power_decay(double beta, double alpha, int n);
    static SourceSpec exp_decay(double beta, double alpha);
    static SourceSpec gaussian(double beta, double alpha, double sigma);
    static SourceSpec sinusoid(double beta, double omega, double theta = 0.0,
                               double offset = 0.0);
    static SourceSpec damped_sine(double beta, double alpha, double omega,
                                  double theta = 0.0);
    static SourceSpec power_growth(double beta, double alpha, int n);
};

/// Physical parameters of the nonlinear radio filter. State ordering is
/// x = (I_L, U_C, I) = (x1, x2, x3).
struct CircuitParams {
    double L = 1.0;
    double C = 1.0;
    double r = 1.0;
    double g = 1.0;
    NonlinearitySpec phi0, phi, psi, h;
    SourceSpec source;

    void validate() const; // throws Error on nonpositive L, C, r, g
};

/// Assemble the filter DAE:
///   A = diag(L, C, 0), B = [[0,1,r],[0,g,-1],[0,1,r]],
///   f = (e(t) - phi0(x1) - phi(x3), -h(x2), psi(x1-x3) - phi(x3)).
/// The Jacobian is analytic per nonlinearity kind.
SemilinearDAE build_filter_dae(const CircuitParams& p);

/// The closed-form projector pair and G^-1 of the filter pencil,
/// evaluated at (L, C, r). Entries involve only 1, 0, +-1/r, +-1/r^2,
/// 1/L, 1/C, 1/(Cr) and (Cr-1)/(C r^2).
PencilDecomposition closed_form_decomposition(const CircuitParams& p);

/// Lower bounds that carve out the invariant escape region.
struct RegionBounds {
    double m1 = 0.0; // x1 > m1
    double m2 = 0.0; // x2 < -r x1 - x1^3 - m2
};

RegionBounds region_bounds(const CircuitParams& p);

/// The origin-excluding region {x1 > m1, x2 < -r x1 - x1^3 - m2} of the
/// differential subspace, with boundary patches for invariance checks.
/// Throws UnboundedSourceError if sup|e| is infinite.
RegionSpec instability_region(const CircuitParams& p, double x1_span = 3.0,
                              double x2_span = 30.0);

/// Candidate certificate ingredients for the filter.
struct StabilityPresets {
    Matrix H_stability;   // diag(2L, Cr, Cr^3)
    Matrix H_instability; // diag(2L, C, Cr^2)
    GaugeFunction k_stability;   // c0 + c1 |e(t)|
    double c0 = 1.0;
    double c1 = 1.0;
    ComparisonFunction U_stability;   // linear
    double R_stability = 10.0;        // derived for bounded nonlinearities
    GaugeFunction k_instability;      // constant 1, divergent integral
    ComparisonFunction U_instability; // alpha v^{3/2}, alpha calibrated
};

StabilityPresets stability_presets(const CircuitParams& p);

} // namespace circuit
} // namespace daestab
