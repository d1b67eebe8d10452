#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "daestab/dae.hpp"
#include "daestab/sampling.hpp"

namespace daestab {

/// Comparison function U in the differential inequality dV/dt <= k(t) U(V).
/// Whether the improper integral of dv/U(v) diverges is an analytic
/// property of the kind, not a numeric probe.
struct ComparisonFunction {
    enum class Kind { Linear, Power, LogLinear, Custom };
    Kind kind = Kind::Linear;
    double alpha = 1.0; // scale; alpha == 0 on Power means "calibrate from samples"
    double p = 1.0;     // Power exponent
    std::function<double(double)> custom;
    bool custom_integral_diverges = false;

    double operator()(double v) const;
    bool integral_diverges() const;

    static ComparisonFunction linear(double alpha);
    static ComparisonFunction power(double alpha, double p);
    static ComparisonFunction power_calibrated(double p); // alpha fixed later
    static ComparisonFunction log_linear(double alpha);
    static ComparisonFunction custom_fn(std::function<double(double)> f,
                                        bool integral_diverges);
};

/// Time gauge k(t). Convergence of the integral of k is a user-declared
/// analytic property; the checker only evaluates k pointwise.
struct GaugeFunction {
    enum class IntegralDecl { Finite, Divergent, Unknown };
    std::function<double(double)> k;
    IntegralDecl integral_decl = IntegralDecl::Unknown;
    double probe_horizon = 100.0;

    static GaugeFunction constant(double value);
    static GaugeFunction of(std::function<double(double)> k, IntegralDecl decl);
};

struct Witness {
    double t = 0.0;
    Vector x;      // full state on the consistency manifold
    double lhs = 0.0;
    double rhs = 0.0;
    std::string detail;
};

struct ConditionEntry {
    std::string id;
    long samples = 0;
    bool pass = true;
    // true when the failure is a reproducible counterexample; false when the
    // check merely could not decide (search exhaustion, missing declaration)
    bool violation = false;
    double worst_margin = 0.0; // smallest slack seen; negative means violated
    std::optional<Witness> witness;
    std::string note;
};

enum class Verdict { NotFalsified, Falsified, Inconclusive };

struct CertificateReport {
    std::vector<ConditionEntry> entries;
    Verdict verdict = Verdict::NotFalsified;
    std::optional<double> alpha_calibrated;

    /// Falsified if any entry carries a violation witness, Inconclusive if
    /// any entry failed without one, otherwise NotFalsified.
    void finalize();
};

std::string to_string(Verdict v);

/// Origin-excluding region of the differential subspace X1, with boundary
/// patches used for invariance checks. Points are x_p1 = P1 x vectors.
struct BoundaryPatch {
    std::string name;
    std::function<Vector(double s)> point; // s in [0,1] -> boundary point
    // positive flux means the flow leaves the region
    std::function<double(const Vector& x_p1, const Vector& x_p1_dot)> outward_flux;
};

struct RegionSpec {
    std::function<bool(const Vector& x_p1)> membership;
    std::vector<BoundaryPatch> boundary;
    std::function<Vector(const Vector& s01)> interior_point; // [0,1]^2 -> interior
    bool excludes_origin = false;
};

/// Low-discrepancy sampling spec over (t, z) boxes.
struct SamplerSpec {
    long count = 10000;
    unsigned seed = 0;
    std::array<double, 2> t_box{0.0, 100.0};
    std::vector<std::array<double, 2>> z_box; // one interval per z coordinate
};

/// Regular grid over (t, z) for the solvability sweep.
struct GridSpec {
    std::array<double, 2> t_box{0.0, 10.0};
    int t_count = 10;
    std::vector<std::array<double, 2>> z_box;
    std::vector<int> z_counts;
};

struct HullSamplerSpec {
    long count = 2000;
    unsigned seed = 0;
    std::array<double, 2> t_box{0.0, 100.0};
    std::vector<std::array<double, 2>> z_box;
    double u_scan_halfwidth = 8.0; // root enumeration range
    int u_scan_points = 400;
    int hull_scan_points = 400;
};

/// For every grid point, try to solve the algebraic constraint from
/// several starts; the entry fails with a witness at the first point
/// where no root was found (a failed search, not a disproof).
ConditionEntry check_constraint_solvability(const SemilinearDAE& dae,
                                            const GridSpec& grid);

/// Sample hulls between constraint roots and falsify basis invertibility
/// of the constraint Jacobian along them. d = 1 uses exact scalar
/// semantics (scan + bisection); d > 1 samples vertex sets and tests the
/// mixed-row matrix of the definition. NotFalsified is not a proof.
ConditionEntry check_basis_invertibility(const SemilinearDAE& dae,
                                         const HullSamplerSpec& spec);

/// Sample the dissipation inequality
///   (H P1 x, G^-1[-B P1 x + Q1 f]) <= k(t) U((H P1 x, P1 x)/2)
/// over the consistency manifold with ||P1 x|| >= R.
/// Throws InvalidHError if H is not SPD on X1.
CertificateReport check_stability_inequality(const SemilinearDAE& dae,
                                             const Matrix& H,
                                             const GaugeFunction& k,
                                             const ComparisonFunction& U, double R,
                                             const SamplerSpec& sampler);

/// Check the instability hypotheses: reversed inequality over the region,
/// inward flux on the region boundary, and the comparison-integral flags.
/// U with alpha == 0 is calibrated as the sampled minimum of lhs / U0(v).
/// Throws InvalidRegionError if the region admits the origin.
CertificateReport check_instability_conditions(const SemilinearDAE& dae,
                                               const Matrix& H,
                                               const GaugeFunction& k,
                                               ComparisonFunction U,
                                               const RegionSpec& region,
                                               const SamplerSpec& sampler);

/// (H P1 x, G^-1[-B P1 x + Q1 f(t,x)]) and V = (H P1 x, P1 x)/2.
double lyapunov_rate(const SemilinearDAE& dae, const Matrix& H, double t,
                     const Vector& x);
double lyapunov_value(const SemilinearDAE& dae, const Matrix& H, const Vector& x);

/// Validate that H is symmetric positive definite on X1 coordinates.
void validate_h(const SemilinearDAE& dae, const Matrix& H);

} // namespace daestab
