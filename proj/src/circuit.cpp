#include "daestab/circuit.hpp"

#include <cmath>
#include <limits>

namespace daestab {
namespace circuit {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double NonlinearitySpec::value(double y) const {
    switch (kind) {
    case Kind::Zero:
        return 0.0;
    case Kind::OddPower:
        return alpha * std::pow(y, 2 * m - 1);
    case Kind::Sine:
        return alpha * std::sin(y);
    case Kind::NegSquare:
        return -y * y;
    case Kind::Square:
        return y * y;
    case Kind::Cube:
        return y * y * y;
    }
    return 0.0;
}

double NonlinearitySpec::deriv(double y) const {
    switch (kind) {
    case Kind::Zero:
        return 0.0;
    case Kind::OddPower: {
        int e = 2 * m - 2;
        return alpha * (2 * m - 1) * (e == 0 ? 1.0 : std::pow(y, e));
    }
    case Kind::Sine:
        return alpha * std::cos(y);
    case Kind::NegSquare:
        return -2.0 * y;
    case Kind::Square:
        return 2.0 * y;
    case Kind::Cube:
        return 3.0 * y * y;
    }
    return 0.0;
}

NonlinearitySpec NonlinearitySpec::zero() { return {}; }

NonlinearitySpec NonlinearitySpec::odd_power(double alpha, int m) {
    if (!(alpha > 0.0) || m < 1)
        throw Error("NonlinearitySpec: odd_power requires alpha > 0 and m >= 1");
    NonlinearitySpec s;
    s.kind = Kind::OddPower;
    s.alpha = alpha;
    s.m = m;
    return s;
}

NonlinearitySpec NonlinearitySpec::sine(double alpha) {
    if (!(alpha > 0.0))
        throw Error("NonlinearitySpec: sine requires alpha > 0");
    NonlinearitySpec s;
    s.kind = Kind::Sine;
    s.alpha = alpha;
    return s;
}

NonlinearitySpec NonlinearitySpec::neg_square() {
    NonlinearitySpec s;
    s.kind = Kind::NegSquare;
    return s;
}

NonlinearitySpec NonlinearitySpec::square() {
    NonlinearitySpec s;
    s.kind = Kind::Square;
    return s;
}

NonlinearitySpec NonlinearitySpec::cube() {
    NonlinearitySpec s;
    s.kind = Kind::Cube;
    return s;
}

double SourceSpec::value(double t) const {
    switch (kind) {
    case Kind::Zero:
        return 0.0;
    case Kind::PowerDecay:
        return beta * std::pow(t + alpha, -n);
    case Kind::ExpDecay:
        return beta * std::exp(-alpha * t);
    case Kind::Gaussian: {
        double q = (t - alpha) / sigma;
        return beta * std::exp(-q * q);
    }
    case Kind::Sinusoid:
        return beta * std::sin(omega * t + theta) + offset;
    case Kind::DampedSine:
        return beta * std::exp(-alpha * t) * std::sin(omega * t + theta);
    case Kind::PowerGrowth:
        return beta * std::pow(t + alpha, n);
    }
    return 0.0;
}

double SourceSpec::sup_abs() const {
    switch (kind) {
    case Kind::Zero:
        return 0.0;
    case Kind::PowerDecay:
        return std::abs(beta) * std::pow(alpha, -n); // decreasing on [0, inf)
    case Kind::ExpDecay:
        if (beta == 0.0)
            return 0.0;
        return alpha >= 0.0 ? std::abs(beta) : kInf;
    case Kind::Gaussian:
        if (alpha >= 0.0)
            return std::abs(beta); // peak attained at t = alpha
        return std::abs(value(0.0));
    case Kind::Sinusoid:
        if (omega == 0.0)
            return std::abs(beta * std::sin(theta) + offset);
        return std::abs(beta) + std::abs(offset);
    case Kind::DampedSine: {
        if (beta == 0.0)
            return 0.0;
        if (alpha < 0.0)
            return kInf;
        if (alpha == 0.0 || omega == 0.0)
            return std::abs(beta) * (omega == 0.0 ? std::abs(std::sin(theta)) : 1.0);
        // global max over t >= 0 happens within the first few periods or
        // decay lengths; dense grid plus local refinement
        double horizon = 2.0 * 3.14159265358979323846 / std::abs(omega) + 6.0 / alpha;
        const int grid = 20000;
        double best = std::abs(value(0.0)), best_t = 0.0;
        for (int i = 1; i <= grid; ++i) {
            double t = horizon * i / grid;
            double v = std::abs(value(t));
            if (v > best) {
                best = v;
                best_t = t;
            }
        }
        double lo = std::max(0.0, best_t - horizon / grid);
        double hi = best_t + horizon / grid;
        for (int it = 0; it < 80; ++it) {
            double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
            if (std::abs(value(m1)) < std::abs(value(m2)))
                lo = m1;
            else
                hi = m2;
        }
        return std::max(best, std::abs(value(0.5 * (lo + hi))));
    }
    case Kind::PowerGrowth:
        if (beta == 0.0 || n == 0)
            return std::abs(beta);
        return kInf;
    }
    return 0.0;
}

SourceSpec SourceSpec::zero() { return {}; }

SourceSpec SourceSpec::power_decay(double beta, double alpha, int n) {
    if (!(alpha > 0.0) || n < 1)
        throw Error("SourceSpec: power_decay requires alpha > 0 and n >= 1");
    SourceSpec s;
    s.kind = Kind::PowerDecay;
    s.beta = beta;
    s.alpha = alpha;
    s.n = n;
    return s;
}

SourceSpec SourceSpec::exp_decay(double beta, double alpha) {
    SourceSpec s;
    s.kind = Kind::ExpDecay;
    s.beta = beta;
    s.alpha = alpha;
    return s;
}

SourceSpec SourceSpec::gaussian(double beta, double alpha, double sigma) {
    if (sigma == 0.0)
        throw Error("SourceSpec: gaussian requires sigma != 0");
    SourceSpec s;
    s.kind = Kind::Gaussian;
    s.beta = beta;
    s.alpha = alpha;
    s.sigma = sigma;
    return s;
}

SourceSpec SourceSpec::sinusoid(double beta, double omega, double theta,
                                double offset) {
    if (theta < 0.0 || theta > 2.0 * 3.14159265358979323846)
        throw Error("SourceSpec: sinusoid requires theta in [0, 2*pi]");
    SourceSpec s;
    s.kind = Kind::Sinusoid;
    s.beta = beta;
    s.omega = omega;
    s.theta = theta;
    s.offset = offset;
    return s;
}

SourceSpec SourceSpec::damped_sine(double beta, double alpha, double omega,
                                   double theta) {
    SourceSpec s;
    s.kind = Kind::DampedSine;
    s.beta = beta;
    s.alpha = alpha;
    s.omega = omega;
    s.theta = theta;
    return s;
}

SourceSpec SourceSpec::power_growth(double beta, double alpha, int n) {
    if (n < 0)
        throw Error("SourceSpec: power_growth requires n >= 0");
    SourceSpec s;
    s.kind = Kind::PowerGrowth;
    s.beta = beta;
    s.alpha = alpha;
    s.n = n;
    return s;
}

void CircuitParams::validate() const {
    if (!(L > 0.0) || !(C > 0.0) || !(r > 0.0) || !(g > 0.0))
        throw Error("CircuitParams: L, C, r, g must be positive");
}

SemilinearDAE build_filter_dae(const CircuitParams& p) {
    p.validate();
    Matrix A = Matrix::Zero(3, 3);
    A(0, 0) = p.L;
    A(1, 1) = p.C;
    Matrix B(3, 3);
    B << 0, 1, p.r, 0, p.g, -1, 0, 1, p.r;

    CircuitParams cp = p; // captured by value; the DAE owns its parameters
    RhsFn f = [cp](double t, const Vector& x) {
        Vector out(3);
        out(0) = cp.source.value(t) - cp.phi0.value(x(0)) - cp.phi.value(x(2));
        out(1) = -cp.h.value(x(1));
        out(2) = cp.psi.value(x(0) - x(2)) - cp.phi.value(x(2));
        return out;
    };
    JacFn jac = [cp](double, const Vector& x) {
        Matrix J = Matrix::Zero(3, 3);
        double dpsi = cp.psi.deriv(x(0) - x(2));
        J(0, 0) = -cp.phi0.deriv(x(0));
        J(0, 2) = -cp.phi.deriv(x(2));
        J(1, 1) = -cp.h.deriv(x(1));
        J(2, 0) = dpsi;
        J(2, 2) = -dpsi - cp.phi.deriv(x(2));
        return J;
    };
    return SemilinearDAE(MatrixPencil(std::move(A), std::move(B)), std::move(f),
                         std::move(jac));
}

PencilDecomposition closed_form_decomposition(const CircuitParams& p) {
    p.validate();
    const double L = p.L, C = p.C, r = p.r;
    PencilDecomposition dec;
    dec.a = 2;
    dec.d = 1;
    dec.P1 = Matrix(3, 3);
    dec.P1 << 1, 0, 0, 0, 1, 0, 0, -1.0 / r, 0;
    dec.P2 = Matrix(3, 3);
    dec.P2 << 0, 0, 0, 0, 0, 0, 0, 1.0 / r, 1;
    dec.Q1 = Matrix(3, 3);
    dec.Q1 << 1, 0, -1, 0, 1, 1.0 / r, 0, 0, 0;
    dec.Q2 = Matrix(3, 3);
    dec.Q2 << 0, 0, 1, 0, 0, -1.0 / r, 0, 0, 1;
    dec.G_inv = Matrix(3, 3);
    dec.G_inv << 1.0 / L, 0, -1.0 / L,
                 0, 1.0 / C, 1.0 / (C * r),
                 0, -1.0 / (C * r), (C * r - 1.0) / (C * r * r);
    dec.basis_X1 = projector_range_basis(dec.P1, 2);
    dec.basis_X2 = projector_range_basis(dec.P2, 1);
    Matrix A = Matrix::Zero(3, 3);
    A(0, 0) = L;
    A(1, 1) = C;
    Matrix B(3, 3);
    B << 0, 1, r, 0, p.g, -1, 0, 1, r;
    dec.resolvent_bound_report = probe_resolvent_norms(A, B);
    return dec;
}

RegionBounds region_bounds(const CircuitParams& p) {
    p.validate();
    double Me = p.source.sup_abs();
    if (!std::isfinite(Me))
        throw UnboundedSourceError("region_bounds: sup|e(t)| is infinite");
    const double L = p.L, C = p.C, r = p.r, g = p.g;
    RegionBounds b;
    b.m1 = std::max({1.0 + std::sqrt(Me), std::cbrt(g + 1.0 / r), 3.0 * C / L,
                     std::sqrt(std::max(L / (3.0 * r * C) - r / 3.0, 0.0))});
    b.m2 = std::max(g - 2.0 * C * r / L, 0.0);
    return b;
}

RegionSpec instability_region(const CircuitParams& p, double x1_span,
                              double x2_span) {
    RegionBounds b = region_bounds(p);
    const double r = p.r, m1 = b.m1, m2 = b.m2;
    auto curve = [r, m2](double x1) { return -r * x1 - x1 * x1 * x1 - m2; };

    RegionSpec region;
    region.excludes_origin = true;
    region.membership = [r, m1, curve](const Vector& xp1) {
        return xp1(0) > m1 && xp1(1) < curve(xp1(0));
    };
    region.interior_point = [r, m1, curve, x1_span, x2_span](const Vector& s) {
        double x1 = m1 + 1e-9 + s(0) * x1_span;
        double x2 = curve(x1) - 1e-9 - s(1) * x2_span;
        Vector xp1(3);
        xp1 << x1, x2, -x2 / r;
        return xp1;
    };
    BoundaryPatch wall;
    wall.name = "x1-wall";
    wall.point = [r, m1, curve, x2_span](double s) {
        double x2 = curve(m1) - s * x2_span;
        Vector xp1(3);
        xp1 << m1, x2, -x2 / r;
        return xp1;
    };
    // outward direction on {x1 = m1} is -e_{x1}
    wall.outward_flux = [](const Vector&, const Vector& dot) { return -dot(0); };
    BoundaryPatch crest;
    crest.name = "x2-curve";
    crest.point = [r, m1, curve, x1_span](double s) {
        double x1 = m1 + s * x1_span;
        Vector xp1(3);
        xp1 << x1, curve(x1), -curve(x1) / r;
        return xp1;
    };
    // outward normal along grad(x2 + r x1 + x1^3 + m2)
    crest.outward_flux = [r](const Vector& xp1, const Vector& dot) {
        return (r + 3.0 * xp1(0) * xp1(0)) * dot(0) + dot(1);
    };
    region.boundary = {wall, crest};
    return region;
}

StabilityPresets stability_presets(const CircuitParams& p) {
    p.validate();
    StabilityPresets out;
    const double L = p.L, C = p.C, r = p.r;
    out.H_stability = Matrix::Zero(3, 3);
    out.H_stability.diagonal() << 2.0 * L, C * r, C * r * r * r;
    out.H_instability = Matrix::Zero(3, 3);
    out.H_instability.diagonal() << 2.0 * L, C, C * r * r;
    SourceSpec src = p.source;
    double c0 = out.c0, c1 = out.c1;
    out.k_stability = GaugeFunction::of(
        [src, c0, c1](double t) { return c0 + c1 * std::abs(src.value(t)); },
        GaugeFunction::IntegralDecl::Unknown);
    out.U_stability = ComparisonFunction::linear(1.0);
    // radius making the dissipation bound hold for bounded phi/psi/h:
    // lhs <= 2(beta + |e|) (|x1|+|x2|) with beta = a2 + a3 + r a4, against
    // (c0 + c1|e|) min(L, Cr) (x1^2 + x2^2)
    if (p.phi.bounded() && p.psi.bounded() && p.h.bounded()) {
        double beta = std::abs(p.phi.alpha) * (p.phi.kind != NonlinearitySpec::Kind::Zero) +
                      std::abs(p.psi.alpha) * (p.psi.kind != NonlinearitySpec::Kind::Zero) +
                      r * std::abs(p.h.alpha) * (p.h.kind != NonlinearitySpec::Kind::Zero);
        double m = std::min(L, C * r);
        double q = 8.0 * std::pow(std::max(beta / out.c0, 1.0 / out.c1), 2) / (m * m);
        out.R_stability = std::sqrt(q * (1.0 + 1.0 / (r * r)));
    }
    out.k_instability = GaugeFunction::constant(1.0);
    out.U_instability = ComparisonFunction::power_calibrated(1.5);
    return out;
}

} // namespace circuit
} // namespace daestab
