#include "daestab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace daestab {

double ComparisonFunction::operator()(double v) const {
    switch (kind) {
    case Kind::Linear:
        return alpha * v;
    case Kind::Power:
        return alpha * std::pow(v, p);
    case Kind::LogLinear:
        return alpha * v * std::log(v + 1.0);
    case Kind::Custom:
        return custom(v);
    }
    return 0.0;
}

bool ComparisonFunction::integral_diverges() const {
    switch (kind) {
    case Kind::Linear:
    case Kind::LogLinear:
        return true;
    case Kind::Power:
        return p <= 1.0;
    case Kind::Custom:
        return custom_integral_diverges;
    }
    return false;
}

ComparisonFunction ComparisonFunction::linear(double alpha) {
    if (!(alpha > 0.0))
        throw Error("ComparisonFunction: alpha must be positive");
    ComparisonFunction u;
    u.kind = Kind::Linear;
    u.alpha = alpha;
    return u;
}

ComparisonFunction ComparisonFunction::power(double alpha, double p) {
    if (!(alpha > 0.0) || !(p > 0.0))
        throw Error("ComparisonFunction: alpha and p must be positive");
    ComparisonFunction u;
    u.kind = Kind::Power;
    u.alpha = alpha;
    u.p = p;
    return u;
}

ComparisonFunction ComparisonFunction::power_calibrated(double p) {
    if (!(p > 0.0))
        throw Error("ComparisonFunction: p must be positive");
    ComparisonFunction u;
    u.kind = Kind::Power;
    u.alpha = 0.0; // filled by calibration
    u.p = p;
    return u;
}

ComparisonFunction ComparisonFunction::log_linear(double alpha) {
    if (!(alpha > 0.0))
        throw Error("ComparisonFunction: alpha must be positive");
    ComparisonFunction u;
    u.kind = Kind::LogLinear;
    u.alpha = alpha;
    return u;
}

ComparisonFunction ComparisonFunction::custom_fn(std::function<double(double)> f,
                                                 bool integral_diverges) {
    ComparisonFunction u;
    u.kind = Kind::Custom;
    u.custom = std::move(f);
    u.custom_integral_diverges = integral_diverges;
    return u;
}

GaugeFunction GaugeFunction::constant(double value) {
    GaugeFunction g;
    g.k = [value](double) { return value; };
    g.integral_decl = (value == 0.0) ? IntegralDecl::Finite : IntegralDecl::Divergent;
    return g;
}

GaugeFunction GaugeFunction::of(std::function<double(double)> k, IntegralDecl decl) {
    GaugeFunction g;
    g.k = std::move(k);
    g.integral_decl = decl;
    return g;
}

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::NotFalsified:
        return "NotFalsified";
    case Verdict::Falsified:
        return "Falsified";
    case Verdict::Inconclusive:
        return "Inconclusive";
    }
    return "?";
}

void CertificateReport::finalize() {
    bool falsified = false, inconclusive = false;
    for (const auto& e : entries) {
        if (!e.pass) {
            if (e.violation)
                falsified = true;
            else
                inconclusive = true;
        }
    }
    verdict = falsified  ? Verdict::Falsified
              : inconclusive ? Verdict::Inconclusive
                             : Verdict::NotFalsified;
}

double lyapunov_rate(const SemilinearDAE& dae, const Matrix& H, double t,
                     const Vector& x) {
    const auto& dec = dae.dec();
    const Vector xp1 = dec.P1 * x;
    const Vector rhs = dec.G_inv * (-(dae.pencil().B * xp1) + dec.Q1 * dae.f(t, x));
    return (H * xp1).dot(rhs);
}

double lyapunov_value(const SemilinearDAE& dae, const Matrix& H, const Vector& x) {
    const Vector xp1 = dae.dec().P1 * x;
    return 0.5 * (H * xp1).dot(xp1);
}

void validate_h(const SemilinearDAE& dae, const Matrix& H) {
    if (H.rows() != dae.n() || H.cols() != dae.n())
        throw InvalidHError("H must be n x n on the ambient space");
    const Matrix& Pa = dae.dec().basis_X1;
    Matrix Hz = Pa.transpose() * H * Pa;
    if ((Hz - Hz.transpose()).norm() > 1e-10 * std::max(1.0, Hz.norm()))
        throw InvalidHError("H is not symmetric on X1");
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (Hz + Hz.transpose()));
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw InvalidHError("H is not positive definite on X1");
}

namespace {

// Multi-start lift of (t, z) onto the consistency manifold.
std::optional<Vector> try_lift(const SemilinearDAE& dae, double t, const Vector& z,
                               const Vector& u_first) {
    const Index d = dae.dim_u();
    std::vector<Vector> starts;
    starts.push_back(u_first);
    starts.push_back(Vector::Zero(d));
    for (double mag : {1.0, 5.0, 25.0, 125.0})
        for (double sgn : {1.0, -1.0})
            for (Index i = 0; i < d; ++i) {
                Vector s = Vector::Zero(d);
                s(i) = sgn * mag;
                starts.push_back(s);
            }
    for (const auto& s : starts) {
        try {
            return dae.solve_constraint(t, z, s);
        } catch (const Error&) {
            continue;
        }
    }
    return std::nullopt;
}

// All roots of the scalar constraint map F(u) = Pd^T G^-1 Q2 f - u on
// [-hw, hw]: sign-change scan plus bisection.
std::vector<double> scalar_roots(const SemilinearDAE& dae, double t, const Vector& z,
                                 double hw, int points) {
    auto Fs = [&](double u) {
        Vector uv(1);
        uv(0) = u;
        Vector x = dae.assemble(z, uv);
        Vector w = dae.dec().basis_X2.transpose() *
                   (dae.dec().G_inv * (dae.dec().Q2 * dae.f(t, x)));
        return w(0) - u;
    };
    std::vector<double> roots;
    double prev_u = -hw, prev_f = Fs(prev_u);
    for (int i = 1; i <= points; ++i) {
        double u = -hw + 2.0 * hw * i / points;
        double f = Fs(u);
        if (std::isfinite(prev_f) && std::isfinite(f) && prev_f * f <= 0.0 &&
            (prev_f != 0.0 || f != 0.0)) {
            double lo = prev_u, hi = u, flo = prev_f;
            for (int it = 0; it < 80; ++it) {
                double mid = 0.5 * (lo + hi);
                double fm = Fs(mid);
                if (flo * fm <= 0.0)
                    hi = mid;
                else {
                    lo = mid;
                    flo = fm;
                }
            }
            double root = 0.5 * (lo + hi);
            bool dup = false;
            for (double rt : roots)
                if (std::abs(rt - root) < 1e-7 * (1.0 + std::abs(root)))
                    dup = true;
            if (!dup)
                roots.push_back(root);
        }
        prev_u = u;
        prev_f = f;
    }
    return roots;
}

} // namespace

ConditionEntry check_constraint_solvability(const SemilinearDAE& dae,
                                            const GridSpec& grid) {
    ConditionEntry entry;
    entry.id = "constraint-solvability";
    const Index a = dae.dim_z();
    if (static_cast<Index>(grid.z_box.size()) != a ||
        grid.z_counts.size() != grid.z_box.size())
        throw Error("check_constraint_solvability: grid dimensions do not match "
                    "the differential coordinate count");

    std::vector<Index> idx(a, 0);
    for (int ti = 0; ti < std::max(1, grid.t_count); ++ti) {
        double t = grid.t_box[0];
        if (grid.t_count > 1)
            t += (grid.t_box[1] - grid.t_box[0]) * ti / (grid.t_count - 1);
        std::fill(idx.begin(), idx.end(), 0);
        bool done = false;
        while (!done) {
            Vector z(a);
            for (Index i = 0; i < a; ++i) {
                int cnt = std::max(1, grid.z_counts[i]);
                double s = (cnt > 1) ? static_cast<double>(idx[i]) / (cnt - 1) : 0.5;
                z(i) = grid.z_box[i][0] + s * (grid.z_box[i][1] - grid.z_box[i][0]);
            }
            entry.samples += 1;
            auto u = try_lift(dae, t, z, Vector::Zero(dae.dim_u()));
            if (!u) {
                entry.pass = false;
                entry.violation = false; // exhausted starts, not a disproof
                Witness w;
                w.t = t;
                w.x = dae.assemble(z, Vector::Zero(dae.dim_u()));
                w.detail = "no constraint root found from any start";
                entry.witness = w;
                entry.note = "start exhaustion at a grid point; solvability "
                             "undecided there";
                return entry;
            }
            // advance the multi-index
            done = true;
            for (Index i = 0; i < a; ++i) {
                if (++idx[i] < std::max(1, grid.z_counts[i])) {
                    done = false;
                    break;
                }
                idx[i] = 0;
            }
        }
    }
    entry.note = "root found at every grid point";
    entry.worst_margin = 0.0;
    return entry;
}

ConditionEntry check_basis_invertibility(const SemilinearDAE& dae,
                                         const HullSamplerSpec& spec) {
    ConditionEntry entry;
    entry.id = "basis-invertibility";
    const Index a = dae.dim_z();
    const Index d = dae.dim_u();
    if (d < 1)
        throw Error("check_basis_invertibility: requires d >= 1");
    if (static_cast<Index>(spec.z_box.size()) != a)
        throw Error("check_basis_invertibility: z_box dimension mismatch");

    HaltonSampler sampler(static_cast<int>(a) + 1, spec.seed);
    Box zbox{spec.z_box};
    double min_abs = std::numeric_limits<double>::infinity();

    auto record_violation = [&](double t, const Vector& z, const Vector& u,
                                double jval, const std::string& detail) {
        entry.pass = false;
        entry.violation = true;
        Witness w;
        w.t = t;
        w.x = dae.assemble(z, u);
        w.lhs = jval;
        w.rhs = 0.0;
        w.detail = detail;
        entry.witness = w;
    };

    for (long s = 0; s < spec.count; ++s) {
        Vector p = sampler.next();
        double t = spec.t_box[0] + p(0) * (spec.t_box[1] - spec.t_box[0]);
        Vector z = zbox.map(p.tail(a));
        entry.samples += 1;

        if (d == 1) {
            std::vector<double> roots =
                scalar_roots(dae, t, z, spec.u_scan_halfwidth, spec.u_scan_points);
            auto J = [&](double u) {
                Vector uv(1);
                uv(0) = u;
                return dae.constraint_jacobian(t, z, uv)(0, 0);
            };
            double jscale = 0.0;
            for (double rt : roots)
                jscale = std::max(jscale, std::abs(J(rt)));
            double tol_zero = 1e-9 * (1.0 + jscale);
            for (double rt : roots) {
                double jv = J(rt);
                min_abs = std::min(min_abs, std::abs(jv));
                if (std::abs(jv) <= tol_zero) {
                    Vector uv(1);
                    uv(0) = rt;
                    record_violation(t, z, uv, jv,
                                     "constraint Jacobian vanishes at a root");
                    entry.worst_margin = min_abs;
                    return entry;
                }
            }
            // scan dF/du along the hull between each adjacent pair of roots
            for (size_t i = 0; i + 1 < roots.size(); ++i) {
                double lo = roots[i], hi = roots[i + 1];
                double prev_u = lo, prev_j = J(lo);
                for (int q = 1; q <= spec.hull_scan_points; ++q) {
                    double u = lo + (hi - lo) * q / spec.hull_scan_points;
                    double jv = J(u);
                    min_abs = std::min(min_abs, std::abs(jv));
                    if (prev_j * jv <= 0.0 && (prev_j != 0.0 || jv != 0.0)) {
                        double blo = prev_u, bhi = u, jlo = prev_j;
                        for (int it = 0; it < 80; ++it) {
                            double mid = 0.5 * (blo + bhi);
                            double jm = J(mid);
                            if (jlo * jm <= 0.0)
                                bhi = mid;
                            else {
                                blo = mid;
                                jlo = jm;
                            }
                        }
                        double ustar = 0.5 * (blo + bhi);
                        Vector uv(1);
                        uv(0) = ustar;
                        record_violation(
                            t, z, uv, J(ustar),
                            "constraint Jacobian changes sign between roots");
                        entry.worst_margin = std::min(min_abs, std::abs(J(ustar)));
                        return entry;
                    }
                    prev_u = u;
                    prev_j = jv;
                }
            }
        } else {
            // enumerate roots by multi-start Newton, then test mixed-row
            // matrices assembled from Jacobians at hull vertex sets
            std::vector<Vector> roots;
            std::vector<Vector> starts;
            starts.push_back(Vector::Zero(d));
            for (double mag : {1.0, 5.0, 25.0})
                for (double sgn : {1.0, -1.0})
                    for (Index i = 0; i < d; ++i) {
                        Vector st = Vector::Zero(d);
                        st(i) = sgn * mag;
                        starts.push_back(st);
                    }
            for (const auto& st : starts) {
                try {
                    Vector u = dae.solve_constraint(t, z, st);
                    bool dup = false;
                    for (const auto& rt : roots)
                        if ((rt - u).norm() < 1e-6 * (1.0 + u.norm()))
                            dup = true;
                    if (!dup)
                        roots.push_back(u);
                } catch (const Error&) {
                }
            }
            HaltonSampler vertex_sampler(static_cast<int>(d), spec.seed + 17);
            for (size_t i = 0; i < roots.size(); ++i) {
                for (size_t j = i; j < roots.size(); ++j) {
                    for (int trial = 0; trial < 16; ++trial) {
                        Vector theta = (i == j) ? Vector::Zero(d)
                                                : Vector(vertex_sampler.next());
                        Matrix Lambda(d, d);
                        Vector mid = roots[i];
                        for (Index kk = 0; kk < d; ++kk) {
                            Vector w =
                                roots[i] + theta(kk) * (roots[j] - roots[i]);
                            Lambda.row(kk) =
                                dae.constraint_jacobian(t, z, w).row(kk);
                            mid = w;
                        }
                        Eigen::JacobiSVD<Matrix> svd(Lambda);
                        double smin = svd.singularValues()(d - 1);
                        double smax = svd.singularValues()(0);
                        min_abs = std::min(min_abs, smin);
                        if (smin <= 1e-9 * std::max(1.0, smax)) {
                            record_violation(t, z, mid, smin,
                                             "mixed-row constraint Jacobian "
                                             "matrix is singular on a hull");
                            entry.worst_margin = min_abs;
                            return entry;
                        }
                        if (i == j)
                            break;
                    }
                }
            }
        }
    }
    entry.worst_margin = std::isfinite(min_abs) ? min_abs : 0.0;
    entry.note = "no vanishing constraint Jacobian found on sampled hulls";
    return entry;
}

CertificateReport check_stability_inequality(const SemilinearDAE& dae,
                                             const Matrix& H,
                                             const GaugeFunction& k,
                                             const ComparisonFunction& U, double R,
                                             const SamplerSpec& sampler) {
    validate_h(dae, H);
    const Index a = dae.dim_z();
    if (static_cast<Index>(sampler.z_box.size()) != a)
        throw Error("check_stability_inequality: z_box dimension mismatch");
    if (U.kind == ComparisonFunction::Kind::Power && U.alpha == 0.0)
        throw Error("check_stability_inequality: the comparison scale alpha must be "
                    "fixed; calibration applies to the instability check only");

    CertificateReport report;
    ConditionEntry ineq;
    ineq.id = "dissipation-inequality";
    ineq.worst_margin = std::numeric_limits<double>::infinity();

    HaltonSampler hs(static_cast<int>(a) + 1, sampler.seed);
    Box zbox{sampler.z_box};
    long kept = 0, lift_failures = 0, attempts = 0;
    const long max_attempts = 50 * sampler.count;
    Vector u_prev = Vector::Zero(dae.dim_u());
    while (kept < sampler.count && attempts < max_attempts) {
        ++attempts;
        Vector p = hs.next();
        double t = sampler.t_box[0] + p(0) * (sampler.t_box[1] - sampler.t_box[0]);
        Vector z = zbox.map(p.tail(a));
        if (z.norm() < R)
            continue; // ||P1 x|| = ||z|| for an orthonormal basis
        auto u = try_lift(dae, t, z, u_prev);
        if (!u) {
            ++lift_failures;
            continue;
        }
        u_prev = *u;
        ++kept;
        Vector x = dae.assemble(z, *u);
        double lhs = lyapunov_rate(dae, H, t, x);
        double v = lyapunov_value(dae, H, x);
        double rhs = k.k(t) * U(v);
        double margin = rhs - lhs;
        if (margin < ineq.worst_margin) {
            ineq.worst_margin = margin;
            double tol = 1e-9 * (1.0 + std::abs(lhs) + std::abs(rhs));
            if (margin < -tol) {
                ineq.pass = false;
                ineq.violation = true;
                Witness w;
                w.t = t;
                w.x = x;
                w.lhs = lhs;
                w.rhs = rhs;
                w.detail = "dissipation inequality violated";
                ineq.witness = w;
            }
        }
    }
    ineq.samples = kept;
    if (kept < sampler.count) {
        ineq.pass = false;
        ineq.violation = ineq.witness.has_value();
        ineq.note = "sampler kept " + std::to_string(kept) + " of " +
                    std::to_string(sampler.count) + " requested points (" +
                    std::to_string(lift_failures) + " lift failures)";
    }
    report.entries.push_back(std::move(ineq));

    ConditionEntry udiv;
    udiv.id = "comparison-integral-divergence";
    udiv.pass = U.integral_diverges();
    udiv.violation = false;
    udiv.note = udiv.pass ? "integral of dv/U(v) diverges, as required"
                          : "integral of dv/U(v) converges; the global-existence "
                            "hypothesis does not apply";
    report.entries.push_back(std::move(udiv));

    // boundedness probe: sup ||Q2 f(t, x_p1 + x_p2~)|| over the horizon and
    // the sampled ball, with the algebraic part frozen at x_p2~ = 0. The
    // observed value is reported; the analytic supremum over all t stays a
    // user-level declaration.
    {
        ConditionEntry tube;
        tube.id = "algebraic-image-bounded";
        HaltonSampler ts(static_cast<int>(a) + 1, sampler.seed + 7);
        long n_probe = std::max<long>(sampler.count / 10, 100);
        double sup = 0.0, ball = 0.0;
        Vector u_tilde = Vector::Zero(dae.dim_u());
        for (long s = 0; s < n_probe; ++s) {
            Vector p = ts.next();
            double t = p(0) * k.probe_horizon;
            Vector z = zbox.map(p.tail(a));
            Vector x = dae.assemble(z, u_tilde);
            sup = std::max(sup, (dae.dec().Q2 * dae.f(t, x)).norm());
            ball = std::max(ball, z.norm());
        }
        tube.samples = n_probe;
        tube.pass = std::isfinite(sup);
        tube.violation = false;
        tube.worst_margin = sup;
        tube.note = "observed sup " + std::to_string(sup) + " over t in [0, " +
                    std::to_string(k.probe_horizon) + "], ||P1 x|| <= " +
                    std::to_string(ball) + "; the supremum over all t is a "
                    "declaration, not a computation";
        report.entries.push_back(std::move(tube));
    }

    ConditionEntry kdecl;
    kdecl.id = "gauge-integral-declaration";
    kdecl.pass = true;
    kdecl.violation = false;
    switch (k.integral_decl) {
    case GaugeFunction::IntegralDecl::Finite:
        kdecl.note = "integral of k declared finite: boundedness conclusion applies";
        break;
    case GaugeFunction::IntegralDecl::Divergent:
        kdecl.note = "integral of k declared divergent: only the global-existence "
                     "half applies";
        break;
    case GaugeFunction::IntegralDecl::Unknown:
        kdecl.note = "integral of k undeclared: boundedness conclusion requires a "
                     "finite declaration";
        break;
    }
    report.entries.push_back(std::move(kdecl));

    report.finalize();
    return report;
}

CertificateReport check_instability_conditions(const SemilinearDAE& dae,
                                               const Matrix& H,
                                               const GaugeFunction& k,
                                               ComparisonFunction U,
                                               const RegionSpec& region,
                                               const SamplerSpec& sampler) {
    validate_h(dae, H);
    if (!region.excludes_origin ||
        region.membership(Vector::Zero(dae.n())))
        throw InvalidRegionError("check_instability_conditions: region must exclude "
                                 "the origin of X1");

    CertificateReport report;
    const Matrix& Pa = dae.dec().basis_X1;

    // (i) reversed inequality over the region, with optional alpha calibration
    struct Sample {
        double t;
        Vector x;
        double lhs;
        double v;
    };
    std::vector<Sample> samples;
    samples.reserve(sampler.count);
    HaltonSampler hs(3, sampler.seed);
    long lift_failures = 0;
    for (long s = 0; s < sampler.count; ++s) {
        Vector p = hs.next();
        double t = sampler.t_box[0] + p(0) * (sampler.t_box[1] - sampler.t_box[0]);
        Vector xp1 = region.interior_point(p.tail(2));
        if (!region.membership(xp1))
            continue;
        Vector z = Pa.transpose() * xp1;
        auto u = try_lift(dae, t, z, Vector::Zero(dae.dim_u()));
        if (!u) {
            ++lift_failures;
            continue;
        }
        Vector x = dae.assemble(z, *u);
        samples.push_back({t, x, lyapunov_rate(dae, H, t, x),
                           lyapunov_value(dae, H, x)});
    }

    ConditionEntry ineq;
    ineq.id = "reversed-dissipation-inequality";
    ineq.samples = static_cast<long>(samples.size());
    ineq.worst_margin = std::numeric_limits<double>::infinity();
    bool calibrate = (U.kind == ComparisonFunction::Kind::Power && U.alpha == 0.0);
    if (calibrate) {
        double min_ratio = std::numeric_limits<double>::infinity();
        const Sample* argmin = nullptr;
        for (const auto& smp : samples) {
            double base = k.k(smp.t) * std::pow(smp.v, U.p);
            double ratio = smp.lhs / base;
            if (ratio < min_ratio) {
                min_ratio = ratio;
                argmin = &smp;
            }
        }
        if (samples.empty()) {
            ineq.pass = false;
            ineq.violation = false;
            ineq.note = "no usable samples";
        } else if (min_ratio <= 0.0) {
            ineq.pass = false;
            ineq.violation = true;
            Witness w;
            w.t = argmin->t;
            w.x = argmin->x;
            w.lhs = argmin->lhs;
            w.rhs = 0.0;
            w.detail = "rate is nonpositive in the region; no positive alpha exists";
            ineq.witness = w;
            ineq.worst_margin = min_ratio;
        } else {
            U.alpha = min_ratio;
            report.alpha_calibrated = min_ratio;
            ineq.worst_margin = 0.0; // tight at the calibration point
            ineq.note = "alpha calibrated to the sampled minimum ratio " +
                        std::to_string(min_ratio);
        }
    }
    if (!calibrate || (U.alpha > 0.0 && ineq.pass)) {
        for (const auto& smp : samples) {
            double rhs = k.k(smp.t) * U(smp.v);
            double margin = smp.lhs - rhs; // >= 0 required
            if (margin < ineq.worst_margin) {
                ineq.worst_margin = margin;
                double tol = 1e-9 * (1.0 + std::abs(smp.lhs) + std::abs(rhs));
                if (margin < -tol) {
                    ineq.pass = false;
                    ineq.violation = true;
                    Witness w;
                    w.t = smp.t;
                    w.x = smp.x;
                    w.lhs = smp.lhs;
                    w.rhs = rhs;
                    w.detail = "reversed dissipation inequality violated";
                    ineq.witness = w;
                }
            }
        }
    }
    if (samples.empty()) {
        ineq.pass = false;
        ineq.violation = false;
        if (ineq.note.empty())
            ineq.note = "no usable samples (lift failures: " +
                        std::to_string(lift_failures) + ")";
    }
    report.entries.push_back(std::move(ineq));

    // (ii) the flow points inward on every boundary patch
    for (const auto& patch : region.boundary) {
        ConditionEntry inv;
        inv.id = "region-invariance-" + patch.name;
        inv.worst_margin = std::numeric_limits<double>::infinity();
        HaltonSampler bs(2, sampler.seed + 101);
        long n_boundary = std::max<long>(sampler.count / 10, 100);
        for (long s = 0; s < n_boundary; ++s) {
            Vector p = bs.next();
            double t =
                sampler.t_box[0] + p(0) * (sampler.t_box[1] - sampler.t_box[0]);
            Vector xp1 = patch.point(p(1));
            Vector z = Pa.transpose() * xp1;
            auto u = try_lift(dae, t, z, Vector::Zero(dae.dim_u()));
            if (!u)
                continue;
            inv.samples += 1;
            Vector zdot = dae.reduced_rhs(t, z, *u);
            Vector xp1_dot = Pa * zdot;
            double flux = patch.outward_flux(xp1, xp1_dot);
            double margin = -flux; // inward flux is negative outward flux
            if (margin < inv.worst_margin) {
                inv.worst_margin = margin;
                double tol = 1e-9 * (1.0 + xp1_dot.norm());
                if (flux >= tol) {
                    inv.pass = false;
                    inv.violation = true;
                    Witness w;
                    w.t = t;
                    w.x = dae.assemble(z, *u);
                    w.lhs = flux;
                    w.rhs = 0.0;
                    w.detail = "flow points outward on patch " + patch.name;
                    inv.witness = w;
                }
            }
        }
        if (inv.samples == 0) {
            inv.pass = false;
            inv.violation = false;
            inv.note = "no boundary samples could be lifted";
        }
        report.entries.push_back(std::move(inv));
    }

    // (iii) comparison-integral flags
    ConditionEntry uconv;
    uconv.id = "comparison-integral-convergence";
    uconv.pass = !U.integral_diverges();
    uconv.violation = false;
    uconv.note = uconv.pass ? "integral of dv/U(v) converges, as required"
                            : "integral of dv/U(v) diverges; finite escape cannot "
                              "be concluded";
    report.entries.push_back(std::move(uconv));

    ConditionEntry kdiv;
    kdiv.id = "gauge-integral-divergence";
    kdiv.pass = (k.integral_decl == GaugeFunction::IntegralDecl::Divergent);
    kdiv.violation = false;
    kdiv.note = kdiv.pass ? "integral of k declared divergent, as required"
                          : "integral of k not declared divergent";
    report.entries.push_back(std::move(kdiv));

    report.finalize();
    return report;
}

} // namespace daestab
