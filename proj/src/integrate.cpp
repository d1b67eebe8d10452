#include "daestab/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace daestab {

namespace {

// Dormand-Prince 5(4) tableau. The propagated solution is the 5th-order
// one; stage 7 equals the new-point derivative (FSAL).
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - bhat, error estimate weights
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

struct EscapeFit {
    double T = 0.0;
    double p = 0.0;
    double residual = 0.0;
};

// Fit ||x(t)|| ~ c (T - t)^-p on (t_i, n_i) samples: for a candidate T the
// fit is linear in log-log form; minimize the SSE over T by golden section.
EscapeFit fit_escape_time(const std::vector<double>& ts,
                          const std::vector<double>& norms) {
    const size_t m = ts.size();
    EscapeFit out;
    if (m < 3) {
        out.T = ts.empty() ? 0.0 : ts.back();
        return out;
    }
    const double t_last = ts.back();
    const double span = std::max(t_last - ts.front(),
                                 std::numeric_limits<double>::min());

    auto sse_for = [&](double T, double* slope, double* resid) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (size_t i = 0; i < m; ++i) {
            double x = std::log(T - ts[i]);
            double y = std::log(std::max(norms[i], 1e-300));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        double n = static_cast<double>(m);
        double denom = n * sxx - sx * sx;
        double b = (denom != 0.0) ? (n * sxy - sx * sy) / denom : 0.0;
        double a = (sy - b * sx) / n;
        double sse = 0;
        for (size_t i = 0; i < m; ++i) {
            double x = std::log(T - ts[i]);
            double y = std::log(std::max(norms[i], 1e-300));
            double r = y - (a + b * x);
            sse += r * r;
        }
        if (slope)
            *slope = b;
        if (resid)
            *resid = std::sqrt(sse / n);
        return sse;
    };

    double lo = t_last + 1e-12 * std::max(1.0, std::abs(t_last));
    double hi = t_last + 10.0 * span;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = sse_for(x1, nullptr, nullptr), f2 = sse_for(x2, nullptr, nullptr);
    for (int it = 0; it < 120; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = sse_for(x1, nullptr, nullptr);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = sse_for(x2, nullptr, nullptr);
        }
    }
    out.T = 0.5 * (lo + hi);
    double slope = 0;
    sse_for(out.T, &slope, &out.residual);
    out.p = -slope;
    return out;
}

} // namespace

std::vector<double> fd_weights_first_derivative(const std::vector<double>& nodes,
                                                double x0) {
    // Fornberg's recursion, specialized to derivative order 1
    const int n = static_cast<int>(nodes.size());
    std::vector<std::array<double, 2>> C(n, {0.0, 0.0});
    C[0][0] = 1.0;
    double c1 = 1.0;
    double c4 = nodes[0] - x0;
    for (int i = 1; i < n; ++i) {
        int mn = std::min(i, 1);
        double c2v = 1.0;
        double c5 = c4;
        c4 = nodes[i] - x0;
        for (int j = 0; j < i; ++j) {
            double c3v = nodes[i] - nodes[j];
            c2v *= c3v;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    C[i][k] = c1 * (k * C[i - 1][k - 1] - c5 * C[i - 1][k]) / c2v;
                C[i][0] = -c1 * c5 * C[i - 1][0] / c2v;
            }
            for (int k = mn; k >= 1; --k)
                C[j][k] = (c4 * C[j][k] - k * C[j][k - 1]) / c3v;
            C[j][0] = c4 * C[j][0] / c3v;
        }
        c1 = c2v;
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i)
        w[i] = C[i][1];
    return w;
}

namespace {

void fill_dae_residuals(const SemilinearDAE& dae, Trajectory& traj) {
    const size_t m = traj.times.size();
    traj.dae_residuals.assign(m, 0.0);
    if (m < 2)
        return;
    const Matrix& A = dae.pencil().A;
    const Matrix& B = dae.pencil().B;
    const int window = static_cast<int>(std::min<size_t>(m, 6));
    for (size_t k = 0; k < m; ++k) {
        int lo = static_cast<int>(k) - window / 2;
        lo = std::max(0, std::min(lo, static_cast<int>(m) - window));
        std::vector<double> nodes(traj.times.begin() + lo,
                                  traj.times.begin() + lo + window);
        std::vector<double> w = fd_weights_first_derivative(nodes, traj.times[k]);
        Vector dAx = Vector::Zero(dae.n());
        for (int j = 0; j < window; ++j)
            dAx += w[j] * (A * traj.states[lo + j]);
        Vector res = dAx + B * traj.states[k] - dae.f(traj.times[k], traj.states[k]);
        traj.dae_residuals[k] = res.norm();
    }
}

} // namespace

Trajectory integrate(const SemilinearDAE& dae, double t0, const Vector& x0,
                     const IntegrationOptions& opts) {
    const Index nz = dae.dim_z();
    if (x0.size() != dae.n())
        throw Error("integrate: x0 has wrong dimension");
    if (!(opts.t_end > t0))
        throw Error("integrate: t_end must exceed t0");
    if (!(opts.rel_tol > 0) || !(opts.abs_tol > 0) || !(opts.escape_norm > 0) ||
        opts.record_every < 1)
        throw Error("integrate: invalid tolerances or options");

    const double span = opts.t_end - t0;
    const double h_max = (opts.h_max > 0.0) ? opts.h_max : span;
    const double h_min = opts.h_min;
    double h = std::clamp(opts.h_init, h_min, h_max);
    if (!(h_min > 0) || h_min > h_max)
        throw Error("integrate: require 0 < h_min <= h_init <= h_max");

    Trajectory traj;
    const double init_tol =
        10.0 * opts.newton.tol_scale * (1.0 + dae.project_z(x0).norm());
    if (dae.manifold_residual(t0, x0).norm() > init_tol)
        throw InconsistentInitialValueError(
            "integrate: x0 is not on the consistency manifold (residual " +
            std::to_string(dae.manifold_residual(t0, x0).norm()) + ")");

    double t = t0;
    Vector z = dae.project_z(x0);
    Vector u = dae.project_u(x0);
    // re-solve at the initial point so the recorded residual reflects the solver
    u = dae.solve_constraint(t, z, u, opts.newton);
    Vector x = dae.assemble(z, u);

    auto record = [&](double step) {
        Vector xr = dae.refine_on_manifold(t, x);
        traj.times.push_back(t);
        traj.states.push_back(xr);
        traj.constraint_residuals.push_back(dae.manifold_residual(t, xr).norm());
        traj.step_sizes.push_back(step);
    };
    record(0.0);

    // stage derivative with per-stage constraint solve; u_stage is the
    // continuation guess and receives the stage root
    auto eval = [&](double ts, const Vector& zs, Vector& u_stage) {
        u_stage = dae.solve_constraint(ts, zs, u_stage, opts.newton);
        return dae.reduced_rhs(ts, zs, u_stage);
    };

    Vector k1(nz), k2(nz), k3(nz), k4(nz), k5(nz), k6(nz), k7(nz);
    Vector u_work = u;
    k1 = eval(t, z, u_work);

    std::deque<double> norm_window;
    norm_window.push_back(x.norm());
    int consecutive_hmin = 0;
    long accepted_since_record = 0;
    bool have_crossing = false;
    double cross_lo = t0, cross_hi = t0, cross_h = 0.0;
    std::deque<std::pair<double, double>> tail; // (t, ||x||) of recent accepted steps

    traj.stats.min_h = std::numeric_limits<double>::infinity();

    auto finish_escape = [&](double last_h) {
        EscapeInfo info;
        if (!have_crossing) {
            cross_lo = std::max(t0, t - last_h);
            cross_hi = t;
            cross_h = last_h;
        }
        info.T_lower = cross_lo;
        info.T_upper = cross_hi;
        std::vector<double> ts, ns;
        for (const auto& [tt, nn] : tail) {
            ts.push_back(tt);
            ns.push_back(nn);
        }
        EscapeFit fit = fit_escape_time(ts, ns);
        info.T_estimate = fit.T;
        info.fit_exponent = fit.p;
        info.fit_residual = fit.residual;
        traj.escape = info;
        traj.status = TrajectoryStatus::EscapeDetected;
        if (traj.times.back() != t)
            record(last_h);
    };

    while (t < opts.t_end) {
        double h_step = std::min(h, opts.t_end - t);
        // fold a trailing sliver into the final step instead of leaving a
        // near-zero node that poisons the finite-difference residuals
        if (t + 1.01 * h_step >= opts.t_end)
            h_step = opts.t_end - t;
        bool failed_constraint = false;
        std::string failure_reason;
        double err = 0.0;
        Vector z_new(nz);
        Vector u_new = u_work;

        try {
            Vector us = u_work;
            k2 = eval(t + c2 * h_step, z + h_step * (a21 * k1), us);
            k3 = eval(t + c3 * h_step, z + h_step * (a31 * k1 + a32 * k2), us);
            k4 = eval(t + c4 * h_step, z + h_step * (a41 * k1 + a42 * k2 + a43 * k3),
                      us);
            k5 = eval(t + c5 * h_step,
                      z + h_step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), us);
            k6 = eval(t + h_step,
                      z + h_step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 +
                                    a65 * k5),
                      us);
            z_new = z + h_step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            u_new = us;
            k7 = eval(t + h_step, z_new, u_new); // FSAL stage

            Vector err_vec =
                h_step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            double acc = 0.0;
            for (Index i = 0; i < nz; ++i) {
                double sk = opts.abs_tol +
                            opts.rel_tol * std::max(std::abs(z(i)), std::abs(z_new(i)));
                double q = err_vec(i) / sk;
                acc += q * q;
            }
            err = (nz > 0) ? std::sqrt(acc / static_cast<double>(nz)) : 0.0;
            if (!std::isfinite(err) || !z_new.allFinite())
                err = std::numeric_limits<double>::infinity();
        } catch (const Error& e) {
            failed_constraint = true;
            failure_reason = e.what();
        }

        bool accept = !failed_constraint && err <= 1.0;
        if (accept) {
            t += h_step;
            z = z_new;
            u_work = u_new;
            k1 = k7;
            x = dae.assemble(z, u_work);
            traj.stats.accepted += 1;
            traj.stats.min_h = std::min(traj.stats.min_h, h_step);
            traj.stats.max_h = std::max(traj.stats.max_h, h_step);
            traj.stats.last_h = h_step;

            double nrm = x.norm();
            if (norm_window.back() < opts.escape_norm && nrm >= opts.escape_norm) {
                have_crossing = true;
                cross_lo = t - h_step;
                cross_hi = t;
                cross_h = h_step;
            }
            norm_window.push_back(nrm);
            if (norm_window.size() > 11)
                norm_window.pop_front();
            tail.emplace_back(t, nrm);
            if (tail.size() > 10)
                tail.pop_front();

            if (++accepted_since_record >= opts.record_every || t >= opts.t_end)
                record(h_step), accepted_since_record = 0;

            bool monotone = norm_window.size() >= 11;
            if (monotone)
                for (size_t i = 1; i < norm_window.size(); ++i)
                    if (norm_window[i] <= norm_window[i - 1])
                        monotone = false;
            if (nrm >= opts.escape_norm && (monotone || consecutive_hmin >= 2)) {
                finish_escape(h_step);
                break;
            }
        } else {
            traj.stats.rejected += 1;
            if (h_step <= h_min * (1.0 + 1e-12)) {
                // cannot shrink further
                if (x.norm() >= opts.escape_norm) {
                    finish_escape(h_step);
                    break;
                }
                traj.status = TrajectoryStatus::SolverFailure;
                traj.failure = SolverFailureInfo{
                    t, failed_constraint
                           ? failure_reason
                           : "error test keeps failing at the minimum step size"};
                if (traj.times.back() != t)
                    record(traj.stats.last_h);
                break;
            }
        }

        // elementary step-size controller
        double fac;
        if (failed_constraint)
            fac = 0.25;
        else if (err > 0.0 && std::isfinite(err))
            fac = std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        else
            fac = 5.0;
        double h_prop = h_step * fac;
        if (h_prop < h_min)
            ++consecutive_hmin;
        else
            consecutive_hmin = 0;
        h = std::clamp(h_prop, h_min, h_max);
    }

    if (traj.status == TrajectoryStatus::Completed && traj.times.back() < t) {
        record(traj.stats.last_h);
    }
    if (!traj.stats.accepted)
        traj.stats.min_h = 0.0;

    fill_dae_residuals(dae, traj);
    return traj;
}

double max_norm(const Trajectory& traj) {
    if (traj.states.empty())
        throw Error("max_norm: empty trajectory");
    double m = 0.0;
    for (const auto& x : traj.states)
        m = std::max(m, x.norm());
    return m;
}

} // namespace daestab
