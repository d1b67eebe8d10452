#include "daestab/config.hpp"

#include <cmath>
#include <fstream>
#include <future>
#include <sstream>

#include "daestab/csv.hpp"

namespace daestab {
namespace cli {

namespace fs = std::filesystem;

namespace {

double require_number(const json& j, const std::string& key) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw ConfigError("config: missing or non-numeric field '" + key + "'");
    return j.at(key).get<double>();
}

double number_or(const json& j, const std::string& key, double dflt) {
    if (!j.contains(key))
        return dflt;
    if (!j.at(key).is_number())
        throw ConfigError("config: field '" + key + "' must be a number");
    return j.at(key).get<double>();
}

Matrix parse_matrix(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty())
        throw ConfigError("config: " + what + " must be a non-empty array of rows");
    const size_t rows = j.size();
    const size_t cols = j.at(0).size();
    Matrix m(rows, cols);
    for (size_t i = 0; i < rows; ++i) {
        const auto& row = j.at(i);
        if (!row.is_array() || row.size() != cols)
            throw ConfigError("config: " + what + " rows must all have length " +
                              std::to_string(cols));
        for (size_t k = 0; k < cols; ++k)
            m(i, k) = row.at(k).get<double>();
    }
    return m;
}

Vector parse_vector(const json& j, const std::string& what) {
    if (!j.is_array())
        throw ConfigError("config: " + what + " must be an array");
    Vector v(j.size());
    for (size_t i = 0; i < j.size(); ++i)
        v(i) = j.at(i).get<double>();
    return v;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

json vector_to_json(const Vector& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i)
        out.push_back(v(i));
    return out;
}

} // namespace

circuit::NonlinearitySpec parse_nonlinearity(const json& j) {
    using NS = circuit::NonlinearitySpec;
    if (!j.is_object() || !j.contains("kind"))
        throw ConfigError("config: nonlinearity must be an object with 'kind'");
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "zero")
        return NS::zero();
    if (kind == "odd_power")
        return NS::odd_power(require_number(j, "alpha"),
                             static_cast<int>(require_number(j, "m")));
    if (kind == "sine")
        return NS::sine(require_number(j, "alpha"));
    if (kind == "neg_square")
        return NS::neg_square();
    if (kind == "square")
        return NS::square();
    if (kind == "cube")
        return NS::cube();
    throw ConfigError("config: unknown nonlinearity kind '" + kind + "'");
}

circuit::SourceSpec parse_source(const json& j) {
    using SS = circuit::SourceSpec;
    if (!j.is_object() || !j.contains("kind"))
        throw ConfigError("config: source must be an object with 'kind'");
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "zero")
        return SS::zero();
    if (kind == "power_decay")
        return SS::power_decay(require_number(j, "beta"), require_number(j, "alpha"),
                               static_cast<int>(require_number(j, "n")));
    if (kind == "exp_decay")
        return SS::exp_decay(require_number(j, "beta"), require_number(j, "alpha"));
    if (kind == "gaussian")
        return SS::gaussian(require_number(j, "beta"), require_number(j, "alpha"),
                            require_number(j, "sigma"));
    if (kind == "sinusoid")
        return SS::sinusoid(require_number(j, "beta"), require_number(j, "omega"),
                            number_or(j, "theta", 0.0), number_or(j, "offset", 0.0));
    if (kind == "damped_sine")
        return SS::damped_sine(require_number(j, "beta"), require_number(j, "alpha"),
                               require_number(j, "omega"),
                               number_or(j, "theta", 0.0));
    if (kind == "power_growth")
        return SS::power_growth(require_number(j, "beta"),
                                number_or(j, "alpha", 0.0),
                                static_cast<int>(require_number(j, "n")));
    throw ConfigError("config: unknown source kind '" + kind + "'");
}

circuit::CircuitParams parse_circuit_params(const json& j) {
    circuit::CircuitParams p;
    p.L = require_number(j, "L");
    p.C = require_number(j, "C");
    p.r = require_number(j, "r");
    p.g = require_number(j, "g");
    p.phi0 = j.contains("phi0") ? parse_nonlinearity(j.at("phi0"))
                                : circuit::NonlinearitySpec::zero();
    p.phi = j.contains("phi") ? parse_nonlinearity(j.at("phi"))
                              : circuit::NonlinearitySpec::zero();
    p.psi = j.contains("psi") ? parse_nonlinearity(j.at("psi"))
                              : circuit::NonlinearitySpec::zero();
    p.h = j.contains("h") ? parse_nonlinearity(j.at("h"))
                          : circuit::NonlinearitySpec::zero();
    p.source = j.contains("source") ? parse_source(j.at("source"))
                                    : circuit::SourceSpec::zero();
    p.validate();
    return p;
}

namespace {

// Polynomial right-hand side for the generic-matrices model: per component
// a list of monomials {coef, powers[n]}, plus an optional additive source.
struct PolynomialRhs {
    struct Term {
        double coef;
        std::vector<int> powers;
    };
    std::vector<std::vector<Term>> components;
    std::vector<std::optional<circuit::SourceSpec>> sources;

    Vector value(double t, const Vector& x) const {
        Vector out = Vector::Zero(components.size());
        for (size_t i = 0; i < components.size(); ++i) {
            double acc = 0.0;
            for (const auto& term : components[i]) {
                double v = term.coef;
                for (size_t k = 0; k < term.powers.size(); ++k)
                    for (int e = 0; e < term.powers[k]; ++e)
                        v *= x(static_cast<Index>(k));
                acc += v;
            }
            if (sources[i])
                acc += sources[i]->value(t);
            out(static_cast<Index>(i)) = acc;
        }
        return out;
    }

    Matrix jacobian(const Vector& x) const {
        const Index n = static_cast<Index>(components.size());
        Matrix J = Matrix::Zero(n, n);
        for (Index i = 0; i < n; ++i) {
            for (const auto& term : components[i]) {
                for (Index jcol = 0; jcol < n; ++jcol) {
                    int pj = term.powers[jcol];
                    if (pj == 0)
                        continue;
                    double v = term.coef * pj;
                    for (Index k = 0; k < n; ++k) {
                        int e = term.powers[k] - (k == jcol ? 1 : 0);
                        for (int q = 0; q < e; ++q)
                            v *= x(k);
                    }
                    J(i, jcol) += v;
                }
            }
        }
        return J;
    }
};

} // namespace

Model parse_model(const json& j) {
    if (!j.is_object())
        throw ConfigError("config: 'model' section missing or not an object");
    if (j.contains("builtin")) {
        std::string name = j.at("builtin").get<std::string>();
        if (name != "filter")
            throw ConfigError("config: unknown builtin model '" + name + "'");
        if (!j.contains("params"))
            throw ConfigError("config: builtin model requires 'params'");
        circuit::CircuitParams p = parse_circuit_params(j.at("params"));
        return Model{circuit::build_filter_dae(p), p};
    }
    if (!j.contains("matrices"))
        throw ConfigError("config: model needs either 'builtin' or 'matrices'");
    Matrix A = parse_matrix(j.at("matrices").at("A"), "model.matrices.A");
    Matrix B = parse_matrix(j.at("matrices").at("B"), "model.matrices.B");
    if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows())
        throw ConfigError("config: A and B must be square and the same size");
    const Index n = A.rows();

    PolynomialRhs rhs;
    rhs.components.resize(n);
    rhs.sources.resize(n);
    if (j.contains("f")) {
        const json& f = j.at("f");
        if (f.contains("terms")) {
            const json& terms = f.at("terms");
            if (!terms.is_array() || static_cast<Index>(terms.size()) != n)
                throw ConfigError("config: f.terms must have one entry per equation");
            for (Index i = 0; i < n; ++i) {
                for (const auto& tj : terms.at(i)) {
                    PolynomialRhs::Term term;
                    term.coef = require_number(tj, "coef");
                    const json& pw = tj.at("powers");
                    if (static_cast<Index>(pw.size()) != n)
                        throw ConfigError("config: monomial powers must have length n");
                    for (const auto& e : pw)
                        term.powers.push_back(e.get<int>());
                    rhs.components[i].push_back(std::move(term));
                }
            }
        }
        if (f.contains("sources")) {
            const json& srcs = f.at("sources");
            if (static_cast<Index>(srcs.size()) != n)
                throw ConfigError("config: f.sources must have one entry per equation");
            for (Index i = 0; i < n; ++i)
                if (!srcs.at(i).is_null())
                    rhs.sources[i] = parse_source(srcs.at(i));
        }
    }
    RhsFn fv = [rhs](double t, const Vector& x) { return rhs.value(t, x); };
    JacFn jv = [rhs](double, const Vector& x) { return rhs.jacobian(x); };
    return Model{SemilinearDAE(MatrixPencil(std::move(A), std::move(B)),
                               std::move(fv), std::move(jv)),
                 std::nullopt};
}

IntegrationOptions parse_integration(const json& j) {
    IntegrationOptions opts;
    if (!j.is_object())
        throw ConfigError("config: 'integration' section missing");
    opts.t_end = require_number(j, "t_end");
    opts.h_init = number_or(j, "h_init", opts.h_init);
    opts.h_min = number_or(j, "h_min", opts.h_min);
    opts.h_max = number_or(j, "h_max", opts.h_max);
    opts.rel_tol = number_or(j, "rel_tol", opts.rel_tol);
    opts.abs_tol = number_or(j, "abs_tol", opts.abs_tol);
    opts.escape_norm = number_or(j, "escape_norm", opts.escape_norm);
    opts.record_every = static_cast<int>(number_or(j, "record_every", 1));
    return opts;
}

namespace {

json trajectory_summary(const Trajectory& traj) {
    json s;
    s["status"] = status_name(traj.status);
    s["t_final"] = traj.times.back();
    s["samples"] = traj.times.size();
    s["max_norm"] = max_norm(traj);
    double cmax = 0.0, dmax = 0.0;
    for (double c : traj.constraint_residuals)
        cmax = std::max(cmax, c);
    for (double d : traj.dae_residuals)
        dmax = std::max(dmax, d);
    s["constraint_residual_max"] = cmax;
    s["dae_residual_max"] = dmax;
    s["steps"] = {{"accepted", traj.stats.accepted},
                  {"rejected", traj.stats.rejected},
                  {"min_h", traj.stats.min_h},
                  {"max_h", traj.stats.max_h},
                  {"last_h", traj.stats.last_h}};
    if (traj.escape)
        s["escape"] = {{"T_estimate", traj.escape->T_estimate},
                       {"T_lower", traj.escape->T_lower},
                       {"T_upper", traj.escape->T_upper},
                       {"fit_exponent", traj.escape->fit_exponent},
                       {"fit_residual", traj.escape->fit_residual}};
    if (traj.failure)
        s["failure"] = {{"t_fail", traj.failure->t_fail},
                        {"reason", traj.failure->reason}};
    return s;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out)
        throw Error("cannot open " + path.string());
    out << text;
}

void write_json(const fs::path& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

// exit code 2 when a pinned expectation is missed
int apply_expectation(const json& cfg, const Trajectory& traj, json& summary,
                      std::string& message) {
    if (!cfg.contains("expect"))
        return 0;
    const json& e = cfg.at("expect");
    bool ok = true;
    std::ostringstream why;
    if (e.contains("status")) {
        std::string want = e.at("status").get<std::string>();
        if (want != status_name(traj.status)) {
            ok = false;
            why << "status " << status_name(traj.status) << " != expected " << want
                << "; ";
        }
    }
    if (e.contains("max_norm")) {
        double want = e.at("max_norm").get<double>();
        double rtol = number_or(e, "max_norm_rtol", 0.01);
        double got = max_norm(traj);
        if (std::abs(got - want) > rtol * std::abs(want)) {
            ok = false;
            why << "max_norm " << got << " not within " << rtol << " of " << want
                << "; ";
        }
    }
    if (e.contains("escape_time")) {
        double want = e.at("escape_time").get<double>();
        double rtol = number_or(e, "escape_time_rtol", 0.05);
        if (!traj.escape) {
            ok = false;
            why << "no escape detected but escape_time expected; ";
        } else if (std::abs(traj.escape->T_estimate - want) > rtol * std::abs(want)) {
            ok = false;
            why << "escape T " << traj.escape->T_estimate << " not within " << rtol
                << " of " << want << "; ";
        }
    }
    summary["expect_ok"] = ok;
    if (!ok) {
        message = why.str();
        return 2;
    }
    return 0;
}

json witness_to_json(const Witness& w) {
    return {{"t", w.t},
            {"x", vector_to_json(w.x)},
            {"lhs", w.lhs},
            {"rhs", w.rhs},
            {"detail", w.detail}};
}

json report_to_json(const CertificateReport& rep) {
    json out;
    out["verdict"] = to_string(rep.verdict);
    if (rep.alpha_calibrated)
        out["alpha_calibrated"] = *rep.alpha_calibrated;
    json entries = json::array();
    for (const auto& e : rep.entries) {
        json je = {{"id", e.id},
                   {"samples", e.samples},
                   {"pass", e.pass},
                   {"violation", e.violation},
                   {"worst_margin", e.worst_margin},
                   {"note", e.note}};
        if (e.witness)
            je["witness"] = witness_to_json(*e.witness);
        entries.push_back(je);
    }
    out["entries"] = entries;
    return out;
}

std::string report_to_text(const CertificateReport& rep) {
    std::ostringstream out;
    out << "verdict: " << to_string(rep.verdict) << "\n";
    if (rep.alpha_calibrated)
        out << "alpha calibrated: " << *rep.alpha_calibrated << "\n";
    for (const auto& e : rep.entries) {
        out << (e.pass ? "PASS " : "FAIL ") << e.id << "  samples=" << e.samples
            << "  worst_margin=" << e.worst_margin;
        if (!e.note.empty())
            out << "  (" << e.note << ")";
        out << "\n";
        if (e.witness)
            out << "     witness: t=" << e.witness->t << " lhs=" << e.witness->lhs
                << " rhs=" << e.witness->rhs << " " << e.witness->detail << "\n";
    }
    return out.str();
}

SamplerSpec parse_sampler(const json& cert, const Model& model, unsigned seed) {
    SamplerSpec spec;
    spec.seed = seed;
    if (cert.contains("sampler")) {
        const json& s = cert.at("sampler");
        spec.count = static_cast<long>(number_or(s, "count", 10000));
        if (s.contains("seed"))
            spec.seed = s.at("seed").get<unsigned>();
        if (s.contains("t_box")) {
            spec.t_box[0] = s.at("t_box").at(0).get<double>();
            spec.t_box[1] = s.at("t_box").at(1).get<double>();
        }
        if (s.contains("z_box"))
            for (const auto& b : s.at("z_box"))
                spec.z_box.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
    }
    if (spec.z_box.empty())
        spec.z_box.assign(model.dae.dim_z(), {-50.0, 50.0});
    if (static_cast<Index>(spec.z_box.size()) != model.dae.dim_z())
        throw ConfigError("config: certificate.sampler.z_box must have one interval "
                          "per differential coordinate");
    return spec;
}

Matrix parse_h(const json& cert, const Model& model, bool instability) {
    if (!cert.contains("H") || cert.at("H").is_string()) {
        std::string which =
            cert.contains("H") ? cert.at("H").get<std::string>() : "preset";
        if (which != "preset")
            throw ConfigError("config: certificate.H must be a matrix or \"preset\"");
        if (!model.params)
            throw ConfigError("config: preset H requires the builtin filter model");
        auto presets = circuit::stability_presets(*model.params);
        return instability ? presets.H_instability : presets.H_stability;
    }
    return parse_matrix(cert.at("H"), "certificate.H");
}

ComparisonFunction parse_comparison(const json& cert, bool instability) {
    if (!cert.contains("comparison"))
        return instability ? ComparisonFunction::power_calibrated(1.5)
                           : ComparisonFunction::linear(1.0);
    const json& c = cert.at("comparison");
    std::string kind = c.at("kind").get<std::string>();
    if (kind == "linear")
        return ComparisonFunction::linear(number_or(c, "alpha", 1.0));
    if (kind == "power") {
        double alpha = number_or(c, "alpha", 0.0);
        double p = require_number(c, "p");
        return alpha > 0.0 ? ComparisonFunction::power(alpha, p)
                           : ComparisonFunction::power_calibrated(p);
    }
    if (kind == "log_linear")
        return ComparisonFunction::log_linear(number_or(c, "alpha", 1.0));
    throw ConfigError("config: unknown comparison kind '" + kind + "'");
}

GaugeFunction parse_gauge(const json& cert, const Model& model, bool instability) {
    if (!cert.contains("gauge")) {
        if (instability)
            return GaugeFunction::constant(1.0);
        if (model.params) {
            auto presets = circuit::stability_presets(*model.params);
            return presets.k_stability;
        }
        return GaugeFunction::constant(1.0);
    }
    const json& g = cert.at("gauge");
    std::string kind = g.at("kind").get<std::string>();
    GaugeFunction::IntegralDecl decl = GaugeFunction::IntegralDecl::Unknown;
    if (g.contains("integral")) {
        std::string s = g.at("integral").get<std::string>();
        if (s == "finite")
            decl = GaugeFunction::IntegralDecl::Finite;
        else if (s == "divergent")
            decl = GaugeFunction::IntegralDecl::Divergent;
        else if (s != "unknown")
            throw ConfigError("config: gauge.integral must be finite|divergent|unknown");
    }
    if (kind == "constant") {
        double v = require_number(g, "value");
        GaugeFunction out = GaugeFunction::constant(v);
        if (g.contains("integral"))
            out.integral_decl = decl;
        return out;
    }
    if (kind == "affine_abs_source") {
        if (!model.params)
            throw ConfigError("config: affine_abs_source gauge requires the builtin "
                              "filter model");
        double c0 = number_or(g, "c0", 1.0);
        double c1 = number_or(g, "c1", 1.0);
        circuit::SourceSpec src = model.params->source;
        return GaugeFunction::of(
            [src, c0, c1](double t) { return c0 + c1 * std::abs(src.value(t)); },
            decl);
    }
    throw ConfigError("config: unknown gauge kind '" + kind + "'");
}

GridSpec solvability_grid(const SamplerSpec& sampler) {
    GridSpec grid;
    grid.t_box = sampler.t_box;
    grid.t_count = 5;
    grid.z_box = sampler.z_box;
    grid.z_counts.assign(sampler.z_box.size(), 7);
    return grid;
}

int run_decompose(const Model& model, const json&, const fs::path& out) {
    auto dec = model.dae.dec();
    auto report = verify_decomposition(model.dae.pencil(), dec, 1e-10);
    json out_json;
    out_json["a"] = dec.a;
    out_json["d"] = dec.d;
    out_json["P1"] = matrix_to_json(dec.P1);
    out_json["P2"] = matrix_to_json(dec.P2);
    out_json["Q1"] = matrix_to_json(dec.Q1);
    out_json["Q2"] = matrix_to_json(dec.Q2);
    out_json["G_inv"] = matrix_to_json(dec.G_inv);
    out_json["basis_X1"] = matrix_to_json(dec.basis_X1);
    out_json["basis_X2"] = matrix_to_json(dec.basis_X2);
    json probe;
    probe["magnitudes"] = dec.resolvent_bound_report.magnitudes;
    probe["norms"] = dec.resolvent_bound_report.norms;
    probe["growth_ratio"] = dec.resolvent_bound_report.growth_ratio;
    out_json["resolvent"] = probe;
    json residuals = json::array();
    for (const auto& item : report.items)
        residuals.push_back({{"id", item.id}, {"residual", item.residual}});
    out_json["identity_residuals"] = residuals;
    out_json["max_residual"] = report.max_residual;
    out_json["pass"] = report.pass;
    write_json(out / "decomposition.json", out_json);
    return 0;
}

int run_simulate(const Model& model, const json& cfg, const fs::path& out,
                 std::string& message) {
    if (!cfg.contains("initial"))
        throw ConfigError("config: simulate requires an 'initial' section");
    const json& init = cfg.at("initial");
    double t0 = number_or(init, "t0", 0.0);
    Vector x0;
    if (init.contains("x0")) {
        x0 = parse_vector(init.at("x0"), "initial.x0");
        if (x0.size() != model.dae.n())
            throw ConfigError("config: initial.x0 has wrong dimension");
    } else if (init.contains("z0")) {
        Vector z0 = parse_vector(init.at("z0"), "initial.z0");
        if (z0.size() != model.dae.dim_z())
            throw ConfigError("config: initial.z0 has wrong dimension");
        Vector u0 = model.dae.solve_constraint(t0, z0,
                                               Vector::Zero(model.dae.dim_u()));
        x0 = model.dae.assemble(z0, u0);
    } else {
        throw ConfigError("config: initial needs 'x0' or 'z0'");
    }
    if (!cfg.contains("integration"))
        throw ConfigError("config: simulate requires an 'integration' section");
    IntegrationOptions opts = parse_integration(cfg.at("integration"));

    Trajectory traj = integrate(model.dae, t0, x0, opts);
    write_trajectory_csv((out / "trajectory.csv").string(), traj);
    json summary = trajectory_summary(traj);
    int code = apply_expectation(cfg, traj, summary, message);
    write_json(out / "summary.json", summary);

    const Index n = model.dae.n();
    std::ostringstream gp;
    gp << "# gnuplot script for trajectory.csv\n";
    gp << "set datafile separator ','\n";
    gp << "set key autotitle columnhead\n";
    gp << "plot";
    for (Index i = 0; i < n; ++i)
        gp << (i ? "," : "") << " 'trajectory.csv' using 1:" << (i + 2)
           << " with lines";
    gp << "\n";
    write_text(out / "trajectory.gp", gp.str());
    if (traj.status == TrajectoryStatus::SolverFailure && code == 0) {
        message = "solver failure at t=" + std::to_string(traj.failure->t_fail) +
                  ": " + traj.failure->reason;
        return 1;
    }
    return code;
}

int run_certificate(const Model& model, const json& cfg, const fs::path& out,
                    bool instability, unsigned seed, std::string& message) {
    json cert = cfg.contains("certificate") ? cfg.at("certificate") : json::object();
    SamplerSpec sampler = parse_sampler(cert, model, seed);
    Matrix H = parse_h(cert, model, instability);
    ComparisonFunction U = parse_comparison(cert, instability);
    GaugeFunction k = parse_gauge(cert, model, instability);

    CertificateReport report;
    if (instability) {
        if (!model.params)
            throw ConfigError("config: check-instability requires the builtin "
                              "filter model (the escape region is built in)");
        RegionSpec region = circuit::instability_region(*model.params);
        report = check_instability_conditions(model.dae, H, k, U, region, sampler);
    } else {
        double R = cert.contains("radius") ? cert.at("radius").get<double>() : 10.0;
        if (!cert.contains("radius") && model.params)
            R = circuit::stability_presets(*model.params).R_stability;
        report = check_stability_inequality(model.dae, H, k, U, R, sampler);
    }
    // the full hypothesis set also needs constraint solvability and basis
    // invertibility; prepend those entries
    ConditionEntry solvable =
        check_constraint_solvability(model.dae, solvability_grid(sampler));
    HullSamplerSpec hulls;
    hulls.seed = sampler.seed;
    hulls.t_box = sampler.t_box;
    hulls.z_box = sampler.z_box;
    hulls.count = std::max<long>(sampler.count / 20, 50);
    ConditionEntry basis = check_basis_invertibility(model.dae, hulls);
    report.entries.insert(report.entries.begin(), basis);
    report.entries.insert(report.entries.begin(), solvable);
    report.finalize();

    json out_json = report_to_json(report);
    out_json["sampler"] = {{"count", sampler.count},
                           {"seed", sampler.seed},
                           {"t_box", sampler.t_box},
                           {"z_box", sampler.z_box}};
    out_json["mode"] = instability ? "check-instability" : "check-stability";
    write_json(out / "certificate.json", out_json);
    write_text(out / "certificate.txt", report_to_text(report));
    if (report.verdict == Verdict::Falsified) {
        message = "certificate falsified";
        return 2;
    }
    return 0;
}

int run_sweep(const json& cfg, const fs::path& out, std::string& message);

int dispatch(const json& cfg, const fs::path& out, const Overrides& overrides,
             std::string& message) {
    std::string mode = cfg.at("mode").get<std::string>();
    unsigned seed = overrides.seed
                        ? *overrides.seed
                        : static_cast<unsigned>(number_or(cfg, "seed", 0));
    if (mode == "sweep")
        return run_sweep(cfg, out, message);
    Model model = parse_model(cfg.contains("model") ? cfg.at("model") : json());
    if (mode == "decompose")
        return run_decompose(model, cfg, out);
    if (mode == "simulate")
        return run_simulate(model, cfg, out, message);
    if (mode == "check-stability")
        return run_certificate(model, cfg, out, false, seed, message);
    if (mode == "check-instability")
        return run_certificate(model, cfg, out, true, seed, message);
    throw ConfigError("config: unknown mode '" + mode + "'");
}

int run_sweep(const json& cfg, const fs::path& out, std::string& message) {
    if (!cfg.contains("sweep"))
        throw ConfigError("config: sweep mode requires a 'sweep' section");
    const json& sw = cfg.at("sweep");
    if (!sw.contains("pointer") || !sw.contains("values"))
        throw ConfigError("config: sweep needs 'pointer' and 'values'");
    std::string pointer = sw.at("pointer").get<std::string>();
    const json& values = sw.at("values");

    struct Entry {
        json value;
        std::string dir;
        int code;
        std::string status;
    };
    std::vector<std::future<Entry>> futures;
    for (size_t i = 0; i < values.size(); ++i) {
        json child = cfg;
        child["mode"] = "simulate";
        child.erase("sweep");
        child.erase("expect"); // pins do not transfer across swept values
        child[json::json_pointer(pointer)] = values.at(i);
        fs::path child_dir = out / ("run_" + std::to_string(i));
        futures.push_back(std::async(std::launch::async, [child, child_dir,
                                                          values, i]() {
            Entry e;
            e.value = values.at(i);
            e.dir = child_dir.filename().string();
            fs::create_directories(child_dir);
            std::string msg;
            try {
                Model model = parse_model(child.at("model"));
                e.code = run_simulate(model, child, child_dir, msg);
                std::ifstream in(child_dir / "summary.json");
                json summary = json::parse(in);
                e.status = summary.at("status").get<std::string>();
            } catch (const std::exception& ex) {
                e.code = 1;
                e.status = std::string("error: ") + ex.what();
            }
            return e;
        }));
    }
    json index = json::array();
    int worst = 0;
    for (auto& fut : futures) {
        Entry e = fut.get();
        index.push_back({{"value", e.value},
                         {"dir", e.dir},
                         {"exit_code", e.code},
                         {"status", e.status}});
        worst = std::max(worst, e.code);
    }
    json idx;
    idx["pointer"] = pointer;
    idx["runs"] = index;
    write_json(out / "index.json", idx);
    if (worst)
        message = "one or more sweep runs failed or missed expectations";
    return worst;
}

} // namespace

RunOutcome run(json config, const Overrides& overrides) {
    RunOutcome outcome;
    if (overrides.mode)
        config["mode"] = *overrides.mode;
    if (!config.is_object() || !config.contains("mode"))
        throw ConfigError("config: document must be an object with a 'mode' field");
    if (overrides.t_end) {
        if (!config.contains("integration"))
            config["integration"] = json::object();
        config["integration"]["t_end"] = *overrides.t_end;
    }
    if (overrides.seed) {
        config["seed"] = *overrides.seed;
        // the flag wins over a seed pinned inside the sampler section
        if (config.contains("certificate") &&
            config["certificate"].contains("sampler"))
            config["certificate"]["sampler"]["seed"] = *overrides.seed;
    }
    std::string out_dir = overrides.out_dir.value_or(
        config.contains("output") && config.at("output").contains("directory")
            ? config.at("output").at("directory").get<std::string>()
            : "out");
    if (config.contains("output") && config.at("output").contains("record_every") &&
        config.contains("integration") &&
        !config.at("integration").contains("record_every"))
        config["integration"]["record_every"] = config["output"]["record_every"];
    outcome.out_dir = out_dir;
    fs::create_directories(outcome.out_dir);
    outcome.exit_code = dispatch(config, outcome.out_dir, overrides, outcome.message);
    return outcome;
}

RunOutcome run_file(const std::string& path, const Overrides& overrides) {
    RunOutcome outcome;
    try {
        std::ifstream in(path);
        if (!in) {
            outcome.exit_code = 1;
            outcome.message = "cannot open config file " + path;
            return outcome;
        }
        json config = json::parse(in, nullptr, /*allow_exceptions=*/true,
                                  /*ignore_comments=*/true);
        return run(std::move(config), overrides);
    } catch (const json::exception& e) {
        outcome.exit_code = 1;
        outcome.message = std::string("config parse error in ") + path + ": " +
                          e.what();
    } catch (const std::exception& e) {
        outcome.exit_code = 1;
        outcome.message = e.what();
    }
    return outcome;
}

} // namespace cli
} // namespace daestab
