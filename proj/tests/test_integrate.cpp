#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "daestab/integrate.hpp"
#include "helpers.hpp"

using namespace daestab;
using namespace testing_fixtures;

namespace {

IntegrationOptions fixed_step(double h, double t_end) {
    IntegrationOptions o;
    o.t_end = t_end;
    o.h_init = h;
    o.h_min = h;
    o.h_max = h;
    o.rel_tol = 1e10; // error test never rejects; the step bounds pin h
    o.abs_tol = 1e10;
    return o;
}

double max_dae_residual(const Trajectory& t) {
    return *std::max_element(t.dae_residuals.begin(), t.dae_residuals.end());
}

} // namespace

TEST_CASE("scalar sanity DAE hits exp(-1) within tolerance") {
    SemilinearDAE dae = scalar_sanity_dae();
    IntegrationOptions o;
    o.t_end = 1.0;
    o.rel_tol = 1e-8;
    o.abs_tol = 1e-10;
    Trajectory t = integrate(dae, 0.0, Vector::Ones(1), o);
    CHECK(t.status == TrajectoryStatus::Completed);
    CHECK(t.states.back()(0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-7));
}

TEST_CASE("max_norm basics") {
    SemilinearDAE dae = scalar_sanity_dae();
    Trajectory t = integrate(dae, 0.0, Vector::Ones(1), fixed_step(0.1, 1.0));
    CHECK(max_norm(t) == doctest::Approx(1.0)); // monotone decay from 1

    Trajectory empty;
    CHECK_THROWS_AS(max_norm(empty), Error);
}

TEST_CASE("inconsistent initial values are rejected") {
    SemilinearDAE dae = circuit::build_filter_dae(escape_set1());
    Vector bad(3);
    bad << 2.45, -20.625125, 0.0; // algebraic part off the manifold
    IntegrationOptions o;
    o.t_end = 1.0;
    CHECK_THROWS_AS(integrate(dae, 0.0, bad, o), InconsistentInitialValueError);
}

TEST_CASE("bounded filter run completes with preserved constraint") {
    SemilinearDAE dae = circuit::build_filter_dae(bounded_set1());
    IntegrationOptions o;
    o.t_end = 50.0;
    o.rel_tol = 1e-8;
    o.abs_tol = 1e-10;
    Trajectory t = integrate(dae, 0.0, Vector::Zero(3), o);
    CHECK(t.status == TrajectoryStatus::Completed);
    CHECK(t.times.back() == doctest::Approx(50.0));
    for (size_t i = 0; i < t.constraint_residuals.size(); ++i) {
        double z_norm = dae.project_z(t.states[i]).norm();
        CHECK(t.constraint_residuals[i] <= 10.0 * 1e-10 * (1.0 + z_norm));
    }
    // golden regression: reference value frozen from a rel_tol=1e-10 run
    CHECK(max_norm(t) == doctest::Approx(0.058977).epsilon(0.01));
}

TEST_CASE("escape run detects finite escape with a tight bracket") {
    SemilinearDAE dae = circuit::build_filter_dae(escape_set1());
    IntegrationOptions o;
    o.t_end = 50.0;
    o.rel_tol = 1e-8;
    o.abs_tol = 1e-10;
    Trajectory t = integrate(dae, 0.0, escape_x0_set1(), o);
    REQUIRE(t.status == TrajectoryStatus::EscapeDetected);
    REQUIRE(t.escape.has_value());
    CHECK(t.states.back().norm() >= o.escape_norm);
    CHECK(t.escape->T_lower < t.escape->T_upper);
    CHECK(t.escape->T_upper - t.escape->T_lower <= t.stats.last_h * (1.0 + 1e-9));
    CHECK(t.escape->T_estimate >= t.escape->T_lower);

    // the escape time is a property of the equation, not the tolerance
    IntegrationOptions tight = o;
    tight.rel_tol = 1e-10;
    tight.abs_tol = 1e-12;
    Trajectory t2 = integrate(dae, 0.0, escape_x0_set1(), tight);
    REQUIRE(t2.status == TrajectoryStatus::EscapeDetected);
    double rel = std::abs(t.escape->T_estimate - t2.escape->T_estimate) /
                 t2.escape->T_estimate;
    CHECK(rel <= 0.05);
}

TEST_CASE("regime classification is stable across tolerances") {
    SemilinearDAE bounded = circuit::build_filter_dae(bounded_set1());
    SemilinearDAE escaping = circuit::build_filter_dae(escape_set1());
    for (double rel : {1e-6, 1e-8, 1e-10}) {
        IntegrationOptions o;
        o.t_end = 20.0;
        o.rel_tol = rel;
        o.abs_tol = rel * 1e-2;
        CHECK(integrate(bounded, 0.0, Vector::Zero(3), o).status ==
              TrajectoryStatus::Completed);
        CHECK(integrate(escaping, 0.0, escape_x0_set1(), o).status ==
              TrajectoryStatus::EscapeDetected);
    }
}

TEST_CASE("fixed-step global error converges at the design order") {
    SemilinearDAE dae = scalar_sanity_dae();
    double prev = 0.0;
    for (double h : {0.1, 0.05, 0.025}) {
        Trajectory t = integrate(dae, 0.0, Vector::Ones(1), fixed_step(h, 1.0));
        double err = std::abs(t.states.back()(0) - std::exp(-1.0));
        if (prev > 0.0) {
            double order = std::log2(prev / err);
            CHECK(order >= 4.5);
        }
        prev = err;
    }
}

TEST_CASE("finite-difference DAE residual converges at the design order") {
    // scalar sanity DAE
    {
        SemilinearDAE dae = scalar_sanity_dae();
        double prev = 0.0;
        for (double h : {0.1, 0.05, 0.025}) {
            Trajectory t = integrate(dae, 0.0, Vector::Ones(1), fixed_step(h, 1.0));
            double res = max_dae_residual(t);
            if (prev > 0.0)
                CHECK(std::log2(prev / res) >= 4.5);
            prev = res;
        }
    }
    // filter circuit on [0, 1]
    {
        SemilinearDAE dae = circuit::build_filter_dae(bounded_set1());
        double prev = 0.0;
        for (double h : {0.025, 0.0125, 0.00625}) {
            Trajectory t = integrate(dae, 0.0, Vector::Zero(3), fixed_step(h, 1.0));
            double res = max_dae_residual(t);
            if (prev > 0.0)
                CHECK(std::log2(prev / res) >= 4.5);
            prev = res;
        }
    }
}

TEST_CASE("a constraint fold mid-run surfaces as SolverFailure") {
    // A = diag(1,0), B = I, f = (0, x2^2 + t): the algebraic branch
    // x2 = x2^2 + t folds at t = 1/4, after which no root exists
    Matrix A = Matrix::Zero(2, 2);
    A(0, 0) = 1.0;
    SemilinearDAE dae(
        MatrixPencil(A, Matrix::Identity(2, 2)),
        [](double t, const Vector& x) {
            Vector f(2);
            f << 0.0, x(1) * x(1) + t;
            return f;
        },
        [](double, const Vector& x) {
            Matrix J = Matrix::Zero(2, 2);
            J(1, 1) = 2.0 * x(1);
            return J;
        });
    Vector x0(2);
    x0 << 1.0, 0.0; // on the lower branch at t = 0
    IntegrationOptions o;
    o.t_end = 1.0;
    o.h_min = 1e-10;
    Trajectory t = integrate(dae, 0.0, x0, o);
    REQUIRE(t.status == TrajectoryStatus::SolverFailure);
    REQUIRE(t.failure.has_value());
    CHECK(t.failure->t_fail >= 0.2);
    CHECK(t.failure->t_fail <= 0.3);
}

TEST_CASE("record_every decimates output but keeps endpoints") {
    SemilinearDAE dae = circuit::build_filter_dae(bounded_set1());
    IntegrationOptions o;
    o.t_end = 10.0;
    o.record_every = 7;
    Trajectory t = integrate(dae, 0.0, Vector::Zero(3), o);
    CHECK(t.times.front() == 0.0);
    CHECK(t.times.back() == doctest::Approx(10.0));
    CHECK(static_cast<long>(t.times.size()) <= t.stats.accepted / 7 + 2);
    for (size_t i = 1; i < t.times.size(); ++i)
        CHECK(t.times[i] > t.times[i - 1]);
}

TEST_CASE("Fornberg weights reproduce derivatives of polynomials") {
    std::vector<double> nodes = {0.0, 0.13, 0.31, 0.42, 0.58, 0.71};
    double x0 = 0.31;
    auto w = fd_weights_first_derivative(nodes, x0);
    // exact for polynomials up to degree 5: d/dx x^k at x0 = k x0^(k-1)
    for (int k = 0; k <= 5; ++k) {
        double acc = 0.0;
        for (size_t j = 0; j < nodes.size(); ++j)
            acc += w[j] * std::pow(nodes[j], k);
        double expect = (k == 0) ? 0.0 : k * std::pow(x0, k - 1);
        CHECK(acc == doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("integration options are validated") {
    SemilinearDAE dae = scalar_sanity_dae();
    IntegrationOptions o;
    o.t_end = 0.0; // not past t0
    CHECK_THROWS_AS(integrate(dae, 0.0, Vector::Ones(1), o), Error);
    o.t_end = 1.0;
    o.rel_tol = -1.0;
    CHECK_THROWS_AS(integrate(dae, 0.0, Vector::Ones(1), o), Error);
    o.rel_tol = 1e-8;
    o.h_min = 0.5;
    o.h_max = 0.1;
    CHECK_THROWS_AS(integrate(dae, 0.0, Vector::Ones(1), o), Error);
}
