#pragma once

// Shared fixtures for the test suites: the filter parameter sets used in
// the experiments, the scalar sanity DAE, and test-side oracles that stay
// independent of the library's solver paths.

#include <cmath>
#include <functional>

#include "daestab/circuit.hpp"
#include "daestab/dae.hpp"

namespace testing_fixtures {

using namespace daestab;
using circuit::CircuitParams;
using circuit::NonlinearitySpec;
using circuit::SourceSpec;

inline NonlinearitySpec pow_nl(double alpha, int m) {
    return NonlinearitySpec::odd_power(alpha, m);
}

// L=500 power family driven by a damped sine
inline CircuitParams bounded_set1() {
    CircuitParams p;
    p.L = 500;
    p.C = 0.5;
    p.r = 2;
    p.g = 0.2;
    p.phi0 = pow_nl(1, 2);
    p.phi = pow_nl(1, 2);
    p.psi = pow_nl(1, 2);
    p.h = pow_nl(1, 2);
    p.source = SourceSpec::damped_sine(100.0, 1.0, 5.0);
    return p;
}

// L=50 power family with a tiny conductance weight and r = 0.001
inline CircuitParams bounded_set2() {
    CircuitParams p;
    p.L = 50;
    p.C = 1;
    p.r = 0.001;
    p.g = 1;
    p.phi0 = pow_nl(1, 2);
    p.phi = pow_nl(1, 2);
    p.psi = pow_nl(1, 2);
    p.h = pow_nl(0.01, 2);
    p.source = SourceSpec::sinusoid(2.0, 1.0);
    return p;
}

// L=300 sine family, strong offset sinusoid drive
inline CircuitParams bounded_set3() {
    CircuitParams p;
    p.L = 300;
    p.C = 0.5;
    p.r = 2.6;
    p.g = 0.2;
    p.phi0 = pow_nl(0.5, 2);
    p.phi = NonlinearitySpec::sine(1.5);
    p.psi = NonlinearitySpec::sine(1.0);
    p.h = NonlinearitySpec::sine(3.0);
    p.source = SourceSpec::sinusoid(200.0, 0.5, 0.0, -0.2);
    return p;
}

// L=1 sine family with a power-decay drive
inline CircuitParams bounded_set4() {
    CircuitParams p;
    p.L = 1;
    p.C = 5;
    p.r = 1.51;
    p.g = 5;
    p.phi0 = pow_nl(1, 2);
    p.phi = NonlinearitySpec::sine(1.0);
    p.psi = NonlinearitySpec::sine(0.5);
    p.h = NonlinearitySpec::sine(1.0);
    p.source = SourceSpec::power_decay(1.0, 30.0, 2);
    return p;
}

// growing drives: e = -t^2 and e = (t-50)^3
inline CircuitParams growing_set1() {
    CircuitParams p;
    p.L = 1000;
    p.C = 0.5;
    p.r = 2;
    p.g = 0.3;
    p.phi0 = pow_nl(1, 2);
    p.phi = pow_nl(1, 2);
    p.psi = pow_nl(1, 2);
    p.h = pow_nl(1, 2);
    p.source = SourceSpec::power_growth(-1.0, 0.0, 2);
    return p;
}

inline CircuitParams growing_set2() {
    CircuitParams p;
    p.L = 100;
    p.C = 5;
    p.r = 3;
    p.g = 4;
    p.phi0 = pow_nl(1, 2);
    p.phi = NonlinearitySpec::sine(0.9);
    p.psi = NonlinearitySpec::sine(2.0);
    p.h = NonlinearitySpec::sine(5.0);
    p.source = SourceSpec::power_growth(1.0, -50.0, 3);
    return p;
}

// cubic nonlinearity sets with finite escape
inline CircuitParams escape_set1() {
    CircuitParams p;
    p.L = 10;
    p.C = 0.5;
    p.r = 2;
    p.g = 0.2;
    p.phi0 = NonlinearitySpec::neg_square();
    p.phi = NonlinearitySpec::cube();
    p.psi = NonlinearitySpec::cube();
    p.h = NonlinearitySpec::square();
    p.source = SourceSpec::sinusoid(2.0, 1.0);
    return p;
}

inline CircuitParams escape_set2() {
    CircuitParams p;
    p.L = 5;
    p.C = 0.5;
    p.r = 2;
    p.g = 0.5;
    p.phi0 = NonlinearitySpec::neg_square();
    p.phi = NonlinearitySpec::cube();
    p.psi = NonlinearitySpec::cube();
    p.h = NonlinearitySpec::square();
    p.source = SourceSpec::zero();
    return p;
}

inline Vector escape_x0_set1() {
    Vector x0(3);
    x0 << 2.45, -20.625125, 2.5;
    return x0;
}

inline Vector escape_x0_set2() {
    Vector x0(3);
    x0 << 1.1, -4.129, 1.2;
    return x0;
}

// n = 1, A = B = 1, f = 0: reduces to x' = -x
inline SemilinearDAE scalar_sanity_dae() {
    Matrix A(1, 1), B(1, 1);
    A << 1;
    B << 1;
    return SemilinearDAE(
        MatrixPencil(A, B), [](double, const Vector&) { return Vector::Zero(1); },
        [](double, const Vector&) { return Matrix::Zero(1, 1); });
}

// Bisection on [lo, hi]; requires a sign change. Independent root oracle
// for the scalar constraint equation r*u = psi(a-b-u) - phi(b+u).
inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     int iters = 200) {
    double flo = f(lo);
    for (int i = 0; i < iters; ++i) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (flo * fm <= 0.0)
            hi = mid;
        else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

// Scalar constraint-root oracle in the (a, b, u) variables of the filter:
// a = x1, b = -x2/r, u solves r*u = psi(a-b-u) - phi(b+u).
inline double constraint_root_oracle(const CircuitParams& p, double x1, double x2,
                                     double lo = -10.0, double hi = 10.0) {
    double a = x1, b = -x2 / p.r;
    auto g = [&](double u) {
        return p.r * u - p.psi.value(a - b - u) + p.phi.value(b + u);
    };
    return bisect(g, lo, hi);
}

} // namespace testing_fixtures
