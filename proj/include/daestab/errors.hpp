#pragma once

#include <stdexcept>
#include <string>

namespace daestab {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// No invertible lambda0*A+B was found among the candidate shifts.
struct SingularPencilError : Error {
    using Error::Error;
};

/// The pencil is regular but not of index 1 (kernel(M) != kernel(M^2)
/// or the resolvent norm grows with |lambda|).
struct NotIndexOneError : Error {
    using Error::Error;
};

/// The auxiliary operator G = A + B*P2 is numerically singular.
struct IllConditionedError : Error {
    using Error::Error;
};

/// Newton iteration on the algebraic constraint did not converge.
struct NoConvergenceError : Error {
    using Error::Error;
};

/// The constraint Jacobian dF/du lost rank at an iterate; this signals a
/// basis-invertibility violation at that point.
struct SingularJacobianError : Error {
    using Error::Error;
};

struct InconsistentInitialValueError : Error {
    using Error::Error;
};

/// H is not symmetric positive definite on the differential subspace.
struct InvalidHError : Error {
    using Error::Error;
};

/// The candidate invariant region contains the origin of X1.
struct InvalidRegionError : Error {
    using Error::Error;
};

/// sup|e(t)| is infinite, so the instability region is undefined.
struct UnboundedSourceError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

} // namespace daestab
