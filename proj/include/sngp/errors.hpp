#pragma once

#include <stdexcept>
#include <string>

namespace sngp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Errors that stem from numerical breakdown rather than bad input.
class NumericalError : public Error {
public:
    using Error::Error;
};

#define SNGP_DEFINE_ERROR(Name, Base)   \
    class Name : public Base {          \
    public:                             \
        using Base::Base;               \
    }

SNGP_DEFINE_ERROR(ShapeMismatch, Error);
SNGP_DEFINE_ERROR(InvalidRange, Error);
SNGP_DEFINE_ERROR(DegenerateFeature, Error);
SNGP_DEFINE_ERROR(AlreadyFinalized, Error);
SNGP_DEFINE_ERROR(NotFinalized, Error);
SNGP_DEFINE_ERROR(EmptyEnsemble, Error);
SNGP_DEFINE_ERROR(EmptySet, Error);
SNGP_DEFINE_ERROR(NotOnSimplex, Error);
SNGP_DEFINE_ERROR(ConfigError, Error);
SNGP_DEFINE_ERROR(ArtifactVersionMismatch, Error);
SNGP_DEFINE_ERROR(DimensionUnsupported, Error);

SNGP_DEFINE_ERROR(NotPositiveDefinite, NumericalError);
SNGP_DEFINE_ERROR(SingularCovariance, NumericalError);
SNGP_DEFINE_ERROR(ZeroMatrix, NumericalError);
SNGP_DEFINE_ERROR(DivergenceDetected, NumericalError);

#undef SNGP_DEFINE_ERROR

}  // namespace sngp
