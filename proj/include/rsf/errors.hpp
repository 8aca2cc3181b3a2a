#pragma once

#include <stdexcept>
#include <string>

namespace rsf {

struct FilterError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingularTransition : FilterError {
    using FilterError::FilterError;
};

struct NonPdCovariance : FilterError {
    using FilterError::FilterError;
};

struct DimensionMismatch : FilterError {
    using FilterError::FilterError;
};

struct RiskBoundViolated : FilterError {
    using FilterError::FilterError;
};

struct NonPdInnovationCov : FilterError {
    using FilterError::FilterError;
};

struct NonPdPosterior : FilterError {
    using FilterError::FilterError;
};

struct DegenerateLikelihood : FilterError {
    using FilterError::FilterError;
};

struct ConditionViolated : FilterError {
    using FilterError::FilterError;
};

}  // namespace rsf
