#pragma once

#include <stdexcept>
#include <string>

namespace qb {

// Every failure the library can raise, grouped by how the CLI reports it:
// schema errors exit 2, violated mathematical hypotheses exit 3, numerical
// failures exit 4.
enum class ErrorCode {
    // input / schema
    SchemaError,
    // mathematical hypotheses
    SingularLeadingMatrix,
    PoleAtZeroOrInfinity,
    Resonant,
    ResonantSpectrum,
    ResonantExponents,
    RFamilyHypothesis,
    FamilyNotClosed,
    AssumptionViolated,
    AlphaOnThetaSpiral,
    // numerics
    SingularInput,
    IllConditioned,
    NotUnipotent,
    QTooCloseToOne,
    ZeroArgument,
    OnPoleSpiral,
    OnSpiralRay,
    PropagationThroughPole,
    IllConditionedInversion,
    NoConvergence,
    DegenerateFit,
    PathTooCloseToSingularity,
    UnsupportedSpiralGeometry,
    Overflow,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const { return code_; }

    // CLI exit status class for this error.
    int exitCode() const {
        switch (code_) {
        case ErrorCode::SchemaError:
            return 2;
        case ErrorCode::SingularLeadingMatrix:
        case ErrorCode::PoleAtZeroOrInfinity:
        case ErrorCode::Resonant:
        case ErrorCode::ResonantSpectrum:
        case ErrorCode::ResonantExponents:
        case ErrorCode::RFamilyHypothesis:
        case ErrorCode::FamilyNotClosed:
        case ErrorCode::AssumptionViolated:
        case ErrorCode::AlphaOnThetaSpiral:
            return 3;
        default:
            return 4;
        }
    }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

} // namespace qb
