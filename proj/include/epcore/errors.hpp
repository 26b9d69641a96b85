#pragma once

#include <stdexcept>
#include <string>

namespace epcore {

enum class ErrorCode {
    invalid_argument,
    invalid_region,
    eig_failure,
    near_defective,
    not_defective,
    crossing_not_ep,
    nondiagonalizable_crossing,
    degenerate_family,
    pole_hit,
    no_convergence,
    order_mismatch,
    cluster_ambiguous,
    tracking_failed,
    bad_fit,
    fit_failed,
    not_isolated,
    broken_phase,
    metric_blowup,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const { return code_; }

    /// Offending level index where applicable (NearDefective and friends).
    int index = -1;
    /// Attached magnitude, e.g. the condition number for MetricBlowup.
    double detail = 0.0;

private:
    ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "InvalidArgument";
        case ErrorCode::invalid_region: return "InvalidRegion";
        case ErrorCode::eig_failure: return "EigFailure";
        case ErrorCode::near_defective: return "NearDefective";
        case ErrorCode::not_defective: return "NotDefective";
        case ErrorCode::crossing_not_ep: return "CrossingNotEP";
        case ErrorCode::nondiagonalizable_crossing: return "NonDiagonalizableCrossing";
        case ErrorCode::degenerate_family: return "DegenerateFamily";
        case ErrorCode::pole_hit: return "PoleHit";
        case ErrorCode::no_convergence: return "NoConvergence";
        case ErrorCode::order_mismatch: return "OrderMismatch";
        case ErrorCode::cluster_ambiguous: return "ClusterAmbiguous";
        case ErrorCode::tracking_failed: return "TrackingFailed";
        case ErrorCode::bad_fit: return "BadFit";
        case ErrorCode::fit_failed: return "FitFailed";
        case ErrorCode::not_isolated: return "NotIsolated";
        case ErrorCode::broken_phase: return "BrokenPhase";
        case ErrorCode::metric_blowup: return "MetricBlowup";
    }
    return "UnknownError";
}

} // namespace epcore
