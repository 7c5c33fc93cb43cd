#pragma once

#include <stdexcept>
#include <string>

namespace gazekit {

// Every recoverable failure in the toolkit carries one of these codes so
// callers (and the CLI exit-code mapping) can react without string matching.
enum class errc {
    invalid_vector,
    degenerate_ray,
    degenerate_point,
    no_intersection,
    behind_camera,
    pose_failure,
    gimbal_degenerate,
    insufficient_data,
    ill_conditioned,
    estimator_unavailable,
    parse_error,
    io_error,
    config_error,
    numerical_failure,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::invalid_vector: return "invalid_vector";
        case errc::degenerate_ray: return "degenerate_ray";
        case errc::degenerate_point: return "degenerate_point";
        case errc::no_intersection: return "no_intersection";
        case errc::behind_camera: return "behind_camera";
        case errc::pose_failure: return "pose_failure";
        case errc::gimbal_degenerate: return "gimbal_degenerate";
        case errc::insufficient_data: return "insufficient_data";
        case errc::ill_conditioned: return "ill_conditioned";
        case errc::estimator_unavailable: return "estimator_unavailable";
        case errc::parse_error: return "parse_error";
        case errc::io_error: return "io_error";
        case errc::config_error: return "config_error";
        case errc::numerical_failure: return "numerical_failure";
    }
    return "unknown";
}

class GazeError : public std::runtime_error {
public:
    GazeError(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

}  // namespace gazekit
