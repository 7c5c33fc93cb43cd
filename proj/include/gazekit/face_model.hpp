#pragma once

#include <Eigen/Core>

#include <array>
#include <optional>

#include "gazekit/types.hpp"

namespace gazekit {

// Landmark ordering used throughout:
//   0 outer-left-eye, 1 inner-left-eye, 2 inner-right-eye, 3 outer-right-eye,
//   4 left-mouth, 5 right-mouth.
// "Left" is the subject's left as seen in the image (negative x in the head
// frame).
inline constexpr int kNumLandmarks = 6;

struct LandmarkSet {
    std::array<Vec2d, kNumLandmarks> points{};        // pixels
    std::optional<std::array<Vec2d, 2>> iris_centers;  // [left, right], pixels
    Timestamp timestamp = 0;

    void validate() const {
        for (const auto& p : points)
            if (!p.allFinite())
                throw GazeError(errc::config_error, "non-finite landmark");
        if (iris_centers)
            for (const auto& p : *iris_centers)
                if (!p.allFinite())
                    throw GazeError(errc::config_error, "non-finite iris center");
    }
};

// Generic rigid 3D face model, head frame (mm): x right, y down, z into the
// head. At identity pose the head frame coincides with the camera frame, so
// a face looking straight at the camera gazes along -z.
struct FaceModel3D {
    std::array<Vec3d, kNumLandmarks> points{};  // matches LandmarkSet order
    std::array<Vec3d, 2> eyeball_centers{};     // [left, right]
    double eyeball_radius = 12.0;               // mm

    Vec3d centroid() const {
        Vec3d c = Vec3d::Zero();
        for (const auto& p : points) c += p;
        return c / double(kNumLandmarks);
    }

    void validate() const;
};

// Default generic model: outer eye corners 90 mm apart on the y = 0 line,
// inner corners at +-21 mm, mouth corners 60 mm apart and 55 mm below the
// eye line, eyeball centers 12 mm behind the per-eye corner midpoints.
// All six landmarks lie in the z = 0 face plane, which exercises the planar
// branch of the pose solver.
FaceModel3D default_face_model();

}  // namespace gazekit
