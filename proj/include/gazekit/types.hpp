#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>

#include "gazekit/error.hpp"

// Core value types shared across the toolkit.
//
// Conventions (all modules):
//   - camera frame: x right, y down, z forward into the scene, origin at the
//     optical centre; millimetres.
//   - screen frame: x right, y down, screen surface is the z = 0 plane;
//     ScreenModel::pose maps screen frame -> camera frame.
//   - angles in degrees at API boundaries, timestamps in integer microseconds.

namespace gazekit {

template <typename Scalar> using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar> using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar> using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

using Vec2d = Vec2<double>;
using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;

using Timestamp = std::int64_t;  // microseconds

template <typename Scalar> constexpr Scalar deg_to_rad(Scalar d) {
    return d * Scalar(EIGEN_PI) / Scalar(180);
}
template <typename Scalar> constexpr Scalar rad_to_deg(Scalar r) {
    return r * Scalar(180) / Scalar(EIGEN_PI);
}

// Pinhole camera, no lens distortion; inputs are assumed undistorted upstream.
template <typename Scalar>
struct CameraIntrinsicsT {
    Scalar fx = Scalar(0);
    Scalar fy = Scalar(0);
    Scalar cx = Scalar(0);
    Scalar cy = Scalar(0);
    int width_px = 0;
    int height_px = 0;

    Mat3<Scalar> matrix() const {
        Mat3<Scalar> k;
        k << fx, Scalar(0), cx, Scalar(0), fy, cy, Scalar(0), Scalar(0), Scalar(1);
        return k;
    }

    Mat3<Scalar> inverse_matrix() const {
        Mat3<Scalar> ki;
        ki << Scalar(1) / fx, Scalar(0), -cx / fx,
              Scalar(0), Scalar(1) / fy, -cy / fy,
              Scalar(0), Scalar(0), Scalar(1);
        return ki;
    }

    void validate() const {
        if (!(fx > Scalar(0)) || !(fy > Scalar(0)))
            throw GazeError(errc::config_error, "camera focal lengths must be positive");
        if (cx < Scalar(0) || cx > Scalar(width_px) || cy < Scalar(0) || cy > Scalar(height_px))
            throw GazeError(errc::config_error, "principal point outside sensor bounds");
        if (width_px <= 0 || height_px <= 0)
            throw GazeError(errc::config_error, "sensor resolution must be positive");
    }
};

using CameraIntrinsics = CameraIntrinsicsT<double>;

// Rotation + translation between two frames. Millimetres.
template <typename Scalar>
struct RigidTransformT {
    Mat3<Scalar> rotation = Mat3<Scalar>::Identity();
    Vec3<Scalar> translation = Vec3<Scalar>::Zero();

    Vec3<Scalar> operator*(const Vec3<Scalar>& p) const { return rotation * p + translation; }

    RigidTransformT operator*(const RigidTransformT& rhs) const {
        return {rotation * rhs.rotation, rotation * rhs.translation + translation};
    }

    RigidTransformT inverse() const {
        Mat3<Scalar> rt = rotation.transpose();
        return {rt, -(rt * translation)};
    }

    static RigidTransformT identity() { return {}; }

    // rotation^T rotation = I and det = +1, both within tol.
    bool is_rigid(Scalar tol = Scalar(1e-9)) const {
        Mat3<Scalar> e = rotation.transpose() * rotation - Mat3<Scalar>::Identity();
        return e.template lpNorm<Eigen::Infinity>() <= tol &&
               std::abs(rotation.determinant() - Scalar(1)) <= tol;
    }

    void validate(Scalar tol = Scalar(1e-9)) const {
        if (!rotation.allFinite() || !translation.allFinite())
            throw GazeError(errc::config_error, "non-finite rigid transform");
        if (!is_rigid(tol))
            throw GazeError(errc::config_error, "rotation is not orthonormal with det +1");
    }
};

using RigidTransform = RigidTransformT<double>;

// 3D gaze ray: origin and unit direction, camera frame.
template <typename Scalar>
struct GazeSampleT {
    Vec3<Scalar> origin = Vec3<Scalar>::Zero();        // mm
    Vec3<Scalar> direction = -Vec3<Scalar>::UnitZ();   // unit
    Timestamp timestamp = 0;

    void validate(Scalar tol = Scalar(1e-9)) const {
        if (!origin.allFinite() || !direction.allFinite())
            throw GazeError(errc::invalid_vector, "non-finite gaze sample");
        if (std::abs(direction.norm() - Scalar(1)) > tol)
            throw GazeError(errc::invalid_vector, "gaze direction is not unit length");
    }
};

using GazeSample = GazeSampleT<double>;

// Physical screen: pose of the screen frame in the camera frame plus its
// physical and pixel dimensions. Pixel (0,0) is the screen-frame origin.
template <typename Scalar>
struct ScreenModelT {
    RigidTransformT<Scalar> pose;  // screen frame -> camera frame
    Scalar width_mm = Scalar(0);
    Scalar height_mm = Scalar(0);
    int width_px = 0;
    int height_px = 0;

    Scalar pitch_x() const { return width_mm / Scalar(width_px); }    // mm per pixel
    Scalar pitch_y() const { return height_mm / Scalar(height_px); }

    Vec2<Scalar> px_to_mm(const Vec2<Scalar>& px) const {
        return {px.x() * pitch_x(), px.y() * pitch_y()};
    }
    Vec2<Scalar> mm_to_px(const Vec2<Scalar>& mm) const {
        return {mm.x() / pitch_x(), mm.y() / pitch_y()};
    }

    bool contains_px(const Vec2<Scalar>& px) const {
        return px.x() >= Scalar(0) && px.x() <= Scalar(width_px) &&
               px.y() >= Scalar(0) && px.y() <= Scalar(height_px);
    }

    void validate() const {
        pose.validate();
        if (!(width_mm > Scalar(0)) || !(height_mm > Scalar(0)) || width_px <= 0 || height_px <= 0)
            throw GazeError(errc::config_error, "screen dimensions must be positive");
    }
};

using ScreenModel = ScreenModelT<double>;

}  // namespace gazekit
