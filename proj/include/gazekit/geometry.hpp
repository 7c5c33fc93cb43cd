#pragma once

#include <Eigen/Core>

#include <cmath>

#include "gazekit/types.hpp"

// Gaze ray / screen plane geometry and the angular-error metric.
// All functions are pure; directions are normalized internally where noted.

namespace gazekit {

// Angle between two directions in degrees, in [0, 180]. Symmetric.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar angular_error_deg(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b) {
    using Scalar = typename DerivedA::Scalar;
    EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(DerivedA, 3);
    EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(DerivedB, 3);
    const Scalar na = a.norm();
    const Scalar nb = b.norm();
    if (!(na > Scalar(0)) || !(nb > Scalar(0)) || !std::isfinite(na) || !std::isfinite(nb))
        throw GazeError(errc::invalid_vector, "angular_error_deg on zero or non-finite vector");
    Scalar c = a.dot(b) / (na * nb);
    c = std::clamp(c, Scalar(-1), Scalar(1));
    return rad_to_deg(std::acos(c));
}

// Perspective projection of a camera-frame point onto the image plane.
template <typename Scalar>
Vec2<Scalar> project_point(const Vec3<Scalar>& p_cam, const CameraIntrinsicsT<Scalar>& cam) {
    if (!(p_cam.z() > Scalar(0)))
        throw GazeError(errc::behind_camera, "projected point has non-positive depth");
    return {cam.fx * p_cam.x() / p_cam.z() + cam.cx,
            cam.fy * p_cam.y() / p_cam.z() + cam.cy};
}

// Unit direction of the camera ray through an image pixel (origin = optical centre).
template <typename Scalar>
Vec3<Scalar> pixel_ray(const Vec2<Scalar>& px, const CameraIntrinsicsT<Scalar>& cam) {
    Vec3<Scalar> d{(px.x() - cam.cx) / cam.fx, (px.y() - cam.cy) / cam.fy, Scalar(1)};
    return d.normalized();
}

// 2D screen pixel -> 3D point in the camera frame (mm). Out-of-bounds pixels
// are mapped anyway; callers that care query ScreenModel::contains_px.
template <typename Scalar>
Vec3<Scalar> screen_px_to_camera_3d(const Vec2<Scalar>& px, const ScreenModelT<Scalar>& screen) {
    const Vec2<Scalar> mm = screen.px_to_mm(px);
    return screen.pose * Vec3<Scalar>{mm.x(), mm.y(), Scalar(0)};
}

// Ray from a face (or eyeball) centre through a 3D target point.
template <typename Scalar>
GazeSampleT<Scalar> gaze_from_target(const Vec3<Scalar>& face_center, const Vec3<Scalar>& target,
                                     Timestamp t = 0) {
    const Vec3<Scalar> d = target - face_center;
    const Scalar n = d.norm();
    if (!(n > Scalar(0)) || !std::isfinite(n))
        throw GazeError(errc::degenerate_ray, "gaze target coincides with ray origin");
    return {face_center, d / n, t};
}

// Result of intersecting a gaze ray with the screen plane. Out-of-bounds hits
// are returned unclipped with within_bounds = false so that uncalibrated
// estimates landing off-screen stay scoreable.
template <typename Scalar>
struct ScreenHitT {
    Vec2<Scalar> px = Vec2<Scalar>::Zero();
    bool within_bounds = false;
    Scalar ray_t = Scalar(0);  // signed distance along the (unit) ray, mm
};

using ScreenHit = ScreenHitT<double>;

template <typename Scalar>
ScreenHitT<Scalar> intersect_ray_screen(const GazeSampleT<Scalar>& g,
                                        const ScreenModelT<Scalar>& screen) {
    const Vec3<Scalar> n = screen.pose.rotation.col(2);  // screen plane normal, camera frame
    const Scalar denom = n.dot(g.direction);
    // Unit normal and (near-)unit direction: |denom| is the cosine of the
    // ray/plane angle, so an absolute threshold is meaningful.
    if (std::abs(denom) < Scalar(1e-12))
        throw GazeError(errc::no_intersection, "gaze ray parallel to screen plane");
    const Scalar t = n.dot(screen.pose.translation - g.origin) / denom;
    if (!(t > Scalar(0)))
        throw GazeError(errc::behind_camera, "screen plane behind the gaze ray origin");
    const Vec3<Scalar> hit_cam = g.origin + t * g.direction;
    const Vec3<Scalar> hit_scr = screen.pose.inverse() * hit_cam;
    ScreenHitT<Scalar> hit;
    hit.px = screen.mm_to_px(Vec2<Scalar>{hit_scr.x(), hit_scr.y()});
    hit.within_bounds = screen.contains_px(hit.px);
    hit.ray_t = t;
    return hit;
}

// Dual-eye scoring: arithmetic mean of the two per-eye intersection pixels.
template <typename Scalar>
ScreenHitT<Scalar> midpoint_gaze_point(const GazeSampleT<Scalar>& left,
                                       const GazeSampleT<Scalar>& right,
                                       const ScreenModelT<Scalar>& screen) {
    const ScreenHitT<Scalar> hl = intersect_ray_screen(left, screen);
    const ScreenHitT<Scalar> hr = intersect_ray_screen(right, screen);
    ScreenHitT<Scalar> mid;
    mid.px = (hl.px + hr.px) / Scalar(2);
    mid.within_bounds = screen.contains_px(mid.px);
    mid.ray_t = (hl.ray_t + hr.ray_t) / Scalar(2);
    return mid;
}

}  // namespace gazekit
