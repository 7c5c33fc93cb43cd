#include "gazekit/normalization.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>

#include "gazekit/error.hpp"

namespace gazekit {

NormalizedFrame compute_normalization(const Vec3d& face_center, const RigidTransform& head_pose,
                                      const CameraIntrinsics& cam,
                                      const NormalizationParams& params) {
    if (!(params.norm_distance > 0.0) || params.patch_size <= 0)
        throw GazeError(errc::config_error, "invalid normalization parameters");
    const double d = face_center.norm();
    if (!(face_center.z() > 0.0) || !(d > 0.0))
        throw GazeError(errc::invalid_vector, "face center must be in front of the camera");

    NormalizedFrame frame;
    frame.face_center_cam = face_center;
    frame.patch_size = params.patch_size;

    const Vec3d z_row = face_center / d;
    Vec3d head_y = head_pose.rotation.col(1);
    Vec3d x_dir = head_y.cross(z_row);
    if (x_dir.norm() < 1e-6) {
        // Head y-axis parallel to the view ray: fall back to the camera y-axis.
        frame.gimbal_fallback = true;
        x_dir = Vec3d::UnitY().cross(z_row);
    }
    const Vec3d x_row = x_dir.normalized();
    const Vec3d y_row = z_row.cross(x_row);

    frame.rotation_n.row(0) = x_row.transpose();
    frame.rotation_n.row(1) = y_row.transpose();
    frame.rotation_n.row(2) = z_row.transpose();

    frame.scale = params.norm_distance / d;

    Mat3d scaling = Mat3d::Identity();
    scaling(2, 2) = frame.scale;
    frame.warp = params.norm_intrinsics.matrix() * scaling * frame.rotation_n *
                 cam.inverse_matrix();
    return frame;
}

namespace {

Vec2d apply_homography(const Mat3d& h, const Vec2d& p) {
    const Vec3d q = h * Vec3d{p.x(), p.y(), 1.0};
    if (std::abs(q.z()) < 1e-12 * q.head<2>().norm() || q.z() == 0.0)
        throw GazeError(errc::degenerate_point, "point maps to infinity under warp");
    return q.head<2>() / q.z();
}

}  // namespace

Vec2d warp_point(const Vec2d& p, const NormalizedFrame& frame) {
    return apply_homography(frame.warp, p);
}

Vec2d unwarp_point(const Vec2d& p, const NormalizedFrame& frame) {
    Eigen::FullPivLU<Mat3d> lu(frame.warp);
    if (!lu.isInvertible())
        throw GazeError(errc::numerical_failure, "normalization warp is not invertible");
    return apply_homography(lu.inverse(), p);
}

Vec3d normalize_gaze(const Vec3d& gaze_cam, const NormalizedFrame& frame) {
    if (std::abs(gaze_cam.norm() - 1.0) > 1e-9)
        throw GazeError(errc::invalid_vector, "gaze direction must be unit length");
    return frame.rotation_n * gaze_cam;
}

Vec3d denormalize_gaze(const Vec3d& gaze_norm, const NormalizedFrame& frame) {
    if (std::abs(gaze_norm.norm() - 1.0) > 1e-9)
        throw GazeError(errc::invalid_vector, "gaze direction must be unit length");
    return frame.rotation_n.transpose() * gaze_norm;
}

Image warp_image(const Image& img, const NormalizedFrame& frame) {
    if (img.size() == 0)
        throw GazeError(errc::config_error, "empty source image");
    Eigen::FullPivLU<Mat3d> lu(frame.warp);
    if (!lu.isInvertible())
        throw GazeError(errc::numerical_failure, "normalization warp is not invertible");
    const Mat3d inv = lu.inverse();

    Image out(frame.patch_size, frame.patch_size);
    for (int v = 0; v < frame.patch_size; ++v) {
        for (int u = 0; u < frame.patch_size; ++u) {
            const Vec3d src = inv * Vec3d{double(u), double(v), 1.0};
            if (src.z() == 0.0) {
                out(v, u) = 0.0;
                continue;
            }
            out(v, u) = sample_bilinear(img, src.x() / src.z(), src.y() / src.z());
        }
    }
    return out;
}

void write_pgm(const Image& img, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw GazeError(errc::io_error, "cannot open " + path + " for writing");
    f << "P5\n" << img.cols() << " " << img.rows() << "\n255\n";
    for (Eigen::Index y = 0; y < img.rows(); ++y)
        for (Eigen::Index x = 0; x < img.cols(); ++x) {
            const double v = std::clamp(img(y, x), 0.0, 255.0);
            f.put(char(static_cast<unsigned char>(std::lround(v))));
        }
    if (!f) throw GazeError(errc::io_error, "write failed: " + path);
}

}  // namespace gazekit
