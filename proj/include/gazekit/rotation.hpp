#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>

#include "gazekit/types.hpp"

// SO(3) helpers shared by the pose solvers and the synthetic lab.

namespace gazekit {

template <typename Scalar>
Mat3<Scalar> skew(const Vec3<Scalar>& v) {
    Mat3<Scalar> m;
    m << Scalar(0), -v.z(), v.y(),
         v.z(), Scalar(0), -v.x(),
         -v.y(), v.x(), Scalar(0);
    return m;
}

// Rodrigues exponential: rotation by ||w|| radians about w.
template <typename Scalar>
Mat3<Scalar> exp_so3(const Vec3<Scalar>& w) {
    const Scalar theta = w.norm();
    if (theta < Scalar(1e-12)) {
        // Second-order Taylor keeps the result orthonormal to machine precision.
        const Mat3<Scalar> k = skew(w);
        return Mat3<Scalar>::Identity() + k + Scalar(0.5) * k * k;
    }
    return Eigen::AngleAxis<Scalar>(theta, w / theta).toRotationMatrix();
}

template <typename Scalar>
Vec3<Scalar> log_so3(const Mat3<Scalar>& r) {
    const Eigen::AngleAxis<Scalar> aa(r);
    return aa.angle() * aa.axis();
}

// Angle of the relative rotation between two rotation matrices, degrees.
template <typename Scalar>
Scalar rotation_angle_deg(const Mat3<Scalar>& a, const Mat3<Scalar>& b) {
    const Scalar c = ((a.transpose() * b).trace() - Scalar(1)) / Scalar(2);
    return rad_to_deg(std::acos(std::clamp(c, Scalar(-1), Scalar(1))));
}

// Nearest rotation matrix in Frobenius norm (polar decomposition via SVD).
template <typename Scalar>
Mat3<Scalar> nearest_rotation(const Mat3<Scalar>& m) {
    Eigen::JacobiSVD<Mat3<Scalar>> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3<Scalar> r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() < Scalar(0)) {
        Mat3<Scalar> flip = Mat3<Scalar>::Identity();
        flip(2, 2) = Scalar(-1);
        r = svd.matrixU() * flip * svd.matrixV().transpose();
    }
    return r;
}

// Intrinsic yaw (about y), pitch (about x), roll (about z), degrees.
// R = Ry(yaw) * Rx(pitch) * Rz(roll).
template <typename Scalar>
Mat3<Scalar> rotation_from_ypr_deg(Scalar yaw, Scalar pitch, Scalar roll) {
    using AA = Eigen::AngleAxis<Scalar>;
    return (AA(deg_to_rad(yaw), Vec3<Scalar>::UnitY()) *
            AA(deg_to_rad(pitch), Vec3<Scalar>::UnitX()) *
            AA(deg_to_rad(roll), Vec3<Scalar>::UnitZ()))
        .toRotationMatrix();
}

}  // namespace gazekit
