#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <limits>
#include <vector>

#include "detail/levmar.hpp"
#include "gazekit/calibration.hpp"
#include "gazekit/geometry.hpp"
#include "gazekit/rotation.hpp"
#include "gazekit/synthlab.hpp"

namespace gazekit {

namespace {

constexpr double kConditionLimit = 1e8;
constexpr double kMinUsablePairAngleRad = 0.005;  // relative rotation between virtual views

Mat3d x_flip() {
    Mat3d f = Mat3d::Identity();
    f(0, 0) = -1.0;
    return f;
}

// Planar pattern corner in its own (x-flipped, mm) plane coordinates.
std::vector<Vec2d> mirrored_plane_points(const MirrorObservation& obs, const ScreenDims& screen) {
    std::vector<Vec2d> pts;
    pts.reserve(obs.pattern_geometry_px.size());
    for (const Vec2d& q : obs.pattern_geometry_px) {
        const Vec2d mm = screen.px_to_mm(q);
        pts.push_back({-mm.x(), mm.y()});
    }
    return pts;
}

void check_observation(const MirrorObservation& obs) {
    if (obs.pattern_corners_px.size() != obs.pattern_geometry_px.size())
        throw GazeError(errc::config_error,
                        "corner/geometry count mismatch in mirror observation");
    if (obs.pattern_corners_px.size() < 4)
        throw GazeError(errc::insufficient_data,
                        "mirror observation needs at least 4 pattern corners");
    // Collinear pattern corners cannot fix a homography.
    Vec2d c = Vec2d::Zero();
    for (const Vec2d& q : obs.pattern_geometry_px) c += q;
    c /= double(obs.pattern_geometry_px.size());
    Eigen::MatrixXd centered(obs.pattern_geometry_px.size(), 2);
    for (size_t i = 0; i < obs.pattern_geometry_px.size(); ++i)
        centered.row(i) = (obs.pattern_geometry_px[i] - c).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
    if (svd.singularValues()[1] < 1e-9 * svd.singularValues()[0])
        throw GazeError(errc::ill_conditioned, "pattern corners are collinear");
}

// Hartley-normalized DLT homography, plane (x,y) -> image (u,v).
Mat3d fit_homography(const std::vector<Vec2d>& plane, const std::vector<Vec2d>& image) {
    const int n = int(plane.size());

    auto normalizer = [](const std::vector<Vec2d>& pts) {
        Vec2d c = Vec2d::Zero();
        for (const auto& p : pts) c += p;
        c /= double(pts.size());
        double mean_dist = 0.0;
        for (const auto& p : pts) mean_dist += (p - c).norm();
        mean_dist /= double(pts.size());
        const double s = mean_dist > 0.0 ? std::sqrt(2.0) / mean_dist : 1.0;
        Mat3d t;
        t << s, 0, -s * c.x(), 0, s, -s * c.y(), 0, 0, 1;
        return t;
    };
    const Mat3d tp = normalizer(plane);
    const Mat3d ti = normalizer(image);

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 9);
    for (int i = 0; i < n; ++i) {
        const Vec3d p = tp * Vec3d{plane[i].x(), plane[i].y(), 1.0};
        const Vec3d q = ti * Vec3d{image[i].x(), image[i].y(), 1.0};
        a.row(2 * i) << -p.x(), -p.y(), -1, 0, 0, 0, q.x() * p.x(), q.x() * p.y(), q.x();
        a.row(2 * i + 1) << 0, 0, 0, -p.x(), -p.y(), -1, q.y() * p.x(), q.y() * p.y(), q.y();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv[7] < 1e-12 * sv[0])
        throw GazeError(errc::ill_conditioned, "degenerate homography system");
    const Eigen::VectorXd h = svd.matrixV().col(8);
    Mat3d hn;
    hn << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];
    return ti.inverse() * hn * tp;
}

RigidTransform pose_from_homography(const Mat3d& h, const CameraIntrinsics& cam) {
    Mat3d a = cam.inverse_matrix() * h;
    const double scale = 2.0 / (a.col(0).norm() + a.col(1).norm());
    a *= scale;
    if (a(2, 2) < 0.0) a = -a;  // pattern in front of the camera
    Mat3d r;
    r.col(0) = a.col(0);
    r.col(1) = a.col(1);
    r.col(2) = a.col(0).cross(a.col(1));
    return {nearest_rotation(r), a.col(2)};
}

double corner_rms(const MirrorObservation& obs, const std::vector<Vec2d>& plane,
                  const RigidTransform& pose, const CameraIntrinsics& cam) {
    double sum = 0.0;
    for (size_t i = 0; i < plane.size(); ++i) {
        const Vec3d p = pose * Vec3d{plane[i].x(), plane[i].y(), 0.0};
        if (!(p.z() > 0.0)) return std::numeric_limits<double>::infinity();
        sum += (project_point(p, cam) - obs.pattern_corners_px[i]).squaredNorm();
    }
    return std::sqrt(sum / double(plane.size()));
}

}  // namespace

RigidTransform solve_reflected_pose(const MirrorObservation& obs, const CameraIntrinsics& cam,
                                    const ScreenDims& screen) {
    check_observation(obs);
    const std::vector<Vec2d> plane = mirrored_plane_points(obs, screen);

    const Mat3d h = fit_homography(plane, obs.pattern_corners_px);
    const RigidTransform initial = pose_from_homography(h, cam);

    // LM polish on the corner reprojection error.
    const Mat3d r0 = initial.rotation;
    const auto unpack = [&](const Eigen::VectorXd& x) {
        return RigidTransform{exp_so3(Vec3d(x.head<3>())) * r0, x.tail<3>()};
    };
    detail::ResidualFn residuals = [&](const Eigen::VectorXd& x) {
        const RigidTransform pose = unpack(x);
        Eigen::VectorXd r(2 * plane.size());
        for (size_t i = 0; i < plane.size(); ++i) {
            const Vec3d p = pose * Vec3d{plane[i].x(), plane[i].y(), 0.0};
            if (!(p.z() > 0.0)) {
                r.segment<2>(2 * i).setConstant(1e6 * (1.0 - p.z()));
                continue;
            }
            r.segment<2>(2 * i) = project_point(p, cam) - obs.pattern_corners_px[i];
        }
        return r;
    };
    Eigen::VectorXd x0(6);
    x0.head<3>().setZero();
    x0.tail<3>() = initial.translation;
    detail::LevMarOptions opts;
    opts.max_iterations = 40;
    const auto lm = detail::levenberg_marquardt(residuals, x0, opts);

    RigidTransform refined = unpack(lm.params);
    if (corner_rms(obs, plane, refined, cam) > corner_rms(obs, plane, initial, cam))
        refined = initial;
    return refined;
}

ScreenCalibrationResult calibrate_screen_from_mirrors(
    const std::vector<MirrorObservation>& observations, const CameraIntrinsics& cam,
    const ScreenDims& screen) {
    const int k = int(observations.size());
    if (k < 3)
        throw GazeError(errc::insufficient_data,
                        "mirror calibration needs at least 3 observations");

    // Per-observation reflected poses. C_k = pose * F has det -1 and equals
    // H_k * R_s for the unknown screen rotation R_s and mirror Householder H_k.
    const Mat3d flip = x_flip();
    std::vector<RigidTransform> virt(k);
    std::vector<Mat3d> c(k);
    for (int i = 0; i < k; ++i) {
        virt[i] = solve_reflected_pose(observations[i], cam, screen);
        c[i] = virt[i].rotation * flip;
    }

    // Relative rotations between virtual views: C_i * C_j^T = H_i * H_j is a
    // rotation about n_i x n_j. Each mirror normal is orthogonal to every
    // axis of the pairs it participates in; solve that linear system per
    // mirror by SVD.
    std::vector<std::vector<Vec3d>> axes(k);
    for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) {
            const Mat3d d = c[i] * c[j].transpose();
            const double angle =
                std::acos(std::clamp((d.trace() - 1.0) / 2.0, -1.0, 1.0));
            if (angle < kMinUsablePairAngleRad) continue;  // mirrors nearly parallel
            const Eigen::AngleAxisd aa(d);
            axes[i].push_back(aa.axis());
            axes[j].push_back(aa.axis());
        }
    }

    std::vector<Vec3d> normals(k);
    for (int i = 0; i < k; ++i) {
        if (axes[i].size() < 2)
            throw GazeError(errc::ill_conditioned,
                            "mirror orientations too close to parallel to separate");
        Eigen::MatrixXd a(int(axes[i].size()), 3);
        for (size_t r = 0; r < axes[i].size(); ++r) a.row(int(r)) = axes[i][r].transpose();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
        if (svd.singularValues()[1] < 1e-6 * svd.singularValues()[0])
            throw GazeError(errc::ill_conditioned,
                            "mirror-normal system is rank deficient");
        normals[i] = svd.matrixV().col(2);
    }

    // Screen rotation: every H_i * C_i equals R_s; average and project to SO(3).
    Mat3d acc = Mat3d::Zero();
    std::vector<Mat3d> house(k);
    for (int i = 0; i < k; ++i) {
        house[i] = Mat3d::Identity() - 2.0 * normals[i] * normals[i].transpose();
        acc += house[i] * c[i];
    }
    Mat3d r_s = nearest_rotation(acc);

    // Translations: H_i * t_s + 2 d_i n_i = t_virt_i, linear in (t_s, d_1..d_K).
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3 * k, 3 + k);
    Eigen::VectorXd b(3 * k);
    for (int i = 0; i < k; ++i) {
        a.block<3, 3>(3 * i, 0) = house[i];
        a.block<3, 1>(3 * i, 3 + i) = 2.0 * normals[i];
        b.segment<3>(3 * i) = virt[i].translation;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv[sv.size() - 1] <= 0.0 || sv[0] / sv[sv.size() - 1] > kConditionLimit)
        throw GazeError(errc::ill_conditioned, "mirror translation system is ill-conditioned");
    const Eigen::VectorXd x = svd.solve(b);
    Vec3d t_s = x.head<3>();
    std::vector<double> dists(k);
    for (int i = 0; i < k; ++i) dists[i] = x[3 + i];

    // Joint refinement of screen pose and mirror planes on the total corner
    // reprojection error. Mirror normals move on the sphere via a 2-parameter
    // tangent update.
    std::vector<std::vector<Vec2d>> planes(k);
    for (int i = 0; i < k; ++i) {
        const Vec2d mm_scale{screen.width_mm / screen.width_px,
                             screen.height_mm / screen.height_px};
        planes[i].reserve(observations[i].pattern_geometry_px.size());
        for (const Vec2d& q : observations[i].pattern_geometry_px)
            planes[i].push_back({q.x() * mm_scale.x(), q.y() * mm_scale.y()});
    }
    std::vector<std::array<Vec3d, 2>> tangents(k);
    for (int i = 0; i < k; ++i) {
        const Vec3d n = normals[i];
        const Vec3d ref = std::abs(n.z()) < 0.9 ? Vec3d::UnitZ() : Vec3d::UnitX();
        tangents[i][0] = n.cross(ref).normalized();
        tangents[i][1] = n.cross(tangents[i][0]);
    }

    int total_corners = 0;
    for (const auto& obs : observations) total_corners += int(obs.pattern_corners_px.size());

    const Mat3d r0 = r_s;
    const auto unpack = [&](const Eigen::VectorXd& p) {
        struct State {
            RigidTransform screen_pose;
            std::vector<MirrorPlane> mirrors;
        } st;
        st.screen_pose.rotation = exp_so3(Vec3d(p.head<3>())) * r0;
        st.screen_pose.translation = p.segment<3>(3);
        st.mirrors.resize(k);
        for (int i = 0; i < k; ++i) {
            const Vec3d w =
                p[6 + 3 * i] * tangents[i][0] + p[6 + 3 * i + 1] * tangents[i][1];
            st.mirrors[i].normal = (exp_so3(w) * normals[i]).normalized();
            st.mirrors[i].distance = p[6 + 3 * i + 2];
        }
        return st;
    };
    detail::ResidualFn residuals = [&](const Eigen::VectorXd& p) {
        const auto st = unpack(p);
        const ScreenModel model = make_screen(st.screen_pose, screen);
        Eigen::VectorXd r(2 * total_corners);
        int row = 0;
        for (int i = 0; i < k; ++i) {
            const VirtualScreen vs = reflect_scene(model, st.mirrors[i]);
            for (size_t j = 0; j < observations[i].pattern_geometry_px.size(); ++j) {
                const Vec3d p3 = virtual_screen_point(vs, observations[i].pattern_geometry_px[j]);
                if (!(p3.z() > 0.0)) {
                    r.segment<2>(row).setConstant(1e6 * (1.0 - p3.z()));
                } else {
                    r.segment<2>(row) =
                        project_point(p3, cam) - observations[i].pattern_corners_px[j];
                }
                row += 2;
            }
        }
        return r;
    };

    Eigen::VectorXd p0 = Eigen::VectorXd::Zero(6 + 3 * k);
    p0.segment<3>(3) = t_s;
    for (int i = 0; i < k; ++i) p0[6 + 3 * i + 2] = dists[i];
    detail::LevMarOptions opts;
    opts.max_iterations = 60;
    const auto lm = detail::levenberg_marquardt(residuals, p0, opts);

    const auto st = unpack(lm.params);
    ScreenCalibrationResult result;
    result.screen = make_screen(st.screen_pose, screen);
    result.mirrors = st.mirrors;
    for (auto& m : result.mirrors) {
        if (m.distance < 0.0) {  // (n, d) and (-n, -d) are the same plane
            m.normal = -m.normal;
            m.distance = -m.distance;
        }
    }
    result.rms_reprojection_px =
        std::sqrt(2.0 * lm.cost / double(total_corners));
    return result;
}

}  // namespace gazekit
