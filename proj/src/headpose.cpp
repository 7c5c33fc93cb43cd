#include "gazekit/headpose.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "detail/levmar.hpp"
#include "gazekit/geometry.hpp"
#include "gazekit/rotation.hpp"

namespace gazekit {

namespace {

constexpr double kPlanarSingularValueRatio = 1e-6;
constexpr double kPoseFailureReprojPx = 25.0;

double mean_reprojection_error(const std::vector<Vec3d>& world, const std::vector<Vec2d>& image,
                               const RigidTransform& pose, const CameraIntrinsics& cam) {
    double sum = 0.0;
    for (size_t i = 0; i < world.size(); ++i) {
        const Vec3d pc = pose * world[i];
        if (!(pc.z() > 0.0)) return std::numeric_limits<double>::infinity();
        sum += (project_point(pc, cam) - image[i]).norm();
    }
    return sum / double(world.size());
}

RigidTransform pose_from_point_sets(const std::vector<Vec3d>& world,
                                    const std::vector<Vec3d>& cam_pts) {
    Eigen::Matrix3Xd src(3, world.size()), dst(3, cam_pts.size());
    for (size_t i = 0; i < world.size(); ++i) {
        src.col(i) = world[i];
        dst.col(i) = cam_pts[i];
    }
    const Eigen::Matrix4d t = Eigen::umeyama(src, dst, false);
    return {t.topLeftCorner<3, 3>(), t.topRightCorner<3, 1>()};
}

// ---------------------------------------------------------------------------
// EPnP (Lepetit, Moreno-Noguer, Fua). World points are expressed as affine
// combinations of 4 control points (3 for planar scenes); the control points'
// camera coordinates span the kernel of the 2n x 3m projection system.
// ---------------------------------------------------------------------------

struct EpnpSetup {
    std::vector<Vec3d> control_world;              // m control points, m in {3, 4}
    Eigen::MatrixXd alphas;                        // n x m barycentric weights
};

EpnpSetup choose_control_points(const std::vector<Vec3d>& world) {
    const int n = int(world.size());
    Vec3d c0 = Vec3d::Zero();
    for (const auto& p : world) c0 += p;
    c0 /= double(n);

    Eigen::MatrixXd centered(n, 3);
    for (int i = 0; i < n; ++i) centered.row(i) = (world[i] - c0).transpose();
    const Mat3d cov = centered.transpose() * centered;
    Eigen::SelfAdjointEigenSolver<Mat3d> eig(cov);  // eigenvalues ascending
    const Vec3d evals = eig.eigenvalues().cwiseMax(0.0);

    if (evals[2] <= 0.0 || evals[1] / evals[2] < kPlanarSingularValueRatio)
        throw GazeError(errc::pose_failure, "3D correspondences are collinear");
    const bool planar = evals[0] / evals[2] < kPlanarSingularValueRatio;

    EpnpSetup setup;
    setup.control_world.push_back(c0);
    const int dims = planar ? 2 : 3;
    for (int d = 0; d < dims; ++d) {
        const int idx = 2 - d;  // largest eigenvalues first
        setup.control_world.push_back(c0 + std::sqrt(evals[idx] / double(n)) *
                                               eig.eigenvectors().col(idx));
    }

    const int m = int(setup.control_world.size());
    Eigen::MatrixXd basis(3, m - 1);
    for (int j = 1; j < m; ++j) basis.col(j - 1) = setup.control_world[j] - c0;
    const Eigen::MatrixXd solver =
        (basis.transpose() * basis).ldlt().solve(basis.transpose()).eval();

    setup.alphas.resize(n, m);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd b = solver * (world[i] - c0);
        setup.alphas(i, 0) = 1.0 - b.sum();
        setup.alphas.row(i).tail(m - 1) = b.transpose();
    }
    return setup;
}

Eigen::MatrixXd build_m_matrix(const EpnpSetup& setup, const std::vector<Vec2d>& image,
                               const CameraIntrinsics& cam) {
    const int n = int(image.size());
    const int m = int(setup.control_world.size());
    Eigen::MatrixXd mm = Eigen::MatrixXd::Zero(2 * n, 3 * m);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            const double a = setup.alphas(i, j);
            mm(2 * i, 3 * j) = a * cam.fx;
            mm(2 * i, 3 * j + 2) = a * (cam.cx - image[i].x());
            mm(2 * i + 1, 3 * j + 1) = a * cam.fy;
            mm(2 * i + 1, 3 * j + 2) = a * (cam.cy - image[i].y());
        }
    }
    return mm;
}

// Pairwise squared distances between control points, flattened in (j,k) order.
std::vector<std::pair<int, int>> control_pairs(int m) {
    std::vector<std::pair<int, int>> pairs;
    for (int j = 0; j < m; ++j)
        for (int k = j + 1; k < m; ++k) pairs.emplace_back(j, k);
    return pairs;
}

// Camera-frame control points for a kernel combination x = sum(beta_k v_k).
std::vector<Vec3d> controls_from_kernel(const Eigen::VectorXd& x, int m) {
    std::vector<Vec3d> c(m);
    for (int j = 0; j < m; ++j) c[j] = x.segment<3>(3 * j);
    return c;
}

// Scale/flip the kernel combination so control-point depths are positive and
// inter-control distances match the world configuration.
RigidTransform pose_from_betas(const EpnpSetup& setup, const Eigen::MatrixXd& kernel,
                               Eigen::VectorXd betas, const std::vector<Vec3d>& world) {
    const int m = int(setup.control_world.size());
    Eigen::VectorXd x = kernel.leftCols(betas.size()) * betas;
    std::vector<Vec3d> cc = controls_from_kernel(x, m);

    // Uniform scale from distance consistency.
    double num = 0.0, den = 0.0;
    for (const auto& [j, k] : control_pairs(m)) {
        const double dc = (cc[j] - cc[k]).norm();
        const double dw = (setup.control_world[j] - setup.control_world[k]).norm();
        num += dc * dw;
        den += dc * dc;
    }
    if (den <= 0.0) throw GazeError(errc::pose_failure, "degenerate EPnP kernel combination");
    const double scale = num / den;
    for (auto& c : cc) c *= scale;

    // Camera points; flip if the solution put the scene behind the camera.
    const int n = int(world.size());
    std::vector<Vec3d> cam_pts(n);
    double zsum = 0.0;
    for (int i = 0; i < n; ++i) {
        Vec3d p = Vec3d::Zero();
        for (int j = 0; j < m; ++j) p += setup.alphas(i, j) * cc[j];
        cam_pts[i] = p;
        zsum += p.z();
    }
    if (zsum < 0.0)
        for (auto& p : cam_pts) p = -p;

    return pose_from_point_sets(world, cam_pts);
}

// N = 1: single kernel vector, scale resolved inside pose_from_betas.
Eigen::VectorXd betas_dim1(int nkernel) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(nkernel);
    b[0] = 1.0;
    return b;
}

// N = 2: solve the linearised distance system for [b11, b12, b22].
Eigen::VectorXd betas_dim2(const EpnpSetup& setup, const Eigen::MatrixXd& kernel, int nkernel) {
    const int m = int(setup.control_world.size());
    const auto pairs = control_pairs(m);
    Eigen::MatrixXd l(int(pairs.size()), 3);
    Eigen::VectorXd rho(int(pairs.size()));
    for (size_t p = 0; p < pairs.size(); ++p) {
        const auto [j, k] = pairs[p];
        const Vec3d dv1 = kernel.col(0).segment<3>(3 * j) - kernel.col(0).segment<3>(3 * k);
        const Vec3d dv2 = kernel.col(1).segment<3>(3 * j) - kernel.col(1).segment<3>(3 * k);
        l(int(p), 0) = dv1.squaredNorm();
        l(int(p), 1) = 2.0 * dv1.dot(dv2);
        l(int(p), 2) = dv2.squaredNorm();
        rho[int(p)] = (setup.control_world[j] - setup.control_world[k]).squaredNorm();
    }
    const Eigen::Vector3d b =
        l.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(rho);
    Eigen::VectorXd betas = Eigen::VectorXd::Zero(nkernel);
    if (b[0] < 0.0) {
        betas[0] = std::sqrt(-b[0]);
        betas[1] = (b[2] < 0.0) ? -std::sqrt(-b[2]) : 0.0;
    } else {
        betas[0] = std::sqrt(b[0]);
        betas[1] = (b[2] > 0.0) ? std::sqrt(b[2]) : 0.0;
    }
    if (b[1] < 0.0) betas[0] = -betas[0];
    return betas;
}

// Gauss-Newton on the inter-control-point distance residuals over the first
// `nb` kernel weights.
Eigen::VectorXd refine_betas(const EpnpSetup& setup, const Eigen::MatrixXd& kernel,
                             Eigen::VectorXd betas) {
    const int m = int(setup.control_world.size());
    const auto pairs = control_pairs(m);
    const int nb = int(betas.size());

    detail::ResidualFn residuals = [&](const Eigen::VectorXd& b) {
        const Eigen::VectorXd x = kernel.leftCols(nb) * b;
        const auto cc = controls_from_kernel(x, m);
        Eigen::VectorXd r(int(pairs.size()));
        for (size_t p = 0; p < pairs.size(); ++p) {
            const auto [j, k] = pairs[p];
            r[int(p)] = (cc[j] - cc[k]).squaredNorm() -
                        (setup.control_world[j] - setup.control_world[k]).squaredNorm();
        }
        return r;
    };
    detail::LevMarOptions opts;
    opts.max_iterations = 10;
    opts.initial_lambda = 1e-8;
    return detail::levenberg_marquardt(residuals, std::move(betas), opts).params;
}

}  // namespace

namespace detail {

RigidTransform solve_epnp(const std::vector<Vec3d>& world, const std::vector<Vec2d>& image,
                          const CameraIntrinsics& cam) {
    if (world.size() != image.size() || world.size() < 4)
        throw GazeError(errc::insufficient_data, "EPnP needs at least 4 correspondences");

    const EpnpSetup setup = choose_control_points(world);
    const int m = int(setup.control_world.size());
    const Eigen::MatrixXd mm = build_m_matrix(setup, image, cam);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(mm.transpose() * mm);
    const int nkernel = std::min(m == 4 ? 4 : 3, 3 * m);
    Eigen::MatrixXd kernel(3 * m, nkernel);
    for (int k = 0; k < nkernel; ++k) kernel.col(k) = eig.eigenvectors().col(k);

    RigidTransform best;
    double best_err = std::numeric_limits<double>::infinity();
    std::vector<Eigen::VectorXd> candidates;
    candidates.push_back(refine_betas(setup, kernel, betas_dim1(1)));
    candidates.push_back(refine_betas(setup, kernel, betas_dim2(setup, kernel, 2)));
    for (const auto& betas : candidates) {
        RigidTransform pose;
        try {
            pose = pose_from_betas(setup, kernel, betas, world);
        } catch (const GazeError&) {
            continue;
        }
        const double err = mean_reprojection_error(world, image, pose, cam);
        if (err < best_err) {
            best_err = err;
            best = pose;
        }
    }
    if (!std::isfinite(best_err))
        throw GazeError(errc::pose_failure, "EPnP produced no pose with positive depths");
    return best;
}

}  // namespace detail

// ---------------------------------------------------------------------------

FaceModel3D default_face_model() {
    FaceModel3D m;
    m.points[0] = {-45.0, 0.0, 0.0};   // outer-left-eye
    m.points[1] = {-21.0, 0.0, 0.0};   // inner-left-eye
    m.points[2] = {21.0, 0.0, 0.0};    // inner-right-eye
    m.points[3] = {45.0, 0.0, 0.0};    // outer-right-eye
    m.points[4] = {-30.0, 55.0, 0.0};  // left-mouth
    m.points[5] = {30.0, 55.0, 0.0};   // right-mouth
    m.eyeball_centers[0] = {-33.0, 0.0, 12.0};
    m.eyeball_centers[1] = {33.0, 0.0, 12.0};
    m.eyeball_radius = 12.0;
    return m;
}

void FaceModel3D::validate() const {
    for (const auto& p : points)
        if (!p.allFinite()) throw GazeError(errc::config_error, "non-finite face model point");
    if (!(eyeball_radius > 0.0))
        throw GazeError(errc::config_error, "eyeball radius must be positive");

    // Bilateral symmetry: mirroring across x = 0 must permute the landmark set
    // (0<->3, 1<->2, 4<->5) and the eyeball centers.
    const auto mirrored = [](const Vec3d& p) { return Vec3d{-p.x(), p.y(), p.z()}; };
    const int partner[kNumLandmarks] = {3, 2, 1, 0, 5, 4};
    for (int i = 0; i < kNumLandmarks; ++i)
        if ((mirrored(points[i]) - points[partner[i]]).norm() > 1e-6)
            throw GazeError(errc::config_error, "face model is not bilaterally symmetric");
    if ((mirrored(eyeball_centers[0]) - eyeball_centers[1]).norm() > 1e-6)
        throw GazeError(errc::config_error, "eyeball centers are not bilaterally symmetric");

    // Non-degenerate: landmarks must not be collinear.
    Vec3d c = centroid();
    Eigen::Matrix<double, kNumLandmarks, 3> centered;
    for (int i = 0; i < kNumLandmarks; ++i) centered.row(i) = (points[i] - c).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
    if (svd.singularValues()[1] < 1e-9 * svd.singularValues()[0])
        throw GazeError(errc::config_error, "face model landmarks are collinear");
}

std::array<Vec2d, kNumLandmarks> reproject(const FaceModel3D& model, const RigidTransform& pose,
                                           const CameraIntrinsics& cam) {
    std::array<Vec2d, kNumLandmarks> px;
    for (int i = 0; i < kNumLandmarks; ++i) px[i] = project_point(pose * model.points[i], cam);
    return px;
}

Vec3d face_center(const RigidTransform& pose, const FaceModel3D& model) {
    return pose * model.centroid();
}

PoseEstimate estimate_head_pose(const LandmarkSet& lm, const FaceModel3D& model,
                                const CameraIntrinsics& cam) {
    lm.validate();
    const std::vector<Vec3d> world(model.points.begin(), model.points.end());
    const std::vector<Vec2d> image(lm.points.begin(), lm.points.end());

    const RigidTransform initial = detail::solve_epnp(world, image, cam);
    const double initial_err = mean_reprojection_error(world, image, initial, cam);

    // Refine over [w; t]: R = exp(skew(w)) * R_epnp, t absolute.
    const Mat3d r0 = initial.rotation;
    const auto unpack = [&](const Eigen::VectorXd& x) {
        return RigidTransform{exp_so3(Vec3d(x.head<3>())) * r0, x.tail<3>()};
    };
    detail::ResidualFn residuals = [&](const Eigen::VectorXd& x) {
        const RigidTransform pose = unpack(x);
        Eigen::VectorXd r(2 * kNumLandmarks);
        for (int i = 0; i < kNumLandmarks; ++i) {
            const Vec3d pc = pose * world[i];
            if (!(pc.z() > 0.0)) {
                // Penalise solutions pushing points behind the camera.
                r.segment<2>(2 * i).setConstant(1e6 * (1.0 - pc.z()));
                continue;
            }
            r.segment<2>(2 * i) = project_point(pc, cam) - image[i];
        }
        return r;
    };

    Eigen::VectorXd x0(6);
    x0.head<3>().setZero();
    x0.tail<3>() = initial.translation;

    detail::LevMarOptions opts;
    opts.max_iterations = 30;
    opts.step_tol = 1e-10;
    opts.residual_tol = 1e-12;
    const detail::LevMarResult lm_res = detail::levenberg_marquardt(residuals, x0, opts);

    RigidTransform refined = unpack(lm_res.params);
    double refined_err = mean_reprojection_error(world, image, refined, cam);
    if (refined_err > initial_err) {  // never worse than the EPnP solution
        refined = initial;
        refined_err = initial_err;
    }

    if (!std::isfinite(refined_err) || refined_err > kPoseFailureReprojPx)
        throw GazeError(errc::pose_failure, "pose refinement diverged");
    for (const auto& p : world)
        if (!((refined * p).z() > 0.0))
            throw GazeError(errc::pose_failure, "landmarks behind camera after solve");

    PoseEstimate est;
    est.pose = refined;
    est.mean_reprojection_error_px = refined_err;
    est.initial_reprojection_error_px = initial_err;
    est.iterations = lm_res.iterations;
    return est;
}

}  // namespace gazekit
