#include "gazekit/calibration.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace gazekit {

Eigen::Matrix<double, kCalibBasisSize, 1> cubic_basis(double x, double y) {
    Eigen::Matrix<double, kCalibBasisSize, 1> b;
    b << 1.0, x, y, x * x, x * y, y * y, x * x * x, x * x * y, x * y * y, y * y * y;
    return b;
}

CalibrationProfile CalibrationProfile::identity(double width_px, double height_px) {
    CalibrationProfile p;
    p.norm_width_px = width_px;
    p.norm_height_px = height_px;
    p.coeffs(0, 1) = 1.0;  // x_out = x
    p.coeffs(1, 2) = 1.0;  // y_out = y
    p.region_min = {0.0, 0.0};
    p.region_max = {width_px, height_px};
    return p;
}

namespace {

// Minimum-norm solution restricted to the top `rank` singular directions.
// Singular values below 1e-10 * sigma_max are always truncated.
Eigen::Matrix<double, 2, kCalibBasisSize> tsvd_solve(const Eigen::JacobiSVD<Eigen::MatrixXd>& svd,
                                                     const Eigen::MatrixXd& rhs, int rank) {
    const auto& sv = svd.singularValues();
    Eigen::Matrix<double, 2, kCalibBasisSize> coeffs =
        Eigen::Matrix<double, 2, kCalibBasisSize>::Zero();
    for (int i = 0; i < std::min<int>(rank, int(sv.size())); ++i) {
        if (sv[i] <= 1e-10 * sv[0]) break;
        for (int axis = 0; axis < 2; ++axis)
            coeffs.row(axis) +=
                (svd.matrixU().col(i).dot(rhs.col(axis)) / sv[i]) * svd.matrixV().col(i).transpose();
    }
    return coeffs;
}

double in_sample_rms(const Eigen::MatrixXd& a, const Eigen::MatrixXd& rhs,
                     const Eigen::Matrix<double, 2, kCalibBasisSize>& coeffs) {
    return std::sqrt((a * coeffs.transpose() - rhs).squaredNorm() / double(a.rows()));
}

// Truncation rank chosen by leave-one-out cross-validation. Plain
// interpolation of noisy samples at random nodes is wildly unstable around
// n ~ 10 (the square case interpolates the noise exactly), which broke the
// expected error-vs-samples trend; restricting the pseudoinverse to the rank
// that predicts held-out samples best keeps the fit stable for small n while
// still selecting the full rank (exact recovery) for consistent data.
int select_rank_loo(const Eigen::MatrixXd& a, const Eigen::MatrixXd& rhs) {
    const int n = int(a.rows());
    const int max_rank = int(std::min<Eigen::Index>(a.rows(), a.cols()));
    Eigen::VectorXd cv = Eigen::VectorXd::Zero(max_rank + 1);
    Eigen::MatrixXd a_loo(n - 1, a.cols());
    Eigen::MatrixXd rhs_loo(n - 1, 2);
    for (int i = 0; i < n; ++i) {
        int r = 0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            a_loo.row(r) = a.row(j);
            rhs_loo.row(r) = rhs.row(j);
            ++r;
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(a_loo,
                                              Eigen::ComputeThinU | Eigen::ComputeThinV);
        for (int k = 1; k <= max_rank; ++k) {
            const auto coeffs = tsvd_solve(svd, rhs_loo, k);
            cv[k] += (coeffs * a.row(i).transpose() - rhs.row(i).transpose()).squaredNorm();
        }
    }
    int best = 1;
    for (int k = 2; k <= max_rank; ++k)
        if (cv[k] < cv[best]) best = k;
    return best;
}

}  // namespace

CalibrationProfile fit_personal_calibration(const std::vector<CalibrationPair>& pairs,
                                            const ScreenDims& screen, Timestamp created_at) {
    if (pairs.empty())
        throw GazeError(errc::insufficient_data,
                        "personal calibration needs at least one sample pair");
    for (const auto& [est, truth] : pairs)
        if (!est.allFinite() || !truth.allFinite())
            throw GazeError(errc::invalid_vector, "non-finite calibration pair");

    CalibrationProfile profile;
    profile.n_samples = int(pairs.size());
    profile.created_at = created_at;
    profile.norm_width_px = double(screen.width_px);
    profile.norm_height_px = double(screen.height_px);

    const int n = int(pairs.size());
    Eigen::MatrixXd a(n, kCalibBasisSize);
    Eigen::MatrixXd rhs(n, 2);
    profile.region_min = pairs.front().first;
    profile.region_max = pairs.front().first;
    for (int i = 0; i < n; ++i) {
        const Vec2d en = profile.to_normalized(pairs[i].first);
        a.row(i) = cubic_basis(en.x(), en.y()).transpose();
        rhs.row(i) = profile.to_normalized(pairs[i].second).transpose();
        profile.region_min = profile.region_min.cwiseMin(pairs[i].first);
        profile.region_max = profile.region_max.cwiseMax(pairs[i].first);
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (n == 1) {
        // A single pair cannot be cross-validated; keep the raw minimum-norm
        // interpolant (the underdetermined one-sample regime).
        profile.coeffs = tsvd_solve(svd, rhs, kCalibBasisSize);
    } else {
        int rank = select_rank_loo(a, rhs);
        profile.coeffs = tsvd_solve(svd, rhs, rank);
        if (n >= kCalibBasisSize) {
            // The cubic basis contains the affine basis, so the fit must not
            // lose to the best affine fit in sample.
            const Eigen::MatrixXd affine =
                a.leftCols(3).colPivHouseholderQr().solve(rhs).eval();
            const double affine_rms =
                std::sqrt((a.leftCols(3) * affine - rhs).squaredNorm() / double(n));
            const int max_rank = int(std::min<Eigen::Index>(a.rows(), a.cols()));
            while (in_sample_rms(a, rhs, profile.coeffs) > affine_rms && rank < max_rank) {
                ++rank;
                profile.coeffs = tsvd_solve(svd, rhs, rank);
            }
        }
    }

    double sq_sum = 0.0;
    for (const auto& [est, truth] : pairs)
        sq_sum += (apply_calibration(profile, est).px - truth).squaredNorm();
    profile.rms_residual_px = std::sqrt(sq_sum / double(n));
    return profile;
}

CalibratedPoint apply_calibration(const CalibrationProfile& profile, const Vec2d& p) {
    if (!p.allFinite())
        throw GazeError(errc::invalid_vector, "non-finite point passed to apply_calibration");
    const Vec2d pn = profile.to_normalized(p);
    const Eigen::Matrix<double, kCalibBasisSize, 1> b = cubic_basis(pn.x(), pn.y());
    CalibratedPoint out;
    out.px = profile.from_normalized(profile.coeffs * b);
    out.extrapolated = (p.x() < profile.region_min.x() || p.x() > profile.region_max.x() ||
                        p.y() < profile.region_min.y() || p.y() > profile.region_max.y());
    return out;
}

}  // namespace gazekit
