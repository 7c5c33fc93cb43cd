#include "gazekit/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "gazekit/geometry.hpp"
#include "gazekit/io.hpp"

namespace gazekit {

namespace {

// Near intersection of the camera ray through `px` with a sphere. The pupil
// sits on the camera-facing hemisphere, so the near root is the physical one;
// exact tangency is accepted.
Vec3d intersect_eye_sphere(const Vec2d& px, const Vec3d& center, double radius,
                           const CameraIntrinsics& cam) {
    const Vec3d d = pixel_ray(px, cam);
    const double proj = d.dot(center);
    double disc = proj * proj - (center.squaredNorm() - radius * radius);
    if (disc < 0.0) {
        if (disc < -1e-6 * radius * radius)
            throw GazeError(errc::no_intersection, "iris ray misses the eyeball sphere");
        disc = 0.0;  // numerically tangent
    }
    const double t = proj - std::sqrt(disc);
    if (!(t > 0.0))
        throw GazeError(errc::no_intersection, "eyeball sphere behind the camera");
    return t * d;
}

}  // namespace

std::pair<GazeSample, GazeSample> geometric_estimate(const EstimatorInput& input,
                                                     const FaceModel3D& model,
                                                     const CameraIntrinsics& cam) {
    if (!input.landmarks.iris_centers)
        throw GazeError(errc::estimator_unavailable,
                        "geometric estimator requires iris centers");
    std::pair<GazeSample, GazeSample> out;
    for (int eye = 0; eye < 2; ++eye) {
        const Vec3d center = input.head_pose * model.eyeball_centers[eye];
        const Vec3d pupil =
            intersect_eye_sphere((*input.landmarks.iris_centers)[eye], center,
                                 model.eyeball_radius, cam);
        GazeSample s;
        s.origin = center;
        s.direction = (pupil - center).normalized();
        s.timestamp = input.timestamp;
        (eye == 0 ? out.first : out.second) = s;
    }
    return out;
}

std::vector<GazeSample> GeometricEstimator::estimate(const EstimatorInput& input) const {
    if (!input.landmarks.iris_centers)
        throw GazeError(errc::estimator_unavailable,
                        "geometric estimator requires iris centers");
    std::vector<GazeSample> rays;
    GazeError last{errc::estimator_unavailable, "no eye produced a solution"};
    for (int eye = 0; eye < 2; ++eye) {
        try {
            const Vec3d center = input.head_pose * model_.eyeball_centers[eye];
            const Vec3d pupil =
                intersect_eye_sphere((*input.landmarks.iris_centers)[eye], center,
                                     model_.eyeball_radius, cam_);
            rays.push_back({center, (pupil - center).normalized(), input.timestamp});
        } catch (const GazeError& e) {
            last = e;  // that eye is skipped
        }
    }
    if (rays.empty()) throw GazeError(errc::estimator_unavailable, last.what());
    return rays;
}

ReplayEstimator::ReplayEstimator(std::vector<EstimateRecord> records, std::string source_id,
                                 std::optional<ScreenModel> screen, Timestamp window_us)
    : records_(std::move(records)), source_id_(std::move(source_id)), screen_(screen),
      window_us_(window_us) {
    for (size_t i = 0; i < records_.size(); ++i) {
        if (records_[i].source_id != source_id_)
            throw GazeError(errc::config_error, "replay record from a different source");
        if (i > 0 && records_[i].timestamp <= records_[i - 1].timestamp)
            throw GazeError(errc::parse_error,
                            "replay timestamps must be strictly increasing");
    }
}

const EstimateRecord& ReplayEstimator::nearest(Timestamp t) const {
    if (records_.empty())
        throw GazeError(errc::estimator_unavailable, "replay stream is empty");
    const auto it = std::lower_bound(records_.begin(), records_.end(), t,
                                     [](const EstimateRecord& r, Timestamp ts) {
                                         return r.timestamp < ts;
                                     });
    const EstimateRecord* best = nullptr;
    if (it != records_.end()) best = &*it;
    if (it != records_.begin()) {
        const EstimateRecord* prev = &*(it - 1);
        if (!best || std::llabs(prev->timestamp - t) <= std::llabs(best->timestamp - t))
            best = prev;
    }
    if (!best || std::llabs(best->timestamp - t) > window_us_)
        throw GazeError(errc::estimator_unavailable,
                        "no replay record within the matching window");
    return *best;
}

std::vector<GazeSample> ReplayEstimator::estimate(const EstimatorInput& input) const {
    const EstimateRecord& rec = nearest(input.timestamp);
    if (!input.normalized)
        throw GazeError(errc::estimator_unavailable,
                        "replay estimator needs the frame's face center");
    const Vec3d fc = input.normalized->face_center_cam;

    if (rec.kind() == PayloadKind::direction_3d) {
        GazeSample s;
        s.origin = fc;
        s.direction = std::get<Vec3d>(rec.payload);  // logged value, verbatim
        s.timestamp = input.timestamp;
        return {s};
    }
    if (!screen_)
        throw GazeError(errc::estimator_unavailable,
                        "2D replay payloads need a screen model to lift");
    const Vec3d target = screen_px_to_camera_3d(std::get<Vec2d>(rec.payload), *screen_);
    GazeSample s = gaze_from_target(fc, target, input.timestamp);
    return {s};
}

ReplayEstimator load_replay_estimator(const std::string& path, const std::string& source_id,
                                      std::optional<ScreenModel> screen, Timestamp window_us) {
    return ReplayEstimator(io::parse_replay_records(path, source_id), source_id, screen,
                           window_us);
}

}  // namespace gazekit
