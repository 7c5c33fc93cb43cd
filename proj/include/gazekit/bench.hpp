#pragma once

#include <map>
#include <string>
#include <vector>

#include "gazekit/estimators.hpp"
#include "gazekit/session.hpp"
#include "gazekit/synthlab.hpp"

// Experiment engine: temporal alignment of clicks to streams, session
// scoring with personal calibration splits, distance / calibration-count
// sweeps, and table output.

namespace gazekit {

struct MatchedSample {
    ClickEvent click;
    LandmarkSet landmarks;  // nearest frame within the window
    std::map<std::string, EstimateRecord> estimates;  // nearest record per source
};

struct AlignmentResult {
    std::vector<MatchedSample> matched;
    int total_clicks = 0;
    int dropped = 0;       // matched.size() + dropped == total_clicks
    int dropped_no_landmark = 0;
    int dropped_no_estimate = 0;
};

// For each click, the nearest-in-time landmark frame and estimate record per
// source within +-window. Clicks missing the landmark stream or any source
// in `required_sources` are dropped and counted.
AlignmentResult align_to_clicks(const SessionLog& log, Timestamp window_us,
                                const std::vector<std::string>& required_sources = {});

struct EvalOptions {
    int n_cal = 0;   // 0 = score raw estimates
    int n_test = 20;
    Timestamp window_us = 100'000;  // clicks vs ~30 fps frames
    bool shuffle_split = false;     // default: first n_cal in time order
    std::uint64_t shuffle_seed = 0;
    // Anchor scoring rays at the session-averaged face centre instead of the
    // per-frame one (the per-frame anchor is the default).
    bool average_face_center = false;
    // When set, applied to the test samples instead of fitting; n_cal must be 0.
    std::optional<CalibrationProfile> fixed_profile;
};

struct EvalContext {
    FaceModel3D face_model = default_face_model();
    NormalizationParams norm;
};

struct EvalResult {
    std::vector<double> per_sample_errors_deg;  // test samples, time order
    double mean_deg = 0.0;
    double std_deg = 0.0;  // sample standard deviation
    int n_calibration = 0;
    int n_test = 0;
    int n_dropped_alignment = 0;
    int n_skipped_estimator = 0;
    std::string estimator_id;
    std::string condition_tag;
    double distance_mm = 0.0;
};

// Fits personal calibration on the first n_cal matched samples (in time
// order), scores the last n_test against the click targets: both the
// corrected estimate and the ground truth are lifted to rays from the
// frame's face centre and compared by angular error.
EvalResult evaluate_session(const SessionLog& log, const Estimator& estimator,
                            const EvalOptions& opts, const EvalContext& ctx = {});

// Personal calibration profile from the first n_cal matched samples.
CalibrationProfile calibrate_from_session(const SessionLog& log, const Estimator& estimator,
                                          int n_cal, Timestamp window_us = 100'000,
                                          const EvalContext& ctx = {});

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

enum class EstimatorKind { geometric, sim_direction, sim_screen };

std::string estimator_kind_name(EstimatorKind k);
EstimatorKind estimator_kind_from_name(const std::string& name);

// The calibration-count ladder used by the evaluation protocol.
std::vector<int> default_calibration_counts();

struct SweepSpec {
    enum class Type { distance, calibration_samples };
    Type type = Type::distance;

    std::vector<double> distances_mm = {300, 500, 750, 1100, 1400, 1800};
    std::vector<int> counts = default_calibration_counts();

    int trials = 10;
    std::uint64_t base_seed = 1;
    EstimatorKind estimator = EstimatorKind::geometric;
    int n_cal = 0;    // calibration count for distance sweeps
    int n_test = 20;
    bool pooled = false;  // pool per-sample errors instead of averaging session means

    SceneConfig scene;  // template; distance and seed are overwritten per cell
};

struct SweepRow {
    double distance_mm = 0.0;
    int n_cal = 0;
    std::string estimator;
    double mean_deg = 0.0;
    double std_deg = 0.0;  // across trial means (or pooled samples)
    int trials = 0;
    int dropped = 0;  // alignment drops + estimator skips, summed over trials

    bool operator==(const SweepRow&) const = default;
};

struct SweepTable {
    std::vector<std::string> columns = {"distance_mm", "n_cal",  "estimator", "mean_deg",
                                        "std_deg",     "trials", "dropped"};
    std::vector<SweepRow> rows;

    bool operator==(const SweepTable&) const = default;
};

SweepTable sweep_distance(const SweepSpec& spec, const FaceModel3D& model,
                          const CameraIntrinsics& cam, const ScreenModel& screen);
SweepTable sweep_calibration_samples(const SweepSpec& spec, const FaceModel3D& model,
                                     const CameraIntrinsics& cam, const ScreenModel& screen);

// Table / result reporting with a stable column order.
std::string sweep_table_to_csv(const SweepTable& table);
std::string sweep_table_to_json(const SweepTable& table);
SweepTable parse_sweep_csv_text(std::string_view text);
void write_sweep_table(const SweepTable& table, const std::string& path,
                       const std::string& format);  // "csv" or "json"

std::string eval_result_to_csv(const EvalResult& result);
std::string eval_result_to_json(const EvalResult& result);
void write_eval_result(const EvalResult& result, const std::string& path,
                       const std::string& format);

SweepSpec parse_sweep_spec(const std::string& path);
SweepSpec parse_sweep_spec_text(std::string_view text);

// ---------------------------------------------------------------------------
// Statistics helpers
// ---------------------------------------------------------------------------

struct WelchResult {
    double t = 0.0;
    double dof = 0.0;
    double p_two_tailed = 1.0;
};

WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace gazekit
