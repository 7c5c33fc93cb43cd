#include "gazekit/bench.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gazekit/geometry.hpp"
#include "gazekit/headpose.hpp"
#include "gazekit/io.hpp"

namespace gazekit {

namespace {

using ordered_json = nlohmann::ordered_json;

// Nearest element by timestamp in a time-sorted vector, or null when empty.
template <typename T, typename GetTs>
const T* nearest_by_time(const std::vector<T>& items, Timestamp t, GetTs get_ts) {
    if (items.empty()) return nullptr;
    const auto it = std::lower_bound(items.begin(), items.end(), t,
                                     [&](const T& a, Timestamp ts) { return get_ts(a) < ts; });
    const T* best = nullptr;
    if (it != items.end()) best = &*it;
    if (it != items.begin()) {
        const T* prev = &*(it - 1);
        if (!best || std::llabs(get_ts(*prev) - t) <= std::llabs(get_ts(*best) - t)) best = prev;
    }
    return best;
}

struct ScoredSample {
    Timestamp timestamp = 0;
    Vec2d target_px = Vec2d::Zero();
    Vec2d estimate_px = Vec2d::Zero();  // raw on-screen estimate, uncalibrated
    Vec3d face_center = Vec3d::Zero();
};

// Runs pose estimation, normalization and the estimator over every matched
// sample; frames the estimator (or the geometry) cannot serve are skipped and
// counted.
std::vector<ScoredSample> collect_scored(const SessionLog& log, const Estimator& estimator,
                                         Timestamp window_us, const EvalContext& ctx,
                                         int* dropped_alignment, int* skipped_estimator) {
    const AlignmentResult aligned = align_to_clicks(log, window_us);
    if (dropped_alignment) *dropped_alignment = aligned.dropped;

    std::vector<ScoredSample> scored;
    int skipped = 0;
    for (const MatchedSample& m : aligned.matched) {
        try {
            const PoseEstimate pose = estimate_head_pose(m.landmarks, ctx.face_model,
                                                         log.meta.camera);
            const Vec3d fc = face_center(pose.pose, ctx.face_model);
            EstimatorInput input;
            input.landmarks = m.landmarks;
            input.head_pose = pose.pose;
            input.normalized =
                compute_normalization(fc, pose.pose, log.meta.camera, ctx.norm);
            input.timestamp = m.landmarks.timestamp;

            const std::vector<GazeSample> rays = estimator.estimate(input);
            if (rays.empty()) throw GazeError(errc::estimator_unavailable, "no rays");

            ScoredSample s;
            s.timestamp = m.click.timestamp;
            s.target_px = m.click.target_px;
            s.face_center = fc;
            if (rays.size() == 1) {
                s.estimate_px = intersect_ray_screen(rays[0], log.meta.screen).px;
            } else {
                s.estimate_px = midpoint_gaze_point(rays[0], rays[1], log.meta.screen).px;
            }
            scored.push_back(s);
        } catch (const GazeError&) {
            ++skipped;
        }
    }
    if (skipped_estimator) *skipped_estimator = skipped;
    return scored;
}

EvalResult score_split(const std::vector<ScoredSample>& scored_in, const SessionLog& log,
                       const EvalOptions& opts) {
    std::vector<ScoredSample> scored = scored_in;
    if (opts.shuffle_split) {
        SplitMix64 rng(opts.shuffle_seed);
        for (size_t i = scored.size(); i > 1; --i)
            std::swap(scored[i - 1], scored[size_t(rng.next_u64() % i)]);
    }
    if (opts.n_cal < 0 || opts.n_test <= 0)
        throw GazeError(errc::config_error, "split needs n_cal >= 0 and n_test > 0");
    if (opts.fixed_profile && opts.n_cal != 0)
        throw GazeError(errc::config_error, "fixed profile and n_cal > 0 are exclusive");
    if (size_t(opts.n_cal) + size_t(opts.n_test) > scored.size())
        throw GazeError(errc::insufficient_data,
                        "split needs " + std::to_string(opts.n_cal + opts.n_test) +
                            " usable samples, session has " + std::to_string(scored.size()));

    CalibrationProfile profile;
    bool use_profile = false;
    if (opts.fixed_profile) {
        profile = *opts.fixed_profile;
        use_profile = true;
    } else if (opts.n_cal > 0) {
        std::vector<CalibrationPair> pairs;
        for (int i = 0; i < opts.n_cal; ++i)
            pairs.emplace_back(scored[i].estimate_px, scored[i].target_px);
        profile = fit_personal_calibration(pairs, dims_of(log.meta.screen));
        use_profile = true;
    }

    EvalResult result;
    result.n_calibration = opts.fixed_profile ? profile.n_samples : opts.n_cal;
    result.condition_tag = log.meta.condition_tag;
    result.distance_mm = log.meta.distance_mm;

    Vec3d fc_avg = Vec3d::Zero();
    if (opts.average_face_center) {
        for (const ScoredSample& s : scored) fc_avg += s.face_center;
        fc_avg /= double(scored.size());
    }

    for (size_t i = scored.size() - size_t(opts.n_test); i < scored.size(); ++i) {
        const ScoredSample& s = scored[i];
        const Vec2d corrected =
            use_profile ? apply_calibration(profile, s.estimate_px).px : s.estimate_px;
        const Vec3d anchor = opts.average_face_center ? fc_avg : s.face_center;
        const GazeSample truth =
            gaze_from_target(anchor, screen_px_to_camera_3d(s.target_px, log.meta.screen));
        const GazeSample est =
            gaze_from_target(anchor, screen_px_to_camera_3d(corrected, log.meta.screen));
        result.per_sample_errors_deg.push_back(
            angular_error_deg(est.direction, truth.direction));
    }
    result.n_test = int(result.per_sample_errors_deg.size());

    const auto& errs = result.per_sample_errors_deg;
    result.mean_deg = std::accumulate(errs.begin(), errs.end(), 0.0) / double(errs.size());
    if (errs.size() > 1) {
        double sq = 0.0;
        for (double e : errs) sq += (e - result.mean_deg) * (e - result.mean_deg);
        result.std_deg = std::sqrt(sq / double(errs.size() - 1));
    }
    return result;
}

}  // namespace

AlignmentResult align_to_clicks(const SessionLog& log, Timestamp window_us,
                                const std::vector<std::string>& required_sources) {
    AlignmentResult out;
    out.total_clicks = int(log.clicks.size());
    for (const ClickEvent& click : log.clicks) {
        const LandmarkSet* lm = nearest_by_time(log.landmarks, click.timestamp,
                                                [](const LandmarkSet& l) { return l.timestamp; });
        if (!lm || std::llabs(lm->timestamp - click.timestamp) > window_us) {
            ++out.dropped;
            ++out.dropped_no_landmark;
            continue;
        }
        MatchedSample m;
        m.click = click;
        m.landmarks = *lm;
        bool missing_required = false;
        for (const auto& [source, records] : log.estimates) {
            const EstimateRecord* rec = nearest_by_time(
                records, click.timestamp, [](const EstimateRecord& r) { return r.timestamp; });
            if (rec && std::llabs(rec->timestamp - click.timestamp) <= window_us) {
                m.estimates.emplace(source, *rec);
            } else if (std::find(required_sources.begin(), required_sources.end(), source) !=
                       required_sources.end()) {
                missing_required = true;
            }
        }
        for (const std::string& source : required_sources)
            if (!log.estimates.count(source)) missing_required = true;
        if (missing_required) {
            ++out.dropped;
            ++out.dropped_no_estimate;
            continue;
        }
        out.matched.push_back(std::move(m));
    }
    return out;
}

EvalResult evaluate_session(const SessionLog& log, const Estimator& estimator,
                            const EvalOptions& opts, const EvalContext& ctx) {
    int dropped = 0, skipped = 0;
    const auto scored = collect_scored(log, estimator, opts.window_us, ctx, &dropped, &skipped);
    EvalResult result = score_split(scored, log, opts);
    result.n_dropped_alignment = dropped;
    result.n_skipped_estimator = skipped;
    result.estimator_id = std::string(estimator.id());
    return result;
}

CalibrationProfile calibrate_from_session(const SessionLog& log, const Estimator& estimator,
                                          int n_cal, Timestamp window_us,
                                          const EvalContext& ctx) {
    if (n_cal <= 0)
        throw GazeError(errc::config_error, "calibration needs n_cal > 0");
    const auto scored = collect_scored(log, estimator, window_us, ctx, nullptr, nullptr);
    if (size_t(n_cal) > scored.size())
        throw GazeError(errc::insufficient_data,
                        "calibration needs " + std::to_string(n_cal) + " usable samples, got " +
                            std::to_string(scored.size()));
    std::vector<CalibrationPair> pairs;
    for (int i = 0; i < n_cal; ++i) pairs.emplace_back(scored[i].estimate_px, scored[i].target_px);
    return fit_personal_calibration(pairs, dims_of(log.meta.screen));
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

std::string estimator_kind_name(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::geometric: return "geometric";
        case EstimatorKind::sim_direction: return "sim3d";
        case EstimatorKind::sim_screen: return "sim2d";
    }
    return "unknown";
}

EstimatorKind estimator_kind_from_name(const std::string& name) {
    if (name == "geometric") return EstimatorKind::geometric;
    if (name == "sim3d") return EstimatorKind::sim_direction;
    if (name == "sim2d") return EstimatorKind::sim_screen;
    throw GazeError(errc::config_error, "unknown estimator kind '" + name + "'");
}

std::vector<int> default_calibration_counts() {
    return {0, 1, 2, 3, 4, 5, 7, 10, 15, 20, 30, 40, 50, 60};
}

namespace {

std::unique_ptr<Estimator> make_estimator(EstimatorKind kind, const SessionLog& log,
                                          const FaceModel3D& model) {
    switch (kind) {
        case EstimatorKind::geometric:
            return std::make_unique<GeometricEstimator>(model, log.meta.camera);
        case EstimatorKind::sim_direction: {
            const auto it = log.estimates.find(kSimDirectionSource);
            if (it == log.estimates.end())
                throw GazeError(errc::config_error, "session has no sim3d stream");
            return std::make_unique<ReplayEstimator>(it->second, kSimDirectionSource,
                                                     std::nullopt);
        }
        case EstimatorKind::sim_screen: {
            const auto it = log.estimates.find(kSimScreenSource);
            if (it == log.estimates.end())
                throw GazeError(errc::config_error, "session has no sim2d stream");
            return std::make_unique<ReplayEstimator>(it->second, kSimScreenSource,
                                                     log.meta.screen);
        }
    }
    throw GazeError(errc::config_error, "unknown estimator kind");
}

struct CellStats {
    double mean = 0.0;
    double stddev = 0.0;
    int dropped = 0;
};

// One sweep cell: `trials` fresh sessions, evaluated and aggregated.
// Per-session means are averaged (pooled mode concatenates samples instead).
CellStats run_cell(const SweepSpec& spec, const SceneConfig& cfg, int n_cal,
                   const FaceModel3D& model, const CameraIntrinsics& cam,
                   const ScreenModel& screen, std::uint64_t cell_id) {
    std::vector<double> values;
    CellStats stats;
    for (int trial = 0; trial < spec.trials; ++trial) {
        SceneConfig trial_cfg = cfg;
        trial_cfg.seed = split_stream(spec.base_seed, cell_id, std::uint64_t(trial)).next_u64();
        const SyntheticSession session = generate_session(trial_cfg, model, cam, screen);
        const auto estimator = make_estimator(spec.estimator, session.log, model);
        EvalOptions opts;
        opts.n_cal = n_cal;
        opts.n_test = spec.n_test;
        const EvalResult r = evaluate_session(session.log, *estimator, opts);
        stats.dropped += r.n_dropped_alignment + r.n_skipped_estimator;
        if (spec.pooled)
            values.insert(values.end(), r.per_sample_errors_deg.begin(),
                          r.per_sample_errors_deg.end());
        else
            values.push_back(r.mean_deg);
    }
    stats.mean = std::accumulate(values.begin(), values.end(), 0.0) / double(values.size());
    if (values.size() > 1) {
        double sq = 0.0;
        for (double v : values) sq += (v - stats.mean) * (v - stats.mean);
        stats.stddev = std::sqrt(sq / double(values.size() - 1));
    }
    return stats;
}

}  // namespace

SweepTable sweep_distance(const SweepSpec& spec, const FaceModel3D& model,
                          const CameraIntrinsics& cam, const ScreenModel& screen) {
    if (spec.distances_mm.empty())
        throw GazeError(errc::config_error, "distance sweep needs at least one distance");
    SweepTable table;
    for (size_t i = 0; i < spec.distances_mm.size(); ++i) {
        SceneConfig cfg = spec.scene;
        cfg.distance_mm = spec.distances_mm[i];
        const CellStats stats =
            run_cell(spec, cfg, spec.n_cal, model, cam, screen, std::uint64_t(i));
        table.rows.push_back({spec.distances_mm[i], spec.n_cal,
                              estimator_kind_name(spec.estimator), stats.mean, stats.stddev,
                              spec.trials, stats.dropped});
    }
    return table;
}

SweepTable sweep_calibration_samples(const SweepSpec& spec, const FaceModel3D& model,
                                     const CameraIntrinsics& cam, const ScreenModel& screen) {
    if (spec.counts.empty())
        throw GazeError(errc::config_error, "calibration sweep needs at least one count");
    const int max_count = *std::max_element(spec.counts.begin(), spec.counts.end());
    if (max_count + spec.n_test > spec.scene.n_samples)
        throw GazeError(errc::config_error,
                        "max(counts) + n_test exceeds the session sample count");

    // Counts are compared on the same sessions (paired, as in the recording
    // protocol: one recording, varying calibration subsets), so each trial
    // session is generated and pose-processed once.
    constexpr std::uint64_t kSessionStream = 0x2000;
    std::vector<std::vector<double>> cell_values(spec.counts.size());
    std::vector<int> cell_dropped(spec.counts.size(), 0);
    EvalContext ctx;
    ctx.face_model = model;
    for (int trial = 0; trial < spec.trials; ++trial) {
        SceneConfig cfg = spec.scene;
        cfg.seed = split_stream(spec.base_seed, kSessionStream, std::uint64_t(trial)).next_u64();
        const SyntheticSession session = generate_session(cfg, model, cam, screen);
        const auto estimator = make_estimator(spec.estimator, session.log, model);
        int dropped = 0, skipped = 0;
        const auto scored =
            collect_scored(session.log, *estimator, 100'000, ctx, &dropped, &skipped);
        for (size_t i = 0; i < spec.counts.size(); ++i) {
            EvalOptions opts;
            opts.n_cal = spec.counts[i];
            opts.n_test = spec.n_test;
            const EvalResult r = score_split(scored, session.log, opts);
            cell_dropped[i] += dropped + skipped;
            if (spec.pooled)
                cell_values[i].insert(cell_values[i].end(), r.per_sample_errors_deg.begin(),
                                      r.per_sample_errors_deg.end());
            else
                cell_values[i].push_back(r.mean_deg);
        }
    }

    SweepTable table;
    for (size_t i = 0; i < spec.counts.size(); ++i) {
        const auto& values = cell_values[i];
        const double mean =
            std::accumulate(values.begin(), values.end(), 0.0) / double(values.size());
        double sq = 0.0;
        for (double v : values) sq += (v - mean) * (v - mean);
        const double stddev = values.size() > 1 ? std::sqrt(sq / double(values.size() - 1)) : 0.0;
        table.rows.push_back({spec.scene.distance_mm, spec.counts[i],
                              estimator_kind_name(spec.estimator), mean, stddev, spec.trials,
                              cell_dropped[i]});
    }
    return table;
}

// ---------------------------------------------------------------------------
// Reporting
// ---------------------------------------------------------------------------

std::string sweep_table_to_csv(const SweepTable& table) {
    if (table.rows.empty())
        throw GazeError(errc::insufficient_data, "refusing to write an empty table");
    std::ostringstream out;
    for (size_t i = 0; i < table.columns.size(); ++i)
        out << (i ? "," : "") << table.columns[i];
    out << "\n";
    for (const SweepRow& r : table.rows)
        out << io::format_double(r.distance_mm) << "," << r.n_cal << "," << r.estimator << ","
            << io::format_double(r.mean_deg) << "," << io::format_double(r.std_deg) << ","
            << r.trials << "," << r.dropped << "\n";
    return out.str();
}

std::string sweep_table_to_json(const SweepTable& table) {
    if (table.rows.empty())
        throw GazeError(errc::insufficient_data, "refusing to write an empty table");
    ordered_json j;
    j["format"] = "gazekit-sweep-result";
    j["version"] = 1;
    j["columns"] = table.columns;
    ordered_json rows = ordered_json::array();
    for (const SweepRow& r : table.rows) {
        ordered_json row;
        row["distance_mm"] = r.distance_mm;
        row["n_cal"] = r.n_cal;
        row["estimator"] = r.estimator;
        row["mean_deg"] = r.mean_deg;
        row["std_deg"] = r.std_deg;
        row["trials"] = r.trials;
        row["dropped"] = r.dropped;
        rows.push_back(row);
    }
    j["rows"] = rows;
    return j.dump(2) + "\n";
}

SweepTable parse_sweep_csv_text(std::string_view text) {
    SweepTable table;
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line.find("distance_mm") != 0)
        throw GazeError(errc::parse_error, "missing sweep CSV header");
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.size() != 7)
            throw GazeError(errc::parse_error,
                            "sweep CSV line " + std::to_string(line_no) + ": need 7 fields");
        try {
            SweepRow r;
            r.distance_mm = std::stod(fields[0]);
            r.n_cal = std::stoi(fields[1]);
            r.estimator = fields[2];
            r.mean_deg = std::stod(fields[3]);
            r.std_deg = std::stod(fields[4]);
            r.trials = std::stoi(fields[5]);
            r.dropped = std::stoi(fields[6]);
            table.rows.push_back(std::move(r));
        } catch (const std::exception&) {
            throw GazeError(errc::parse_error,
                            "sweep CSV line " + std::to_string(line_no) + ": bad field");
        }
    }
    return table;
}

void write_sweep_table(const SweepTable& table, const std::string& path,
                       const std::string& format) {
    if (format == "csv")
        io::write_file_atomic(path, sweep_table_to_csv(table));
    else if (format == "json")
        io::write_file_atomic(path, sweep_table_to_json(table));
    else
        throw GazeError(errc::config_error, "unknown report format '" + format + "'");
}

std::string eval_result_to_csv(const EvalResult& r) {
    std::ostringstream out;
    out << "index,error_deg\n";
    for (size_t i = 0; i < r.per_sample_errors_deg.size(); ++i)
        out << i << "," << io::format_double(r.per_sample_errors_deg[i]) << "\n";
    return out.str();
}

std::string eval_result_to_json(const EvalResult& r) {
    ordered_json j;
    j["format"] = "gazekit-eval-result";
    j["version"] = 1;
    j["estimator"] = r.estimator_id;
    j["condition"] = r.condition_tag;
    j["distance_mm"] = r.distance_mm;
    j["n_calibration"] = r.n_calibration;
    j["n_test"] = r.n_test;
    j["n_dropped_alignment"] = r.n_dropped_alignment;
    j["n_skipped_estimator"] = r.n_skipped_estimator;
    j["mean_deg"] = r.mean_deg;
    j["std_deg"] = r.std_deg;
    j["per_sample_errors_deg"] = r.per_sample_errors_deg;
    return j.dump(2) + "\n";
}

void write_eval_result(const EvalResult& result, const std::string& path,
                       const std::string& format) {
    if (format == "csv")
        io::write_file_atomic(path, eval_result_to_csv(result));
    else if (format == "json")
        io::write_file_atomic(path, eval_result_to_json(result));
    else
        throw GazeError(errc::config_error, "unknown report format '" + format + "'");
}

SweepSpec parse_sweep_spec_text(std::string_view text) {
    ordered_json j = ordered_json::parse(text, nullptr, false);
    if (j.is_discarded()) throw GazeError(errc::parse_error, "malformed sweep spec JSON");
    if (!j.is_object() || !j.contains("format") || j["format"] != "gazekit-sweep")
        throw GazeError(errc::parse_error, "sweep spec must have format 'gazekit-sweep'");
    if (!j.contains("version") || !j["version"].is_number_integer() ||
        j["version"].get<int>() > 1)
        throw GazeError(errc::parse_error, "unsupported sweep spec version");

    SweepSpec spec;
    const std::string type = j.value("type", "distance");
    if (type == "distance")
        spec.type = SweepSpec::Type::distance;
    else if (type == "calibration-samples")
        spec.type = SweepSpec::Type::calibration_samples;
    else
        throw GazeError(errc::parse_error, "unknown sweep type '" + type + "'");

    if (j.contains("distances_mm")) {
        spec.distances_mm.clear();
        for (const auto& v : j["distances_mm"]) {
            if (!v.is_number()) throw GazeError(errc::parse_error, "bad distance entry");
            spec.distances_mm.push_back(v.get<double>());
        }
    }
    if (j.contains("counts")) {
        spec.counts.clear();
        for (const auto& v : j["counts"]) {
            if (!v.is_number_integer()) throw GazeError(errc::parse_error, "bad count entry");
            spec.counts.push_back(v.get<int>());
        }
    }
    spec.trials = j.value("trials", spec.trials);
    if (spec.trials <= 0) throw GazeError(errc::parse_error, "trials must be positive");
    spec.base_seed = j.value("base_seed", spec.base_seed);
    spec.estimator = estimator_kind_from_name(j.value("estimator", std::string("geometric")));
    spec.n_cal = j.value("n_cal", spec.n_cal);
    spec.n_test = j.value("n_test", spec.n_test);
    spec.pooled = j.value("pooled", spec.pooled);

    if (j.contains("scene")) {
        const auto& s = j["scene"];
        if (!s.is_object()) throw GazeError(errc::parse_error, "'scene' must be an object");
        spec.scene.distance_mm = s.value("distance_mm", spec.scene.distance_mm);
        spec.scene.region_width_deg = s.value("region_width_deg", spec.scene.region_width_deg);
        spec.scene.region_height_deg = s.value("region_height_deg", spec.scene.region_height_deg);
        spec.scene.n_samples = s.value("n_samples", spec.scene.n_samples);
        spec.scene.landmark_noise_px = s.value("landmark_noise_px", spec.scene.landmark_noise_px);
        spec.scene.iris_noise_px = s.value("iris_noise_px", spec.scene.iris_noise_px);
        spec.scene.direction_noise_deg =
            s.value("direction_noise_deg", spec.scene.direction_noise_deg);
        spec.scene.direction_bias_deg =
            s.value("direction_bias_deg", spec.scene.direction_bias_deg);
        spec.scene.jitter_yaw_deg = s.value("jitter_yaw_deg", spec.scene.jitter_yaw_deg);
        spec.scene.jitter_pitch_deg = s.value("jitter_pitch_deg", spec.scene.jitter_pitch_deg);
        spec.scene.jitter_roll_deg = s.value("jitter_roll_deg", spec.scene.jitter_roll_deg);
        spec.scene.condition_tag = s.value("condition", spec.scene.condition_tag);
        spec.scene.validate();
    }
    return spec;
}

SweepSpec parse_sweep_spec(const std::string& path) {
    try {
        return parse_sweep_spec_text(io::read_file(path));
    } catch (const GazeError& e) {
        if (e.code() == errc::io_error) throw;
        throw GazeError(errc::parse_error, path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Welch's t-test
// ---------------------------------------------------------------------------

namespace {

// Regularized incomplete beta via Lentz's continued fraction.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-14;
    constexpr double kFpMin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

double betai(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                               a * std::log(x) + b * std::log(1.0 - x));
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2)
        throw GazeError(errc::insufficient_data, "t-test needs at least 2 samples per group");
    const double na = double(a.size()), nb = double(b.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / na;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / nb;
    double va = 0.0, vb = 0.0;
    for (double v : a) va += (v - ma) * (v - ma);
    for (double v : b) vb += (v - mb) * (v - mb);
    va /= (na - 1.0);
    vb /= (nb - 1.0);

    const double se2 = va / na + vb / nb;
    if (se2 <= 0.0)
        throw GazeError(errc::numerical_failure, "zero variance in both groups");
    WelchResult r;
    r.t = (ma - mb) / std::sqrt(se2);
    r.dof = se2 * se2 /
            (va * va / (na * na * (na - 1.0)) + vb * vb / (nb * nb * (nb - 1.0)));
    // Two-tailed p for Student's t: I_{dof/(dof+t^2)}(dof/2, 1/2).
    r.p_two_tailed = betai(r.dof / 2.0, 0.5, r.dof / (r.dof + r.t * r.t));
    return r;
}

}  // namespace gazekit
