#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>

#include "gazekit/bench.hpp"
#include "gazekit/calibration.hpp"
#include "gazekit/io.hpp"
#include "gazekit/synthlab.hpp"

// gazekit CLI: synthetic sessions, screen/person calibration, evaluation and
// sweeps over session logs. Exit codes: 0 success, 1 usage, 2 data error,
// 3 numerical failure.

namespace {

using namespace gazekit;

int exit_code_for(errc code) {
    switch (code) {
        case errc::parse_error:
        case errc::io_error:
        case errc::config_error:
        case errc::insufficient_data:
            return 2;
        default:
            return 3;
    }
}

std::unique_ptr<Estimator> make_session_estimator(const std::string& name, const SessionLog& log,
                                                  const FaceModel3D& model, Timestamp window_us) {
    if (name == "geometric")
        return std::make_unique<GeometricEstimator>(model, log.meta.camera);
    const auto it = log.estimates.find(name);
    if (it == log.estimates.end())
        throw GazeError(errc::config_error,
                        "estimator '" + name + "' is neither 'geometric' nor a session source");
    const bool has_px = !it->second.empty() &&
                        it->second.front().kind() == PayloadKind::screen_px;
    return std::make_unique<ReplayEstimator>(
        it->second, name, has_px ? std::optional<ScreenModel>(log.meta.screen) : std::nullopt,
        window_us);
}

struct CommonOpts {
    std::string face_model_path;
    FaceModel3D face_model() const {
        return face_model_path.empty() ? default_face_model()
                                       : io::parse_face_model(face_model_path);
    }
};

void cmd_simulate(CLI::App* app) {
    auto opts = std::make_shared<CommonOpts>();
    auto config_path = std::make_shared<std::string>();
    auto camera_path = std::make_shared<std::string>();
    auto screen_path = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>();
    auto seed = std::make_shared<std::uint64_t>(0);
    auto seed_set = std::make_shared<bool>(false);
    auto mirrors = std::make_shared<int>(0);
    auto mirror_noise = std::make_shared<double>(0.0);

    app->add_option("--config", *config_path, "scene config (key = value)");
    app->add_option("--camera", *camera_path, "camera intrinsics JSON");
    app->add_option("--screen", *screen_path, "screen model JSON");
    app->add_option("--face-model", opts->face_model_path, "face model config");
    app->add_option("--seed", *seed, "override the scene seed")->each([seed_set](const std::string&) {
        *seed_set = true;
    });
    app->add_option("--mirrors", *mirrors, "also emit K synthetic mirror observations");
    app->add_option("--mirror-noise-px", *mirror_noise, "corner noise for --mirrors");
    app->add_option("--out", *out_dir, "output directory")->required();

    app->callback([=]() {
        SceneConfig cfg =
            config_path->empty() ? SceneConfig{} : io::parse_scene_config(*config_path);
        if (*seed_set) cfg.seed = *seed;
        const CameraIntrinsics cam =
            camera_path->empty() ? default_camera() : io::parse_camera(*camera_path);
        const ScreenModel screen =
            screen_path->empty() ? default_screen() : io::parse_screen(*screen_path);
        const FaceModel3D model = opts->face_model();

        const SyntheticSession session = generate_session(cfg, model, cam, screen);
        std::filesystem::create_directories(*out_dir);
        const std::filesystem::path dir(*out_dir);
        io::write_session(session.log, (dir / "session.log").string());
        io::write_truth(session.truth, (dir / "truth.log").string());
        io::write_camera(cam, (dir / "camera.json").string());
        io::write_screen(screen, (dir / "screen.json").string());
        std::cout << "wrote " << (dir / "session.log").string() << " ("
                  << session.truth.size() << " samples)\n";

        if (*mirrors > 0) {
            const auto pattern = default_pattern_geometry(dims_of(screen));
            std::vector<MirrorObservation> obs;
            SplitMix64 rng(cfg.seed ^ 0x4D495252);
            for (int i = 0; i < *mirrors; ++i) {
                const double tilt = deg_to_rad(8.0 + 18.0 * i / std::max(1, *mirrors - 1));
                const double azim = deg_to_rad(360.0 * i / *mirrors);
                const MirrorPlane m{{std::sin(tilt) * std::cos(azim),
                                     std::sin(tilt) * std::sin(azim), std::cos(tilt)},
                                    480.0 + 40.0 * i};
                obs.push_back(
                    observe_pattern_via_mirror(screen, m, pattern, cam, *mirror_noise, &rng));
            }
            io::write_mirror_observations(obs, (dir / "mirrors.json").string());
            std::cout << "wrote " << (dir / "mirrors.json").string() << " (" << obs.size()
                      << " observations)\n";
        }
    });
}

void cmd_calibrate_screen(CLI::App* app) {
    auto obs_path = std::make_shared<std::string>();
    auto camera_path = std::make_shared<std::string>();
    auto screen_path = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();

    app->add_option("--obs", *obs_path, "mirror observations JSON")->required();
    app->add_option("--camera", *camera_path, "camera intrinsics JSON")->required();
    app->add_option("--screen", *screen_path,
                    "screen JSON supplying the physical/pixel dimensions")
        ->required();
    app->add_option("--out", *out_path, "output screen JSON")->required();

    app->callback([=]() {
        const auto obs = io::parse_mirror_observations(*obs_path);
        const CameraIntrinsics cam = io::parse_camera(*camera_path);
        const ScreenDims dims = dims_of(io::parse_screen(*screen_path));
        const ScreenCalibrationResult res = calibrate_screen_from_mirrors(obs, cam, dims);
        io::write_screen(res.screen, *out_path);
        std::cout << "screen pose solved from " << obs.size() << " mirrors, rms "
                  << res.rms_reprojection_px << " px -> " << *out_path << "\n";
    });
}

void cmd_calibrate_person(CLI::App* app) {
    auto opts = std::make_shared<CommonOpts>();
    auto session_path = std::make_shared<std::string>();
    auto estimator = std::make_shared<std::string>("geometric");
    auto n_cal = std::make_shared<int>(60);
    auto window_us = std::make_shared<Timestamp>(100'000);
    auto out_path = std::make_shared<std::string>();

    app->add_option("--session", *session_path, "session log")->required();
    app->add_option("--estimator", *estimator, "'geometric' or a session estimate source");
    app->add_option("--n-cal", *n_cal, "number of calibration samples");
    app->add_option("--window-us", *window_us, "click alignment window");
    app->add_option("--face-model", opts->face_model_path, "face model config");
    app->add_option("--out", *out_path, "output profile JSON")->required();

    app->callback([=]() {
        const SessionLog log = io::parse_session(*session_path);
        const FaceModel3D model = opts->face_model();
        const auto est = make_session_estimator(*estimator, log, model, *window_us);
        EvalContext ctx;
        ctx.face_model = model;
        const CalibrationProfile profile =
            calibrate_from_session(log, *est, *n_cal, *window_us, ctx);
        io::write_profile(profile, *out_path);
        std::cout << "profile fit on " << profile.n_samples << " samples, rms "
                  << profile.rms_residual_px << " px -> " << *out_path << "\n";
    });
}

void cmd_evaluate(CLI::App* app) {
    auto opts = std::make_shared<CommonOpts>();
    auto session_path = std::make_shared<std::string>();
    auto estimator = std::make_shared<std::string>("geometric");
    auto profile_path = std::make_shared<std::string>();
    auto n_cal = std::make_shared<int>(0);
    auto n_test = std::make_shared<int>(20);
    auto window_us = std::make_shared<Timestamp>(100'000);
    auto format = std::make_shared<std::string>("json");
    auto out_path = std::make_shared<std::string>();

    app->add_option("--session", *session_path, "session log")->required();
    app->add_option("--estimator", *estimator, "'geometric' or a session estimate source");
    app->add_option("--profile", *profile_path, "apply a pre-fitted profile JSON");
    app->add_option("--n-cal", *n_cal, "fit calibration on the first N matched samples");
    app->add_option("--n-test", *n_test, "score the last N matched samples");
    app->add_option("--window-us", *window_us, "click alignment window");
    app->add_option("--format", *format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app->add_option("--out", *out_path, "output file (stdout summary otherwise)");

    app->callback([=]() {
        const SessionLog log = io::parse_session(*session_path);
        const FaceModel3D model = opts->face_model();
        const auto est = make_session_estimator(*estimator, log, model, *window_us);
        EvalContext ctx;
        ctx.face_model = model;
        EvalOptions eval;
        eval.n_cal = *n_cal;
        eval.n_test = *n_test;
        eval.window_us = *window_us;
        if (!profile_path->empty()) eval.fixed_profile = io::parse_profile(*profile_path);
        const EvalResult r = evaluate_session(log, *est, eval, ctx);
        std::printf("%s: mean %.4f deg, std %.4f deg over %d test samples "
                    "(n_cal %d, dropped %d, skipped %d)\n",
                    r.estimator_id.c_str(), r.mean_deg, r.std_deg, r.n_test, r.n_calibration,
                    r.n_dropped_alignment, r.n_skipped_estimator);
        if (!out_path->empty()) write_eval_result(r, *out_path, *format);
    });
}

void cmd_sweep(CLI::App* app) {
    auto opts = std::make_shared<CommonOpts>();
    auto spec_path = std::make_shared<std::string>();
    auto camera_path = std::make_shared<std::string>();
    auto screen_path = std::make_shared<std::string>();
    auto format = std::make_shared<std::string>("csv");
    auto out_dir = std::make_shared<std::string>();

    app->add_option("--spec", *spec_path, "sweep spec JSON")->required();
    app->add_option("--camera", *camera_path, "camera intrinsics JSON");
    app->add_option("--screen", *screen_path, "screen model JSON");
    app->add_option("--face-model", opts->face_model_path, "face model config");
    app->add_option("--format", *format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app->add_option("--out", *out_dir, "output directory")->required();

    app->callback([=]() {
        const SweepSpec spec = parse_sweep_spec(*spec_path);
        const CameraIntrinsics cam =
            camera_path->empty() ? default_camera() : io::parse_camera(*camera_path);
        const ScreenModel screen =
            screen_path->empty() ? default_screen() : io::parse_screen(*screen_path);
        const FaceModel3D model = opts->face_model();

        const SweepTable table = spec.type == SweepSpec::Type::distance
                                     ? sweep_distance(spec, model, cam, screen)
                                     : sweep_calibration_samples(spec, model, cam, screen);
        std::filesystem::create_directories(*out_dir);
        const std::string path =
            (std::filesystem::path(*out_dir) / ("sweep." + *format)).string();
        write_sweep_table(table, path, *format);
        std::cout << "wrote " << path << " (" << table.rows.size() << " rows)\n";
        for (const SweepRow& r : table.rows)
            std::printf("  %-10s d=%6.0f mm  n_cal=%2d  %.3f +- %.3f deg\n", r.estimator.c_str(),
                        r.distance_mm, r.n_cal, r.mean_deg, r.std_deg);
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gazekit: gaze-geometry toolkit and synthetic evaluation harness"};
    app.require_subcommand(1);

    cmd_simulate(app.add_subcommand("simulate", "generate a synthetic session"));
    cmd_calibrate_screen(
        app.add_subcommand("calibrate-screen", "solve the screen pose from mirror observations"));
    cmd_calibrate_person(
        app.add_subcommand("calibrate-person", "fit a personal calibration profile"));
    cmd_evaluate(app.add_subcommand("evaluate", "score an estimator on a session"));
    cmd_sweep(app.add_subcommand("sweep", "run a distance or calibration-count sweep"));

    try {
        CLI11_PARSE(app, argc, argv);
    } catch (const gazekit::GazeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
