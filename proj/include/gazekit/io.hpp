#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "gazekit/calibration.hpp"
#include "gazekit/session.hpp"
#include "gazekit/synthlab.hpp"

// Parsers and serializers for every on-disk format. All serialization is
// deterministic (stable key order, floats printed with 17 significant
// digits), so repeated writes of the same value are byte-identical and all
// round trips are lossless. File writes go to a temporary file first and are
// renamed into place. Formats are documented in docs/formats.md.

namespace gazekit::io {

struct FileHeader {
    std::string format_name;
    int format_version = 1;
    std::map<std::string, std::string> metadata;
};

// Shortest-exact decimal for a double (17 significant digits).
std::string format_double(double v);

// ---------------------------------------------------------------------------
// Line-based formats (sessions, ground truth, replay streams)
// ---------------------------------------------------------------------------

SessionLog parse_session(const std::string& path);
SessionLog parse_session_text(std::string_view text, const std::string& origin = "<memory>");
void write_session(const SessionLog& log, const std::string& path);
std::string session_to_text(const SessionLog& log);

std::vector<GroundTruthSample> parse_truth(const std::string& path);
std::vector<GroundTruthSample> parse_truth_text(std::string_view text,
                                                const std::string& origin = "<memory>");
void write_truth(const std::vector<GroundTruthSample>& truth, const std::string& path);
std::string truth_to_text(const std::vector<GroundTruthSample>& truth);

// Estimate records for one source from a session or replay file.
std::vector<EstimateRecord> parse_replay_records(const std::string& path,
                                                 const std::string& source_id);

// ---------------------------------------------------------------------------
// JSON formats
// ---------------------------------------------------------------------------

CalibrationProfile parse_profile(const std::string& path);
CalibrationProfile parse_profile_text(std::string_view text);
void write_profile(const CalibrationProfile& profile, const std::string& path);
std::string profile_to_text(const CalibrationProfile& profile);

ScreenModel parse_screen(const std::string& path);
ScreenModel parse_screen_text(std::string_view text);
void write_screen(const ScreenModel& screen, const std::string& path);
std::string screen_to_text(const ScreenModel& screen);

CameraIntrinsics parse_camera(const std::string& path);
CameraIntrinsics parse_camera_text(std::string_view text);
void write_camera(const CameraIntrinsics& cam, const std::string& path);
std::string camera_to_text(const CameraIntrinsics& cam);

std::vector<MirrorObservation> parse_mirror_observations(const std::string& path);
std::vector<MirrorObservation> parse_mirror_observations_text(std::string_view text);
void write_mirror_observations(const std::vector<MirrorObservation>& obs,
                               const std::string& path);
std::string mirror_observations_to_text(const std::vector<MirrorObservation>& obs);

// ---------------------------------------------------------------------------
// Plain-text key = value configs
// ---------------------------------------------------------------------------

// Scene config; length keys accept mm/cm/m unit suffixes (default mm).
SceneConfig parse_scene_config(const std::string& path);
SceneConfig parse_scene_config_text(std::string_view text,
                                    const std::string& origin = "<memory>");

// Face model config (mm units), keys documented in docs/formats.md.
FaceModel3D parse_face_model(const std::string& path);
FaceModel3D parse_face_model_text(std::string_view text,
                                  const std::string& origin = "<memory>");

// Atomic write helper used by all writers.
void write_file_atomic(const std::string& path, std::string_view contents);
std::string read_file(const std::string& path);

}  // namespace gazekit::io
