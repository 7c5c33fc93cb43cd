#include "gazekit/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace gazekit::io {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kSupportedVersion = 1;

[[noreturn]] void fail(const std::string& origin, size_t line_no, const std::string& what) {
    throw GazeError(errc::parse_error,
                    origin + ":" + std::to_string(line_no) + ": " + what);
}

double parse_number(const std::string& origin, size_t line_no, std::string_view tok) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        fail(origin, line_no, "bad number '" + std::string(tok) + "'");
    if (!std::isfinite(v)) fail(origin, line_no, "non-finite number");
    return v;
}

Timestamp parse_timestamp(const std::string& origin, size_t line_no, std::string_view tok) {
    Timestamp v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        fail(origin, line_no, "bad timestamp '" + std::string(tok) + "'");
    return v;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

// Iterates non-empty, non-comment lines with 1-based numbering.
struct LineReader {
    std::string_view text;
    size_t pos = 0;
    size_t line_no = 0;

    bool next(std::string_view* line) {
        while (pos < text.size()) {
            size_t end = text.find('\n', pos);
            if (end == std::string_view::npos) end = text.size();
            std::string_view raw = text.substr(pos, end - pos);
            if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
            pos = end + 1;
            ++line_no;
            const size_t first = raw.find_first_not_of(" \t");
            if (first == std::string_view::npos || raw[first] == '#') continue;
            *line = raw;
            return true;
        }
        return false;
    }
};

FileHeader parse_line_header(LineReader& reader, const std::string& origin,
                             const std::string& expected_format) {
    std::string_view line;
    if (!reader.next(&line)) fail(origin, reader.line_no, "missing header line");
    const auto toks = split_ws(line);
    if (toks.size() != 2) fail(origin, reader.line_no, "header must be '<format> <version>'");
    FileHeader header;
    header.format_name = std::string(toks[0]);
    if (header.format_name != expected_format)
        fail(origin, reader.line_no,
             "expected format '" + expected_format + "', got '" + header.format_name + "'");
    header.format_version = int(parse_number(origin, reader.line_no, toks[1]));
    if (header.format_version > kSupportedVersion)
        fail(origin, reader.line_no,
             "unsupported " + expected_format + " version " +
                 std::to_string(header.format_version));
    return header;
}

std::string meta_value(std::string_view line) {
    // Everything after "meta <key> ".
    const auto toks = split_ws(line);
    size_t start = line.find(toks[1]) + toks[1].size();
    while (start < line.size() && (line[start] == ' ' || line[start] == '\t')) ++start;
    return std::string(line.substr(start));
}

double take_meta_number(std::map<std::string, std::string>& meta, const std::string& key,
                        const std::string& origin) {
    const auto it = meta.find(key);
    if (it == meta.end())
        throw GazeError(errc::parse_error, origin + ": missing meta key '" + key + "'");
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(it->second.data(),
                                           it->second.data() + it->second.size(), v);
    if (ec != std::errc() || ptr != it->second.data() + it->second.size() || !std::isfinite(v))
        throw GazeError(errc::parse_error,
                        origin + ": bad number in meta key '" + key + "'");
    meta.erase(it);
    return v;
}

std::string take_meta_string(std::map<std::string, std::string>& meta, const std::string& key,
                             const std::string& origin) {
    const auto it = meta.find(key);
    if (it == meta.end())
        throw GazeError(errc::parse_error, origin + ": missing meta key '" + key + "'");
    std::string v = it->second;
    meta.erase(it);
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw GazeError(errc::io_error, "cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::string& path, std::string_view contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw GazeError(errc::io_error, "cannot open " + tmp + " for writing");
        f.write(contents.data(), std::streamsize(contents.size()));
        if (!f) throw GazeError(errc::io_error, "write failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw GazeError(errc::io_error, "rename failed: " + path + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// Session log
// ---------------------------------------------------------------------------

namespace {

void meta_from_camera(std::map<std::string, std::string>& meta, const CameraIntrinsics& cam) {
    meta["camera.fx"] = format_double(cam.fx);
    meta["camera.fy"] = format_double(cam.fy);
    meta["camera.cx"] = format_double(cam.cx);
    meta["camera.cy"] = format_double(cam.cy);
    meta["camera.width_px"] = std::to_string(cam.width_px);
    meta["camera.height_px"] = std::to_string(cam.height_px);
}

CameraIntrinsics camera_from_meta(std::map<std::string, std::string>& meta,
                                  const std::string& origin) {
    CameraIntrinsics cam;
    cam.fx = take_meta_number(meta, "camera.fx", origin);
    cam.fy = take_meta_number(meta, "camera.fy", origin);
    cam.cx = take_meta_number(meta, "camera.cx", origin);
    cam.cy = take_meta_number(meta, "camera.cy", origin);
    cam.width_px = int(take_meta_number(meta, "camera.width_px", origin));
    cam.height_px = int(take_meta_number(meta, "camera.height_px", origin));
    cam.validate();
    return cam;
}

void meta_from_screen(std::map<std::string, std::string>& meta, const ScreenModel& s) {
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            meta["screen.r" + std::to_string(r) + std::to_string(c)] =
                format_double(s.pose.rotation(r, c));
    meta["screen.tx"] = format_double(s.pose.translation.x());
    meta["screen.ty"] = format_double(s.pose.translation.y());
    meta["screen.tz"] = format_double(s.pose.translation.z());
    meta["screen.width_mm"] = format_double(s.width_mm);
    meta["screen.height_mm"] = format_double(s.height_mm);
    meta["screen.width_px"] = std::to_string(s.width_px);
    meta["screen.height_px"] = std::to_string(s.height_px);
}

ScreenModel screen_from_meta(std::map<std::string, std::string>& meta,
                             const std::string& origin) {
    ScreenModel s;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            s.pose.rotation(r, c) =
                take_meta_number(meta, "screen.r" + std::to_string(r) + std::to_string(c), origin);
    s.pose.translation = {take_meta_number(meta, "screen.tx", origin),
                          take_meta_number(meta, "screen.ty", origin),
                          take_meta_number(meta, "screen.tz", origin)};
    s.width_mm = take_meta_number(meta, "screen.width_mm", origin);
    s.height_mm = take_meta_number(meta, "screen.height_mm", origin);
    s.width_px = int(take_meta_number(meta, "screen.width_px", origin));
    s.height_px = int(take_meta_number(meta, "screen.height_px", origin));
    try {
        s.validate();
    } catch (const GazeError& e) {
        throw GazeError(errc::parse_error, origin + ": invalid screen meta: " + e.what());
    }
    return s;
}

}  // namespace

std::string session_to_text(const SessionLog& log) {
    std::map<std::string, std::string> meta = log.meta.extra;
    meta["participant"] = log.meta.participant_id;
    meta["condition"] = log.meta.condition_tag;
    meta["distance_mm"] = format_double(log.meta.distance_mm);
    meta_from_camera(meta, log.meta.camera);
    meta_from_screen(meta, log.meta.screen);

    std::ostringstream out;
    out << "gazekit-session 1\n";
    for (const auto& [k, v] : meta) out << "meta " << k << " " << v << "\n";

    for (const auto& lm : log.landmarks) {
        out << lm.timestamp << " landmarks " << (lm.iris_centers ? "lmi" : "lm");
        for (const auto& p : lm.points)
            out << " " << format_double(p.x()) << " " << format_double(p.y());
        if (lm.iris_centers)
            for (const auto& p : *lm.iris_centers)
                out << " " << format_double(p.x()) << " " << format_double(p.y());
        out << "\n";
    }
    for (const auto& c : log.clicks)
        out << c.timestamp << " ui click " << format_double(c.target_px.x()) << " "
            << format_double(c.target_px.y()) << "\n";
    for (const auto& [source, records] : log.estimates) {
        for (const auto& r : records) {
            out << r.timestamp << " " << source << " ";
            if (r.kind() == PayloadKind::direction_3d) {
                const Vec3d& d = std::get<Vec3d>(r.payload);
                out << "dir " << format_double(d.x()) << " " << format_double(d.y()) << " "
                    << format_double(d.z());
            } else {
                const Vec2d& p = std::get<Vec2d>(r.payload);
                out << "px " << format_double(p.x()) << " " << format_double(p.y());
            }
            out << "\n";
        }
    }
    return out.str();
}

SessionLog parse_session_text(std::string_view text, const std::string& origin) {
    LineReader reader{text};
    parse_line_header(reader, origin, "gazekit-session");

    SessionLog log;
    std::map<std::string, std::string> meta;
    std::string_view line;
    bool saw_record = false;
    while (reader.next(&line)) {
        const auto toks = split_ws(line);
        if (toks[0] == "meta") {
            if (saw_record) fail(origin, reader.line_no, "meta after records");
            if (toks.size() < 3) fail(origin, reader.line_no, "meta needs a key and a value");
            meta[std::string(toks[1])] = meta_value(line);
            continue;
        }
        saw_record = true;
        if (toks.size() < 3) fail(origin, reader.line_no, "record needs timestamp, source, kind");
        const Timestamp t = parse_timestamp(origin, reader.line_no, toks[0]);
        const std::string source(toks[1]);
        const std::string_view kind = toks[2];
        const size_t nvals = toks.size() - 3;
        auto val = [&](size_t i) { return parse_number(origin, reader.line_no, toks[3 + i]); };

        if (kind == "lm" || kind == "lmi") {
            if (source != "landmarks") fail(origin, reader.line_no, "lm records use source 'landmarks'");
            const size_t expect = kind == "lm" ? 12 : 16;
            if (nvals != expect)
                fail(origin, reader.line_no, "landmark record needs " + std::to_string(expect) + " values");
            LandmarkSet lm;
            lm.timestamp = t;
            for (int i = 0; i < kNumLandmarks; ++i) lm.points[i] = {val(2 * i), val(2 * i + 1)};
            if (kind == "lmi")
                lm.iris_centers = {{{val(12), val(13)}, {val(14), val(15)}}};
            if (!log.landmarks.empty() && log.landmarks.back().timestamp > t)
                fail(origin, reader.line_no, "unsorted landmark timestamps");
            log.landmarks.push_back(lm);
        } else if (kind == "click") {
            if (source != "ui") fail(origin, reader.line_no, "click records use source 'ui'");
            if (nvals != 2) fail(origin, reader.line_no, "click record needs 2 values");
            if (!log.clicks.empty() && log.clicks.back().timestamp > t)
                fail(origin, reader.line_no, "unsorted click timestamps");
            log.clicks.push_back({t, {val(0), val(1)}});
        } else if (kind == "dir" || kind == "px") {
            auto& stream = log.estimates[source];
            if (!stream.empty() && stream.back().timestamp >= t)
                fail(origin, reader.line_no, "estimate timestamps must be strictly increasing");
            EstimateRecord rec;
            rec.timestamp = t;
            rec.source_id = source;
            if (kind == "dir") {
                if (nvals != 3) fail(origin, reader.line_no, "dir record needs 3 values");
                rec.payload = Vec3d{val(0), val(1), val(2)};
            } else {
                if (nvals != 2) fail(origin, reader.line_no, "px record needs 2 values");
                rec.payload = Vec2d{val(0), val(1)};
            }
            stream.push_back(std::move(rec));
        } else {
            fail(origin, reader.line_no, "unknown record kind '" + std::string(kind) + "'");
        }
    }

    log.meta.participant_id = take_meta_string(meta, "participant", origin);
    log.meta.condition_tag = take_meta_string(meta, "condition", origin);
    log.meta.distance_mm = take_meta_number(meta, "distance_mm", origin);
    log.meta.camera = camera_from_meta(meta, origin);
    log.meta.screen = screen_from_meta(meta, origin);
    log.meta.extra = std::move(meta);  // unknown keys, preserved
    return log;
}

SessionLog parse_session(const std::string& path) {
    return parse_session_text(read_file(path), path);
}

void write_session(const SessionLog& log, const std::string& path) {
    write_file_atomic(path, session_to_text(log));
}

std::vector<EstimateRecord> parse_replay_records(const std::string& path,
                                                 const std::string& source_id) {
    const SessionLog log = parse_session(path);
    const auto it = log.estimates.find(source_id);
    if (it == log.estimates.end())
        throw GazeError(errc::parse_error,
                        path + ": no estimate records for source '" + source_id + "'");
    return it->second;
}

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

std::string truth_to_text(const std::vector<GroundTruthSample>& truth) {
    std::ostringstream out;
    out << "gazekit-truth 1\n";
    for (const auto& s : truth) {
        out << "truth " << s.timestamp;
        auto emit2 = [&](const Vec2d& v) {
            out << " " << format_double(v.x()) << " " << format_double(v.y());
        };
        auto emit3 = [&](const Vec3d& v) {
            out << " " << format_double(v.x()) << " " << format_double(v.y()) << " "
                << format_double(v.z());
        };
        emit2(s.target_px);
        emit3(s.target_cam);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) out << " " << format_double(s.head_pose.rotation(r, c));
        emit3(s.head_pose.translation);
        emit3(s.face_center);
        emit3(s.gaze.direction);
        for (const auto& p : s.landmarks.points) emit2(p);
        for (const auto& p : s.landmark_noise) emit2(p);
        if (s.landmarks.iris_centers)
            for (const auto& p : *s.landmarks.iris_centers) emit2(p);
        else
            out << " 0 0 0 0";
        for (const auto& p : s.iris_noise) emit2(p);
        out << "\n";
    }
    return out.str();
}

std::vector<GroundTruthSample> parse_truth_text(std::string_view text,
                                                const std::string& origin) {
    LineReader reader{text};
    parse_line_header(reader, origin, "gazekit-truth");

    std::vector<GroundTruthSample> truth;
    std::string_view line;
    while (reader.next(&line)) {
        const auto toks = split_ws(line);
        if (toks[0] != "truth") fail(origin, reader.line_no, "expected a 'truth' record");
        if (toks.size() != 2 + 55)
            fail(origin, reader.line_no, "truth record needs 55 values");
        GroundTruthSample s;
        s.timestamp = parse_timestamp(origin, reader.line_no, toks[1]);
        size_t i = 2;
        auto val = [&]() { return parse_number(origin, reader.line_no, toks[i++]); };
        auto get2 = [&]() { return Vec2d{val(), val()}; };
        auto get3 = [&]() { return Vec3d{val(), val(), val()}; };
        s.target_px = get2();
        s.target_cam = get3();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) s.head_pose.rotation(r, c) = val();
        s.head_pose.translation = get3();
        s.face_center = get3();
        s.gaze.origin = s.face_center;
        s.gaze.direction = get3();
        s.gaze.timestamp = s.timestamp;
        s.landmarks.timestamp = s.timestamp;
        for (int k = 0; k < kNumLandmarks; ++k) s.landmarks.points[k] = get2();
        for (int k = 0; k < kNumLandmarks; ++k) s.landmark_noise[k] = get2();
        s.landmarks.iris_centers = {{get2(), get2()}};
        for (int k = 0; k < 2; ++k) s.iris_noise[k] = get2();
        if (!truth.empty() && truth.back().timestamp > s.timestamp)
            fail(origin, reader.line_no, "unsorted truth timestamps");
        truth.push_back(std::move(s));
    }
    return truth;
}

std::vector<GroundTruthSample> parse_truth(const std::string& path) {
    return parse_truth_text(read_file(path), path);
}

void write_truth(const std::vector<GroundTruthSample>& truth, const std::string& path) {
    write_file_atomic(path, truth_to_text(truth));
}

// ---------------------------------------------------------------------------
// JSON formats
// ---------------------------------------------------------------------------

namespace {

ordered_json json_parse(std::string_view text) {
    ordered_json j = ordered_json::parse(text, nullptr, false);
    if (j.is_discarded()) throw GazeError(errc::parse_error, "malformed JSON");
    return j;
}

void check_json_header(const ordered_json& j, const std::string& format) {
    if (!j.is_object()) throw GazeError(errc::parse_error, "expected a JSON object");
    if (!j.contains("format") || !j["format"].is_string() || j["format"] != format)
        throw GazeError(errc::parse_error, "missing or wrong 'format' (expected " + format + ")");
    if (!j.contains("version") || !j["version"].is_number_integer())
        throw GazeError(errc::parse_error, "missing integer 'version'");
    if (j["version"].get<int>() > kSupportedVersion)
        throw GazeError(errc::parse_error, "unsupported " + format + " version");
}

double json_number(const ordered_json& j, const std::string& key) {
    if (!j.contains(key) || !j[key].is_number())
        throw GazeError(errc::parse_error, "missing numeric field '" + key + "'");
    const double v = j[key].get<double>();
    if (!std::isfinite(v)) throw GazeError(errc::parse_error, "non-finite field '" + key + "'");
    return v;
}

int json_int(const ordered_json& j, const std::string& key) {
    if (!j.contains(key) || !j[key].is_number_integer())
        throw GazeError(errc::parse_error, "missing integer field '" + key + "'");
    return j[key].get<int>();
}

std::vector<double> json_array(const ordered_json& j, const std::string& key, size_t n) {
    if (!j.contains(key) || !j[key].is_array() || j[key].size() != n)
        throw GazeError(errc::parse_error,
                        "missing array field '" + key + "' of size " + std::to_string(n));
    std::vector<double> out;
    for (const auto& v : j[key]) {
        if (!v.is_number()) throw GazeError(errc::parse_error, "non-numeric entry in '" + key + "'");
        out.push_back(v.get<double>());
        if (!std::isfinite(out.back()))
            throw GazeError(errc::parse_error, "non-finite entry in '" + key + "'");
    }
    return out;
}

}  // namespace

std::string profile_to_text(const CalibrationProfile& p) {
    ordered_json j;
    j["format"] = "gazekit-profile";
    j["version"] = 1;
    j["coeffs_x"] = std::vector<double>(p.coeffs.row(0).begin(), p.coeffs.row(0).end());
    j["coeffs_y"] = std::vector<double>(p.coeffs.row(1).begin(), p.coeffs.row(1).end());
    j["n_samples"] = p.n_samples;
    j["rms_residual_px"] = p.rms_residual_px;
    j["created_at_us"] = p.created_at;
    j["norm_width_px"] = p.norm_width_px;
    j["norm_height_px"] = p.norm_height_px;
    j["region_min"] = {p.region_min.x(), p.region_min.y()};
    j["region_max"] = {p.region_max.x(), p.region_max.y()};
    return j.dump(2) + "\n";
}

CalibrationProfile parse_profile_text(std::string_view text) {
    const ordered_json j = json_parse(text);
    check_json_header(j, "gazekit-profile");
    CalibrationProfile p;
    const auto cx = json_array(j, "coeffs_x", kCalibBasisSize);
    const auto cy = json_array(j, "coeffs_y", kCalibBasisSize);
    for (int i = 0; i < kCalibBasisSize; ++i) {
        p.coeffs(0, i) = cx[i];
        p.coeffs(1, i) = cy[i];
    }
    p.n_samples = json_int(j, "n_samples");
    if (p.n_samples < 0) throw GazeError(errc::parse_error, "negative n_samples");
    p.rms_residual_px = json_number(j, "rms_residual_px");
    if (p.rms_residual_px < 0.0) throw GazeError(errc::parse_error, "negative rms_residual_px");
    p.created_at = Timestamp(json_number(j, "created_at_us"));
    p.norm_width_px = json_number(j, "norm_width_px");
    p.norm_height_px = json_number(j, "norm_height_px");
    const auto rmin = json_array(j, "region_min", 2);
    const auto rmax = json_array(j, "region_max", 2);
    p.region_min = {rmin[0], rmin[1]};
    p.region_max = {rmax[0], rmax[1]};
    return p;
}

CalibrationProfile parse_profile(const std::string& path) {
    try {
        return parse_profile_text(read_file(path));
    } catch (const GazeError& e) {
        if (e.code() == errc::io_error) throw;
        throw GazeError(errc::parse_error, path + ": " + e.what());
    }
}

void write_profile(const CalibrationProfile& profile, const std::string& path) {
    write_file_atomic(path, profile_to_text(profile));
}

std::string screen_to_text(const ScreenModel& s) {
    ordered_json j;
    j["format"] = "gazekit-screen";
    j["version"] = 1;
    std::vector<double> rot;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) rot.push_back(s.pose.rotation(r, c));
    j["rotation"] = rot;
    j["translation_mm"] = {s.pose.translation.x(), s.pose.translation.y(),
                           s.pose.translation.z()};
    j["width_mm"] = s.width_mm;
    j["height_mm"] = s.height_mm;
    j["width_px"] = s.width_px;
    j["height_px"] = s.height_px;
    return j.dump(2) + "\n";
}

ScreenModel parse_screen_text(std::string_view text) {
    const ordered_json j = json_parse(text);
    check_json_header(j, "gazekit-screen");
    ScreenModel s;
    const auto rot = json_array(j, "rotation", 9);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) s.pose.rotation(r, c) = rot[3 * r + c];
    const auto t = json_array(j, "translation_mm", 3);
    s.pose.translation = {t[0], t[1], t[2]};
    s.width_mm = json_number(j, "width_mm");
    s.height_mm = json_number(j, "height_mm");
    s.width_px = json_int(j, "width_px");
    s.height_px = json_int(j, "height_px");
    try {
        s.validate();
    } catch (const GazeError& e) {
        throw GazeError(errc::parse_error, std::string("invalid screen model: ") + e.what());
    }
    return s;
}

ScreenModel parse_screen(const std::string& path) {
    try {
        return parse_screen_text(read_file(path));
    } catch (const GazeError& e) {
        if (e.code() == errc::io_error) throw;
        throw GazeError(errc::parse_error, path + ": " + e.what());
    }
}

void write_screen(const ScreenModel& screen, const std::string& path) {
    write_file_atomic(path, screen_to_text(screen));
}

std::string camera_to_text(const CameraIntrinsics& cam) {
    ordered_json j;
    j["format"] = "gazekit-camera";
    j["version"] = 1;
    j["fx"] = cam.fx;
    j["fy"] = cam.fy;
    j["cx"] = cam.cx;
    j["cy"] = cam.cy;
    j["width_px"] = cam.width_px;
    j["height_px"] = cam.height_px;
    return j.dump(2) + "\n";
}

CameraIntrinsics parse_camera_text(std::string_view text) {
    const ordered_json j = json_parse(text);
    check_json_header(j, "gazekit-camera");
    CameraIntrinsics cam;
    cam.fx = json_number(j, "fx");
    cam.fy = json_number(j, "fy");
    cam.cx = json_number(j, "cx");
    cam.cy = json_number(j, "cy");
    cam.width_px = json_int(j, "width_px");
    cam.height_px = json_int(j, "height_px");
    try {
        cam.validate();
    } catch (const GazeError& e) {
        throw GazeError(errc::parse_error, std::string("invalid camera: ") + e.what());
    }
    return cam;
}

CameraIntrinsics parse_camera(const std::string& path) {
    try {
        return parse_camera_text(read_file(path));
    } catch (const GazeError& e) {
        if (e.code() == errc::io_error) throw;
        throw GazeError(errc::parse_error, path + ": " + e.what());
    }
}

void write_camera(const CameraIntrinsics& cam, const std::string& path) {
    write_file_atomic(path, camera_to_text(cam));
}

std::string mirror_observations_to_text(const std::vector<MirrorObservation>& obs) {
    ordered_json j;
    j["format"] = "gazekit-mirrors";
    j["version"] = 1;
    if (!obs.empty()) {
        ordered_json geom = ordered_json::array();
        for (const auto& p : obs.front().pattern_geometry_px) geom.push_back({p.x(), p.y()});
        j["pattern_geometry_px"] = geom;
    } else {
        j["pattern_geometry_px"] = ordered_json::array();
    }
    ordered_json views = ordered_json::array();
    for (const auto& o : obs) {
        ordered_json corners = ordered_json::array();
        for (const auto& p : o.pattern_corners_px) corners.push_back({p.x(), p.y()});
        views.push_back(corners);
    }
    j["observations"] = views;
    return j.dump(2) + "\n";
}

std::vector<MirrorObservation> parse_mirror_observations_text(std::string_view text) {
    const ordered_json j = json_parse(text);
    check_json_header(j, "gazekit-mirrors");
    if (!j.contains("pattern_geometry_px") || !j["pattern_geometry_px"].is_array())
        throw GazeError(errc::parse_error, "missing array field 'pattern_geometry_px'");
    if (!j.contains("observations") || !j["observations"].is_array())
        throw GazeError(errc::parse_error, "missing array field 'observations'");

    auto parse_points = [](const ordered_json& arr, const char* what) {
        std::vector<Vec2d> pts;
        for (const auto& p : arr) {
            if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
                throw GazeError(errc::parse_error, std::string("bad point in ") + what);
            pts.push_back({p[0].get<double>(), p[1].get<double>()});
            if (!pts.back().allFinite())
                throw GazeError(errc::parse_error, std::string("non-finite point in ") + what);
        }
        return pts;
    };
    const std::vector<Vec2d> geometry = parse_points(j["pattern_geometry_px"], "pattern geometry");

    std::vector<MirrorObservation> obs;
    for (const auto& view : j["observations"]) {
        if (!view.is_array())
            throw GazeError(errc::parse_error, "each observation must be a corner array");
        MirrorObservation o;
        o.pattern_geometry_px = geometry;
        o.pattern_corners_px = parse_points(view, "observation corners");
        if (o.pattern_corners_px.size() != geometry.size())
            throw GazeError(errc::parse_error, "corner count does not match pattern geometry");
        obs.push_back(std::move(o));
    }
    return obs;
}

std::vector<MirrorObservation> parse_mirror_observations(const std::string& path) {
    try {
        return parse_mirror_observations_text(read_file(path));
    } catch (const GazeError& e) {
        if (e.code() == errc::io_error) throw;
        throw GazeError(errc::parse_error, path + ": " + e.what());
    }
}

void write_mirror_observations(const std::vector<MirrorObservation>& obs,
                               const std::string& path) {
    write_file_atomic(path, mirror_observations_to_text(obs));
}

// ---------------------------------------------------------------------------
// Plain-text key = value configs
// ---------------------------------------------------------------------------

namespace {

struct KvEntry {
    std::string value;
    size_t line_no;
};

std::map<std::string, KvEntry> parse_kv(std::string_view text, const std::string& origin) {
    std::map<std::string, KvEntry> kv;
    LineReader reader{text};
    std::string_view line;
    while (reader.next(&line)) {
        const size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            fail(origin, reader.line_no, "expected 'key = value'");
        std::string key(line.substr(0, eq));
        std::string value(line.substr(eq + 1));
        auto trim = [](std::string& s) {
            const size_t a = s.find_first_not_of(" \t");
            const size_t b = s.find_last_not_of(" \t");
            s = (a == std::string::npos) ? std::string() : s.substr(a, b - a + 1);
        };
        trim(key);
        trim(value);
        if (key.empty() || value.empty()) fail(origin, reader.line_no, "empty key or value");
        if (kv.count(key)) fail(origin, reader.line_no, "duplicate key '" + key + "'");
        kv[key] = {value, reader.line_no};
    }
    return kv;
}

double kv_number(const std::map<std::string, KvEntry>& kv, const std::string& key,
                 const std::string& origin, double fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    const auto& [value, line_no] = it->second;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(v))
        fail(origin, line_no, "bad number for '" + key + "'");
    return v;
}

// Length with an optional unit suffix; the default and storage unit is mm.
double kv_length_mm(const std::map<std::string, KvEntry>& kv, const std::string& key,
                    const std::string& origin, double fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    const auto& [value, line_no] = it->second;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || !std::isfinite(v)) fail(origin, line_no, "bad length for '" + key + "'");
    std::string unit(ptr, value.data() + value.size());
    const size_t a = unit.find_first_not_of(" \t");
    unit = (a == std::string::npos) ? std::string() : unit.substr(a);
    if (unit.empty() || unit == "mm") return v;
    if (unit == "cm") return v * 10.0;
    if (unit == "m") return v * 1000.0;
    fail(origin, line_no, "unknown length unit '" + unit + "' for '" + key + "'");
}

}  // namespace

SceneConfig parse_scene_config_text(std::string_view text, const std::string& origin) {
    const auto kv = parse_kv(text, origin);

    static const std::vector<std::string> known = {
        "distance", "region_width_deg", "region_height_deg", "n_samples",
        "landmark_noise_px", "iris_noise_px", "direction_noise_deg", "direction_bias_deg",
        "jitter_yaw_deg", "jitter_pitch_deg", "jitter_roll_deg", "condition",
        "outdoor_noise_factor", "glasses_landmark_bias_px", "glasses_iris_noise_factor",
        "seed", "participant"};
    for (const auto& [key, entry] : kv)
        if (std::find(known.begin(), known.end(), key) == known.end())
            fail(origin, entry.line_no, "unknown scene config key '" + key + "'");

    SceneConfig cfg;
    cfg.distance_mm = kv_length_mm(kv, "distance", origin, cfg.distance_mm);
    cfg.region_width_deg = kv_number(kv, "region_width_deg", origin, cfg.region_width_deg);
    cfg.region_height_deg = kv_number(kv, "region_height_deg", origin, cfg.region_height_deg);
    cfg.n_samples = int(kv_number(kv, "n_samples", origin, cfg.n_samples));
    cfg.landmark_noise_px = kv_number(kv, "landmark_noise_px", origin, cfg.landmark_noise_px);
    cfg.iris_noise_px = kv_number(kv, "iris_noise_px", origin, cfg.iris_noise_px);
    cfg.direction_noise_deg =
        kv_number(kv, "direction_noise_deg", origin, cfg.direction_noise_deg);
    cfg.direction_bias_deg = kv_number(kv, "direction_bias_deg", origin, cfg.direction_bias_deg);
    cfg.jitter_yaw_deg = kv_number(kv, "jitter_yaw_deg", origin, cfg.jitter_yaw_deg);
    cfg.jitter_pitch_deg = kv_number(kv, "jitter_pitch_deg", origin, cfg.jitter_pitch_deg);
    cfg.jitter_roll_deg = kv_number(kv, "jitter_roll_deg", origin, cfg.jitter_roll_deg);
    cfg.outdoor_noise_factor =
        kv_number(kv, "outdoor_noise_factor", origin, cfg.outdoor_noise_factor);
    cfg.glasses_landmark_bias_px =
        kv_number(kv, "glasses_landmark_bias_px", origin, cfg.glasses_landmark_bias_px);
    cfg.glasses_iris_noise_factor =
        kv_number(kv, "glasses_iris_noise_factor", origin, cfg.glasses_iris_noise_factor);
    if (kv.count("condition")) cfg.condition_tag = kv.at("condition").value;
    if (kv.count("participant")) cfg.participant_id = kv.at("participant").value;
    if (kv.count("seed")) {
        const auto& [value, line_no] = kv.at("seed");
        std::uint64_t seed = 0;
        const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), seed);
        if (ec != std::errc() || ptr != value.data() + value.size())
            fail(origin, line_no, "bad seed");
        cfg.seed = seed;
    }
    try {
        cfg.validate();
    } catch (const GazeError& e) {
        throw GazeError(errc::config_error, origin + ": " + e.what());
    }
    return cfg;
}

SceneConfig parse_scene_config(const std::string& path) {
    return parse_scene_config_text(read_file(path), path);
}

FaceModel3D parse_face_model_text(std::string_view text, const std::string& origin) {
    const auto kv = parse_kv(text, origin);

    static const char* point_keys[kNumLandmarks] = {"outer_left",  "inner_left", "inner_right",
                                                    "outer_right", "mouth_left", "mouth_right"};
    auto kv_vec3 = [&](const std::string& key) {
        const auto it = kv.find(key);
        if (it == kv.end())
            throw GazeError(errc::config_error, origin + ": missing face model key '" + key + "'");
        const auto toks = split_ws(it->second.value);
        if (toks.size() != 3) fail(origin, it->second.line_no, "'" + key + "' needs 3 values (mm)");
        return Vec3d{parse_number(origin, it->second.line_no, toks[0]),
                     parse_number(origin, it->second.line_no, toks[1]),
                     parse_number(origin, it->second.line_no, toks[2])};
    };

    FaceModel3D model;
    for (int i = 0; i < kNumLandmarks; ++i) model.points[i] = kv_vec3(point_keys[i]);
    model.eyeball_centers[0] = kv_vec3("eyeball_left");
    model.eyeball_centers[1] = kv_vec3("eyeball_right");
    model.eyeball_radius = kv_number(kv, "eyeball_radius", origin, -1.0);
    if (model.eyeball_radius <= 0.0)
        throw GazeError(errc::config_error, origin + ": missing or non-positive eyeball_radius");

    for (const auto& [key, entry] : kv) {
        const bool is_point = std::find(std::begin(point_keys), std::end(point_keys), key) !=
                              std::end(point_keys);
        if (!is_point && key != "eyeball_left" && key != "eyeball_right" &&
            key != "eyeball_radius")
            fail(origin, entry.line_no, "unknown face model key '" + key + "'");
    }

    try {
        model.validate();
    } catch (const GazeError& e) {
        throw GazeError(errc::config_error, origin + ": " + e.what());
    }
    return model;
}

FaceModel3D parse_face_model(const std::string& path) {
    return parse_face_model_text(read_file(path), path);
}

}  // namespace gazekit::io
