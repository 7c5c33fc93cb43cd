#pragma once

#include <map>
#include <string>
#include <vector>

#include "gazekit/estimators.hpp"
#include "gazekit/face_model.hpp"
#include "gazekit/types.hpp"

namespace gazekit {

struct ClickEvent {
    Timestamp timestamp = 0;
    Vec2d target_px = Vec2d::Zero();  // confirmed on-screen target
};

struct SessionMeta {
    std::string participant_id = "p00";
    std::string condition_tag = "indoor";
    double distance_mm = 0.0;
    CameraIntrinsics camera;
    ScreenModel screen;
    std::map<std::string, std::string> extra;  // unknown keys, preserved on round trip
};

// Timestamped streams of one recording: landmark frames, per-source estimate
// streams, and click-confirmed targets. Every stream is time-sorted.
struct SessionLog {
    SessionMeta meta;
    std::vector<LandmarkSet> landmarks;
    std::map<std::string, std::vector<EstimateRecord>> estimates;  // keyed by source_id
    std::vector<ClickEvent> clicks;
};

}  // namespace gazekit
