#include "vadctx/detections.hpp"

#include "vadctx/common.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>

namespace vadctx {

using nlohmann::json;

LoadedDetections load_detections(
    const std::filesystem::path& path, double threshold,
    const std::function<std::pair<int, int>(const std::string&)>& frame_size) {
    std::ifstream in(path);
    if (!in)
        throw IngestError("cannot open detections file: " + path.string());

    LoadedDetections out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;

        const std::string where = path.filename().string() + ":" + std::to_string(line_no);
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw IngestError(where + ": malformed JSON line: " + e.what());
        }
        if (!rec.is_object() || !rec.contains("video") || !rec.contains("frame") ||
            !rec.contains("boxes"))
            throw IngestError(where + ": record must have video, frame and boxes");

        std::string video;
        int frame = 0;
        try {
            video = rec.at("video").get<std::string>();
            frame = rec.at("frame").get<int>();
        } catch (const json::exception& e) {
            throw IngestError(where + ": bad video/frame field: " + e.what());
        }
        if (frame < 0)
            throw IngestError(where + ": negative frame index");

        const auto [height, width] = frame_size(video);
        auto& dets = out.by_video[video][frame];
        for (const auto& box : rec.at("boxes")) {
            if (!box.is_array() || box.size() != 5)
                throw IngestError(where + ": box must be [x1,y1,x2,y2,conf]");
            Detection d;
            try {
                d.x1 = box[0].get<double>();
                d.y1 = box[1].get<double>();
                d.x2 = box[2].get<double>();
                d.y2 = box[3].get<double>();
                d.confidence = box[4].get<double>();
            } catch (const json::exception& e) {
                throw IngestError(where + ": non-numeric box entry: " + e.what());
            }
            if (!(d.confidence >= 0.0 && d.confidence <= 1.0))
                throw IngestError(where + ": confidence outside [0,1]");
            if (!(d.x1 < d.x2 && d.y1 < d.y2))
                throw IngestError(where + ": box must satisfy x1<x2 and y1<y2");
            if (d.confidence < threshold)
                continue;

            const Detection original = d;
            d.x1 = std::clamp(d.x1, 0.0, static_cast<double>(width));
            d.x2 = std::clamp(d.x2, 0.0, static_cast<double>(width));
            d.y1 = std::clamp(d.y1, 0.0, static_cast<double>(height));
            d.y2 = std::clamp(d.y2, 0.0, static_cast<double>(height));
            if (d.x1 != original.x1 || d.x2 != original.x2 || d.y1 != original.y1 ||
                d.y2 != original.y2)
                out.warnings.push_back(where + ": box outside frame clipped (video " + video +
                                       ", frame " + std::to_string(frame) + ")");
            dets.push_back(d);
        }
    }

    for (auto& [video, frames] : out.by_video) {
        for (auto& [frame, dets] : frames) {
            std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
                return a.confidence > b.confidence;
            });
        }
    }
    return out;
}

LoadedDetections load_detections(const std::filesystem::path& path, double threshold, int height,
                                 int width) {
    return load_detections(path, threshold,
                           [height, width](const std::string&) {
                               return std::pair<int, int>{height, width};
                           });
}

} // namespace vadctx
