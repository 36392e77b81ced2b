#pragma once

#include "vadctx/types.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace vadctx {

// Kept detections per (video, frame), sorted by descending confidence with
// the file order as tie-break.
struct LoadedDetections {
    std::map<std::string, std::map<int, std::vector<Detection>>> by_video;
    std::vector<std::string> warnings;

    const std::vector<Detection>* find(const std::string& video, int frame) const {
        auto v = by_video.find(video);
        if (v == by_video.end())
            return nullptr;
        auto f = v->second.find(frame);
        return f == v->second.end() ? nullptr : &f->second;
    }
};

// JSON-lines format, one record per frame:
//   {"video": str, "frame": int, "boxes": [[x1,y1,x2,y2,conf], ...]}
// Coordinates are pixels; floats allowed. Records with confidence below the
// threshold are dropped. Boxes reaching outside the frame are clipped with a
// warning. Malformed lines raise IngestError naming the line number.
// frame_size maps a video id to its (height, width) for clipping.
LoadedDetections load_detections(
    const std::filesystem::path& path, double threshold,
    const std::function<std::pair<int, int>(const std::string&)>& frame_size);

// Convenience overload for a corpus with one fixed frame size.
LoadedDetections load_detections(const std::filesystem::path& path, double threshold, int height,
                                 int width);

} // namespace vadctx
