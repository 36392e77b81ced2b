#pragma once

#include "vadctx/tensor.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace vadctx {

enum class Stream { spatial, temporal };

inline const char* stream_name(Stream s) {
    return s == Stream::spatial ? "spatial" : "temporal";
}

Stream stream_from_name(std::string_view name);

inline int stream_channels(Stream s) {
    return s == Stream::spatial ? 1 : 2;
}

// Axis-aligned detection box in pixel coordinates, x1 < x2 and y1 < y2.
// The box spans the half-open pixel range [x1, x2) x [y1, y2).
struct Detection {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
    double confidence = 0;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return width() * height(); }
};

// The fixed-size set of target patches belonging to one video frame.
// Spatial patches are 1-channel grayscale in [0,1]; temporal patches are
// 2-channel (u,v) flow crops. boxes[i] is the provenance of patches[i];
// padded entries are exact copies of a detected patch and its box.
struct FrameGroup {
    std::string video;
    int frame = 0;
    Stream stream = Stream::spatial;
    std::vector<Tensor> patches;
    std::vector<Detection> boxes;
};

struct FrameKey {
    std::string video;
    int frame = 0;

    bool operator<(const FrameKey& o) const {
        if (video != o.video)
            return video < o.video;
        return frame < o.frame;
    }
    bool operator==(const FrameKey& o) const { return video == o.video && frame == o.frame; }
};

} // namespace vadctx
