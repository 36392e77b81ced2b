#pragma once

#include "vadctx/image.hpp"

#include <filesystem>
#include <vector>

namespace vadctx {

// Dense per-pixel displacement between two consecutive frames, in pixels.
struct FlowField {
    int height = 0;
    int width = 0;
    std::vector<float> u, v;

    FlowField() = default;
    FlowField(int h, int w)
        : height(h), width(w), u(static_cast<size_t>(h) * w, 0.0f),
          v(static_cast<size_t>(h) * w, 0.0f) {}
};

struct FlowOptions {
    double alpha = 0.5;     // smoothness weight
    int iterations = 120;   // per pyramid level
    int pyramid_levels = 4; // coarse-to-fine with warping
};

// Iterative Horn-Schunck-style dense flow from prev to cur.
FlowField compute_flow(const Image& prev, const Image& cur, const FlowOptions& options = {});

// Binary per-video flow cache:
//   magic "STCFLOW1", little-endian u32 (fields, height, width), then per
//   field the float32 u-plane followed by the v-plane, frame-major.
// Field k covers the frame pair (k, k+1), so a T-frame video stores T-1
// fields.
void write_flow_cache(const std::filesystem::path& path, const std::vector<FlowField>& fields);
std::vector<FlowField> read_flow_cache(const std::filesystem::path& path);

} // namespace vadctx
