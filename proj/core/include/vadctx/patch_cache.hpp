#pragma once

#include "vadctx/flow.hpp"
#include "vadctx/image.hpp"
#include "vadctx/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace vadctx {

// Box region of a grayscale frame resized to size x size (bilinear, aspect
// ratio not preserved). 1-channel tensor in [0,1].
Tensor crop_patch(const Image& frame, const Detection& box, int size);

// Same geometry applied to a flow field; u and v are resized independently
// into a 2-channel tensor.
Tensor crop_flow_patch(const FlowField& flow, const Detection& box, int size);

// Cached crops of one frame for one stream. boxes holds the kept detections
// in descending-confidence order; boxes and patches are index-aligned. A
// frame with no detections is cached with empty lists (the empty-frame
// marker).
struct CachedFramePatches {
    std::string video;
    int frame = 0;
    Stream stream = Stream::spatial;
    uint64_t pad_seed = 0;
    std::vector<Detection> boxes;
    std::vector<Tensor> patches;
};

// Cache layout: <dir>/frame_%06d.bin holding float32 patch data plus a JSON
// sidecar frame_%06d.json listing the boxes and the padding seed. dir is the
// per-(video, stream) directory.
void write_patch_frame(const std::filesystem::path& dir, const CachedFramePatches& frame);
CachedFramePatches read_patch_frame(const std::filesystem::path& dir, const std::string& video,
                                    int frame, Stream stream);

// Applies the fixed-size group rule: fewer than n patches are padded by
// sampling existing ones uniformly with replacement (seeded by pad_seed,
// identical across streams); more than n keeps the n highest-confidence
// entries; zero detections yield nullopt (the empty-frame marker).
std::optional<FrameGroup> group_and_pad(const CachedFramePatches& cached, int n);

} // namespace vadctx
