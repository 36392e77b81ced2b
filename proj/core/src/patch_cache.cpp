#include "vadctx/patch_cache.hpp"

#include "vadctx/common.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>

namespace vadctx {

using nlohmann::json;

namespace {

constexpr char kPatchMagic[8] = {'S', 'T', 'C', 'P', 'A', 'T', 'C', '1'};

std::string frame_stem(int frame) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06d", frame);
    return buf;
}

} // namespace

Tensor crop_patch(const Image& frame, const Detection& box, int size) {
    Tensor out(1, size, size);
    const auto plane = resample_plane(frame.pixels.data(), frame.height, frame.width, box.x1,
                                      box.y1, box.x2, box.y2, size, size);
    for (size_t i = 0; i < plane.size(); ++i)
        out.data[static_cast<Eigen::Index>(i)] = plane[i];
    return out;
}

Tensor crop_flow_patch(const FlowField& flow, const Detection& box, int size) {
    Tensor out(2, size, size);
    const auto u = resample_plane(flow.u.data(), flow.height, flow.width, box.x1, box.y1, box.x2,
                                  box.y2, size, size);
    const auto v = resample_plane(flow.v.data(), flow.height, flow.width, box.x1, box.y1, box.x2,
                                  box.y2, size, size);
    const Eigen::Index plane = static_cast<Eigen::Index>(size) * size;
    for (Eigen::Index i = 0; i < plane; ++i) {
        out.data[i] = u[static_cast<size_t>(i)];
        out.data[plane + i] = v[static_cast<size_t>(i)];
    }
    return out;
}

void write_patch_frame(const std::filesystem::path& dir, const CachedFramePatches& frame) {
    std::filesystem::create_directories(dir);
    const std::string stem = frame_stem(frame.frame);

    // Binary blob with the float32 patch data.
    {
        std::ofstream out(dir / (stem + ".bin"), std::ios::binary | std::ios::trunc);
        if (!out)
            throw IngestError("cannot write patch cache in: " + dir.string());
        const uint32_t count = static_cast<uint32_t>(frame.patches.size());
        const uint32_t channels = count ? static_cast<uint32_t>(frame.patches[0].channels)
                                        : static_cast<uint32_t>(stream_channels(frame.stream));
        const uint32_t height = count ? static_cast<uint32_t>(frame.patches[0].height) : 0;
        const uint32_t width = count ? static_cast<uint32_t>(frame.patches[0].width) : 0;
        out.write(kPatchMagic, sizeof(kPatchMagic));
        out.write(reinterpret_cast<const char*>(&count), sizeof(count));
        out.write(reinterpret_cast<const char*>(&channels), sizeof(channels));
        out.write(reinterpret_cast<const char*>(&height), sizeof(height));
        out.write(reinterpret_cast<const char*>(&width), sizeof(width));
        std::vector<float> buf;
        for (const auto& p : frame.patches) {
            buf.resize(static_cast<size_t>(p.size()));
            for (Eigen::Index i = 0; i < p.size(); ++i)
                buf[static_cast<size_t>(i)] = static_cast<float>(p.data[i]);
            out.write(reinterpret_cast<const char*>(buf.data()),
                      static_cast<std::streamsize>(buf.size() * sizeof(float)));
        }
        if (!out)
            throw IngestError("failed writing patch cache in: " + dir.string());
    }

    // JSON sidecar with provenance.
    {
        json side;
        side["video"] = frame.video;
        side["frame"] = frame.frame;
        side["stream"] = stream_name(frame.stream);
        side["pad_seed"] = frame.pad_seed;
        json boxes = json::array();
        for (const auto& b : frame.boxes)
            boxes.push_back({b.x1, b.y1, b.x2, b.y2, b.confidence});
        side["boxes"] = boxes;

        std::ofstream out(dir / (stem + ".json"), std::ios::trunc);
        if (!out)
            throw IngestError("cannot write patch sidecar in: " + dir.string());
        out << side.dump() << "\n";
    }
}

CachedFramePatches read_patch_frame(const std::filesystem::path& dir, const std::string& video,
                                    int frame, Stream stream) {
    const std::string stem = frame_stem(frame);
    CachedFramePatches out;
    out.video = video;
    out.frame = frame;
    out.stream = stream;

    // Sidecar first: boxes + padding seed.
    {
        std::ifstream in(dir / (stem + ".json"));
        if (!in)
            throw MissingPrereqError("patch cache sidecar missing: " +
                                     (dir / (stem + ".json")).string());
        json side;
        try {
            in >> side;
        } catch (const json::exception& e) {
            throw IngestError("corrupt patch sidecar " + (dir / (stem + ".json")).string() + ": " +
                              e.what());
        }
        out.pad_seed = side.at("pad_seed").get<uint64_t>();
        for (const auto& b : side.at("boxes"))
            out.boxes.push_back({b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                                 b[3].get<double>(), b[4].get<double>()});
    }

    {
        std::ifstream in(dir / (stem + ".bin"), std::ios::binary);
        if (!in)
            throw MissingPrereqError("patch cache blob missing: " + (dir / (stem + ".bin")).string());
        char magic[8];
        in.read(magic, sizeof(magic));
        if (!in || std::memcmp(magic, kPatchMagic, sizeof(kPatchMagic)) != 0)
            throw IngestError("not a patch cache blob: " + (dir / (stem + ".bin")).string());
        uint32_t count = 0, channels = 0, height = 0, width = 0;
        in.read(reinterpret_cast<char*>(&count), sizeof(count));
        in.read(reinterpret_cast<char*>(&channels), sizeof(channels));
        in.read(reinterpret_cast<char*>(&height), sizeof(height));
        in.read(reinterpret_cast<char*>(&width), sizeof(width));
        if (!in || count != out.boxes.size())
            throw IngestError("patch cache blob/sidecar mismatch: " +
                              (dir / (stem + ".bin")).string());
        std::vector<float> buf(static_cast<size_t>(channels) * height * width);
        for (uint32_t k = 0; k < count; ++k) {
            in.read(reinterpret_cast<char*>(buf.data()),
                    static_cast<std::streamsize>(buf.size() * sizeof(float)));
            if (!in)
                throw IngestError("truncated patch cache blob: " + (dir / (stem + ".bin")).string());
            Tensor p(static_cast<int>(channels), static_cast<int>(height), static_cast<int>(width));
            for (Eigen::Index i = 0; i < p.size(); ++i)
                p.data[i] = buf[static_cast<size_t>(i)];
            out.patches.push_back(std::move(p));
        }
    }
    return out;
}

std::optional<FrameGroup> group_and_pad(const CachedFramePatches& cached, int n) {
    if (n < 1)
        throw std::invalid_argument("group_and_pad: n must be >= 1");
    const size_t count = cached.patches.size();
    if (count == 0)
        return std::nullopt;

    FrameGroup group;
    group.video = cached.video;
    group.frame = cached.frame;
    group.stream = cached.stream;

    if (count >= static_cast<size_t>(n)) {
        // Detections are stored in descending-confidence order; keep the top n.
        group.patches.assign(cached.patches.begin(), cached.patches.begin() + n);
        group.boxes.assign(cached.boxes.begin(), cached.boxes.begin() + n);
        return group;
    }

    group.patches = cached.patches;
    group.boxes = cached.boxes;
    Rng rng(cached.pad_seed);
    while (group.patches.size() < static_cast<size_t>(n)) {
        const size_t pick = static_cast<size_t>(rng.uniform_int(count));
        group.patches.push_back(cached.patches[pick]);
        group.boxes.push_back(cached.boxes[pick]);
    }
    return group;
}

} // namespace vadctx
