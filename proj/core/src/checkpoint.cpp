#include "vadctx/checkpoint.hpp"

#include "vadctx/common.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>

namespace vadctx {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'V', 'A', 'D', 'C', 'K', 'P', 'T', '1'};
constexpr uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

uint64_t fnv1a(const char* data, size_t len, uint64_t h = 0xcbf29ce484222325ULL) {
    for (size_t i = 0; i < len; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 0x100000001b3ULL;
    }
    return h;
}

struct ChecksumWriter {
    std::ofstream out;
    uint64_t hash = 0xcbf29ce484222325ULL;

    void write(const void* data, size_t len) {
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
        hash = fnv1a(static_cast<const char*>(data), len, hash);
    }
    template <typename T> void write_pod(const T& v) { write(&v, sizeof(v)); }
};

struct ChecksumReader {
    std::ifstream in;
    uint64_t hash = 0xcbf29ce484222325ULL;

    void read(void* data, size_t len) {
        in.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
        if (!in)
            throw CheckpointError("checkpoint truncated or unreadable");
        hash = fnv1a(static_cast<const char*>(data), len, hash);
    }
    template <typename T> T read_pod() {
        T v;
        read(&v, sizeof(v));
        return v;
    }
};

json header_json(const StreamModel& model, uint64_t seed) {
    const ModelConfig& c = model.config();
    json h;
    h["stream"] = stream_name(model.stream());
    h["input_channels"] = c.input_channels;
    h["latent_dim"] = c.latent_dim;
    h["channels"] = c.channels;
    h["patch_size"] = c.patch_size;
    h["memory_items"] = c.memory_items;
    h["shrink_threshold"] = c.shrink_threshold;
    h["renormalize_after_shrink"] = c.renormalize_after_shrink;
    h["memory_enabled"] = c.memory_enabled;
    h["seed"] = seed;
    return h;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const StreamModel& model, uint64_t seed) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    ChecksumWriter w;
    w.out.open(path, std::ios::binary | std::ios::trunc);
    if (!w.out)
        throw CheckpointError("cannot open checkpoint for writing: " + path.string());

    w.write(kMagic, sizeof(kMagic));
    w.write_pod(kVersion);

    const std::string header = header_json(model, seed).dump();
    const uint32_t header_len = static_cast<uint32_t>(header.size());
    w.write_pod(header_len);
    w.write(header.data(), header.size());

    const auto refs = model.param_refs();
    const uint32_t param_count = static_cast<uint32_t>(refs.size());
    w.write_pod(param_count);
    for (const auto& ref : refs) {
        const uint32_t name_len = static_cast<uint32_t>(ref.name.size());
        w.write_pod(name_len);
        w.write(ref.name.data(), ref.name.size());
        const uint64_t count = static_cast<uint64_t>(ref.size);
        w.write_pod(count);
        w.write(ref.data, count * sizeof(double));
    }

    const uint64_t checksum = w.hash;
    w.out.write(reinterpret_cast<const char*>(&checksum), sizeof(checksum));
    if (!w.out)
        throw CheckpointError("failed writing checkpoint: " + path.string());
}

CheckpointData load_checkpoint(const std::filesystem::path& path) {
    ChecksumReader r;
    r.in.open(path, std::ios::binary);
    if (!r.in)
        throw MissingPrereqError("checkpoint not found: " + path.string());

    char magic[8];
    r.read(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw CheckpointError("not a checkpoint file: " + path.string());
    const uint32_t version = r.read_pod<uint32_t>();
    if (version != kVersion)
        throw CheckpointError("incompatible checkpoint version " + std::to_string(version) +
                              " (expected " + std::to_string(kVersion) + ")");

    const uint32_t header_len = r.read_pod<uint32_t>();
    std::string header(header_len, '\0');
    r.read(header.data(), header_len);

    json h;
    try {
        h = json::parse(header);
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("corrupt checkpoint header: ") + e.what());
    }

    ModelConfig config;
    config.input_channels = h.at("input_channels").get<int>();
    config.latent_dim = h.at("latent_dim").get<int>();
    config.channels = h.at("channels").get<std::array<int, 4>>();
    config.patch_size = h.at("patch_size").get<int>();
    config.memory_items = h.at("memory_items").get<int>();
    config.shrink_threshold = h.at("shrink_threshold").get<double>();
    config.renormalize_after_shrink = h.at("renormalize_after_shrink").get<bool>();
    config.memory_enabled = h.at("memory_enabled").get<bool>();
    const Stream stream = stream_from_name(h.at("stream").get<std::string>());
    const uint64_t seed = h.at("seed").get<uint64_t>();

    CheckpointData out;
    out.seed = seed;
    out.model = StreamModel::init(config, stream, seed);

    const uint32_t param_count = r.read_pod<uint32_t>();
    auto refs = out.model.param_refs();
    if (param_count != refs.size())
        throw CheckpointError("checkpoint parameter count mismatch");
    for (auto& ref : refs) {
        const uint32_t name_len = r.read_pod<uint32_t>();
        std::string name(name_len, '\0');
        r.read(name.data(), name_len);
        if (name != ref.name)
            throw CheckpointError("checkpoint parameter order mismatch at " + name);
        const uint64_t count = r.read_pod<uint64_t>();
        if (count != static_cast<uint64_t>(ref.size))
            throw CheckpointError("checkpoint parameter size mismatch at " + name);
        r.read(ref.data, count * sizeof(double));
    }

    const uint64_t expected = r.hash;
    uint64_t stored = 0;
    r.in.read(reinterpret_cast<char*>(&stored), sizeof(stored));
    if (!r.in || stored != expected)
        throw CheckpointError("checkpoint checksum mismatch (truncated or corrupt file)");

    out.model.memory().validate();
    return out;
}

CheckpointData load_checkpoint(const std::filesystem::path& path, Stream expected_stream) {
    CheckpointData data = load_checkpoint(path);
    if (data.model.stream() != expected_stream)
        throw CheckpointError(std::string("checkpoint stream tag is ") +
                              stream_name(data.model.stream()) + ", expected " +
                              stream_name(expected_stream));
    return data;
}

} // namespace vadctx
