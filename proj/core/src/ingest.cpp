#include "vadctx/ingest.hpp"

#include "vadctx/common.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace vadctx {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> list_videos(const fs::path& split_dir) {
    if (!fs::is_directory(split_dir))
        throw MissingPrereqError("split directory not found: " + split_dir.string() +
                                 " (generate or stage the corpus first)");
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(split_dir))
        if (entry.is_directory())
            names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    if (names.empty())
        throw MissingPrereqError("no video directories in: " + split_dir.string());
    return names;
}

struct ScaleAccum {
    double sum_u2 = 0.0, sum_v2 = 0.0;
    int64_t count = 0;

    void add_patch(const Tensor& patch) {
        const Eigen::Index plane = static_cast<Eigen::Index>(patch.height) * patch.width;
        sum_u2 += patch.data.head(plane).squaredNorm();
        sum_v2 += patch.data.tail(plane).squaredNorm();
        count += plane;
    }
    FlowScale finish() const {
        FlowScale s;
        if (count > 0) {
            s.u = std::max(std::sqrt(sum_u2 / static_cast<double>(count)), 1e-6);
            s.v = std::max(std::sqrt(sum_v2 / static_cast<double>(count)), 1e-6);
        }
        return s;
    }
};

PreprocessStats preprocess_split(const fs::path& data_root, const fs::path& cache_root,
                                 const std::string& split, double threshold,
                                 const IngestConfig& config, uint64_t seed, ScaleAccum* scale,
                                 json& manifest_videos) {
    PreprocessStats stats;
    const fs::path split_dir = data_root / split;
    const auto videos = list_videos(split_dir);

    // Frame geometry per video (needed to clip detections).
    std::map<std::string, std::vector<Image>> frames_by_video;
    for (const auto& video : videos)
        frames_by_video.emplace(video, extract_frames(split_dir / video));

    const fs::path det_path = data_root / (split + "_detections.jsonl");
    if (!fs::exists(det_path))
        throw MissingPrereqError("detections file not found: " + det_path.string());
    auto detections = load_detections(det_path, threshold, [&](const std::string& video) {
        auto it = frames_by_video.find(video);
        if (it == frames_by_video.end() || it->second.empty())
            throw IngestError("detections reference unknown video: " + video);
        return std::pair<int, int>{it->second[0].height, it->second[0].width};
    });
    stats.warnings = detections.warnings;

    for (const auto& video : videos) {
        const auto& frames = frames_by_video.at(video);
        const int total = static_cast<int>(frames.size());
        if (total < 2)
            throw IngestError("video needs at least 2 frames for flow: " + video);
        ++stats.videos;
        manifest_videos.push_back({{"name", video}, {"frames", total}});

        // Dense flow per consecutive pair; field t-1 covers (t-1, t).
        std::vector<FlowField> flows(static_cast<size_t>(total) - 1);
        if (config.flow_backend == "horn_schunck") {
            parallel_for(flows.size(), config.threads, [&](size_t k) {
                flows[k] = compute_flow(frames[k], frames[k + 1], config.flow);
            });
            write_flow_cache(cache_root / split / "flow" / (video + ".flow"), flows);
        } else if (config.flow_backend == "precomputed") {
            const fs::path src = config.precomputed_flow_root / split / (video + ".flow");
            flows = read_flow_cache(src);
            if (flows.size() != static_cast<size_t>(total) - 1)
                throw IngestError("precomputed flow count mismatch for " + video + ": expected " +
                                  std::to_string(total - 1) + ", got " +
                                  std::to_string(flows.size()));
            if (!flows.empty() &&
                (flows[0].height != frames[0].height || flows[0].width != frames[0].width))
                throw IngestError("precomputed flow shape mismatch for " + video);
            write_flow_cache(cache_root / split / "flow" / (video + ".flow"), flows);
        } else {
            throw ConfigError("unknown flow backend: " + config.flow_backend);
        }

        const fs::path spatial_dir = cache_root / split / "patches" / video / "spatial";
        const fs::path temporal_dir = cache_root / split / "patches" / video / "temporal";

        for (int t = 1; t < total; ++t) {
            const std::vector<Detection>* dets = detections.find(video, t);

            CachedFramePatches spatial, temporal;
            spatial.video = temporal.video = video;
            spatial.frame = temporal.frame = t;
            spatial.stream = Stream::spatial;
            temporal.stream = Stream::temporal;
            // Shared padding seed keeps the two streams aligned.
            const uint64_t pad_seed =
                derive_seed(seed, video + "/" + std::to_string(t) + "/pad");
            spatial.pad_seed = temporal.pad_seed = pad_seed;

            if (dets) {
                for (const auto& box : *dets) {
                    if (box.area() <= 0.0) {
                        stats.warnings.push_back("degenerate box skipped (video " + video +
                                                 ", frame " + std::to_string(t) + ")");
                        continue;
                    }
                    spatial.boxes.push_back(box);
                    temporal.boxes.push_back(box);
                    spatial.patches.push_back(crop_patch(frames[t], box, config.patch_size));
                    temporal.patches.push_back(
                        crop_flow_patch(flows[static_cast<size_t>(t) - 1], box, config.patch_size));
                }
            }

            write_patch_frame(spatial_dir, spatial);
            write_patch_frame(temporal_dir, temporal);
            ++stats.cached_frames;
            if (spatial.patches.empty())
                ++stats.empty_frames;
            if (scale)
                for (const auto& p : temporal.patches)
                    scale->add_patch(p);
        }
    }
    return stats;
}

} // namespace

PreprocessResult preprocess(const fs::path& data_root, const fs::path& cache_root,
                            const IngestConfig& config, uint64_t seed,
                            const std::string& config_json) {
    if (config.patch_size < 8 || config.patch_size % 8 != 0)
        throw ConfigError("ingest: patch_size must be a positive multiple of 8");
    fs::create_directories(cache_root);

    PreprocessResult result;
    ScaleAccum scale;
    json train_videos = json::array();
    json test_videos = json::array();

    result.train = preprocess_split(data_root, cache_root, "train", config.threshold_train, config,
                                    seed, &scale, train_videos);
    result.flow_scale = scale.finish();
    result.test = preprocess_split(data_root, cache_root, "test", config.threshold_test, config,
                                   seed, nullptr, test_videos);

    json manifest;
    manifest["config"] = json::parse(config_json.empty() ? "{}" : config_json);
    manifest["seed"] = seed;
    manifest["patch_size"] = config.patch_size;
    manifest["flow_scale"] = {{"u", result.flow_scale.u}, {"v", result.flow_scale.v}};
    manifest["splits"] = {{"train", {{"videos", train_videos}}},
                          {"test", {{"videos", test_videos}}}};

    std::ofstream out(cache_root / "manifest.json", std::ios::trunc);
    if (!out)
        throw IngestError("cannot write cache manifest in: " + cache_root.string());
    out << manifest.dump(2) << "\n";
    return result;
}

SplitData load_split(const fs::path& cache_root, const std::string& split, Stream stream, int n) {
    const fs::path manifest_path = cache_root / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in)
        throw MissingPrereqError("cache manifest not found: " + manifest_path.string() +
                                 " (run preprocess first)");
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw IngestError("corrupt cache manifest: " + std::string(e.what()));
    }

    SplitData data;
    data.flow_scale.u = manifest.at("flow_scale").at("u").get<double>();
    data.flow_scale.v = manifest.at("flow_scale").at("v").get<double>();
    data.patch_size = manifest.at("patch_size").get<int>();

    for (const auto& video : manifest.at("splits").at(split).at("videos")) {
        const std::string name = video.at("name").get<std::string>();
        const int total = video.at("frames").get<int>();
        data.video_frame_count[name] = total;

        const fs::path dir = cache_root / split / "patches" / name / stream_name(stream);
        for (int t = 1; t < total; ++t) {
            CachedFramePatches cached = read_patch_frame(dir, name, t, stream);
            auto group = group_and_pad(cached, n);
            if (!group) {
                data.empty_frames.push_back({name, t});
                continue;
            }
            if (stream == Stream::temporal) {
                const Eigen::Index plane =
                    static_cast<Eigen::Index>(data.patch_size) * data.patch_size;
                for (auto& patch : group->patches) {
                    patch.data.head(plane) /= data.flow_scale.u;
                    patch.data.tail(plane) /= data.flow_scale.v;
                }
            }
            data.groups.push_back(std::move(*group));
        }
    }
    return data;
}

} // namespace vadctx
