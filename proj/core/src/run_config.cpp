#include "vadctx/run_config.hpp"

#include "vadctx/common.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <set>

namespace vadctx {

using nlohmann::json;

namespace {

json defaults() {
    json j;
    j["seed"] = 7;
    j["threads"] = 2;
    j["paths"] = {{"data_root", "data/synthetic"},
                  {"cache_root", "cache"},
                  {"checkpoint_dir", "runs"},
                  {"report_dir", "reports"}};
    j["synth"] = {{"height", 96},
                  {"width", 128},
                  {"train_videos", 8},
                  {"test_videos", 4},
                  {"frames_per_video", 60},
                  {"min_sprites", 2},
                  {"max_sprites", 4},
                  {"size_min", 8.0},
                  {"size_max", 16.0},
                  {"speed_min", 0.5},
                  {"speed_max", 1.5},
                  {"anomaly_speed_multiplier", 3.0},
                  {"anomaly_size_multiplier", 2.5},
                  {"anomaly_span_min", 10},
                  {"anomaly_span_max", 20},
                  {"anomaly_fraction", 0.25}};
    j["ingest"] = {{"detection_threshold_train", 0.5},
                   {"detection_threshold_test", 0.4},
                   {"targets_per_frame_train", 18},
                   {"targets_per_frame_test", 24},
                   {"flow_backend", "horn_schunck"},
                   {"precomputed_flow_root", ""},
                   {"flow_alpha", 0.5},
                   {"flow_iterations", 120},
                   {"flow_pyramid_levels", 4}};
    j["model"] = {{"latent_dim", 256},
                  {"channels", {32, 48, 64, 64}},
                  {"patch_size", 64},
                  {"memory_items", 100},
                  // shrink_threshold defaults to 1/memory_items when omitted
                  {"renormalize_after_shrink", false},
                  {"memory_enabled", true}};
    j["train"] = {{"batch_size", 64},
                  {"epochs", 60},
                  {"lambda_recon", 1.0},
                  {"lambda_entropy", 0.0002},
                  {"learning_rate_spatial", 0.001},
                  {"learning_rate_temporal", 0.0001},
                  {"early_stop", true},
                  {"plateau_epochs", 10},
                  {"plateau_rel", 1e-4}};
    j["eval"] = {{"smoothing_window", 10}, {"normalization", "global_max"}};
    return j;
}

// Merge user config over defaults, rejecting keys the schema does not know.
void merge_checked(json& base, const json& user, const std::string& prefix) {
    if (!user.is_object())
        throw ConfigError("config: expected an object at " + (prefix.empty() ? "top level" : prefix));
    for (const auto& [key, value] : user.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!base.contains(key)) {
            // shrink_threshold is schema-valid but has a computed default.
            if (path == "model.shrink_threshold") {
                base[key] = value;
                continue;
            }
            throw ConfigError("config: unknown key '" + path + "'");
        }
        if (base[key].is_object() && !base[key].empty()) {
            merge_checked(base[key], value, path);
        } else {
            base[key] = value;
        }
    }
}

void apply_override(json& root, const std::string& spec) {
    const size_t eq = spec.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like key.path=value: " + spec);
    const std::string path = spec.substr(0, eq);
    const std::string value = spec.substr(eq + 1);

    std::vector<std::string> parts;
    size_t start = 0;
    while (true) {
        const size_t dot = path.find('.', start);
        parts.push_back(path.substr(start, dot == std::string::npos ? std::string::npos : dot - start));
        if (dot == std::string::npos)
            break;
        start = dot + 1;
    }

    json* node = &root;
    for (size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!node->contains(parts[i]))
            throw ConfigError("config: unknown key '" + path + "'");
        node = &(*node)[parts[i]];
    }
    const std::string& leaf = parts.back();
    if (!node->contains(leaf) && path != "model.shrink_threshold")
        throw ConfigError("config: unknown key '" + path + "'");

    // Interpret the value with JSON syntax when possible, else as a string.
    json parsed = json::parse(value, nullptr, false);
    if (parsed.is_discarded())
        parsed = value;
    (*node)[leaf] = parsed;
}

template <typename T>
T get(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

} // namespace

std::string default_config_json() {
    return defaults().dump(2);
}

RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path.string());
    json user;
    try {
        in >> user;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path.string() + ": " + e.what());
    }

    json j = defaults();
    merge_checked(j, user, "");

    if (const char* env = std::getenv("VADCTX_CACHE_ROOT"); env && *env)
        j["paths"]["cache_root"] = env;
    for (const auto& o : overrides)
        apply_override(j, o);

    RunConfig cfg;
    cfg.seed = get<uint64_t>(j, "seed");
    cfg.threads = get<int>(j, "threads");
    if (cfg.threads < 1)
        throw ConfigError("config: threads must be >= 1");

    const json& paths = j.at("paths");
    cfg.paths.data_root = get<std::string>(paths, "data_root");
    cfg.paths.cache_root = get<std::string>(paths, "cache_root");
    cfg.paths.checkpoint_dir = get<std::string>(paths, "checkpoint_dir");
    cfg.paths.report_dir = get<std::string>(paths, "report_dir");

    const json& synth = j.at("synth");
    cfg.synth.height = get<int>(synth, "height");
    cfg.synth.width = get<int>(synth, "width");
    cfg.synth.train_videos = get<int>(synth, "train_videos");
    cfg.synth.test_videos = get<int>(synth, "test_videos");
    cfg.synth.frames_per_video = get<int>(synth, "frames_per_video");
    cfg.synth.min_sprites = get<int>(synth, "min_sprites");
    cfg.synth.max_sprites = get<int>(synth, "max_sprites");
    cfg.synth.size_min = get<double>(synth, "size_min");
    cfg.synth.size_max = get<double>(synth, "size_max");
    cfg.synth.speed_min = get<double>(synth, "speed_min");
    cfg.synth.speed_max = get<double>(synth, "speed_max");
    cfg.synth.anomaly_speed_multiplier = get<double>(synth, "anomaly_speed_multiplier");
    cfg.synth.anomaly_size_multiplier = get<double>(synth, "anomaly_size_multiplier");
    cfg.synth.anomaly_span_min = get<int>(synth, "anomaly_span_min");
    cfg.synth.anomaly_span_max = get<int>(synth, "anomaly_span_max");
    cfg.synth.anomaly_fraction = get<double>(synth, "anomaly_fraction");
    cfg.synth.seed = cfg.seed;

    const json& ingest = j.at("ingest");
    cfg.ingest.detection_threshold_train = get<double>(ingest, "detection_threshold_train");
    cfg.ingest.detection_threshold_test = get<double>(ingest, "detection_threshold_test");
    cfg.ingest.targets_per_frame_train = get<int>(ingest, "targets_per_frame_train");
    cfg.ingest.targets_per_frame_test = get<int>(ingest, "targets_per_frame_test");
    cfg.ingest.flow_backend = get<std::string>(ingest, "flow_backend");
    cfg.ingest.precomputed_flow_root = get<std::string>(ingest, "precomputed_flow_root");
    cfg.ingest.flow.alpha = get<double>(ingest, "flow_alpha");
    cfg.ingest.flow.iterations = get<int>(ingest, "flow_iterations");
    cfg.ingest.flow.pyramid_levels = get<int>(ingest, "flow_pyramid_levels");
    if (cfg.ingest.targets_per_frame_train < 1 || cfg.ingest.targets_per_frame_test < 1)
        throw ConfigError("config: targets_per_frame must be >= 1");
    if (cfg.ingest.flow_backend != "horn_schunck" && cfg.ingest.flow_backend != "precomputed")
        throw ConfigError("config: flow_backend must be horn_schunck or precomputed");

    const json& model = j.at("model");
    cfg.model.latent_dim = get<int>(model, "latent_dim");
    const auto channels = get<std::vector<int>>(model, "channels");
    if (channels.size() != 4)
        throw ConfigError("config: model.channels must list exactly 4 values");
    std::copy(channels.begin(), channels.end(), cfg.model.channels.begin());
    cfg.model.patch_size = get<int>(model, "patch_size");
    cfg.model.memory_items = get<int>(model, "memory_items");
    cfg.model.renormalize_after_shrink = get<bool>(model, "renormalize_after_shrink");
    cfg.model.memory_enabled = get<bool>(model, "memory_enabled");
    if (model.contains("shrink_threshold"))
        cfg.model.shrink_threshold = get<double>(model, "shrink_threshold");
    else
        cfg.model.shrink_threshold = 1.0 / cfg.model.memory_items;
    j["model"]["shrink_threshold"] = cfg.model.shrink_threshold;

    const json& train = j.at("train");
    cfg.train.batch_size = get<int>(train, "batch_size");
    cfg.train.epochs = get<int>(train, "epochs");
    cfg.train.lambda_recon = get<double>(train, "lambda_recon");
    cfg.train.lambda_entropy = get<double>(train, "lambda_entropy");
    cfg.train.learning_rate_spatial = get<double>(train, "learning_rate_spatial");
    cfg.train.learning_rate_temporal = get<double>(train, "learning_rate_temporal");
    cfg.train.early_stop = get<bool>(train, "early_stop");
    cfg.train.plateau_epochs = get<int>(train, "plateau_epochs");
    cfg.train.plateau_rel = get<double>(train, "plateau_rel");

    const json& eval = j.at("eval");
    cfg.eval.smoothing_window = get<int>(eval, "smoothing_window");
    if (cfg.eval.smoothing_window < 1)
        throw ConfigError("config: smoothing_window must be >= 1");
    const std::string norm = get<std::string>(eval, "normalization");
    if (norm == "global_max")
        cfg.eval.normalization = Normalization::global_max;
    else if (norm == "minmax")
        cfg.eval.normalization = Normalization::minmax;
    else
        throw ConfigError("config: normalization must be 'global_max' or 'minmax'");

    // Validate the model geometry early (patch size, channels, memory).
    ModelConfig probe = cfg.model;
    probe.input_channels = 1;
    probe.validate();

    cfg.effective_json = j.dump(2);
    return cfg;
}

} // namespace vadctx
