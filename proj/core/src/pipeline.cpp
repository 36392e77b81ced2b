#include "vadctx/pipeline.hpp"

#include "vadctx/common.hpp"
#include "vadctx/plot.hpp"

#include <json.hpp>

#include <fstream>
#include <iostream>

namespace vadctx {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_stage_manifest(const fs::path& path, const std::string& stage, const RunConfig& config,
                          json extra = json::object()) {
    json m;
    m["stage"] = stage;
    m["config"] = json::parse(config.effective_json);
    for (auto& [k, v] : extra.items())
        m[k] = v;
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IngestError("cannot write manifest: " + path.string());
    out << m.dump(2) << "\n";
}

std::string variant_name(Stream stream, bool memory_enabled) {
    std::string name = stream_name(stream);
    if (!memory_enabled)
        name += "_nomem";
    return name;
}

// Smooth one column per video and compute its AUC against the labels.
double column_auc(const ScoreTable& table, double FrameScoreRow::*column, int window) {
    std::vector<double> scores;
    std::vector<int> labels;
    size_t i = 0;
    while (i < table.rows.size()) {
        size_t j = i;
        while (j < table.rows.size() && table.rows[j].video == table.rows[i].video)
            ++j;
        std::vector<double> series;
        for (size_t k = i; k < j; ++k)
            series.push_back(table.rows[k].*column);
        const auto smoothed = smooth_scores(series, window);
        for (size_t k = i; k < j; ++k) {
            scores.push_back(smoothed[k - i]);
            labels.push_back(table.rows[k].label);
        }
        i = j;
    }
    return compute_auc(scores, labels);
}

ScoreTable score_with_variant(const RunConfig& config, bool memory_enabled,
                              const SplitData& spatial_data, const SplitData& temporal_data,
                              const LabelSet& labels) {
    const auto spatial_ckpt = checkpoint_path(config, Stream::spatial, memory_enabled);
    const auto temporal_ckpt = checkpoint_path(config, Stream::temporal, memory_enabled);
    auto spatial = load_checkpoint(spatial_ckpt, Stream::spatial);
    auto temporal = load_checkpoint(temporal_ckpt, Stream::temporal);
    if (spatial.model.config().patch_size != spatial_data.patch_size)
        throw ConfigError("score: checkpoint patch size does not match the cache");
    return score_test_split(spatial.model, temporal.model, spatial_data, temporal_data, labels,
                            config.eval.normalization, config.eval.smoothing_window,
                            config.threads);
}

} // namespace

CorpusSummary run_synth(const RunConfig& config) {
    CorpusSpec spec = config.synth;
    spec.seed = config.seed;
    auto summary = generate_corpus(spec, config.paths.data_root);
    write_stage_manifest(config.paths.data_root / "run_manifest.json", "synth", config,
                         {{"train_frames", summary.train_frames},
                          {"test_frames", summary.test_frames},
                          {"test_anomalous_frames", summary.test_anomalous_frames}});
    return summary;
}

PreprocessResult run_preprocess(const RunConfig& config) {
    IngestConfig ingest;
    ingest.threshold_train = config.ingest.detection_threshold_train;
    ingest.threshold_test = config.ingest.detection_threshold_test;
    ingest.flow_backend = config.ingest.flow_backend;
    ingest.precomputed_flow_root = config.ingest.precomputed_flow_root;
    ingest.flow = config.ingest.flow;
    ingest.patch_size = config.model.patch_size;
    ingest.threads = config.threads;
    auto result =
        preprocess(config.paths.data_root, config.paths.cache_root, ingest, config.seed,
                   config.effective_json);
    for (const auto& w : result.train.warnings)
        std::cerr << "warning: " << w << "\n";
    for (const auto& w : result.test.warnings)
        std::cerr << "warning: " << w << "\n";
    return result;
}

fs::path checkpoint_path(const RunConfig& config, Stream stream, bool memory_enabled) {
    return config.paths.checkpoint_dir / (variant_name(stream, memory_enabled) + ".ckpt");
}

TrainResult run_train(const RunConfig& config, Stream stream, std::optional<bool> memory_enabled) {
    const bool memory = memory_enabled.value_or(config.model.memory_enabled);
    const std::string name = variant_name(stream, memory);

    SplitData data = load_split(config.paths.cache_root, "train", stream,
                                config.ingest.targets_per_frame_train);
    if (data.patch_size != config.model.patch_size)
        throw ConfigError("train: cache patch size does not match model.patch_size");

    ModelConfig model_config = config.model;
    model_config.input_channels = stream_channels(stream);
    model_config.memory_enabled = memory;

    TrainConfig train_config;
    train_config.stream = stream;
    train_config.learning_rate = stream == Stream::spatial
                                     ? config.train.learning_rate_spatial
                                     : config.train.learning_rate_temporal;
    train_config.batch_size = config.train.batch_size;
    train_config.epochs = config.train.epochs;
    train_config.lambda_recon = config.train.lambda_recon;
    train_config.lambda_entropy = config.train.lambda_entropy;
    train_config.seed = derive_seed(config.seed, "train/" + std::string(stream_name(stream)));
    train_config.early_stop = config.train.early_stop;
    train_config.plateau_epochs = config.train.plateau_epochs;
    train_config.plateau_rel = config.train.plateau_rel;
    train_config.threads = config.threads;

    auto result = train_stream(train_config, model_config, data.groups,
                               config.paths.checkpoint_dir / (name + "_metrics.jsonl"));
    if (result.zero_read_frames > 0)
        std::cerr << "warning: " << result.zero_read_frames
                  << " frame(s) had every addressing weight shrunk to zero\n";

    save_checkpoint(checkpoint_path(config, stream, memory), result.model, train_config.seed);
    write_stage_manifest(config.paths.checkpoint_dir / (name + "_manifest.json"), "train", config,
                         {{"stream", stream_name(stream)},
                          {"memory_enabled", memory},
                          {"epochs_run", result.history.size()},
                          {"final_total", result.history.back().total},
                          {"zero_read_frames", result.zero_read_frames}});
    return result;
}

ScoreTable run_score(const RunConfig& config) {
    SplitData spatial_data = load_split(config.paths.cache_root, "test", Stream::spatial,
                                        config.ingest.targets_per_frame_test);
    SplitData temporal_data = load_split(config.paths.cache_root, "test", Stream::temporal,
                                         config.ingest.targets_per_frame_test);
    LabelSet labels = load_labels(config.paths.data_root / "test_labels.jsonl");

    auto table = score_with_variant(config, config.model.memory_enabled, spatial_data,
                                    temporal_data, labels);
    write_score_csv(config.paths.report_dir / "scores.csv", table);
    write_stage_manifest(config.paths.report_dir / "score_manifest.json", "score", config,
                         {{"rows", table.rows.size()},
                          {"memory_enabled", config.model.memory_enabled}});
    return table;
}

EvalOutput run_eval(const RunConfig& config, bool ablation) {
    const auto table = read_score_csv(config.paths.report_dir / "scores.csv");

    EvalOutput output;
    output.result = evaluate_scores(table);

    json report;
    report["auc"] = output.result.auc;
    json per_video = json::object();
    for (const auto& [video, auc] : output.result.per_video_auc)
        per_video[video] = auc;
    report["per_video_auc"] = per_video;

    if (ablation) {
        SplitData spatial_data = load_split(config.paths.cache_root, "test", Stream::spatial,
                                            config.ingest.targets_per_frame_test);
        SplitData temporal_data = load_split(config.paths.cache_root, "test", Stream::temporal,
                                             config.ingest.targets_per_frame_test);
        LabelSet labels = load_labels(config.paths.data_root / "test_labels.jsonl");

        for (bool memory : {false, true}) {
            auto variant_table =
                score_with_variant(config, memory, spatial_data, temporal_data, labels);
            write_score_csv(config.paths.report_dir /
                                (std::string("scores_memory_") + (memory ? "on" : "off") + ".csv"),
                            variant_table);
            const int window = config.eval.smoothing_window;
            output.ablation.push_back(
                {"spatial", memory, column_auc(variant_table, &FrameScoreRow::appearance, window)});
            output.ablation.push_back(
                {"temporal", memory, column_auc(variant_table, &FrameScoreRow::motion, window)});
            output.ablation.push_back(
                {"dual", memory, column_auc(variant_table, &FrameScoreRow::smoothed, 1)});
        }

        std::ofstream ab(config.paths.report_dir / "ablation.csv", std::ios::trunc);
        if (!ab)
            throw IngestError("cannot write ablation table");
        ab << "method,context_memory,auc\n";
        json ab_json = json::array();
        for (const auto& row : output.ablation) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.6f", row.auc);
            ab << row.method << ',' << (row.context_memory ? "yes" : "no") << ',' << buf << '\n';
            ab_json.push_back(
                {{"method", row.method}, {"context_memory", row.context_memory}, {"auc", row.auc}});
        }
        report["ablation"] = ab_json;
    }

    write_stage_manifest(config.paths.report_dir / "eval.json", "eval", config, report);
    run_plot(config);
    return output;
}

void run_plot(const RunConfig& config) {
    const auto table = read_score_csv(config.paths.report_dir / "scores.csv");
    size_t i = 0;
    while (i < table.rows.size()) {
        size_t j = i;
        std::vector<double> scores;
        std::vector<int> labels;
        while (j < table.rows.size() && table.rows[j].video == table.rows[i].video) {
            scores.push_back(table.rows[j].smoothed);
            labels.push_back(table.rows[j].label);
            ++j;
        }
        render_score_curve(config.paths.report_dir / "curves" / (table.rows[i].video + ".png"),
                           scores, labels);
        i = j;
    }
}

} // namespace vadctx
