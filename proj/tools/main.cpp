#include "vadctx/common.hpp"
#include "vadctx/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

using namespace vadctx;

struct CommonArgs {
    std::string config_path = "configs/synthetic.json";
    std::vector<std::string> overrides;

    void attach(CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "Run configuration file (JSON)")
            ->capture_default_str();
        cmd->add_option("--set", overrides,
                        "Override a config key, e.g. --set train.epochs=10 (repeatable)");
        // Shorthands for the keys that change most often.
        auto shorthand = [this, cmd](const std::string& flag, const std::string& key,
                                     const std::string& help) {
            cmd->add_option_function<std::string>(
                flag, [this, key](const std::string& v) { overrides.push_back(key + "=" + v); },
                help);
        };
        shorthand("--seed", "seed", "Override the run seed");
        shorthand("--threads", "threads", "Override the worker thread count");
        shorthand("--data-root", "paths.data_root", "Override paths.data_root");
        shorthand("--cache-root", "paths.cache_root", "Override paths.cache_root");
        shorthand("--checkpoint-dir", "paths.checkpoint_dir", "Override paths.checkpoint_dir");
        shorthand("--report-dir", "paths.report_dir", "Override paths.report_dir");
    }

    RunConfig load() const { return load_run_config(config_path, overrides); }
};

int dispatch(const std::function<void()>& fn) {
    try {
        fn();
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const MissingPrereqError& e) {
        std::cerr << "missing prerequisite: " << e.what() << "\n";
        return 3;
    } catch (const CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"vadctx: object-centric dual-stream video anomaly detection"};
    app.require_subcommand(1);

    CommonArgs synth_args, pre_args, train_args, score_args, eval_args, plot_args;
    std::string train_stream = "both";
    bool train_no_memory = false;
    bool eval_ablation = false;

    auto* synth = app.add_subcommand("synth", "Generate the deterministic synthetic corpus");
    synth_args.attach(synth);

    auto* pre = app.add_subcommand("preprocess", "Extract frames, flow and target crops into the cache");
    pre_args.attach(pre);

    auto* train = app.add_subcommand("train", "Train a stream model on the training split");
    train_args.attach(train);
    train->add_option("--stream", train_stream, "spatial, temporal, or both")
        ->check(CLI::IsMember({"spatial", "temporal", "both"}))
        ->capture_default_str();
    train->add_flag("--no-memory", train_no_memory,
                    "Train the memory-disabled ablation variant");

    auto* score = app.add_subcommand("score", "Two-pass scoring of the test split to scores.csv");
    score_args.attach(score);

    auto* eval = app.add_subcommand("eval", "Frame-level AUC, report and curves from scores.csv");
    eval_args.attach(eval);
    eval->add_flag("--ablation", eval_ablation,
                   "Also score the 3 networks with memory on/off (needs all 4 checkpoints)");

    auto* plot = app.add_subcommand("plot", "Re-render score-vs-label curves from scores.csv");
    plot_args.attach(plot);

    CLI11_PARSE(app, argc, argv);

    if (synth->parsed()) {
        return dispatch([&] {
            auto cfg = synth_args.load();
            auto summary = run_synth(cfg);
            std::printf("synth: %d train frames, %d test frames (%d anomalous) -> %s\n",
                        summary.train_frames, summary.test_frames, summary.test_anomalous_frames,
                        cfg.paths.data_root.c_str());
        });
    }
    if (pre->parsed()) {
        return dispatch([&] {
            auto cfg = pre_args.load();
            auto result = run_preprocess(cfg);
            std::printf("preprocess: train %d frames (%d empty), test %d frames (%d empty), "
                        "flow scale (u=%.4f, v=%.4f) -> %s\n",
                        result.train.cached_frames, result.train.empty_frames,
                        result.test.cached_frames, result.test.empty_frames, result.flow_scale.u,
                        result.flow_scale.v, cfg.paths.cache_root.c_str());
        });
    }
    if (train->parsed()) {
        return dispatch([&] {
            auto cfg = train_args.load();
            std::optional<bool> memory;
            if (train_no_memory)
                memory = false;
            auto train_one = [&](Stream s) {
                auto result = run_train(cfg, s, memory);
                std::printf("train %s: %zu epochs, final loss %.6f -> %s\n", stream_name(s),
                            result.history.size(), result.history.back().total,
                            checkpoint_path(cfg, s, memory.value_or(cfg.model.memory_enabled))
                                .c_str());
            };
            if (train_stream == "spatial" || train_stream == "both")
                train_one(Stream::spatial);
            if (train_stream == "temporal" || train_stream == "both")
                train_one(Stream::temporal);
        });
    }
    if (score->parsed()) {
        return dispatch([&] {
            auto cfg = score_args.load();
            auto table = run_score(cfg);
            std::printf("score: %zu frames -> %s\n", table.rows.size(),
                        (cfg.paths.report_dir / "scores.csv").c_str());
        });
    }
    if (eval->parsed()) {
        return dispatch([&] {
            auto cfg = eval_args.load();
            auto output = run_eval(cfg, eval_ablation);
            std::printf("frame-level AUC: %.4f\n", output.result.auc);
            for (const auto& [video, auc] : output.result.per_video_auc)
                std::printf("  %s: %.4f\n", video.c_str(), auc);
            if (!output.ablation.empty()) {
                std::printf("%-10s %-16s %s\n", "method", "context_memory", "auc");
                for (const auto& row : output.ablation)
                    std::printf("%-10s %-16s %.4f\n", row.method.c_str(),
                                row.context_memory ? "yes" : "no", row.auc);
            }
        });
    }
    if (plot->parsed()) {
        return dispatch([&] {
            auto cfg = plot_args.load();
            run_plot(cfg);
            std::printf("plot: curves -> %s\n", (cfg.paths.report_dir / "curves").c_str());
        });
    }
    return 0;
}
