// CLI surface test: exit codes, the full micro chain, and idempotent reruns.
// Usage: vadctx_cli_test <path-to-vadctx-binary>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
    std::printf("%s %s\n", ok ? "[ ok ]" : "[FAIL]", what.c_str());
    if (!ok)
        ++failures;
}

int run(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    if (status == -1)
        return -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write(const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::trunc);
    out << body;
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: vadctx_cli_test <vadctx-binary>\n";
        return 2;
    }
    const std::string bin = argv[1];
    const fs::path work = fs::temp_directory_path() / ("vadctx_cli_" + std::to_string(::getpid()));
    fs::remove_all(work);
    fs::create_directories(work);

    const fs::path cfg = work / "micro.json";
    write(cfg, R"({
  "seed": 5,
  "threads": 2,
  "paths": {
    "data_root": ")" + (work / "data").string() + R"(",
    "cache_root": ")" + (work / "cache").string() + R"(",
    "checkpoint_dir": ")" + (work / "runs").string() + R"(",
    "report_dir": ")" + (work / "reports").string() + R"("
  },
  "synth": {"train_videos": 2, "test_videos": 1, "frames_per_video": 20,
            "anomaly_span_min": 5, "anomaly_span_max": 8, "anomaly_fraction": 0.3},
  "ingest": {"targets_per_frame_train": 3, "targets_per_frame_test": 4, "flow_iterations": 40},
  "model": {"latent_dim": 12, "channels": [3, 4, 6, 6], "memory_items": 10},
  "train": {"batch_size": 8, "epochs": 2, "learning_rate_temporal": 0.001}
})");

    const std::string quiet = " > /dev/null 2>&1";

    // Config errors exit with 2.
    write(work / "bad.json", R"({"no_such_section": 1})");
    check(run(bin + " synth --config " + (work / "bad.json").string() + quiet) == 2,
          "unknown config key exits 2");
    check(run(bin + " train --config " + cfg.string() + " --set train.epoch=1" + quiet) == 2,
          "unknown --set key exits 2");

    // Missing prerequisites exit with 3.
    check(run(bin + " score --config " + cfg.string() + quiet) == 3,
          "score before preprocess exits 3");
    check(run(bin + " eval --config " + cfg.string() + quiet) == 3,
          "eval before score exits 3");

    // The full chain runs and prints an AUC.
    check(run(bin + " synth --config " + cfg.string() + quiet) == 0, "synth exits 0");
    check(run(bin + " preprocess --config " + cfg.string() + quiet) == 0, "preprocess exits 0");
    check(run(bin + " train --config " + cfg.string() + " --stream both" + quiet) == 0,
          "train exits 0");
    check(run(bin + " score --config " + cfg.string() + quiet) == 0, "score exits 0");
    const fs::path eval_log = work / "eval.out";
    check(run(bin + " eval --config " + cfg.string() + " > " + eval_log.string() + " 2>&1") == 0,
          "eval exits 0");
    check(slurp(eval_log).find("AUC") != std::string::npos, "eval prints an AUC");
    check(run(bin + " plot --config " + cfg.string() + quiet) == 0, "plot exits 0");

    const std::string scores_before = slurp(work / "reports" / "scores.csv");
    check(!scores_before.empty(), "scores.csv was written");
    {
        // One row per scored frame: 20 frames/video minus frame 0, 1 test video.
        int rows = -1; // header
        for (char c : scores_before)
            if (c == '\n')
                ++rows;
        check(rows == 19, "scores.csv row count equals scored frame count");
    }

    const std::string metrics = slurp(work / "runs" / "spatial_metrics.jsonl");
    check(metrics.find("\"epoch\"") != std::string::npos &&
              metrics.find("\"batch\"") != std::string::npos &&
              metrics.find("\"recon\"") != std::string::npos &&
              metrics.find("\"entropy\"") != std::string::npos &&
              metrics.find("\"total\"") != std::string::npos,
          "training metrics log has the documented fields");

    const std::string eval_manifest = slurp(work / "reports" / "eval.json");
    check(eval_manifest.find("\"config\"") != std::string::npos,
          "eval report embeds the configuration");

    // Idempotent rerun: identical score bytes.
    check(run(bin + " score --config " + cfg.string() + quiet) == 0, "score rerun exits 0");
    check(slurp(work / "reports" / "scores.csv") == scores_before,
          "score rerun is byte-identical");

    // Ablation requires the memory-off checkpoints first.
    check(run(bin + " eval --config " + cfg.string() + " --ablation" + quiet) == 3,
          "ablation without nomem checkpoints exits 3");
    check(run(bin + " train --config " + cfg.string() + " --stream both --no-memory" + quiet) == 0,
          "nomem training exits 0");
    const fs::path ab_log = work / "ablation.out";
    check(run(bin + " eval --config " + cfg.string() + " --ablation > " + ab_log.string() +
              " 2>&1") == 0,
          "ablation eval exits 0");
    {
        std::ifstream ab(work / "reports" / "ablation.csv");
        int lines = 0;
        std::string line;
        while (std::getline(ab, line))
            if (!line.empty())
                ++lines;
        check(lines == 7, "ablation.csv holds a header and 6 rows");
    }

    // Degenerate labels (no anomalies at all) make eval a numeric failure.
    const fs::path cfg_flat = work / "flat.json";
    {
        std::string body = slurp(cfg);
        const auto pos = body.find("\"anomaly_fraction\": 0.3");
        body.replace(pos, std::string("\"anomaly_fraction\": 0.3").size(),
                     "\"anomaly_fraction\": 0.0");
        body.replace(body.find((work / "data").string()), (work / "data").string().size(),
                     (work / "data_flat").string());
        body.replace(body.find((work / "cache").string()), (work / "cache").string().size(),
                     (work / "cache_flat").string());
        body.replace(body.find((work / "reports").string()), (work / "reports").string().size(),
                     (work / "reports_flat").string());
        write(cfg_flat, body);
    }
    check(run(bin + " synth --config " + cfg_flat.string() + quiet) == 0, "flat synth exits 0");
    check(run(bin + " preprocess --config " + cfg_flat.string() + quiet) == 0,
          "flat preprocess exits 0");
    check(run(bin + " score --config " + cfg_flat.string() + quiet) == 0,
          "flat score exits 0 (checkpoints shared)");
    check(run(bin + " eval --config " + cfg_flat.string() + quiet) == 4,
          "single-class labels exit 4");

    fs::remove_all(work);
    if (failures == 0) {
        std::printf("cli test: all checks passed\n");
        return 0;
    }
    std::printf("cli test: %d check(s) failed\n", failures);
    return 1;
}
