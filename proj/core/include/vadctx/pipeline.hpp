#pragma once

#include "vadctx/checkpoint.hpp"
#include "vadctx/ingest.hpp"
#include "vadctx/run_config.hpp"
#include "vadctx/scoring.hpp"
#include "vadctx/synth.hpp"
#include "vadctx/train.hpp"

#include <optional>
#include <string>
#include <vector>

namespace vadctx {

// Stage drivers shared by the CLI and the acceptance suite. Every stage
// writes a manifest embedding the effective configuration verbatim.

CorpusSummary run_synth(const RunConfig& config);

PreprocessResult run_preprocess(const RunConfig& config);

// Trains one stream; memory_enabled overrides config.model.memory_enabled
// (used for the memory-off ablation variants). The checkpoint lands at
// checkpoint_path(config, stream, memory_enabled).
TrainResult run_train(const RunConfig& config, Stream stream,
                      std::optional<bool> memory_enabled = {});

std::filesystem::path checkpoint_path(const RunConfig& config, Stream stream, bool memory_enabled);

// Two-pass scoring of the test split with the configured memory variant;
// writes <report_dir>/scores.csv.
ScoreTable run_score(const RunConfig& config);

struct AblationRow {
    std::string method; // "spatial", "temporal", "dual"
    bool context_memory = false;
    double auc = 0;
};

struct EvalOutput {
    EvalResult result;
    std::vector<AblationRow> ablation; // six rows when ablation was requested
};

// AUC + report from scores.csv; with ablation set, also scores the four
// checkpoint variants and writes the 3-networks x memory-on/off table.
EvalOutput run_eval(const RunConfig& config, bool ablation);

// Score-vs-label curve PNG per test video from scores.csv.
void run_plot(const RunConfig& config);

} // namespace vadctx
