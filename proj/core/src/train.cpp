#include "vadctx/train.hpp"

#include "vadctx/common.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace vadctx {

void TrainConfig::validate() const {
    if (learning_rate <= 0)
        throw ConfigError("train: learning_rate must be > 0");
    if (batch_size < 1)
        throw ConfigError("train: batch_size must be >= 1");
    if (epochs < 1)
        throw ConfigError("train: epochs must be >= 1");
    if (lambda_recon < 0 || lambda_entropy < 0)
        throw ConfigError("train: loss weights must be >= 0");
    if (plateau_epochs < 1)
        throw ConfigError("train: plateau_epochs must be >= 1");
}

void Adam::init(const std::vector<ParamRef>& refs) {
    m.clear();
    v.clear();
    for (const auto& ref : refs) {
        m.push_back(Vec::Zero(ref.size));
        v.push_back(Vec::Zero(ref.size));
    }
    t = 0;
}

void Adam::step(std::vector<ParamRef>& refs, const Gradients& grads) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (size_t p = 0; p < refs.size(); ++p) {
        const Vec& g = grads.slots[p];
        m[p] = beta1 * m[p] + (1.0 - beta1) * g;
        v[p] = beta2 * v[p] + (1.0 - beta2) * g.cwiseProduct(g);
        Eigen::Map<Vec> theta(refs[p].data, refs[p].size);
        theta.array() -= learning_rate * (m[p].array() / bc1) /
                         ((v[p].array() / bc2).sqrt() + epsilon);
    }
}

TrainResult train_stream(const TrainConfig& config, const ModelConfig& model_config,
                         const std::vector<FrameGroup>& dataset,
                         const std::filesystem::path& metrics_path) {
    config.validate();
    if (dataset.empty())
        throw MissingPrereqError("train: dataset is empty (run preprocess first)");
    for (const auto& group : dataset)
        if (group.stream != config.stream)
            throw std::invalid_argument("train: dataset stream tag does not match config");

    TrainResult result;
    result.model = StreamModel::init(model_config, config.stream, config.seed);
    auto refs = result.model.param_refs();

    Adam adam;
    adam.learning_rate = config.learning_rate;
    adam.beta1 = config.beta1;
    adam.beta2 = config.beta2;
    adam.epsilon = config.adam_epsilon;
    adam.init(refs);

    std::ofstream metrics;
    if (!metrics_path.empty()) {
        if (metrics_path.has_parent_path())
            std::filesystem::create_directories(metrics_path.parent_path());
        metrics.open(metrics_path, std::ios::trunc);
        if (!metrics)
            throw IngestError("cannot write metrics log: " + metrics_path.string());
    }

    std::vector<size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), size_t{0});

    double best_total = std::numeric_limits<double>::infinity();
    int epochs_since_improvement = 0;

    // Fixed chunking keeps the gradient reduction order independent of the
    // worker count, so the loss history depends only on (config, seed).
    constexpr size_t kChunks = 4;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(config.seed, "epoch/" + std::to_string(epoch)));
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);

        double epoch_recon = 0, epoch_entropy = 0, epoch_total = 0;
        int batches = 0;

        for (size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            const size_t end = std::min(order.size(), begin + config.batch_size);
            const size_t batch_frames = end - begin;

            struct ChunkResult {
                Gradients grads;
                double recon = 0, entropy = 0;
                int zero_reads = 0;
            };
            std::vector<ChunkResult> chunks(kChunks);
            for (auto& c : chunks)
                c.grads = result.model.make_gradients();

            const size_t chunk_size = (batch_frames + kChunks - 1) / kChunks;
            parallel_for(kChunks, config.threads, [&](size_t ci) {
                const size_t lo = begin + ci * chunk_size;
                const size_t hi = std::min(end, lo + chunk_size);
                StreamModel::FrameCache cache;
                for (size_t k = lo; k < hi; ++k) {
                    const FrameGroup& group = dataset[order[k]];
                    auto fwd = result.model.forward_frame(group, cache);
                    double mean_recon = 0;
                    for (double r : fwd.target_recon)
                        mean_recon += r;
                    mean_recon /= static_cast<double>(fwd.target_recon.size());
                    chunks[ci].recon += mean_recon;
                    chunks[ci].entropy += fwd.entropy;
                    if (fwd.zero_read)
                        ++chunks[ci].zero_reads;
                    result.model.backward_frame(group, cache, config.lambda_recon,
                                                config.lambda_entropy, chunks[ci].grads);
                }
            });

            Gradients grads = std::move(chunks[0].grads);
            double batch_recon = chunks[0].recon;
            double batch_entropy = chunks[0].entropy;
            int zero_reads = chunks[0].zero_reads;
            for (size_t ci = 1; ci < kChunks; ++ci) {
                grads.add(chunks[ci].grads);
                batch_recon += chunks[ci].recon;
                batch_entropy += chunks[ci].entropy;
                zero_reads += chunks[ci].zero_reads;
            }
            grads.scale(1.0 / static_cast<double>(batch_frames));
            batch_recon /= static_cast<double>(batch_frames);
            batch_entropy /= static_cast<double>(batch_frames);
            result.zero_read_frames += zero_reads;

            const double batch_total =
                config.lambda_recon * batch_recon + config.lambda_entropy * batch_entropy;
            if (!std::isfinite(batch_total)) {
                const char* term = !std::isfinite(batch_recon) ? "recon" : "entropy";
                throw NumericError("non-finite training loss (epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batches) + ", term " + term + ")");
            }

            adam.step(refs, grads);

            if (metrics.is_open()) {
                char line[256];
                std::snprintf(line, sizeof(line),
                              "{\"epoch\": %d, \"batch\": %d, \"recon\": %.17g, "
                              "\"entropy\": %.17g, \"total\": %.17g}\n",
                              epoch, batches, batch_recon, batch_entropy, batch_total);
                metrics << line;
            }

            epoch_recon += batch_recon;
            epoch_entropy += batch_entropy;
            epoch_total += batch_total;
            ++batches;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.recon = epoch_recon / batches;
        stats.entropy = epoch_entropy / batches;
        stats.total = epoch_total / batches;
        result.history.push_back(stats);

        if (stats.total < best_total * (1.0 - config.plateau_rel)) {
            best_total = stats.total;
            epochs_since_improvement = 0;
        } else {
            ++epochs_since_improvement;
        }
        if (config.early_stop && epochs_since_improvement >= config.plateau_epochs)
            break;
    }

    if (!result.model.parameters_finite())
        throw NumericError("non-finite model parameters after training");
    return result;
}

} // namespace vadctx
