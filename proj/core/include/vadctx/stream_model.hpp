#pragma once

#include "vadctx/layers.hpp"
#include "vadctx/memory_bank.hpp"
#include "vadctx/types.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace vadctx {

struct ModelConfig {
    int input_channels = 1;
    int latent_dim = 256; // C
    std::array<int, 4> channels = {32, 48, 64, 64};
    int patch_size = 64; // must be divisible by 8 (three 2x pooling stages)
    int memory_items = 100;
    double shrink_threshold = 0.01;
    bool renormalize_after_shrink = false;
    bool memory_enabled = true;

    int base_resolution() const { return patch_size / 8; }
    int flat_dim() const { return channels[3] * base_resolution() * base_resolution(); }
    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

struct ParamRef {
    std::string name;
    double* data = nullptr;
    Eigen::Index size = 0;
};

// Gradient buffers aligned with StreamModel::param_refs().
struct Gradients {
    std::vector<Vec> slots;

    void add(const Gradients& o);
    void scale(double s);
    void set_zero();
    double* data(size_t i) { return slots[i].data(); }
};

// Arithmetic mean of a frame's target features: its spatial context.
Vec aggregate_context(const std::vector<Vec>& features);

// Result of re-encoding one frame's targets through the autoencoder with the
// context memory in the loop.
struct FrameForward {
    std::vector<Tensor> reconstructions;
    std::vector<double> target_recon; // per-target mean squared error
    double entropy = 0.0;
    bool zero_read = false; // hard shrinkage removed every addressing weight
    Vec context;            // aggregated per-frame context (mean of features)
    Vec read;               // memory read (== context when memory is disabled)
};

// One autoencoder stream: 4-conv encoder with 3 max-pool stages, a flatten
// projection to the latent dimension, the context memory, and a mirrored
// decoder fed with the 2C concatenation of target feature and read context.
class StreamModel {
  public:
    StreamModel() = default;

    static StreamModel init(const ModelConfig& config, Stream stream, uint64_t seed);

    const ModelConfig& config() const { return config_; }
    Stream stream() const { return stream_; }
    const MemoryBank& memory() const { return memory_; }
    MemoryBank& memory() { return memory_; }

    // Feature of one target patch. Deterministic given parameters.
    Vec encode(const Tensor& patch) const;

    // Reconstruction from a fused feature of dimension 2C.
    Tensor decode(const Vec& fused) const;

    // Concatenation [target_feature ; read_context], target first.
    static Vec fuse_context(const Vec& target_feature, const Vec& read_context);

    // Encode all targets, aggregate one context per frame, address the
    // memory once, fuse the read with each target feature and decode.
    FrameForward forward_frame(const FrameGroup& group) const;

    // Training path: forward with caches kept, then backward accumulation.
    struct FrameCache;
    FrameForward forward_frame(const FrameGroup& group, FrameCache& cache) const;
    void backward_frame(const FrameGroup& group, const FrameCache& cache, double lambda_recon,
                        double lambda_entropy, Gradients& grads) const;

    // Parameter registry, fixed order. Gradients and the optimizer state are
    // aligned with it, and the checkpoint serializes it in this order.
    std::vector<ParamRef> param_refs();
    std::vector<ParamRef> param_refs() const;
    Gradients make_gradients() const;

    bool parameters_finite() const;

    // Internals needed by the checkpoint reader.
    std::array<Conv2d, 4>& encoder_convs() { return enc_convs_; }
    std::array<Conv2d, 4>& decoder_convs() { return dec_convs_; }
    Linear& encoder_proj() { return enc_proj_; }
    Linear& decoder_proj() { return dec_proj_; }

  public:
    struct EncodeState;
    struct DecodeState;

  private:
    Vec encode_impl(const Tensor& patch, EncodeState* state) const;
    Tensor decode_impl(const Vec& fused, DecodeState* state) const;

    ModelConfig config_;
    Stream stream_ = Stream::spatial;
    std::array<Conv2d, 4> enc_convs_;
    Linear enc_proj_; // flat_dim -> C
    Linear dec_proj_; // 2C -> flat_dim
    std::array<Conv2d, 4> dec_convs_;
    MemoryBank memory_;
};

// Per-frame caches for backward_frame. Heavy, training-only.
struct StreamModel::EncodeState {
    std::array<Conv2d::Cache, 4> conv;
    std::array<Tensor, 4> relu_out; // post-activation, pool input for stages 0..2
    std::array<PoolCache, 3> pool;
};

struct StreamModel::DecodeState {
    Vec fused;
    Vec proj_relu; // post-activation projection output
    std::array<Conv2d::Cache, 4> conv;
    std::array<Tensor, 3> relu_out; // post-activation after dconv0..2
};

struct StreamModel::FrameCache {
    std::vector<EncodeState> encode;
    std::vector<Vec> features;
    MemoryReadState memory;
    std::vector<DecodeState> decode;
    std::vector<Tensor> reconstructions;
};

} // namespace vadctx
