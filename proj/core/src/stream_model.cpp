#include "vadctx/stream_model.hpp"

#include "vadctx/common.hpp"
#include "vadctx/losses.hpp"

#include <cmath>

namespace vadctx {

void ModelConfig::validate() const {
    if (input_channels != 1 && input_channels != 2)
        throw ConfigError("model: input_channels must be 1 (spatial) or 2 (temporal)");
    if (patch_size < 8 || patch_size % 8 != 0)
        throw ConfigError("model: patch_size must be a positive multiple of 8");
    if (latent_dim < 1)
        throw ConfigError("model: latent_dim must be >= 1");
    for (int c : channels)
        if (c < 1)
            throw ConfigError("model: channel counts must be >= 1");
    if (memory_items < 1)
        throw ConfigError("model: memory_items must be >= 1");
    if (shrink_threshold < 0)
        throw ConfigError("model: shrink_threshold must be >= 0");
}

void Gradients::add(const Gradients& o) {
    for (size_t i = 0; i < slots.size(); ++i)
        slots[i] += o.slots[i];
}

void Gradients::scale(double s) {
    for (auto& g : slots)
        g *= s;
}

void Gradients::set_zero() {
    for (auto& g : slots)
        g.setZero();
}

StreamModel StreamModel::init(const ModelConfig& config, Stream stream, uint64_t seed) {
    config.validate();
    if (config.input_channels != stream_channels(stream))
        throw ConfigError("model: input_channels does not match the stream");

    StreamModel model;
    model.config_ = config;
    model.stream_ = stream;

    const auto& ch = config.channels;
    model.enc_convs_[0] = Conv2d::init(config.input_channels, ch[0], derive_seed(seed, "enc.conv0"));
    model.enc_convs_[1] = Conv2d::init(ch[0], ch[1], derive_seed(seed, "enc.conv1"));
    model.enc_convs_[2] = Conv2d::init(ch[1], ch[2], derive_seed(seed, "enc.conv2"));
    model.enc_convs_[3] = Conv2d::init(ch[2], ch[3], derive_seed(seed, "enc.conv3"));
    model.enc_proj_ = Linear::init(config.flat_dim(), config.latent_dim, derive_seed(seed, "enc.proj"));

    model.dec_proj_ = Linear::init(2 * config.latent_dim, config.flat_dim(), derive_seed(seed, "dec.proj"));
    model.dec_convs_[0] = Conv2d::init(ch[3], ch[2], derive_seed(seed, "dec.conv0"));
    model.dec_convs_[1] = Conv2d::init(ch[2], ch[1], derive_seed(seed, "dec.conv1"));
    model.dec_convs_[2] = Conv2d::init(ch[1], ch[0], derive_seed(seed, "dec.conv2"));
    model.dec_convs_[3] = Conv2d::init(ch[0], config.input_channels, derive_seed(seed, "dec.conv3"));

    model.memory_ = MemoryBank::random(config.memory_items, config.latent_dim,
                                       derive_seed(seed, "memory"), config.shrink_threshold,
                                       config.renormalize_after_shrink);
    return model;
}

Vec StreamModel::encode_impl(const Tensor& patch, EncodeState* state) const {
    if (patch.channels != config_.input_channels)
        throw std::invalid_argument("encode: patch channels do not match the stream");
    if (patch.height != config_.patch_size || patch.width != config_.patch_size)
        throw std::invalid_argument("encode: patch must be patch_size x patch_size");

    EncodeState local;
    EncodeState& s = state ? *state : local;

    Tensor x = patch;
    for (int stage = 0; stage < 4; ++stage) {
        Tensor y = enc_convs_[stage].forward(x, s.conv[stage]);
        relu_inplace(y);
        if (state)
            s.relu_out[stage] = y;
        if (stage < 3) {
            x = maxpool2x2(y, s.pool[stage]);
        } else {
            x = std::move(y);
        }
    }
    return enc_proj_.forward(x.data);
}

Vec StreamModel::encode(const Tensor& patch) const {
    return encode_impl(patch, nullptr);
}

Tensor StreamModel::decode_impl(const Vec& fused, DecodeState* state) const {
    if (fused.size() != 2 * config_.latent_dim)
        throw std::invalid_argument("decode: fused feature must have dimension 2C");

    DecodeState local;
    DecodeState& s = state ? *state : local;
    if (state)
        s.fused = fused;

    Vec flat = dec_proj_.forward(fused);
    relu_inplace(flat);
    if (state)
        s.proj_relu = flat;

    const int r = config_.base_resolution();
    Tensor x(config_.channels[3], r, r);
    x.data = flat;

    for (int stage = 0; stage < 4; ++stage) {
        Tensor y = dec_convs_[stage].forward(x, s.conv[stage]);
        if (stage < 3) {
            relu_inplace(y);
            if (state)
                s.relu_out[stage] = y;
            x = upsample_nn2x(y);
        } else {
            x = std::move(y); // final layer is linear
        }
    }
    return x;
}

Tensor StreamModel::decode(const Vec& fused) const {
    return decode_impl(fused, nullptr);
}

Vec aggregate_context(const std::vector<Vec>& features) {
    if (features.empty())
        throw std::invalid_argument("aggregate_context: no features (empty frames are handled upstream)");
    Vec mean = Vec::Zero(features[0].size());
    for (const auto& f : features) {
        if (f.size() != mean.size())
            throw std::invalid_argument("aggregate_context: feature dimension mismatch");
        mean += f;
    }
    return mean / static_cast<double>(features.size());
}

Vec StreamModel::fuse_context(const Vec& target_feature, const Vec& read_context) {
    if (target_feature.size() != read_context.size())
        throw std::invalid_argument("fuse_context: dimension mismatch");
    Vec fused(target_feature.size() * 2);
    fused << target_feature, read_context;
    return fused;
}

FrameForward StreamModel::forward_frame(const FrameGroup& group) const {
    FrameCache scratch;
    return forward_frame(group, scratch);
}

FrameForward StreamModel::forward_frame(const FrameGroup& group, FrameCache& cache) const {
    const size_t n = group.patches.size();
    if (n == 0)
        throw std::invalid_argument("forward_frame: frame group holds no targets");
    if (group.stream != stream_)
        throw std::invalid_argument("forward_frame: stream tag mismatch");

    cache.encode.resize(n);
    cache.features.resize(n);
    cache.decode.resize(n);
    cache.reconstructions.resize(n);

    FrameForward out;
    out.reconstructions.resize(n);
    out.target_recon.resize(n);

    for (size_t i = 0; i < n; ++i)
        cache.features[i] = encode_impl(group.patches[i], &cache.encode[i]);
    const Vec context = aggregate_context(cache.features);
    out.context = context;

    if (config_.memory_enabled) {
        cache.memory = memory_read_forward(context, memory_);
        out.read = cache.memory.read;
        out.entropy = entropy_loss(cache.memory.shrunk);
        out.zero_read = cache.memory.zero_read;
    } else {
        out.read = context;
        out.entropy = 0.0;
        out.zero_read = false;
    }

    for (size_t i = 0; i < n; ++i) {
        Vec fused = fuse_context(cache.features[i], out.read);
        cache.reconstructions[i] = decode_impl(fused, &cache.decode[i]);
        out.reconstructions[i] = cache.reconstructions[i];
        out.target_recon[i] = recon_loss(group.patches[i], cache.reconstructions[i]);
    }
    return out;
}

void StreamModel::backward_frame(const FrameGroup& group, const FrameCache& cache,
                                 double lambda_recon, double lambda_entropy,
                                 Gradients& grads) const {
    const size_t n = group.patches.size();
    const int C = config_.latent_dim;

    // Gradient slot layout mirrors param_refs(): see there for the order.
    enum {
        kEncConv0W = 0, // weights at 2*i, biases at 2*i + 1 for the 4 stages
        kEncProjW = 8,
        kEncProjB = 9,
        kDecProjW = 10,
        kDecProjB = 11,
        kDecConv0W = 12,
        kMemory = 20,
    };
    auto as_mat = [](Vec& v, Eigen::Index rows, Eigen::Index cols) {
        return Eigen::Map<Mat>(v.data(), rows, cols);
    };

    Vec d_read = Vec::Zero(C);
    std::vector<Vec> d_features(n, Vec::Zero(C));

    for (size_t i = 0; i < n; ++i) {
        const DecodeState& ds = cache.decode[i];
        const Tensor& x = group.patches[i];
        const Tensor& x_hat = cache.reconstructions[i];

        // d(mean recon)/d(x_hat) for the frame objective
        // lambda_recon * (1/n) * mean_sq(x - x_hat).
        Tensor d_out(x.channels, x.height, x.width);
        const double coeff =
            lambda_recon * 2.0 / (static_cast<double>(n) * static_cast<double>(x.size()));
        d_out.data = coeff * (x_hat.data - x.data);

        // Decoder stack, reverse order.
        for (int stage = 3; stage >= 0; --stage) {
            if (stage < 3) {
                d_out = upsample_nn2x_backward(d_out);
                relu_backward_inplace(d_out, ds.relu_out[stage]);
            }
            const Conv2d& conv = dec_convs_[stage];
            const Eigen::Index wslot = kDecConv0W + 2 * stage;
            d_out = conv.backward(ds.conv[stage], d_out,
                                  as_mat(grads.slots[wslot], conv.weight.rows(), conv.weight.cols()),
                                  grads.slots[wslot + 1]);
        }

        // Projection back to the fused feature.
        Vec d_flat = d_out.data;
        relu_backward_inplace(d_flat, ds.proj_relu);
        Vec d_fused = dec_proj_.backward(
            ds.fused, d_flat,
            as_mat(grads.slots[kDecProjW], dec_proj_.weight.rows(), dec_proj_.weight.cols()),
            grads.slots[kDecProjB]);

        d_features[i] += d_fused.head(C);
        d_read += d_fused.tail(C);
    }

    // Context path: memory (with the entropy term) or straight pass-through.
    Vec d_context = Vec::Zero(C);
    if (config_.memory_enabled) {
        memory_read_backward(cache.memory, memory_, d_read, lambda_entropy, d_context,
                             as_mat(grads.slots[kMemory], memory_.items.rows(), memory_.items.cols()));
    } else {
        d_context = d_read;
    }
    for (size_t i = 0; i < n; ++i)
        d_features[i] += d_context / static_cast<double>(n);

    // Encoder stack per target.
    for (size_t i = 0; i < n; ++i) {
        const EncodeState& es = cache.encode[i];

        Vec d_flat = enc_proj_.backward(
            es.relu_out[3].data, d_features[i],
            as_mat(grads.slots[kEncProjW], enc_proj_.weight.rows(), enc_proj_.weight.cols()),
            grads.slots[kEncProjB]);

        Tensor d_act(es.relu_out[3].channels, es.relu_out[3].height, es.relu_out[3].width);
        d_act.data = d_flat;

        for (int stage = 3; stage >= 0; --stage) {
            relu_backward_inplace(d_act, es.relu_out[stage]);
            const Conv2d& conv = enc_convs_[stage];
            const Eigen::Index wslot = kEncConv0W + 2 * stage;
            d_act = conv.backward(es.conv[stage], d_act,
                                  as_mat(grads.slots[wslot], conv.weight.rows(), conv.weight.cols()),
                                  grads.slots[wslot + 1]);
            if (stage > 0)
                d_act = maxpool2x2_backward(d_act, es.pool[stage - 1], es.relu_out[stage - 1].channels);
        }
    }
}

namespace {

template <typename Model>
std::vector<ParamRef> build_param_refs(Model& model) {
    std::vector<ParamRef> refs;
    auto push_mat = [&](const std::string& name, auto& m) {
        refs.push_back({name, const_cast<double*>(m.data()), m.size()});
    };
    for (int i = 0; i < 4; ++i) {
        push_mat("enc.conv" + std::to_string(i) + ".weight", model.encoder_convs()[i].weight);
        push_mat("enc.conv" + std::to_string(i) + ".bias", model.encoder_convs()[i].bias);
    }
    push_mat("enc.proj.weight", model.encoder_proj().weight);
    push_mat("enc.proj.bias", model.encoder_proj().bias);
    push_mat("dec.proj.weight", model.decoder_proj().weight);
    push_mat("dec.proj.bias", model.decoder_proj().bias);
    for (int i = 0; i < 4; ++i) {
        push_mat("dec.conv" + std::to_string(i) + ".weight", model.decoder_convs()[i].weight);
        push_mat("dec.conv" + std::to_string(i) + ".bias", model.decoder_convs()[i].bias);
    }
    push_mat("memory.items", model.memory().items);
    return refs;
}

} // namespace

std::vector<ParamRef> StreamModel::param_refs() {
    return build_param_refs(*this);
}

std::vector<ParamRef> StreamModel::param_refs() const {
    return build_param_refs(const_cast<StreamModel&>(*this));
}

Gradients StreamModel::make_gradients() const {
    Gradients grads;
    for (const auto& ref : param_refs())
        grads.slots.push_back(Vec::Zero(ref.size));
    return grads;
}

bool StreamModel::parameters_finite() const {
    for (const auto& ref : param_refs()) {
        for (Eigen::Index i = 0; i < ref.size; ++i)
            if (!std::isfinite(ref.data[i]))
                return false;
    }
    return true;
}

Stream stream_from_name(std::string_view name) {
    if (name == "spatial")
        return Stream::spatial;
    if (name == "temporal")
        return Stream::temporal;
    throw ConfigError("unknown stream name: " + std::string(name));
}

} // namespace vadctx
