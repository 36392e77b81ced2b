#include "vadctx/flow.hpp"

#include "vadctx/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace vadctx {

namespace {

constexpr char kFlowMagic[8] = {'S', 'T', 'C', 'F', 'L', 'O', 'W', '1'};

float sample_bilinear(const Image& img, double x, double y) {
    x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wx = x - x0;
    const double wy = y - y0;
    const double top = img.at(y0, x0) * (1.0 - wx) + img.at(y0, x1) * wx;
    const double bot = img.at(y1, x0) * (1.0 - wx) + img.at(y1, x1) * wx;
    return static_cast<float>(top * (1.0 - wy) + bot * wy);
}

Image downsample2x(const Image& img) {
    const int oh = std::max(1, img.height / 2);
    const int ow = std::max(1, img.width / 2);
    Image out(oh, ow);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            const int y0 = y * 2, x0 = x * 2;
            const int y1 = std::min(y0 + 1, img.height - 1);
            const int x1 = std::min(x0 + 1, img.width - 1);
            out.at(y, x) =
                0.25f * (img.at(y0, x0) + img.at(y0, x1) + img.at(y1, x0) + img.at(y1, x1));
        }
    }
    return out;
}

Image warp_backward(const Image& img, const FlowField& flow) {
    Image out(img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const size_t i = static_cast<size_t>(y) * img.width + x;
            out.at(y, x) = sample_bilinear(img, x + flow.u[i], y + flow.v[i]);
        }
    return out;
}

// Single-level Horn-Schunck update on (prev, cur), accumulating into flow.
void horn_schunck_level(const Image& prev, const Image& cur, const FlowOptions& options,
                        FlowField& flow) {
    const int h = prev.height, w = prev.width;
    const size_t count = static_cast<size_t>(h) * w;

    const Image warped = warp_backward(cur, flow);

    // Derivative estimates over the 2x2x2 cube (clamped at borders).
    std::vector<float> ex(count), ey(count), et(count);
    auto px = [&](const Image& img, int y, int x) {
        return img.at(std::min(y, h - 1), std::min(x, w - 1));
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const size_t i = static_cast<size_t>(y) * w + x;
            ex[i] = 0.25f * (px(prev, y, x + 1) - px(prev, y, x) + px(prev, y + 1, x + 1) -
                             px(prev, y + 1, x) + px(warped, y, x + 1) - px(warped, y, x) +
                             px(warped, y + 1, x + 1) - px(warped, y + 1, x));
            ey[i] = 0.25f * (px(prev, y + 1, x) - px(prev, y, x) + px(prev, y + 1, x + 1) -
                             px(prev, y, x + 1) + px(warped, y + 1, x) - px(warped, y, x) +
                             px(warped, y + 1, x + 1) - px(warped, y, x + 1));
            et[i] = 0.25f * (px(warped, y, x) - px(prev, y, x) + px(warped, y, x + 1) -
                             px(prev, y, x + 1) + px(warped, y + 1, x) - px(prev, y + 1, x) +
                             px(warped, y + 1, x + 1) - px(prev, y + 1, x + 1));
        }
    }

    std::vector<float> du(count, 0.0f), dv(count, 0.0f);
    std::vector<float> du_bar(count), dv_bar(count);
    const double alpha2 = options.alpha * options.alpha;

    auto local_average = [&](const std::vector<float>& f, std::vector<float>& out) {
        auto fat = [&](int y, int x) {
            y = std::clamp(y, 0, h - 1);
            x = std::clamp(x, 0, w - 1);
            return f[static_cast<size_t>(y) * w + x];
        };
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const float edges = fat(y - 1, x) + fat(y + 1, x) + fat(y, x - 1) + fat(y, x + 1);
                const float corners =
                    fat(y - 1, x - 1) + fat(y - 1, x + 1) + fat(y + 1, x - 1) + fat(y + 1, x + 1);
                out[static_cast<size_t>(y) * w + x] = edges / 6.0f + corners / 12.0f;
            }
    };

    for (int it = 0; it < options.iterations; ++it) {
        local_average(du, du_bar);
        local_average(dv, dv_bar);
        for (size_t i = 0; i < count; ++i) {
            const double denom = alpha2 + static_cast<double>(ex[i]) * ex[i] +
                                 static_cast<double>(ey[i]) * ey[i];
            const double common =
                (ex[i] * du_bar[i] + ey[i] * dv_bar[i] + et[i]) / denom;
            du[i] = static_cast<float>(du_bar[i] - ex[i] * common);
            dv[i] = static_cast<float>(dv_bar[i] - ey[i] * common);
        }
    }

    for (size_t i = 0; i < count; ++i) {
        flow.u[i] += du[i];
        flow.v[i] += dv[i];
    }
}

FlowField upsample_flow(const FlowField& coarse, int out_h, int out_w) {
    FlowField fine(out_h, out_w);
    const double sx = static_cast<double>(out_w) / coarse.width;
    const double sy = static_cast<double>(out_h) / coarse.height;
    fine.u = resample_plane(coarse.u.data(), coarse.height, coarse.width, 0, 0, coarse.width,
                            coarse.height, out_h, out_w);
    fine.v = resample_plane(coarse.v.data(), coarse.height, coarse.width, 0, 0, coarse.width,
                            coarse.height, out_h, out_w);
    for (auto& x : fine.u)
        x = static_cast<float>(x * sx);
    for (auto& x : fine.v)
        x = static_cast<float>(x * sy);
    return fine;
}

} // namespace

FlowField compute_flow(const Image& prev, const Image& cur, const FlowOptions& options) {
    if (prev.height != cur.height || prev.width != cur.width)
        throw std::invalid_argument("compute_flow: frame shapes differ");
    if (options.iterations < 1 || options.pyramid_levels < 1)
        throw std::invalid_argument("compute_flow: iterations and pyramid_levels must be >= 1");

    // Build the pyramid, coarsest last. Levels that would collapse below
    // 8 pixels a side are dropped.
    std::vector<Image> prev_pyr{prev}, cur_pyr{cur};
    for (int level = 1; level < options.pyramid_levels; ++level) {
        const Image& p = prev_pyr.back();
        if (p.height / 2 < 8 || p.width / 2 < 8)
            break;
        prev_pyr.push_back(downsample2x(prev_pyr.back()));
        cur_pyr.push_back(downsample2x(cur_pyr.back()));
    }

    FlowField flow(prev_pyr.back().height, prev_pyr.back().width);
    for (int level = static_cast<int>(prev_pyr.size()) - 1; level >= 0; --level) {
        if (flow.height != prev_pyr[level].height || flow.width != prev_pyr[level].width)
            flow = upsample_flow(flow, prev_pyr[level].height, prev_pyr[level].width);
        horn_schunck_level(prev_pyr[level], cur_pyr[level], options, flow);
    }
    return flow;
}

void write_flow_cache(const std::filesystem::path& path, const std::vector<FlowField>& fields) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IngestError("cannot write flow cache: " + path.string());

    const uint32_t count = static_cast<uint32_t>(fields.size());
    const uint32_t height = fields.empty() ? 0 : static_cast<uint32_t>(fields[0].height);
    const uint32_t width = fields.empty() ? 0 : static_cast<uint32_t>(fields[0].width);
    out.write(kFlowMagic, sizeof(kFlowMagic));
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(&height), sizeof(height));
    out.write(reinterpret_cast<const char*>(&width), sizeof(width));
    for (const auto& f : fields) {
        if (static_cast<uint32_t>(f.height) != height || static_cast<uint32_t>(f.width) != width)
            throw std::invalid_argument("write_flow_cache: inconsistent field shapes");
        out.write(reinterpret_cast<const char*>(f.u.data()),
                  static_cast<std::streamsize>(f.u.size() * sizeof(float)));
        out.write(reinterpret_cast<const char*>(f.v.data()),
                  static_cast<std::streamsize>(f.v.size() * sizeof(float)));
    }
    if (!out)
        throw IngestError("failed writing flow cache: " + path.string());
}

std::vector<FlowField> read_flow_cache(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MissingPrereqError("flow cache not found: " + path.string());

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kFlowMagic, sizeof(kFlowMagic)) != 0)
        throw IngestError("not a flow cache file: " + path.string());

    uint32_t count = 0, height = 0, width = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    in.read(reinterpret_cast<char*>(&height), sizeof(height));
    in.read(reinterpret_cast<char*>(&width), sizeof(width));
    if (!in)
        throw IngestError("truncated flow cache: " + path.string());

    std::vector<FlowField> fields;
    fields.reserve(count);
    for (uint32_t k = 0; k < count; ++k) {
        FlowField f(static_cast<int>(height), static_cast<int>(width));
        in.read(reinterpret_cast<char*>(f.u.data()),
                static_cast<std::streamsize>(f.u.size() * sizeof(float)));
        in.read(reinterpret_cast<char*>(f.v.data()),
                static_cast<std::streamsize>(f.v.size() * sizeof(float)));
        if (!in)
            throw IngestError("truncated flow cache: " + path.string());
        fields.push_back(std::move(f));
    }
    return fields;
}

} // namespace vadctx
