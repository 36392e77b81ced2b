#include "vadctx/plot.hpp"

#include "vadctx/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vadctx {

namespace {

struct Canvas {
    int height, width;
    std::vector<uint8_t> rgb;

    Canvas(int h, int w) : height(h), width(w), rgb(static_cast<size_t>(h) * w * 3, 255) {}

    void set(int y, int x, uint8_t r, uint8_t g, uint8_t b) {
        if (y < 0 || y >= height || x < 0 || x >= width)
            return;
        const size_t i = (static_cast<size_t>(y) * width + x) * 3;
        rgb[i] = r;
        rgb[i + 1] = g;
        rgb[i + 2] = b;
    }

    void vline(int x, int y0, int y1, uint8_t r, uint8_t g, uint8_t b) {
        if (y0 > y1)
            std::swap(y0, y1);
        for (int y = y0; y <= y1; ++y)
            set(y, x, r, g, b);
    }
};

} // namespace

void render_score_curve(const std::filesystem::path& path, const std::vector<double>& scores,
                        const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw std::invalid_argument("render_score_curve: scores/labels mismatch or empty");

    const int frames = static_cast<int>(scores.size());
    const int margin = 8;
    const int px_per_frame = std::clamp(640 / frames, 1, 8);
    const int plot_w = frames * px_per_frame;
    const int plot_h = 144;
    Canvas canvas(plot_h + 2 * margin, plot_w + 2 * margin);

    auto y_of = [&](double score) {
        const double s = std::clamp(score, 0.0, 1.0);
        return margin + static_cast<int>(std::lround((1.0 - s) * (plot_h - 1)));
    };
    auto x_of = [&](int frame) { return margin + frame * px_per_frame; };

    // Ground-truth shading behind everything else.
    for (int f = 0; f < frames; ++f) {
        if (labels[f] != 1)
            continue;
        for (int dx = 0; dx < px_per_frame; ++dx)
            canvas.vline(x_of(f) + dx, margin, margin + plot_h - 1, 250, 200, 200);
    }

    // Axes box.
    for (int x = margin - 1; x <= margin + plot_w; ++x) {
        canvas.set(margin - 1, x, 120, 120, 120);
        canvas.set(margin + plot_h, x, 120, 120, 120);
    }
    for (int y = margin - 1; y <= margin + plot_h; ++y) {
        canvas.set(y, margin - 1, 120, 120, 120);
        canvas.set(y, margin + plot_w, 120, 120, 120);
    }

    // Score polyline.
    for (int f = 0; f < frames; ++f) {
        const int x0 = x_of(f);
        const int y0 = y_of(scores[f]);
        const int y1 = f + 1 < frames ? y_of(scores[f + 1]) : y0;
        for (int dx = 0; dx < px_per_frame; ++dx) {
            const double t = px_per_frame > 1 ? static_cast<double>(dx) / px_per_frame : 0.0;
            const int y = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
            canvas.set(y, x0 + dx, 30, 60, 180);
            canvas.set(y + 1, x0 + dx, 30, 60, 180);
        }
    }

    save_png_rgb(path, canvas.height, canvas.width, canvas.rgb);
}

} // namespace vadctx
