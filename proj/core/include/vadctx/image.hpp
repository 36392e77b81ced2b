#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace vadctx {

// Grayscale image, row-major, values in [0,1].
struct Image {
    int height = 0;
    int width = 0;
    std::vector<float> pixels;

    Image() = default;
    Image(int h, int w) : height(h), width(w), pixels(static_cast<size_t>(h) * w, 0.0f) {}

    float& at(int y, int x) { return pixels[static_cast<size_t>(y) * width + x]; }
    float at(int y, int x) const { return pixels[static_cast<size_t>(y) * width + x]; }
};

// Reads a PNG or PGM image. Color input is reduced to luminance with the
// 0.299/0.587/0.114 weights. Throws IngestError naming the file on failure.
Image load_image(const std::filesystem::path& path);

// 8-bit grayscale PNG. Values are clamped to [0,1] and rounded.
void save_png_gray(const std::filesystem::path& path, const Image& image);

// 8-bit RGB PNG from interleaved rgb bytes (3 per pixel).
void save_png_rgb(const std::filesystem::path& path, int height, int width,
                  const std::vector<uint8_t>& rgb);

// Bilinear sampling of an arbitrary source rectangle [x1,x2) x [y1,y2) into
// an out_h x out_w plane. The aspect ratio is not preserved. Samples outside
// the plane clamp to the border.
std::vector<float> resample_plane(const float* src, int src_h, int src_w, double x1, double y1,
                                  double x2, double y2, int out_h, int out_w);

// Frames of one video: its directory sorted by file name. Accepts .png/.pgm.
std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& video_dir);

// Ordered grayscale frames of one video directory, normalized to [0,1].
std::vector<Image> extract_frames(const std::filesystem::path& video_dir);

} // namespace vadctx
