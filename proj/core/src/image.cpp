#include "vadctx/image.hpp"

#include "vadctx/common.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace vadctx {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f)
            std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Image load_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp)
        throw IngestError("cannot open image: " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png)
        throw IngestError("libpng init failed for: " + path.string());
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IngestError("libpng init failed for: " + path.string());
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IngestError("corrupt PNG: " + path.string());
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);

    if (depth == 16)
        png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const png_size_t rowbytes = png_get_rowbytes(png, info);
    std::vector<png_byte> buffer(rowbytes * height);
    std::vector<png_bytep> rows(height);
    for (png_uint_32 y = 0; y < height; ++y)
        rows[y] = buffer.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);

    const int channels = static_cast<int>(rowbytes / width);
    png_destroy_read_struct(&png, &info, nullptr);

    Image img(static_cast<int>(height), static_cast<int>(width));
    if (channels == 1) {
        for (size_t i = 0; i < img.pixels.size(); ++i)
            img.pixels[i] = static_cast<float>(buffer[i]) / 255.0f;
    } else if (channels == 3) {
        for (size_t i = 0; i < img.pixels.size(); ++i) {
            const png_byte* px = buffer.data() + i * 3;
            img.pixels[i] = (0.299f * px[0] + 0.587f * px[1] + 0.114f * px[2]) / 255.0f;
        }
    } else {
        throw IngestError("unsupported PNG layout in: " + path.string());
    }
    return img;
}

Image load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IngestError("cannot open image: " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P2")
        throw IngestError("not a PGM file: " + path.string());

    auto next_token = [&in, &path]() -> long {
        // Skips whitespace and '#' comment lines.
        while (true) {
            int c = in.peek();
            if (c == '#') {
                std::string line;
                std::getline(in, line);
            } else if (std::isspace(c)) {
                in.get();
            } else {
                break;
            }
        }
        long v = -1;
        in >> v;
        if (!in || v < 0)
            throw IngestError("corrupt PGM header: " + path.string());
        return v;
    };

    const long width = next_token();
    const long height = next_token();
    const long maxval = next_token();
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255)
        throw IngestError("unsupported PGM header: " + path.string());

    Image img(static_cast<int>(height), static_cast<int>(width));
    if (magic == "P5") {
        in.get(); // the single whitespace after maxval
        std::vector<uint8_t> raw(img.pixels.size());
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (!in)
            throw IngestError("truncated PGM: " + path.string());
        for (size_t i = 0; i < raw.size(); ++i)
            img.pixels[i] = static_cast<float>(raw[i]) / static_cast<float>(maxval);
    } else {
        for (auto& px : img.pixels) {
            long v;
            in >> v;
            if (!in)
                throw IngestError("truncated PGM: " + path.string());
            px = static_cast<float>(v) / static_cast<float>(maxval);
        }
    }
    return img;
}

} // namespace

Image load_image(const std::filesystem::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".png")
        return load_png(path);
    if (ext == ".pgm")
        return load_pgm(path);
    throw IngestError("unsupported image format: " + path.string());
}

void save_png_gray(const std::filesystem::path& path, const Image& image) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp)
        throw IngestError("cannot write image: " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png)
            png_destroy_write_struct(&png, &info);
        throw IngestError("libpng init failed for: " + path.string());
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IngestError("PNG write failed: " + path.string());
    }

    png_init_io(png, fp.get());
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_byte> row(image.width);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const float v = std::clamp(image.at(y, x), 0.0f, 1.0f);
            row[x] = static_cast<png_byte>(std::lround(v * 255.0f));
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void save_png_rgb(const std::filesystem::path& path, int height, int width,
                  const std::vector<uint8_t>& rgb) {
    if (rgb.size() != static_cast<size_t>(height) * width * 3)
        throw std::invalid_argument("save_png_rgb: buffer size mismatch");
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp)
        throw IngestError("cannot write image: " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png)
            png_destroy_write_struct(&png, &info);
        throw IngestError("libpng init failed for: " + path.string());
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IngestError("PNG write failed: " + path.string());
    }

    png_init_io(png, fp.get());
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y)
        png_write_row(png, const_cast<png_bytep>(rgb.data() + static_cast<size_t>(y) * width * 3));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::vector<float> resample_plane(const float* src, int src_h, int src_w, double x1, double y1,
                                  double x2, double y2, int out_h, int out_w) {
    std::vector<float> out(static_cast<size_t>(out_h) * out_w);
    const double sx = (x2 - x1) / out_w;
    const double sy = (y2 - y1) / out_h;
    for (int oy = 0; oy < out_h; ++oy) {
        // Map the output pixel center into the source rectangle.
        const double fy = y1 + (oy + 0.5) * sy - 0.5;
        const int iy = static_cast<int>(std::floor(fy));
        const double wy = fy - iy;
        const int y0 = std::clamp(iy, 0, src_h - 1);
        const int y1c = std::clamp(iy + 1, 0, src_h - 1);
        for (int ox = 0; ox < out_w; ++ox) {
            const double fx = x1 + (ox + 0.5) * sx - 0.5;
            const int ix = static_cast<int>(std::floor(fx));
            const double wx = fx - ix;
            const int x0 = std::clamp(ix, 0, src_w - 1);
            const int x1c = std::clamp(ix + 1, 0, src_w - 1);
            const double top = src[static_cast<size_t>(y0) * src_w + x0] * (1.0 - wx) +
                               src[static_cast<size_t>(y0) * src_w + x1c] * wx;
            const double bot = src[static_cast<size_t>(y1c) * src_w + x0] * (1.0 - wx) +
                               src[static_cast<size_t>(y1c) * src_w + x1c] * wx;
            out[static_cast<size_t>(oy) * out_w + ox] =
                static_cast<float>(top * (1.0 - wy) + bot * wy);
        }
    }
    return out;
}

std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& video_dir) {
    if (!std::filesystem::is_directory(video_dir))
        throw IngestError("video directory not found: " + video_dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(video_dir)) {
        if (!entry.is_regular_file())
            continue;
        const std::string ext = entry.path().extension().string();
        if (ext == ".png" || ext == ".pgm")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw IngestError("no frames (*.png, *.pgm) in: " + video_dir.string());
    return files;
}

std::vector<Image> extract_frames(const std::filesystem::path& video_dir) {
    std::vector<Image> frames;
    for (const auto& file : list_frame_files(video_dir))
        frames.push_back(load_image(file));
    for (size_t i = 1; i < frames.size(); ++i) {
        if (frames[i].width != frames[0].width || frames[i].height != frames[0].height)
            throw IngestError("frame size changes within video: " + video_dir.string());
    }
    return frames;
}

} // namespace vadctx
