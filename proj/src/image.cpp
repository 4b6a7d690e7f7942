#include "ridfr/image.hpp"

#include <png.h>
#include <jpeglib.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>

#include "ridfr/rng.hpp"

namespace ridfr {

void check_image(const Image& img, const char* where) {
    if (img.h <= 0 || img.w <= 0 || img.v.size() != static_cast<size_t>(img.h) * img.w * 3)
        throw std::invalid_argument(std::string(where) + ": malformed image");
    for (float x : img.v)
        if (!std::isfinite(x))
            throw std::invalid_argument(std::string(where) + ": non-finite pixel value");
}

std::vector<uint8_t> to_u8(const Image& img) {
    std::vector<uint8_t> out(img.v.size());
    for (size_t i = 0; i < img.v.size(); ++i) {
        float x = std::clamp(img.v[i], 0.0f, 1.0f);
        out[i] = static_cast<uint8_t>(std::lround(x * 255.0f));
    }
    return out;
}

Image from_u8(const uint8_t* data, int h, int w) {
    Image img(h, w);
    const float inv = 1.0f / 255.0f;
    for (size_t i = 0; i < img.v.size(); ++i) img.v[i] = data[i] * inv;
    return img;
}

// ---------------------------------------------------------------- PNG I/O

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

}  // namespace

Image read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("read_png: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("read_png: png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("read_png: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("read_png: failed to decode " + path);
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    std::vector<uint8_t> buf(static_cast<size_t>(h) * w * 3);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = buf.data() + static_cast<size_t>(y) * w * 3;
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);

    return from_u8(buf.data(), static_cast<int>(h), static_cast<int>(w));
}

void write_png(const std::string& path, const Image& img) {
    check_image(img, "write_png");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("write_png: cannot open " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("write_png: png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("write_png: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("write_png: failed to encode " + path);
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.w, img.h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    // fixed compression settings keep output bytes reproducible
    png_set_compression_level(png, 6);
    png_write_info(png, info);

    std::vector<uint8_t> buf = to_u8(img);
    std::vector<png_bytep> rows(img.h);
    for (int y = 0; y < img.h; ++y) rows[y] = buf.data() + static_cast<size_t>(y) * img.w * 3;
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// --------------------------------------------------------------- JPEG leg

namespace {

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    JpegErrorMgr* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(err->jump, 1);
}

}  // namespace

Image jpeg_roundtrip(const Image& img, int quality) {
    check_image(img, "jpeg_roundtrip");
    if (quality < 1 || quality > 100)
        throw std::invalid_argument("jpeg_roundtrip: quality must be in [1,100]");

    std::vector<uint8_t> pixels = to_u8(img);

    // encode
    jpeg_compress_struct cinfo;
    JpegErrorMgr jerr;
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = jpeg_error_exit;
    unsigned char* mem = nullptr;
    unsigned long mem_size = 0;
    if (setjmp(jerr.jump)) {
        jpeg_destroy_compress(&cinfo);
        if (mem) free(mem);
        throw std::runtime_error("jpeg_roundtrip: encode failed");
    }
    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, &mem, &mem_size);
    cinfo.image_width = img.w;
    cinfo.image_height = img.h;
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW row = pixels.data() + static_cast<size_t>(cinfo.next_scanline) * img.w * 3;
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);

    // decode
    jpeg_decompress_struct dinfo;
    JpegErrorMgr djerr;
    dinfo.err = jpeg_std_error(&djerr.pub);
    djerr.pub.error_exit = jpeg_error_exit;
    if (setjmp(djerr.jump)) {
        jpeg_destroy_decompress(&dinfo);
        free(mem);
        throw std::runtime_error("jpeg_roundtrip: decode failed");
    }
    jpeg_create_decompress(&dinfo);
    jpeg_mem_src(&dinfo, mem, mem_size);
    jpeg_read_header(&dinfo, TRUE);
    dinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&dinfo);

    std::vector<uint8_t> out(static_cast<size_t>(img.h) * img.w * 3);
    while (dinfo.output_scanline < dinfo.output_height) {
        JSAMPROW row = out.data() + static_cast<size_t>(dinfo.output_scanline) * img.w * 3;
        jpeg_read_scanlines(&dinfo, &row, 1);
    }
    jpeg_finish_decompress(&dinfo);
    jpeg_destroy_decompress(&dinfo);
    free(mem);

    return from_u8(out.data(), img.h, img.w);
}

Image read_image(const std::string& path) {
    auto dot = path.find_last_of('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == "png") return read_png(path);
    if (ext == "jpg" || ext == "jpeg") {
        FILE* fp = std::fopen(path.c_str(), "rb");
        if (!fp) throw std::runtime_error("read_image: cannot open " + path);
        std::fseek(fp, 0, SEEK_END);
        long n = std::ftell(fp);
        std::fseek(fp, 0, SEEK_SET);
        std::vector<unsigned char> bytes(static_cast<size_t>(n));
        size_t got = std::fread(bytes.data(), 1, bytes.size(), fp);
        std::fclose(fp);
        if (got != bytes.size()) throw std::runtime_error("read_image: short read on " + path);

        jpeg_decompress_struct dinfo;
        JpegErrorMgr jerr;
        dinfo.err = jpeg_std_error(&jerr.pub);
        jerr.pub.error_exit = jpeg_error_exit;
        if (setjmp(jerr.jump)) {
            jpeg_destroy_decompress(&dinfo);
            throw std::runtime_error("read_image: failed to decode " + path);
        }
        jpeg_create_decompress(&dinfo);
        jpeg_mem_src(&dinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
        jpeg_read_header(&dinfo, TRUE);
        dinfo.out_color_space = JCS_RGB;
        jpeg_start_decompress(&dinfo);
        int h = static_cast<int>(dinfo.output_height);
        int w = static_cast<int>(dinfo.output_width);
        std::vector<uint8_t> out(static_cast<size_t>(h) * w * 3);
        while (dinfo.output_scanline < dinfo.output_height) {
            JSAMPROW row = out.data() + static_cast<size_t>(dinfo.output_scanline) * w * 3;
            jpeg_read_scanlines(&dinfo, &row, 1);
        }
        jpeg_finish_decompress(&dinfo);
        jpeg_destroy_decompress(&dinfo);
        return from_u8(out.data(), h, w);
    }
    throw std::invalid_argument("read_image: unsupported extension on " + path);
}

// ------------------------------------------------------------- resampling

namespace {

// Catmull-Rom kernel (a = -0.5)
inline double cubic_weight(double x) {
    x = std::abs(x);
    if (x < 1.0) return 1.5 * x * x * x - 2.5 * x * x + 1.0;
    if (x < 2.0) return -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0;
    return 0.0;
}

inline int clampi(int x, int lo, int hi) { return x < lo ? lo : (x > hi ? hi : x); }

// one axis of separable bicubic; horizontal = true resizes width
Image resize_axis(const Image& src, int out_len, bool horizontal) {
    int oh = horizontal ? src.h : out_len;
    int ow = horizontal ? out_len : src.w;
    Image dst(oh, ow);
    int in_len = horizontal ? src.w : src.h;
    double scale = static_cast<double>(in_len) / out_len;
    for (int o = 0; o < out_len; ++o) {
        double center = (o + 0.5) * scale - 0.5;
        int base = static_cast<int>(std::floor(center)) - 1;
        double wsum = 0.0;
        double wgt[4];
        for (int k = 0; k < 4; ++k) {
            wgt[k] = cubic_weight(center - (base + k));
            wsum += wgt[k];
        }
        for (int k = 0; k < 4; ++k) wgt[k] /= wsum;
        int other_len = horizontal ? src.h : src.w;
        for (int j = 0; j < other_len; ++j) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int k = 0; k < 4; ++k) {
                    int i = clampi(base + k, 0, in_len - 1);
                    acc += wgt[k] * (horizontal ? src.at(j, i, c) : src.at(i, j, c));
                }
                if (horizontal)
                    dst.at(j, o, c) = static_cast<float>(acc);
                else
                    dst.at(o, j, c) = static_cast<float>(acc);
            }
        }
    }
    return dst;
}

}  // namespace

Image resize_bicubic(const Image& img, int oh, int ow) {
    check_image(img, "resize_bicubic");
    if (oh <= 0 || ow <= 0) throw std::invalid_argument("resize_bicubic: bad target size");
    if (oh == img.h && ow == img.w) return img;
    Image tmp = (ow == img.w) ? img : resize_axis(img, ow, true);
    return (oh == tmp.h) ? tmp : resize_axis(tmp, oh, false);
}

Image downsample_area(const Image& img, int r) {
    check_image(img, "downsample_area");
    if (r < 1) throw std::invalid_argument("downsample_area: factor must be >= 1");
    if (r == 1) return img;
    if (img.h % r != 0 || img.w % r != 0)
        throw std::invalid_argument("downsample_area: image sides not divisible by factor");
    Image out(img.h / r, img.w / r);
    double inv = 1.0 / (static_cast<double>(r) * r);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int dy = 0; dy < r; ++dy)
                    for (int dx = 0; dx < r; ++dx) acc += img.at(y * r + dy, x * r + dx, c);
                out.at(y, x, c) = static_cast<float>(acc * inv);
            }
    return out;
}

Image flip_horizontal(const Image& img) {
    Image out(img.h, img.w);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y, img.w - 1 - x, c);
    return out;
}

Image clip01(Image img) {
    for (float& x : img.v) x = std::clamp(x, 0.0f, 1.0f);
    return img;
}

uint64_t image_hash(const Image& img) {
    uint64_t h = fnv1a64(&img.h, sizeof img.h);
    h = fnv1a64(&img.w, sizeof img.w, h);
    return fnv1a64(img.v.data(), img.v.size() * sizeof(float), h);
}

double mean_abs_diff(const Image& a, const Image& b) {
    if (a.h != b.h || a.w != b.w)
        throw std::invalid_argument("mean_abs_diff: size mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i) acc += std::abs(a.v[i] - b.v[i]);
    return acc / a.v.size();
}

Image contact_sheet(const std::vector<Image>& images, int cols) {
    if (images.empty()) throw std::invalid_argument("contact_sheet: no images");
    int h = images[0].h, w = images[0].w;
    for (const Image& im : images)
        if (im.h != h || im.w != w)
            throw std::invalid_argument("contact_sheet: images must share dimensions");
    const int sep = 2;
    int rows = (static_cast<int>(images.size()) + cols - 1) / cols;
    Image sheet(rows * h + (rows + 1) * sep, cols * w + (cols + 1) * sep);
    sheet.fill(1.0f, 1.0f, 1.0f);
    for (size_t i = 0; i < images.size(); ++i) {
        int r = static_cast<int>(i) / cols;
        int cidx = static_cast<int>(i) % cols;
        int y0 = sep + r * (h + sep);
        int x0 = sep + cidx * (w + sep);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < 3; ++c)
                    sheet.at(y0 + y, x0 + x, c) = images[i].at(y, x, c);
    }
    return sheet;
}

Image plot_curve(const std::vector<double>& ys, int width, int height) {
    Image canvas(height, width);
    canvas.fill(1.0f, 1.0f, 1.0f);
    if (ys.size() < 2) return canvas;
    double lo = ys[0], hi = ys[0];
    for (double y : ys) {
        lo = std::min(lo, y);
        hi = std::max(hi, y);
    }
    if (hi - lo < 1e-12) hi = lo + 1.0;
    const int m = 24;  // margin
    auto px = [&](size_t i) {
        return m + static_cast<int>((width - 2.0 * m) * i / (ys.size() - 1));
    };
    auto py = [&](double y) {
        return height - m - static_cast<int>((height - 2.0 * m) * (y - lo) / (hi - lo));
    };
    // axes
    for (int x = m; x < width - m; ++x) canvas.at(height - m, x, 0) = canvas.at(height - m, x, 1) = canvas.at(height - m, x, 2) = 0.6f;
    for (int y = m; y < height - m; ++y) canvas.at(y, m, 0) = canvas.at(y, m, 1) = canvas.at(y, m, 2) = 0.6f;
    // polyline
    for (size_t i = 0; i + 1 < ys.size(); ++i) {
        int x0 = px(i), y0 = py(ys[i]), x1 = px(i + 1), y1 = py(ys[i + 1]);
        int steps = std::max(std::abs(x1 - x0), std::abs(y1 - y0)) + 1;
        for (int s = 0; s <= steps; ++s) {
            int x = x0 + (x1 - x0) * s / steps;
            int y = std::clamp(y0 + (y1 - y0) * s / steps, 0, height - 1);
            canvas.at(y, x, 0) = 0.1f;
            canvas.at(y, x, 1) = 0.2f;
            canvas.at(y, x, 2) = 0.8f;
        }
    }
    return canvas;
}

}  // namespace ridfr
