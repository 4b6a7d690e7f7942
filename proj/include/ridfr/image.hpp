#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ridfr {

// RGB image with float intensities in [0,1], row-major interleaved.
struct Image {
    int h = 0;
    int w = 0;
    std::vector<float> v;  // h*w*3

    Image() = default;
    Image(int h_, int w_) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_ * 3, 0.0f) {}

    float& at(int y, int x, int c) { return v[(static_cast<size_t>(y) * w + x) * 3 + c]; }
    float at(int y, int x, int c) const { return v[(static_cast<size_t>(y) * w + x) * 3 + c]; }

    size_t size() const { return v.size(); }
    bool empty() const { return v.empty(); }

    void fill(float r, float g, float b) {
        for (size_t i = 0; i < v.size(); i += 3) {
            v[i] = r;
            v[i + 1] = g;
            v[i + 2] = b;
        }
    }
};

void check_image(const Image& img, const char* where);

// Lossless I/O: PNG is the on-disk format for every artifact.
Image read_png(const std::string& path);
void write_png(const std::string& path, const Image& img);

// Reads PNG or JPEG based on file extension (folder ingestion).
Image read_image(const std::string& path);

// 8-bit quantize -> JPEG encode at `quality` -> decode -> [0,1].
// The compression leg of the degradation pipeline.
Image jpeg_roundtrip(const Image& img, int quality);

// Catmull-Rom bicubic resampling with edge clamp. Returns the input
// unchanged when the target size equals the source size.
Image resize_bicubic(const Image& img, int oh, int ow);

// r x r block averaging; side lengths must be divisible by r.
Image downsample_area(const Image& img, int r);

Image flip_horizontal(const Image& img);

Image clip01(Image img);

std::vector<uint8_t> to_u8(const Image& img);
Image from_u8(const uint8_t* data, int h, int w);

uint64_t image_hash(const Image& img);

double mean_abs_diff(const Image& a, const Image& b);

// Contact sheet: lays `images` out in a grid with `cols` columns and a
// 2px separator. All images must share dimensions.
Image contact_sheet(const std::vector<Image>& images, int cols);

// Minimal line plot of (x, y) series onto a white canvas, for training
// curves. Axis ranges are data-fit.
Image plot_curve(const std::vector<double>& ys, int width = 480, int height = 320);

}  // namespace ridfr
