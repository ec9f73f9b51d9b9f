#include "tilefuse/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace tilefuse {

GridF area_downsample(const GridF& image, int factor) {
    if (factor < 1) throw std::invalid_argument("downsample factor must be >= 1");
    if (factor == 1) return image;
    const int oh = (image.height() + factor - 1) / factor;
    const int ow = (image.width() + factor - 1) / factor;
    GridF out(oh, ow, image.channels());
    const double inv = 1.0 / (static_cast<double>(factor) * factor);
    for (int R = 0; R < oh; ++R)
        for (int C = 0; C < ow; ++C)
            for (int ch = 0; ch < image.channels(); ++ch) {
                double sum = 0.0;
                for (int dy = 0; dy < factor; ++dy)
                    for (int dx = 0; dx < factor; ++dx) {
                        // edge replication for blocks that stick out
                        const int r =
                            std::min(R * factor + dy, image.height() - 1);
                        const int c =
                            std::min(C * factor + dx, image.width() - 1);
                        sum += image.at(r, c, ch);
                    }
                out.at(R, C, ch) = static_cast<float>(sum * inv);
            }
    return out;
}

namespace {

// Keys cubic with a = -1/2, the third-order-accurate choice: reproduces
// polynomials up to degree 3 exactly wherever all four taps are in range.
double cubic_kernel(double x) {
    constexpr double a = -0.5;
    x = std::abs(x);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return (((x - 5.0) * x + 8.0) * x - 4.0) * a;
    return 0.0;
}

struct Taps {
    int base = 0;        // first of four source indices, clamped later
    double w[4] = {0, 0, 0, 0};
};

std::vector<Taps> make_taps(int in_extent, int out_extent) {
    std::vector<Taps> taps(out_extent);
    const double scale = static_cast<double>(in_extent) / out_extent;
    for (int o = 0; o < out_extent; ++o) {
        const double src = (o + 0.5) * scale - 0.5;
        const int base = static_cast<int>(std::floor(src)) - 1;
        taps[o].base = base;
        for (int i = 0; i < 4; ++i)
            taps[o].w[i] = cubic_kernel(src - (base + i));
    }
    return taps;
}

}  // namespace

GridF bicubic_resample(const GridF& image, int out_height, int out_width) {
    if (out_height < 1 || out_width < 1)
        throw std::invalid_argument("bicubic target size must be >= 1");

    const auto col_taps = make_taps(image.width(), out_width);
    const auto row_taps = make_taps(image.height(), out_height);

    // horizontal pass, then vertical
    Grid<double> mid(image.height(), out_width, image.channels());
    for (int r = 0; r < image.height(); ++r)
        for (int c = 0; c < out_width; ++c) {
            const Taps& t = col_taps[c];
            for (int ch = 0; ch < image.channels(); ++ch) {
                double v = 0.0;
                for (int i = 0; i < 4; ++i) {
                    const int s = std::clamp(t.base + i, 0, image.width() - 1);
                    v += t.w[i] * image.at(r, s, ch);
                }
                mid.at(r, c, ch) = v;
            }
        }

    GridF out(out_height, out_width, image.channels());
    for (int r = 0; r < out_height; ++r) {
        const Taps& t = row_taps[r];
        for (int c = 0; c < out_width; ++c)
            for (int ch = 0; ch < image.channels(); ++ch) {
                double v = 0.0;
                for (int i = 0; i < 4; ++i) {
                    const int s = std::clamp(t.base + i, 0, image.height() - 1);
                    v += t.w[i] * mid.at(s, c, ch);
                }
                out.at(r, c, ch) = static_cast<float>(v);
            }
    }
    return out;
}

DegradeResult degrade(const GridF& image, int factor) {
    DegradeResult r;
    r.low_res = area_downsample(image, factor);
    r.condition = bicubic_resample(r.low_res, image.height(), image.width());
    return r;
}

}  // namespace tilefuse
