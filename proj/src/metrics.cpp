#include "tilefuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>

namespace tilefuse {

FidelityResult rmse_psnr(const GridF& reference, const GridF& candidate,
                         double max_value) {
    if (!reference.same_shape(candidate))
        throw std::invalid_argument("fidelity metrics: shape mismatch");
    if (!(max_value > 0.0))
        throw std::invalid_argument("max_value must be positive");
    double sum = 0.0;
    for (size_t i = 0; i < reference.size(); ++i) {
        const double d = static_cast<double>(reference.data()[i]) -
                         static_cast<double>(candidate.data()[i]);
        sum += d * d;
    }
    FidelityResult r;
    r.rmse = std::sqrt(sum / static_cast<double>(reference.size()));
    r.psnr = r.rmse == 0.0 ? std::numeric_limits<double>::infinity()
                           : 20.0 * std::log10(max_value / r.rmse);
    return r;
}

double ssim(const GridF& reference, const GridF& candidate, double max_value,
            int window, double sigma) {
    if (!reference.same_shape(candidate))
        throw std::invalid_argument("ssim: shape mismatch");
    if (reference.height() < window || reference.width() < window)
        throw std::invalid_argument(
            "ssim: image smaller than the " + std::to_string(window) + "x" +
            std::to_string(window) + " window");

    // normalised Gaussian window
    std::vector<double> w(static_cast<size_t>(window) * window);
    {
        const double c = (window - 1) / 2.0;
        double total = 0.0;
        for (int i = 0; i < window; ++i)
            for (int j = 0; j < window; ++j) {
                const double v = std::exp(
                    -((i - c) * (i - c) + (j - c) * (j - c)) /
                    (2.0 * sigma * sigma));
                w[static_cast<size_t>(i) * window + j] = v;
                total += v;
            }
        for (double& v : w) v /= total;
    }

    const double c1 = (0.01 * max_value) * (0.01 * max_value);
    const double c2 = (0.03 * max_value) * (0.03 * max_value);

    double channel_sum = 0.0;
    for (int ch = 0; ch < reference.channels(); ++ch) {
        double acc = 0.0;
        long positions = 0;
        for (int r = 0; r + window <= reference.height(); ++r)
            for (int c = 0; c + window <= reference.width(); ++c) {
                double mx = 0.0, my = 0.0;
                for (int i = 0; i < window; ++i)
                    for (int j = 0; j < window; ++j) {
                        const double wi = w[static_cast<size_t>(i) * window + j];
                        mx += wi * reference.at(r + i, c + j, ch);
                        my += wi * candidate.at(r + i, c + j, ch);
                    }
                double vx = 0.0, vy = 0.0, cov = 0.0;
                for (int i = 0; i < window; ++i)
                    for (int j = 0; j < window; ++j) {
                        const double wi = w[static_cast<size_t>(i) * window + j];
                        const double dx = reference.at(r + i, c + j, ch) - mx;
                        const double dy = candidate.at(r + i, c + j, ch) - my;
                        vx += wi * dx * dx;
                        vy += wi * dy * dy;
                        cov += wi * dx * dy;
                    }
                acc += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                       ((mx * mx + my * my + c1) * (vx + vy + c2));
                ++positions;
            }
        channel_sum += acc / static_cast<double>(positions);
    }
    return channel_sum / reference.channels();
}

namespace {

/// Interior seam coordinates along one axis: x such that the pair
/// (x-1, x) straddles a patch edge. Both left edges of non-first patches
/// and right edges of non-last spans produce seams.
std::set<int> seam_lines(const std::vector<int>& origins, int extent,
                         int canvas_extent) {
    std::set<int> lines;
    for (int o : origins) {
        if (o > 0) lines.insert(o);
        if (o + extent < canvas_extent) lines.insert(o + extent);
    }
    return lines;
}

}  // namespace

double seam_index(const GridF& image, const PatchGrid& grid) {
    if (image.height() != grid.canvas().height ||
        image.width() != grid.canvas().width)
        throw std::invalid_argument("seam_index: image does not match grid");

    const std::set<int> rows = seam_lines(grid.row_origins(),
                                          grid.patch_height(), image.height());
    const std::set<int> cols = seam_lines(grid.col_origins(),
                                          grid.patch_width(), image.width());

    double seam_sum = 0.0, other_sum = 0.0;
    long seam_n = 0, other_n = 0;
    for (int r = 0; r < image.height(); ++r)
        for (int c = 1; c < image.width(); ++c) {
            const bool seam = cols.count(c) > 0;
            for (int ch = 0; ch < image.channels(); ++ch) {
                const double d = std::abs(
                    static_cast<double>(image.at(r, c, ch)) -
                    static_cast<double>(image.at(r, c - 1, ch)));
                (seam ? seam_sum : other_sum) += d;
                ++(seam ? seam_n : other_n);
            }
        }
    for (int r = 1; r < image.height(); ++r) {
        const bool seam = rows.count(r) > 0;
        for (int c = 0; c < image.width(); ++c)
            for (int ch = 0; ch < image.channels(); ++ch) {
                const double d = std::abs(
                    static_cast<double>(image.at(r, c, ch)) -
                    static_cast<double>(image.at(r - 1, c, ch)));
                (seam ? seam_sum : other_sum) += d;
                ++(seam ? seam_n : other_n);
            }
    }

    if (seam_n == 0) return 1.0;  // single patch, nothing to compare
    const double seam_mean = seam_sum / seam_n;
    const double other_mean = other_n > 0 ? other_sum / other_n : 0.0;
    if (other_mean == 0.0)
        return seam_mean == 0.0 ? 1.0
                                : std::numeric_limits<double>::infinity();
    return seam_mean / other_mean;
}

SegmentationScores segmentation_scores(const Grid<uint8_t>& predicted,
                                       const Grid<uint8_t>& truth) {
    if (!predicted.same_shape(truth))
        throw std::invalid_argument("segmentation masks: shape mismatch");
    if (predicted.channels() != 1)
        throw std::invalid_argument("segmentation masks must be single-channel");

    auto validate = [](const Grid<uint8_t>& m, const char* name) {
        bool has1 = false, has255 = false;
        for (size_t i = 0; i < m.size(); ++i) {
            const uint8_t v = m.data()[i];
            if (v == 0) continue;
            if (v == 1) has1 = true;
            else if (v == 255) has255 = true;
            else
                throw std::invalid_argument(
                    std::string(name) + " mask holds value " +
                    std::to_string(v) + "; expected binary {0,1} or {0,255}");
        }
        if (has1 && has255)
            throw std::invalid_argument(std::string(name) +
                                        " mask mixes 1 and 255 as foreground");
    };
    validate(predicted, "predicted");
    validate(truth, "truth");

    long tp = 0, fp = 0, fn = 0, tn = 0;
    for (size_t i = 0; i < predicted.size(); ++i) {
        const bool p = predicted.data()[i] != 0;
        const bool t = truth.data()[i] != 0;
        if (p && t) ++tp;
        else if (p) ++fp;
        else if (t) ++fn;
        else ++tn;
    }

    SegmentationScores s;
    s.accuracy = static_cast<double>(tp + tn) /
                 static_cast<double>(predicted.size());
    if (tp + fp + fn == 0) {
        // both masks empty: perfect agreement by convention
        s.precision = s.recall = s.f1 = s.iou = 1.0;
        return s;
    }
    s.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    s.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    s.f1 = static_cast<double>(2 * tp) / (2 * tp + fp + fn);
    s.iou = static_cast<double>(tp) / (tp + fp + fn);
    return s;
}

std::vector<FidPatch> export_fid_patches(const ImageU8& image,
                                         const std::string& out_dir) {
    constexpr int kSize = 299;
    constexpr int kStride = 74;  // three quarters of each crop is shared
    if (image.height < kSize || image.width < kSize)
        throw std::invalid_argument(
            "image " + std::to_string(image.height) + "x" +
            std::to_string(image.width) + " is smaller than the " +
            std::to_string(kSize) + "x" + std::to_string(kSize) +
            " crop size");

    auto origins = [](int extent) {
        std::vector<int> o;
        for (int v = 0; v + kSize <= extent; v += kStride) o.push_back(v);
        if (o.back() != extent - kSize) o.push_back(extent - kSize);
        return o;
    };

    std::filesystem::create_directories(out_dir);
    std::vector<FidPatch> out;
    std::ofstream manifest(out_dir + "/patches.txt", std::ios::trunc);
    if (!manifest)
        throw std::runtime_error("cannot create " + out_dir + "/patches.txt");

    for (int r : origins(image.height))
        for (int c : origins(image.width)) {
            ImageU8 crop;
            crop.height = kSize;
            crop.width = kSize;
            crop.channels = image.channels;
            crop.data.resize(static_cast<size_t>(kSize) * kSize *
                             image.channels);
            for (int y = 0; y < kSize; ++y)
                for (int x = 0; x < kSize; ++x)
                    for (int ch = 0; ch < image.channels; ++ch)
                        crop.at(y, x, ch) = image.at(r + y, c + x, ch);
            FidPatch p;
            p.file = "fid_r" + std::to_string(r) + "_c" + std::to_string(c) +
                     ".png";
            p.row = r;
            p.col = c;
            write_png(out_dir + "/" + p.file, crop);
            manifest << p.file << " " << r << " " << c << "\n";
            out.push_back(std::move(p));
        }
    return out;
}

}  // namespace tilefuse
