#include "tilefuse/stitcher.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tilefuse {

Grid<double> gaussian_blend_window(int size, double sigma) {
    if (size < 1) throw std::invalid_argument("window size must be >= 1");
    const double s = sigma > 0.0 ? sigma : size / 4.0;
    const double c = size / 2.0;
    Grid<double> w(size, size, 1);
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j)
            w.at(i, j, 0) =
                std::exp(-((i - c) * (i - c) + (j - c) * (j - c)) /
                         (2.0 * s * s));
    return w;
}

BlendAccumulator::BlendAccumulator(int canvas_height, int canvas_width,
                                   int classes, Grid<double> window)
    : numerator_(canvas_height, canvas_width, classes),
      denominator_(canvas_height, canvas_width, 1),
      window_(std::move(window)) {
    if (window_.channels() != 1)
        throw std::invalid_argument("blend window must be single-channel");
}

void BlendAccumulator::add(const PatchPrediction& patch) {
    if (finalized_) throw std::logic_error("accumulator already finalized");
    const GridF& v = patch.values;
    if (v.height() != window_.height() || v.width() != window_.width())
        throw std::invalid_argument(
            "prediction patch " + std::to_string(v.height()) + "x" +
            std::to_string(v.width()) + " does not match blend window " +
            std::to_string(window_.height()) + "x" +
            std::to_string(window_.width()));
    if (v.channels() != numerator_.channels())
        throw std::invalid_argument("prediction class count mismatch");
    if (patch.row < 0 || patch.col < 0 ||
        patch.row + v.height() > numerator_.height() ||
        patch.col + v.width() > numerator_.width())
        throw std::out_of_range(
            "prediction at (" + std::to_string(patch.row) + "," +
            std::to_string(patch.col) + ") falls outside the canvas");

    for (int y = 0; y < v.height(); ++y)
        for (int x = 0; x < v.width(); ++x) {
            const double w = window_.at(y, x, 0);
            denominator_.at(patch.row + y, patch.col + x, 0) += w;
            for (int ch = 0; ch < v.channels(); ++ch)
                numerator_.at(patch.row + y, patch.col + x, ch) +=
                    w * static_cast<double>(v.at(y, x, ch));
        }
}

GridF BlendAccumulator::finalize() {
    if (finalized_) throw std::logic_error("accumulator already finalized");
    finalized_ = true;

    // locate any uncovered pixels before touching the output
    int r0 = -1, c0 = -1, r1 = -1, c1 = -1;
    long gaps = 0;
    for (int r = 0; r < denominator_.height(); ++r)
        for (int c = 0; c < denominator_.width(); ++c)
            if (!(denominator_.at(r, c, 0) > 0.0)) {
                ++gaps;
                if (r0 < 0 || r < r0) r0 = r;
                if (c0 < 0 || c < c0) c0 = c;
                if (r > r1) r1 = r;
                if (c > c1) c1 = c;
            }
    if (gaps > 0)
        throw std::runtime_error(
            "stitch left " + std::to_string(gaps) +
            " uncovered pixels inside " +
            Rect{r0, c0, r1 - r0 + 1, c1 - c0 + 1}.str());

    GridF out(numerator_.height(), numerator_.width(), numerator_.channels());
    for (int r = 0; r < out.height(); ++r)
        for (int c = 0; c < out.width(); ++c) {
            const double d = denominator_.at(r, c, 0);
            for (int ch = 0; ch < out.channels(); ++ch)
                out.at(r, c, ch) =
                    static_cast<float>(numerator_.at(r, c, ch) / d);
        }
    return out;
}

GridF blend_predictions(const std::vector<PatchPrediction>& patches,
                        int canvas_height, int canvas_width,
                        const Grid<double>& window) {
    if (patches.empty()) throw std::invalid_argument("no predictions to blend");
    BlendAccumulator acc(canvas_height, canvas_width,
                         patches.front().values.channels(), window);
    for (const auto& p : patches) acc.add(p);
    return acc.finalize();
}

Grid<uint8_t> threshold_mask(const GridF& probability, float threshold) {
    if (probability.channels() != 1)
        throw std::invalid_argument(
            "thresholding expects a single-channel probability canvas");
    Grid<uint8_t> mask(probability.height(), probability.width(), 1);
    for (size_t i = 0; i < mask.size(); ++i)
        mask.data()[i] = probability.data()[i] >= threshold ? 255 : 0;
    return mask;
}

}  // namespace tilefuse
