#pragma once

#include <vector>

#include "tilefuse/grid.hpp"

namespace tilefuse {

/// Centered Gaussian blend window for square prediction patches:
/// w(i, j) = exp(-((i - size/2)^2 + (j - size/2)^2) / (2 sigma^2)).
/// sigma <= 0 selects the default size / 4.
Grid<double> gaussian_blend_window(int size, double sigma = 0.0);

/// One probability patch placed on the canvas. `values` is height x width x
/// K class probabilities (K >= 1).
struct PatchPrediction {
    int row = 0;
    int col = 0;
    GridF values;
};

/// Streaming weighted-average stitcher for overlapping predictions:
/// out(p) = sum_k w(p - o_k) pred_k(p) / sum_k w(p - o_k). Patches can be
/// added in any order; finalize() divides once. Pixels no patch covered are
/// an error, reported with the bounding box of the gap.
class BlendAccumulator {
public:
    BlendAccumulator(int canvas_height, int canvas_width, int classes,
                     Grid<double> window);

    void add(const PatchPrediction& patch);

    /// Consumes the accumulator; call once.
    GridF finalize();

private:
    Grid<double> numerator_;    // H x W x K
    Grid<double> denominator_;  // H x W x 1
    Grid<double> window_;
    bool finalized_ = false;
};

/// Convenience wrapper over BlendAccumulator for an in-memory batch.
GridF blend_predictions(const std::vector<PatchPrediction>& patches,
                        int canvas_height, int canvas_width,
                        const Grid<double>& window);

/// Binary mask from a single-channel probability canvas: 255 where
/// p >= threshold, else 0.
Grid<uint8_t> threshold_mask(const GridF& probability, float threshold);

}  // namespace tilefuse
