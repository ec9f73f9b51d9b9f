#pragma once

#include <string>
#include <vector>

#include "tilefuse/geometry.hpp"
#include "tilefuse/grid.hpp"
#include "tilefuse/image_io.hpp"

namespace tilefuse {

struct FidelityResult {
    double rmse = 0.0;
    double psnr = 0.0;  // +inf when the images are identical
};

/// RMSE pooled over all pixels and channels jointly;
/// PSNR = 20 log10(max_value / rmse).
FidelityResult rmse_psnr(const GridF& reference, const GridF& candidate,
                         double max_value);

/// Mean structural similarity with an 11x11 sigma 1.5 Gaussian window,
/// stability constants (0.01 max)^2 and (0.03 max)^2, windows fully inside
/// the image, channels averaged. Images must be at least 11x11.
double ssim(const GridF& reference, const GridF& candidate, double max_value,
            int window = 11, double sigma = 1.5);

/// Ratio of the mean absolute first difference across patch boundaries to
/// the same statistic away from boundaries. 1.0 means boundaries are
/// statistically invisible; an uncovered 0/0 case also reports 1.0.
double seam_index(const GridF& image, const PatchGrid& grid);

struct SegmentationScores {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double iou = 0.0;
};

/// Pixel scores for binary masks. Masks must use {0, 255} or {0, 1};
/// anything else is an error. Empty-vs-empty scores 1.0 across the board,
/// empty-vs-nonempty 0.0 (accuracy stays literal).
SegmentationScores segmentation_scores(const Grid<uint8_t>& predicted,
                                       const Grid<uint8_t>& truth);

struct FidPatch {
    std::string file;
    int row = 0;
    int col = 0;
};

/// Cuts 299x299 crops on a stride-74 lattice (75 % overlap), clamping the
/// last row/column to the border, and writes them as PNGs plus an index
/// manifest `patches.txt` into `out_dir`. The image must be at least
/// 299x299. Returns the crop list in write order.
std::vector<FidPatch> export_fid_patches(const ImageU8& image,
                                         const std::string& out_dir);

}  // namespace tilefuse
