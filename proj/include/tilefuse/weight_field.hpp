#pragma once

#include <string>
#include <vector>

#include "tilefuse/geometry.hpp"
#include "tilefuse/grid.hpp"

namespace tilefuse {

enum class WindowKind { Constant, Gaussian, LinearRamp };

/// Per-pixel blend weights shared by every patch. Weights are strictly
/// positive so weight sums never vanish inside covered regions.
struct WeightWindow {
    WindowKind kind = WindowKind::Constant;
    double sigma = 0.0;        // Gaussian only; 0 means "size / 4 default"
    Grid<double> values;       // patch_h x patch_w x 1

    int height() const { return values.height(); }
    int width() const { return values.width(); }
    double at(int r, int c) const { return values.at(r, c, 0); }
};

/// sigma <= 0 selects the default size/4 for Gaussian windows.
WeightWindow make_window(WindowKind kind, int height, int width,
                         double sigma = 0.0);

const char* window_kind_name(WindowKind k);
WindowKind window_kind_from_name(const std::string& name);

/// Canvas-sized aggregates of the patch weights:
///   weight_sum(p)  = sum of w over covering patches        (W)
///   weight_rss(p)  = sqrt(sum of w^2 over covering patches) (S)
/// Both are single-channel doubles over the full canvas.
struct NormalizationField {
    Grid<double> weight_sum;
    Grid<double> weight_rss;
};

NormalizationField compute_normalization(const PatchGrid& grid,
                                         const WeightWindow& window);

/// Variance attenuation of the weighted average at one pixel:
/// lambda = sum(w^2) / (sum w)^2, i.e. (S / W)^2. Equals 1 where exactly one
/// patch contributes and drops below 1 wherever patches overlap.
double erosion_factor(const NormalizationField& field, int row, int col);

/// lambda over the whole canvas.
Grid<double> erosion_map(const NormalizationField& field);

/// weight_sum / weight_rss restricted to one patch's rectangle, i.e. the
/// canvas aggregates each patch pixel sees. Geometry-only; no patch content.
struct LocalField {
    Grid<double> weight_sum;  // patch_h x patch_w x 1
    Grid<double> weight_rss;
};

LocalField local_patch_field(const PatchGrid& grid, const WeightWindow& window,
                             int patch_index);

/// Per-patch affine blend coefficients:
///   gain  = w / S
///   shift = w * (1 / W - 1 / S)
/// Applying value * gain + anchor * shift per patch and summing over patches
/// reproduces the variance-corrected fusion exactly.
struct CoefficientTile {
    Grid<double> gain;   // patch_h x patch_w x 1
    Grid<double> shift;
};

/// Direct evaluation from the local field; works for any border policy.
CoefficientTile direct_coefficients(const PatchGrid& grid,
                                    const WeightWindow& window,
                                    int patch_index);

/// Coefficient tiles deduplicated by translational symmetry. On a uniform
/// stride lattice the local field of a patch depends only on how close the
/// patch sits to each canvas border, measured in "neighbours that still
/// overlap me" counts, so the number of distinct tiles is bounded by the
/// overlap depth and not by the canvas size. Interior patches all share one
/// tile. Requires exact tiling; clamped border patches break the symmetry.
class CoefficientTiles {
public:
    static CoefficientTiles precompute(const PatchGrid& grid,
                                       const WeightWindow& window);

    const CoefficientTile& for_patch(int patch_index) const;
    int class_count() const { return static_cast<int>(tiles_.size()); }

    /// Class id of a patch (index into the deduplicated tile table).
    int class_of(int patch_index) const;

    size_t bytes() const;

private:
    int cols_ = 0;
    std::vector<int> row_class_;   // per lattice row
    std::vector<int> col_class_;   // per lattice col
    int col_classes_ = 0;
    std::vector<CoefficientTile> tiles_;
};

}  // namespace tilefuse
