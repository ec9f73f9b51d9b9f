#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tilefuse/grid.hpp"

namespace tilefuse {

/// Output canvas dimensions. Channel count applies to latents and conditions
/// alike; both paths of the engine operate on the same canvas shape.
struct CanvasSpec {
    int height = 0;
    int width = 0;
    int channels = 1;

    void validate() const;
    size_t pixels() const { return static_cast<size_t>(height) * width; }
};

/// How patch origins behave when the stride does not evenly tile the canvas.
/// ExactTiling refuses such geometry; ClampLast shifts the final row/column
/// of patches inward so the border is covered without padding.
enum class BorderPolicy { ExactTiling, ClampLast };

/// Regular lattice of fixed-size patches over a canvas. Origins are
/// precomputed per axis; patch k occupies cell (k / cols, k % cols).
class PatchGrid {
public:
    PatchGrid() = default;

    int patch_height() const { return patch_h_; }
    int patch_width() const { return patch_w_; }
    int stride_rows() const { return stride_y_; }
    int stride_cols() const { return stride_x_; }
    BorderPolicy policy() const { return policy_; }
    const CanvasSpec& canvas() const { return canvas_; }

    const std::vector<int>& row_origins() const { return row_origins_; }
    const std::vector<int>& col_origins() const { return col_origins_; }
    int rows() const { return static_cast<int>(row_origins_.size()); }
    int cols() const { return static_cast<int>(col_origins_.size()); }
    int count() const { return rows() * cols(); }

    /// Lattice cell of patch k as (row index, col index).
    std::pair<int, int> cell(int k) const;

    /// Pixel rectangle of patch k; always fully inside the canvas.
    Rect patch_rect(int k) const;

    /// Indices of every patch whose rectangle covers pixel (row, col),
    /// ascending. Every canvas pixel is covered by at least one patch.
    std::vector<int> covering(int row, int col) const;

    /// Per-axis variant of covering(): origin indices along one axis whose
    /// span [origin, origin + extent) contains x.
    static std::vector<int> covering_axis(const std::vector<int>& origins,
                                          int extent, int x);

    friend PatchGrid build_grid(const CanvasSpec& canvas, int patch_h,
                                int patch_w, int stride_y, int stride_x,
                                BorderPolicy policy);

private:
    int patch_h_ = 0;
    int patch_w_ = 0;
    int stride_y_ = 0;
    int stride_x_ = 0;
    BorderPolicy policy_ = BorderPolicy::ExactTiling;
    CanvasSpec canvas_;
    std::vector<int> row_origins_;
    std::vector<int> col_origins_;
};

/// Builds the patch lattice. Throws std::invalid_argument when the patch
/// exceeds the canvas, the stride is non-positive or larger than the patch
/// (which would leave gaps), or ExactTiling is requested for a canvas the
/// stride cannot tile exactly.
PatchGrid build_grid(const CanvasSpec& canvas, int patch_h, int patch_w,
                     int stride_y, int stride_x, BorderPolicy policy);

const char* border_policy_name(BorderPolicy p);
BorderPolicy border_policy_from_name(const std::string& name);

}  // namespace tilefuse
