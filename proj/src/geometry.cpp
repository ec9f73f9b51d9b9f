#include "tilefuse/geometry.hpp"

#include <algorithm>
#include <stdexcept>

namespace tilefuse {

void CanvasSpec::validate() const {
    if (height < 1 || width < 1)
        throw std::invalid_argument("canvas dimensions must be >= 1, got " +
                                    std::to_string(height) + "x" +
                                    std::to_string(width));
    if (channels < 1)
        throw std::invalid_argument("canvas channels must be >= 1, got " +
                                    std::to_string(channels));
}

namespace {

std::vector<int> axis_origins(int canvas_extent, int patch_extent, int stride,
                              BorderPolicy policy, const char* axis) {
    if (patch_extent < 1)
        throw std::invalid_argument(std::string("patch ") + axis +
                                    " must be >= 1");
    if (patch_extent > canvas_extent)
        throw std::invalid_argument(std::string("patch ") + axis + " " +
                                    std::to_string(patch_extent) +
                                    " exceeds canvas extent " +
                                    std::to_string(canvas_extent));
    if (stride < 1)
        throw std::invalid_argument(std::string("stride along ") + axis +
                                    " must be >= 1");
    if (stride > patch_extent)
        throw std::invalid_argument(std::string("stride along ") + axis + " (" +
                                    std::to_string(stride) +
                                    ") exceeds patch extent (" +
                                    std::to_string(patch_extent) +
                                    "); coverage would have gaps");

    const int last = canvas_extent - patch_extent;
    std::vector<int> origins;
    for (int o = 0; o <= last; o += stride) origins.push_back(o);
    if (origins.back() != last) {
        if (policy == BorderPolicy::ExactTiling)
            throw std::invalid_argument(
                std::string("stride ") + std::to_string(stride) + " along " +
                axis + " does not tile extent " +
                std::to_string(canvas_extent) + " with patch " +
                std::to_string(patch_extent) +
                " exactly; use the clamp-last border policy");
        origins.push_back(last);  // clamped final patch, deeper overlap
    }
    return origins;
}

}  // namespace

std::pair<int, int> PatchGrid::cell(int k) const {
    if (k < 0 || k >= count())
        throw std::out_of_range("patch index " + std::to_string(k) +
                                " outside grid of " + std::to_string(count()));
    return {k / cols(), k % cols()};
}

Rect PatchGrid::patch_rect(int k) const {
    const auto [iy, ix] = cell(k);
    return Rect{row_origins_[iy], col_origins_[ix], patch_h_, patch_w_};
}

std::vector<int> PatchGrid::covering_axis(const std::vector<int>& origins,
                                          int extent, int x) {
    // origins are strictly ascending; want all i with origin <= x < origin+extent
    auto lo = std::upper_bound(origins.begin(), origins.end(), x - extent);
    auto hi = std::upper_bound(origins.begin(), origins.end(), x);
    std::vector<int> out;
    for (auto it = lo; it != hi; ++it)
        out.push_back(static_cast<int>(it - origins.begin()));
    return out;
}

std::vector<int> PatchGrid::covering(int row, int col) const {
    if (row < 0 || row >= canvas_.height || col < 0 || col >= canvas_.width)
        throw std::out_of_range("pixel (" + std::to_string(row) + "," +
                                std::to_string(col) + ") outside canvas");
    const auto ys = covering_axis(row_origins_, patch_h_, row);
    const auto xs = covering_axis(col_origins_, patch_w_, col);
    std::vector<int> out;
    out.reserve(ys.size() * xs.size());
    for (int iy : ys)
        for (int ix : xs) out.push_back(iy * cols() + ix);
    return out;
}

PatchGrid build_grid(const CanvasSpec& canvas, int patch_h, int patch_w,
                     int stride_y, int stride_x, BorderPolicy policy) {
    canvas.validate();
    PatchGrid g;
    g.patch_h_ = patch_h;
    g.patch_w_ = patch_w;
    g.stride_y_ = stride_y;
    g.stride_x_ = stride_x;
    g.policy_ = policy;
    g.canvas_ = canvas;
    g.row_origins_ = axis_origins(canvas.height, patch_h, stride_y, policy, "rows");
    g.col_origins_ = axis_origins(canvas.width, patch_w, stride_x, policy, "cols");
    return g;
}

const char* border_policy_name(BorderPolicy p) {
    return p == BorderPolicy::ExactTiling ? "exact" : "clamp-last";
}

BorderPolicy border_policy_from_name(const std::string& name) {
    if (name == "exact") return BorderPolicy::ExactTiling;
    if (name == "clamp-last" || name == "clamp_last" || name == "clamp")
        return BorderPolicy::ClampLast;
    throw std::invalid_argument("unknown border policy '" + name +
                                "' (expected 'exact' or 'clamp-last')");
}

}  // namespace tilefuse
