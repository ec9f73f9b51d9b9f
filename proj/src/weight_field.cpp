#include "tilefuse/weight_field.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

namespace tilefuse {

WeightWindow make_window(WindowKind kind, int height, int width, double sigma) {
    if (height < 1 || width < 1)
        throw std::invalid_argument("window dimensions must be >= 1");

    WeightWindow w;
    w.kind = kind;
    w.values = Grid<double>(height, width, 1);

    switch (kind) {
        case WindowKind::Constant:
            w.values.fill(1.0);
            break;
        case WindowKind::Gaussian: {
            const double sy = sigma > 0.0 ? sigma : height / 4.0;
            const double sx = sigma > 0.0 ? sigma : width / 4.0;
            w.sigma = sigma > 0.0 ? sigma : 0.0;
            const double cy = height / 2.0;
            const double cx = width / 2.0;
            for (int i = 0; i < height; ++i)
                for (int j = 0; j < width; ++j) {
                    const double dy = (i - cy) * (i - cy) / (2.0 * sy * sy);
                    const double dx = (j - cx) * (j - cx) / (2.0 * sx * sx);
                    w.values.at(i, j, 0) = std::exp(-(dy + dx));
                }
            break;
        }
        case WindowKind::LinearRamp:
            // Separable tent, minimum 1 at the rim. Absolute scale is
            // irrelevant: every consumer divides by a weight aggregate.
            for (int i = 0; i < height; ++i)
                for (int j = 0; j < width; ++j) {
                    const int ty = i + 1 < height - i ? i + 1 : height - i;
                    const int tx = j + 1 < width - j ? j + 1 : width - j;
                    w.values.at(i, j, 0) = static_cast<double>(ty) * tx;
                }
            break;
    }
    return w;
}

const char* window_kind_name(WindowKind k) {
    switch (k) {
        case WindowKind::Constant: return "constant";
        case WindowKind::Gaussian: return "gaussian";
        case WindowKind::LinearRamp: return "linear";
    }
    return "?";
}

WindowKind window_kind_from_name(const std::string& name) {
    if (name == "constant" || name == "const") return WindowKind::Constant;
    if (name == "gaussian" || name == "gauss") return WindowKind::Gaussian;
    if (name == "linear" || name == "ramp" || name == "tent")
        return WindowKind::LinearRamp;
    throw std::invalid_argument("unknown window kind '" + name +
                                "' (expected constant, gaussian or linear)");
}

namespace {

void check_window_matches(const PatchGrid& grid, const WeightWindow& window) {
    if (window.height() != grid.patch_height() ||
        window.width() != grid.patch_width())
        throw std::invalid_argument(
            "window " + std::to_string(window.height()) + "x" +
            std::to_string(window.width()) + " does not match patch " +
            std::to_string(grid.patch_height()) + "x" +
            std::to_string(grid.patch_width()));
}

}  // namespace

NormalizationField compute_normalization(const PatchGrid& grid,
                                         const WeightWindow& window) {
    check_window_matches(grid, window);
    const CanvasSpec& cv = grid.canvas();
    NormalizationField f{Grid<double>(cv.height, cv.width, 1),
                         Grid<double>(cv.height, cv.width, 1)};
    for (int k = 0; k < grid.count(); ++k) {
        const Rect r = grid.patch_rect(k);
        for (int y = 0; y < r.height; ++y)
            for (int x = 0; x < r.width; ++x) {
                const double w = window.at(y, x);
                f.weight_sum.at(r.row + y, r.col + x, 0) += w;
                f.weight_rss.at(r.row + y, r.col + x, 0) += w * w;
            }
    }
    for (size_t i = 0; i < f.weight_rss.size(); ++i)
        f.weight_rss.data()[i] = std::sqrt(f.weight_rss.data()[i]);
    return f;
}

double erosion_factor(const NormalizationField& field, int row, int col) {
    const double wsum = field.weight_sum.at(row, col, 0);
    const double wrss = field.weight_rss.at(row, col, 0);
    if (!(wsum > 0.0))
        throw std::logic_error("erosion factor queried at uncovered pixel (" +
                               std::to_string(row) + "," +
                               std::to_string(col) + ")");
    const double ratio = wrss / wsum;
    return ratio * ratio;
}

Grid<double> erosion_map(const NormalizationField& field) {
    Grid<double> out(field.weight_sum.height(), field.weight_sum.width(), 1);
    for (int r = 0; r < out.height(); ++r)
        for (int c = 0; c < out.width(); ++c)
            out.at(r, c, 0) = erosion_factor(field, r, c);
    return out;
}

LocalField local_patch_field(const PatchGrid& grid, const WeightWindow& window,
                             int patch_index) {
    check_window_matches(grid, window);
    const Rect rect = grid.patch_rect(patch_index);
    LocalField f{Grid<double>(rect.height, rect.width, 1),
                 Grid<double>(rect.height, rect.width, 1)};
    for (int y = 0; y < rect.height; ++y)
        for (int x = 0; x < rect.width; ++x) {
            const int row = rect.row + y;
            const int col = rect.col + x;
            double wsum = 0.0;
            double wsq = 0.0;
            for (int j : grid.covering(row, col)) {
                const Rect rj = grid.patch_rect(j);
                const double w = window.at(row - rj.row, col - rj.col);
                wsum += w;
                wsq += w * w;
            }
            f.weight_sum.at(y, x, 0) = wsum;
            f.weight_rss.at(y, x, 0) = std::sqrt(wsq);
        }
    return f;
}

namespace {

CoefficientTile coefficients_from_field(const WeightWindow& window,
                                        const LocalField& field) {
    const int h = field.weight_sum.height();
    const int w = field.weight_sum.width();
    CoefficientTile t{Grid<double>(h, w, 1), Grid<double>(h, w, 1)};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double wv = window.at(y, x);
            const double wsum = field.weight_sum.at(y, x, 0);
            const double wrss = field.weight_rss.at(y, x, 0);
            t.gain.at(y, x, 0) = wv / wrss;
            t.shift.at(y, x, 0) = wv * (1.0 / wsum - 1.0 / wrss);
        }
    return t;
}

}  // namespace

CoefficientTile direct_coefficients(const PatchGrid& grid,
                                    const WeightWindow& window,
                                    int patch_index) {
    return coefficients_from_field(window,
                                   local_patch_field(grid, window, patch_index));
}

CoefficientTiles CoefficientTiles::precompute(const PatchGrid& grid,
                                              const WeightWindow& window) {
    if (grid.policy() != BorderPolicy::ExactTiling)
        throw std::invalid_argument(
            "coefficient tile sharing needs an exact-tiling grid; clamped "
            "border patches sit at irregular offsets");
    check_window_matches(grid, window);

    // Along one axis the set of neighbour offsets overlapping a patch at
    // local coordinate u is a fixed window of width < ceil(patch / stride),
    // truncated only by the canvas borders. So the local field depends on
    // the patch position solely through the truncation depths below, capped
    // at c - 1 on each side.
    auto axis_classes = [](int n, int patch, int stride, std::vector<int>& cls,
                           std::map<std::pair<int, int>, int>& table,
                           std::vector<int>& representative) {
        const int c = (patch + stride - 1) / stride;
        cls.resize(n);
        for (int i = 0; i < n; ++i) {
            const int lo = i < c - 1 ? i : c - 1;
            const int hi = (n - 1 - i) < c - 1 ? (n - 1 - i) : c - 1;
            auto [it, inserted] = table.try_emplace({lo, hi},
                                                    static_cast<int>(table.size()));
            if (inserted) representative.push_back(i);
            cls[i] = it->second;
        }
    };

    CoefficientTiles tiles;
    tiles.cols_ = grid.cols();
    std::map<std::pair<int, int>, int> row_table, col_table;
    std::vector<int> row_rep, col_rep;
    axis_classes(grid.rows(), grid.patch_height(), grid.stride_rows(),
                 tiles.row_class_, row_table, row_rep);
    axis_classes(grid.cols(), grid.patch_width(), grid.stride_cols(),
                 tiles.col_class_, col_table, col_rep);
    tiles.col_classes_ = static_cast<int>(col_table.size());

    tiles.tiles_.reserve(row_rep.size() * col_rep.size());
    for (int rc = 0; rc < static_cast<int>(row_rep.size()); ++rc)
        for (int cc = 0; cc < static_cast<int>(col_rep.size()); ++cc) {
            const int k = row_rep[rc] * grid.cols() + col_rep[cc];
            tiles.tiles_.push_back(direct_coefficients(grid, window, k));
        }
    return tiles;
}

int CoefficientTiles::class_of(int patch_index) const {
    const int iy = patch_index / cols_;
    const int ix = patch_index % cols_;
    return row_class_[iy] * col_classes_ + col_class_[ix];
}

const CoefficientTile& CoefficientTiles::for_patch(int patch_index) const {
    return tiles_[class_of(patch_index)];
}

size_t CoefficientTiles::bytes() const {
    size_t n = 0;
    for (const auto& t : tiles_) n += t.gain.bytes() + t.shift.bytes();
    return n;
}

}  // namespace tilefuse
