#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tilefuse {

/// Axis-aligned pixel rectangle, row/col of the top-left corner plus extent.
struct Rect {
    int row = 0;
    int col = 0;
    int height = 0;
    int width = 0;

    int row_end() const { return row + height; }
    int col_end() const { return col + width; }
    bool empty() const { return height <= 0 || width <= 0; }

    bool contains(int r, int c) const {
        return r >= row && r < row_end() && c >= col && c < col_end();
    }

    Rect intersect(const Rect& other) const {
        const int r0 = row > other.row ? row : other.row;
        const int c0 = col > other.col ? col : other.col;
        const int r1 = row_end() < other.row_end() ? row_end() : other.row_end();
        const int c1 = col_end() < other.col_end() ? col_end() : other.col_end();
        return Rect{r0, c0, r1 - r0, c1 - c0};
    }

    bool operator==(const Rect& other) const = default;

    std::string str() const {
        return "[" + std::to_string(row) + "," + std::to_string(col) + " " +
               std::to_string(height) + "x" + std::to_string(width) + "]";
    }
};

/// Dense row-major, channel-last raster. The one pixel container used across
/// the engine; float for latents, double for normalization fields.
template <typename T>
class Grid {
public:
    Grid() = default;

    Grid(int height, int width, int channels, T fill = T{})
        : height_(height), width_(width), channels_(channels),
          data_(static_cast<size_t>(height) * width * channels, fill) {
        if (height < 1 || width < 1 || channels < 1)
            throw std::invalid_argument("Grid: dimensions must be >= 1");
    }

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return channels_; }
    size_t size() const { return data_.size(); }
    size_t bytes() const { return data_.size() * sizeof(T); }
    Rect rect() const { return Rect{0, 0, height_, width_}; }

    T& at(int r, int c, int ch) {
        return data_[(static_cast<size_t>(r) * width_ + c) * channels_ + ch];
    }
    const T& at(int r, int c, int ch) const {
        return data_[(static_cast<size_t>(r) * width_ + c) * channels_ + ch];
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    bool same_shape(const Grid& other) const {
        return height_ == other.height_ && width_ == other.width_ &&
               channels_ == other.channels_;
    }

    void fill(T value) { data_.assign(data_.size(), value); }

    /// Copy of the sub-rectangle `r` (must lie inside this grid).
    Grid crop(const Rect& r) const {
        check_inside(r, "crop");
        Grid out(r.height, r.width, channels_);
        for (int y = 0; y < r.height; ++y)
            for (int x = 0; x < r.width; ++x)
                for (int ch = 0; ch < channels_; ++ch)
                    out.at(y, x, ch) = at(r.row + y, r.col + x, ch);
        return out;
    }

    /// Overwrite the sub-rectangle at `dst` with `src` (shapes must agree).
    void paste(const Rect& dst, const Grid& src) {
        check_inside(dst, "paste");
        if (src.height() != dst.height || src.width() != dst.width ||
            src.channels() != channels_)
            throw std::invalid_argument("Grid::paste: shape mismatch");
        for (int y = 0; y < dst.height; ++y)
            for (int x = 0; x < dst.width; ++x)
                for (int ch = 0; ch < channels_; ++ch)
                    at(dst.row + y, dst.col + x, ch) = src.at(y, x, ch);
    }

    /// Elementwise accumulate `src` into the sub-rectangle at `dst`.
    void add(const Rect& dst, const Grid& src) {
        check_inside(dst, "add");
        if (src.height() != dst.height || src.width() != dst.width ||
            src.channels() != channels_)
            throw std::invalid_argument("Grid::add: shape mismatch");
        for (int y = 0; y < dst.height; ++y)
            for (int x = 0; x < dst.width; ++x)
                for (int ch = 0; ch < channels_; ++ch)
                    at(dst.row + y, dst.col + x, ch) += src.at(y, x, ch);
    }

    template <typename U>
    Grid<U> cast() const {
        Grid<U> out(height_, width_, channels_);
        for (size_t i = 0; i < data_.size(); ++i)
            out.data()[i] = static_cast<U>(data_[i]);
        return out;
    }

private:
    void check_inside(const Rect& r, const char* what) const {
        if (r.empty() || r.row < 0 || r.col < 0 || r.row_end() > height_ ||
            r.col_end() > width_)
            throw std::out_of_range(std::string("Grid::") + what +
                                    ": rect " + r.str() + " outside grid");
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<T> data_;
};

using GridF = Grid<float>;
using GridD = Grid<double>;

/// Largest elementwise |a - b|; shapes must agree.
template <typename T>
double max_abs_diff(const Grid<T>& a, const Grid<T>& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(static_cast<double>(a.data()[i]) -
                                  static_cast<double>(b.data()[i]));
        if (d > m) m = d;
    }
    return m;
}

}  // namespace tilefuse
