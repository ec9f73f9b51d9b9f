#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tilefuse/grid.hpp"

namespace tilefuse {

/// 8-bit image, row-major channel-last, 1..4 channels.
struct ImageU8 {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<uint8_t> data;

    uint8_t& at(int r, int c, int ch) {
        return data[(static_cast<size_t>(r) * width + c) * channels + ch];
    }
    uint8_t at(int r, int c, int ch) const {
        return data[(static_cast<size_t>(r) * width + c) * channels + ch];
    }
};

ImageU8 read_png(const std::string& path);
void write_png(const std::string& path, const ImageU8& img);

/// 8-bit pixels to the engine's working range [-1, 1]: v / 127.5 - 1.
template <typename S>
Grid<S> to_unit_range(const ImageU8& img);

/// Working range back to 8 bits: clamp to [-1, 1], then (v + 1) * 127.5,
/// rounded to nearest. Clamping happens only here, at the output boundary.
template <typename S>
ImageU8 from_unit_range(const Grid<S>& grid);

/// Raw raster dump: `<base>.bin` holds the samples row-major channel-last in
/// native little-endian layout, `<base>.meta` a key = value manifest with
/// height, width, channels and dtype (float32 or float64).
template <typename S>
void write_flat(const std::string& base, const Grid<S>& grid);

template <typename S>
Grid<S> read_flat(const std::string& base);

/// dtype recorded in a flat manifest, "float32" or "float64".
std::string flat_dtype(const std::string& base);

/// Minimal key = value file parsing shared by manifests. Lines are
/// `key = value`; '#' starts a comment; blank lines are skipped.
std::map<std::string, std::string> read_kv_file(const std::string& path);
void write_kv_file(const std::string& path,
                   const std::vector<std::pair<std::string, std::string>>& kv);

extern template Grid<float> to_unit_range<float>(const ImageU8&);
extern template Grid<double> to_unit_range<double>(const ImageU8&);
extern template ImageU8 from_unit_range<float>(const Grid<float>&);
extern template ImageU8 from_unit_range<double>(const Grid<double>&);
extern template void write_flat<float>(const std::string&, const Grid<float>&);
extern template void write_flat<double>(const std::string&, const Grid<double>&);
extern template Grid<float> read_flat<float>(const std::string&);
extern template Grid<double> read_flat<double>(const std::string&);

}  // namespace tilefuse
