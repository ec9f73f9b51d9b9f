#include "tilefuse/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace tilefuse {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

[[noreturn]] void fail(const std::string& what) {
    throw std::runtime_error(what);
}

}  // namespace

ImageU8 read_png(const std::string& path) {
    FilePtr fp(fopen(path.c_str(), "rb"));
    if (!fp) fail("cannot open " + path);

    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail("failed to decode " + path);
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);

    // normalise everything to 8-bit gray/GA/RGB/RGBA
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_read_update_info(png, info);

    ImageU8 img;
    img.height = static_cast<int>(h);
    img.width = static_cast<int>(w);
    img.channels = png_get_channels(png, info);
    img.data.resize(static_cast<size_t>(img.height) * img.width * img.channels);

    std::vector<png_bytep> rows(h);
    const size_t stride = static_cast<size_t>(img.width) * img.channels;
    for (png_uint_32 r = 0; r < h; ++r) rows[r] = img.data.data() + r * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png(const std::string& path, const ImageU8& img) {
    if (img.channels < 1 || img.channels > 4)
        fail("write_png: unsupported channel count " +
             std::to_string(img.channels));
    FilePtr fp(fopen(path.c_str(), "wb"));
    if (!fp) fail("cannot create " + path);

    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        fail("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail("failed to encode " + path);
    }

    static const int kColor[5] = {0, PNG_COLOR_TYPE_GRAY,
                                  PNG_COLOR_TYPE_GRAY_ALPHA,
                                  PNG_COLOR_TYPE_RGB, PNG_COLOR_TYPE_RGBA};
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, 8, kColor[img.channels],
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const size_t stride = static_cast<size_t>(img.width) * img.channels;
    for (int r = 0; r < img.height; ++r)
        png_write_row(png,
                      const_cast<png_bytep>(img.data.data() + r * stride));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

template <typename S>
Grid<S> to_unit_range(const ImageU8& img) {
    Grid<S> g(img.height, img.width, img.channels);
    for (size_t i = 0; i < g.size(); ++i)
        g.data()[i] = static_cast<S>(img.data[i] / 127.5 - 1.0);
    return g;
}

template <typename S>
ImageU8 from_unit_range(const Grid<S>& grid) {
    ImageU8 img;
    img.height = grid.height();
    img.width = grid.width();
    img.channels = grid.channels();
    img.data.resize(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
        double v = static_cast<double>(grid.data()[i]);
        if (v < -1.0) v = -1.0;
        if (v > 1.0) v = 1.0;
        img.data[i] = static_cast<uint8_t>(std::lround((v + 1.0) * 127.5));
    }
    return img;
}

std::map<std::string, std::string> read_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = trim(line.substr(0, eq));
        if (!key.empty()) kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

void write_kv_file(const std::string& path,
                   const std::vector<std::pair<std::string, std::string>>& kv) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail("cannot create " + path);
    for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
    if (!out) fail("short write to " + path);
}

namespace {

template <typename S>
constexpr const char* dtype_name() {
    return sizeof(S) == 4 ? "float32" : "float64";
}

}  // namespace

template <typename S>
void write_flat(const std::string& base, const Grid<S>& grid) {
    std::ofstream bin(base + ".bin", std::ios::binary | std::ios::trunc);
    if (!bin) fail("cannot create " + base + ".bin");
    bin.write(reinterpret_cast<const char*>(grid.data()),
              static_cast<std::streamsize>(grid.bytes()));
    if (!bin) fail("short write to " + base + ".bin");
    bin.close();
    write_kv_file(base + ".meta",
                  {{"height", std::to_string(grid.height())},
                   {"width", std::to_string(grid.width())},
                   {"channels", std::to_string(grid.channels())},
                   {"dtype", dtype_name<S>()}});
}

std::string flat_dtype(const std::string& base) {
    auto kv = read_kv_file(base + ".meta");
    if (!kv.count("dtype")) fail(base + ".meta: missing dtype");
    return kv["dtype"];
}

template <typename S>
Grid<S> read_flat(const std::string& base) {
    auto kv = read_kv_file(base + ".meta");
    for (const char* key : {"height", "width", "channels", "dtype"})
        if (!kv.count(key))
            fail(base + ".meta: missing key '" + std::string(key) + "'");
    if (kv["dtype"] != dtype_name<S>())
        fail(base + ": dtype is " + kv["dtype"] + ", reader expects " +
             dtype_name<S>());
    Grid<S> g(std::stoi(kv["height"]), std::stoi(kv["width"]),
              std::stoi(kv["channels"]));
    std::ifstream bin(base + ".bin", std::ios::binary);
    if (!bin) fail("cannot open " + base + ".bin");
    bin.read(reinterpret_cast<char*>(g.data()),
             static_cast<std::streamsize>(g.bytes()));
    if (static_cast<size_t>(bin.gcount()) != g.bytes())
        fail(base + ".bin: expected " + std::to_string(g.bytes()) +
             " bytes, got " + std::to_string(bin.gcount()));
    return g;
}

template Grid<float> to_unit_range<float>(const ImageU8&);
template Grid<double> to_unit_range<double>(const ImageU8&);
template ImageU8 from_unit_range<float>(const Grid<float>&);
template ImageU8 from_unit_range<double>(const Grid<double>&);
template void write_flat<float>(const std::string&, const Grid<float>&);
template void write_flat<double>(const std::string&, const Grid<double>&);
template Grid<float> read_flat<float>(const std::string&);
template Grid<double> read_flat<double>(const std::string&);

}  // namespace tilefuse
