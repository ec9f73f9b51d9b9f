#include "tilefuse/tile_store.hpp"

#include <array>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "tilefuse/image_io.hpp"

namespace fs = std::filesystem;

namespace tilefuse {

namespace {

template <typename S>
constexpr const char* dtype_name() {
    return sizeof(S) == 4 ? "float32" : "float64";
}

[[noreturn]] void fail(const std::string& what) {
    throw std::runtime_error(what);
}

std::string tile_file(const std::string& dir, int timestep, int ty, int tx) {
    return dir + "/t" + std::to_string(timestep) + "_" + std::to_string(ty) +
           "_" + std::to_string(tx) + ".bin";
}

}  // namespace

template <typename S>
struct TileStore<S>::Impl {
    std::string dir;
    CanvasSpec canvas;
    int tile = 0;
    int timestep = 0;
    long generation = 0;
    int write_timestep = -1;  // <0 when no step is open
    MemoryAccounting* accounting = nullptr;

    // fixed shard pool; per-tile state would scale with canvas area
    mutable std::array<std::mutex, 64> locks;

    int tile_rows() const { return (canvas.height + tile - 1) / tile; }
    int tile_cols() const { return (canvas.width + tile - 1) / tile; }

    std::mutex& lock_for(int ty, int tx) const {
        return locks[(static_cast<size_t>(ty) * 7919 + tx) % locks.size()];
    }

    Rect tile_rect(int ty, int tx) const {
        const int r = ty * tile;
        const int c = tx * tile;
        const int h = std::min(tile, canvas.height - r);
        const int w = std::min(tile, canvas.width - c);
        return Rect{r, c, h, w};
    }

    void check_tile_index(int ty, int tx) const {
        if (ty < 0 || ty >= tile_rows() || tx < 0 || tx >= tile_cols())
            fail("tile index (" + std::to_string(ty) + "," +
                 std::to_string(tx) + ") outside store of " +
                 std::to_string(tile_rows()) + "x" +
                 std::to_string(tile_cols()));
    }

    void save_manifest() const {
        write_kv_file(dir + "/manifest.txt",
                      {{"height", std::to_string(canvas.height)},
                       {"width", std::to_string(canvas.width)},
                       {"channels", std::to_string(canvas.channels)},
                       {"tile", std::to_string(tile)},
                       {"dtype", dtype_name<S>()},
                       {"timestep", std::to_string(timestep)},
                       {"generation", std::to_string(generation)}});
    }

    /// Missing files read as zero tiles.
    Grid<S> load_tile(int timestep_of, int ty, int tx) const {
        const Rect r = tile_rect(ty, tx);
        Grid<S> g(r.height, r.width, canvas.channels);
        std::ifstream in(tile_file(dir, timestep_of, ty, tx), std::ios::binary);
        if (!in) return g;
        in.read(reinterpret_cast<char*>(g.data()),
                static_cast<std::streamsize>(g.bytes()));
        if (static_cast<size_t>(in.gcount()) != g.bytes())
            fail("tile file " + tile_file(dir, timestep_of, ty, tx) +
                 " truncated");
        return g;
    }

    void save_tile(int timestep_of, int ty, int tx, const Grid<S>& g) const {
        const std::string path = tile_file(dir, timestep_of, ty, tx);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) fail("cannot create " + path);
        out.write(reinterpret_cast<const char*>(g.data()),
                  static_cast<std::streamsize>(g.bytes()));
        if (!out) fail("short write to " + path);
    }
};

template <typename S>
TileStore<S>::TileStore() : impl_(std::make_unique<Impl>()) {}

template <typename S>
TileStore<S>::TileStore(TileStore&&) noexcept = default;
template <typename S>
TileStore<S>& TileStore<S>::operator=(TileStore&&) noexcept = default;
template <typename S>
TileStore<S>::~TileStore() = default;

template <typename S>
TileStore<S> TileStore<S>::create(const std::string& dir,
                                  const CanvasSpec& canvas, int tile_size,
                                  int timestep) {
    canvas.validate();
    if (tile_size < 1) fail("tile size must be >= 1");
    fs::create_directories(dir);
    if (fs::exists(dir + "/manifest.txt"))
        fail("refusing to create tile store over existing store at " + dir);
    TileStore s;
    s.impl_->dir = dir;
    s.impl_->canvas = canvas;
    s.impl_->tile = tile_size;
    s.impl_->timestep = timestep;
    s.impl_->generation = 0;
    s.impl_->save_manifest();
    return s;
}

template <typename S>
TileStore<S> TileStore<S>::open(const std::string& dir) {
    auto kv = read_kv_file(dir + "/manifest.txt");
    for (const char* key :
         {"height", "width", "channels", "tile", "dtype", "timestep",
          "generation"})
        if (!kv.count(key))
            fail(dir + "/manifest.txt: missing key '" + std::string(key) + "'");
    if (kv["dtype"] != dtype_name<S>())
        fail("tile store " + dir + " holds " + kv["dtype"] +
             ", reader expects " + std::string(dtype_name<S>()));
    TileStore s;
    s.impl_->dir = dir;
    s.impl_->canvas = CanvasSpec{std::stoi(kv["height"]), std::stoi(kv["width"]),
                                 std::stoi(kv["channels"])};
    s.impl_->tile = std::stoi(kv["tile"]);
    s.impl_->timestep = std::stoi(kv["timestep"]);
    s.impl_->generation = std::stol(kv["generation"]);
    return s;
}

template <typename S>
const std::string& TileStore<S>::dir() const { return impl_->dir; }
template <typename S>
const CanvasSpec& TileStore<S>::canvas() const { return impl_->canvas; }
template <typename S>
int TileStore<S>::tile_size() const { return impl_->tile; }
template <typename S>
int TileStore<S>::tile_rows() const { return impl_->tile_rows(); }
template <typename S>
int TileStore<S>::tile_cols() const { return impl_->tile_cols(); }
template <typename S>
Rect TileStore<S>::tile_rect(int ty, int tx) const {
    impl_->check_tile_index(ty, tx);
    return impl_->tile_rect(ty, tx);
}
template <typename S>
int TileStore<S>::timestep() const { return impl_->timestep; }
template <typename S>
long TileStore<S>::generation() const { return impl_->generation; }
template <typename S>
void TileStore<S>::set_accounting(MemoryAccounting* sink) {
    impl_->accounting = sink;
}

template <typename S>
Grid<S> TileStore<S>::read_tile(int ty, int tx) const {
    impl_->check_tile_index(ty, tx);
    return impl_->load_tile(impl_->timestep, ty, tx);
}

template <typename S>
Grid<S> TileStore<S>::read_region(const Rect& region) const {
    if (region.empty() || region.row < 0 || region.col < 0 ||
        region.row_end() > impl_->canvas.height ||
        region.col_end() > impl_->canvas.width)
        fail("read_region: rect " + region.str() + " outside canvas");
    Grid<S> out(region.height, region.width, impl_->canvas.channels);
    const int ty0 = region.row / impl_->tile;
    const int ty1 = (region.row_end() - 1) / impl_->tile;
    const int tx0 = region.col / impl_->tile;
    const int tx1 = (region.col_end() - 1) / impl_->tile;
    for (int ty = ty0; ty <= ty1; ++ty)
        for (int tx = tx0; tx <= tx1; ++tx) {
            const Rect tr = impl_->tile_rect(ty, tx);
            const Rect ov = tr.intersect(region);
            MemLease lease(impl_->accounting, BufferClass::Tile,
                           static_cast<size_t>(tr.height) * tr.width *
                               impl_->canvas.channels * sizeof(S));
            const Grid<S> tile = impl_->load_tile(impl_->timestep, ty, tx);
            const Rect src{ov.row - tr.row, ov.col - tr.col, ov.height,
                           ov.width};
            out.paste(Rect{ov.row - region.row, ov.col - region.col, ov.height,
                           ov.width},
                      tile.crop(src));
        }
    return out;
}

template <typename S>
Grid<S> TileStore<S>::assemble() const {
    return read_region(Rect{0, 0, impl_->canvas.height, impl_->canvas.width});
}

template <typename S>
void TileStore<S>::write_tile(int ty, int tx, const Grid<S>& values) {
    impl_->check_tile_index(ty, tx);
    if (impl_->write_timestep >= 0)
        fail("write_tile is not allowed while a step is open");
    const Rect r = impl_->tile_rect(ty, tx);
    if (values.height() != r.height || values.width() != r.width ||
        values.channels() != impl_->canvas.channels)
        fail("write_tile: shape mismatch for tile (" + std::to_string(ty) +
             "," + std::to_string(tx) + ")");
    impl_->save_tile(impl_->timestep, ty, tx, values);
}

template <typename S>
void TileStore<S>::begin_step(int next_timestep) {
    if (impl_->write_timestep >= 0)
        fail("begin_step while a step is already open");
    if (next_timestep == impl_->timestep)
        fail("write generation must differ from the readable timestep");
    impl_->write_timestep = next_timestep;
}

template <typename S>
void TileStore<S>::accumulate(const Rect& region, const Grid<S>& values) {
    if (impl_->write_timestep < 0)
        fail("accumulate without an open step");
    if (values.height() != region.height || values.width() != region.width ||
        values.channels() != impl_->canvas.channels)
        fail("accumulate: values do not match region " + region.str());
    const int ty0 = region.row / impl_->tile;
    const int ty1 = (region.row_end() - 1) / impl_->tile;
    const int tx0 = region.col / impl_->tile;
    const int tx1 = (region.col_end() - 1) / impl_->tile;
    for (int ty = ty0; ty <= ty1; ++ty)
        for (int tx = tx0; tx <= tx1; ++tx) {
            const Rect tr = impl_->tile_rect(ty, tx);
            const Rect ov = tr.intersect(region);
            std::lock_guard<std::mutex> lock(impl_->lock_for(ty, tx));
            MemLease lease(impl_->accounting, BufferClass::Tile,
                           static_cast<size_t>(tr.height) * tr.width *
                               impl_->canvas.channels * sizeof(S));
            Grid<S> tile = impl_->load_tile(impl_->write_timestep, ty, tx);
            for (int y = 0; y < ov.height; ++y)
                for (int x = 0; x < ov.width; ++x)
                    for (int ch = 0; ch < impl_->canvas.channels; ++ch)
                        tile.at(ov.row - tr.row + y, ov.col - tr.col + x, ch) +=
                            values.at(ov.row - region.row + y,
                                      ov.col - region.col + x, ch);
            impl_->save_tile(impl_->write_timestep, ty, tx, tile);
        }
}

template <typename S>
void TileStore<S>::commit_step() {
    if (impl_->write_timestep < 0) fail("commit_step without an open step");
    const int old = impl_->timestep;
    for (int ty = 0; ty < impl_->tile_rows(); ++ty)
        for (int tx = 0; tx < impl_->tile_cols(); ++tx) {
            std::error_code ec;
            fs::remove(tile_file(impl_->dir, old, ty, tx), ec);
        }
    impl_->timestep = impl_->write_timestep;
    impl_->write_timestep = -1;
    ++impl_->generation;
    impl_->save_manifest();
}

std::string tile_store_dtype(const std::string& dir) {
    auto kv = read_kv_file(dir + "/manifest.txt");
    if (!kv.count("dtype")) fail(dir + ": manifest missing dtype");
    return kv["dtype"];
}

namespace {

template <typename S>
void merge_partials_typed(const std::string& dir_a, const std::string& dir_b,
                          const std::string& dir_out) {
    TileStore<S> a = TileStore<S>::open(dir_a);
    TileStore<S> b = TileStore<S>::open(dir_b);
    const CanvasSpec& ca = a.canvas();
    const CanvasSpec& cb = b.canvas();
    if (ca.height != cb.height || ca.width != cb.width ||
        ca.channels != cb.channels || a.tile_size() != b.tile_size())
        fail("merge: stores disagree on geometry");
    if (a.timestep() != b.timestep())
        fail("merge: stores are at different timesteps (" +
             std::to_string(a.timestep()) + " vs " +
             std::to_string(b.timestep()) + ")");
    TileStore<S> out =
        TileStore<S>::create(dir_out, ca, a.tile_size(), a.timestep());
    out.for_each_tile([&](int ty, int tx) {
        Grid<S> ta = a.read_tile(ty, tx);
        const Grid<S> tb = b.read_tile(ty, tx);
        for (size_t i = 0; i < ta.size(); ++i) ta.data()[i] += tb.data()[i];
        out.write_tile(ty, tx, ta);
    });
}

}  // namespace

void merge_partials(const std::string& dir_a, const std::string& dir_b,
                    const std::string& dir_out) {
    const std::string dtype = tile_store_dtype(dir_a);
    const std::string dtype_b = tile_store_dtype(dir_b);
    if (dtype != dtype_b)
        fail("merge: dtype mismatch (" + dtype + " vs " + dtype_b + ")");
    if (dtype == "float32")
        merge_partials_typed<float>(dir_a, dir_b, dir_out);
    else if (dtype == "float64")
        merge_partials_typed<double>(dir_a, dir_b, dir_out);
    else
        fail("merge: unsupported dtype " + dtype);
}

template class TileStore<float>;
template class TileStore<double>;

}  // namespace tilefuse
