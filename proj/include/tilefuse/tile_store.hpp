#pragma once

#include <memory>
#include <mutex>
#include <string>

#include "tilefuse/geometry.hpp"
#include "tilefuse/grid.hpp"
#include "tilefuse/memory.hpp"

namespace tilefuse {

/// Latent canvas persisted as fixed-size tiles on disk, one flat binary file
/// per tile plus a manifest. At any moment at most two generations exist:
/// the readable one (state at the current timestep) and, between begin_step
/// and commit_step, a write generation that accumulates the next state.
/// Reads and writes touch one tile at a time, so in-core pixel memory stays
/// bounded by patch and tile sizes regardless of canvas extent.
///
/// Layout inside the directory:
///   manifest.txt                key = value (height, width, channels, tile,
///                               dtype, timestep, generation)
///   t{timestep}_{ty}_{tx}.bin   row-major channel-last samples, native
///                               little-endian float32 or float64
/// A tile file missing from its generation reads as zeros; accumulation
/// starts from an implicit zero canvas without materialising it.
template <typename S>
class TileStore {
public:
    static TileStore create(const std::string& dir, const CanvasSpec& canvas,
                            int tile_size, int timestep);
    static TileStore open(const std::string& dir);

    TileStore(TileStore&&) noexcept;
    TileStore& operator=(TileStore&&) noexcept;
    ~TileStore();

    const std::string& dir() const;
    const CanvasSpec& canvas() const;
    int tile_size() const;
    int tile_rows() const;
    int tile_cols() const;
    Rect tile_rect(int ty, int tx) const;
    int timestep() const;
    long generation() const;

    /// Tracks transient tile buffers (and nothing else) in `sink`.
    void set_accounting(MemoryAccounting* sink);

    /// Readable-generation access.
    Grid<S> read_tile(int ty, int tx) const;
    Grid<S> read_region(const Rect& region) const;
    Grid<S> assemble() const;

    /// Overwrites one readable-generation tile. Intended for initial-state
    /// seeding and tools; not legal between begin_step and commit_step.
    void write_tile(int ty, int tx, const Grid<S>& values);

    /// Opens the write generation for `next_timestep` (an implicit zero
    /// canvas). Accumulation targets it until commit_step.
    void begin_step(int next_timestep);

    /// += `values` over `region` of the write generation. Thread-safe; tiles
    /// are locked individually, read-modify-written one at a time.
    void accumulate(const Rect& region, const Grid<S>& values);

    /// Write generation becomes the readable one; previous files removed.
    void commit_step();

    /// Runs fn(ty, tx) for every tile, row-major.
    template <typename Fn>
    void for_each_tile(Fn&& fn) const {
        for (int ty = 0; ty < tile_rows(); ++ty)
            for (int tx = 0; tx < tile_cols(); ++tx) fn(ty, tx);
    }

private:
    TileStore();
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// dtype string recorded in a store manifest ("float32" / "float64").
std::string tile_store_dtype(const std::string& dir);

/// Sums two partial accumulation canvases into a third store. The inputs
/// must agree on shape, tile size, dtype and timestep; they come from
/// disjoint patch ranges of the same step, so addition is exact merging.
void merge_partials(const std::string& dir_a, const std::string& dir_b,
                    const std::string& dir_out);

extern template class TileStore<float>;
extern template class TileStore<double>;

}  // namespace tilefuse
