#pragma once

#include <cstdint>

#include "tilefuse/grid.hpp"

namespace tilefuse {

/// Counter-based Gaussian noise source. Every draw is a pure function of
/// (master seed, stream tag, coordinates), so any consumer can regenerate any
/// value in any order: the reference path and the streaming path see
/// identical noise without sharing generator state, and parallel schedules
/// cannot perturb the sequence.
class NoiseSource {
public:
    explicit NoiseSource(uint64_t master_seed) : seed_(master_seed) {}

    uint64_t seed() const { return seed_; }

    /// Standard normal draw for element `index` (row-major channel-last
    /// offset inside the patch) of patch k at timestep t.
    double patch_normal(int patch_index, int timestep, long index) const;

    /// Standard normal draw for the initial canvas field at global pixel
    /// (row, col, channel). Both engine paths start from this same field.
    double canvas_normal(int row, int col, int channel) const;

    /// Fill `out` with patch noise for (patch_index, timestep).
    template <typename S>
    void fill_patch(Grid<S>& out, int patch_index, int timestep) const {
        const long n = static_cast<long>(out.size());
        for (long i = 0; i < n; ++i)
            out.data()[i] =
                static_cast<S>(patch_normal(patch_index, timestep, i));
    }

    /// Fill `out`, whose top-left corner sits at canvas pixel (row0, col0),
    /// with the initial noise field restricted to that window.
    template <typename S>
    void fill_canvas_window(Grid<S>& out, int row0, int col0) const {
        for (int r = 0; r < out.height(); ++r)
            for (int c = 0; c < out.width(); ++c)
                for (int ch = 0; ch < out.channels(); ++ch)
                    out.at(r, c, ch) =
                        static_cast<S>(canvas_normal(row0 + r, col0 + c, ch));
    }

private:
    uint64_t seed_;
};

/// Mixes a word chain into a 64-bit hash (splitmix-style finaliser per word).
uint64_t hash_words(const uint64_t* words, int count);

/// Maps a 64-bit hash to (0, 1]; never returns 0, so log(u) is finite.
double hash_to_unit(uint64_t h);

}  // namespace tilefuse
