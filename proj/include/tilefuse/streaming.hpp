#pragma once

#include <functional>
#include <vector>

#include "tilefuse/denoiser.hpp"
#include "tilefuse/memory.hpp"
#include "tilefuse/sampler.hpp"
#include "tilefuse/tile_store.hpp"

namespace tilefuse {

/// Streaming counterpart of the reference chain. Each timestep every patch
/// is reduced to one affine contribution
///     psi_k = gain_k * y_k + shift_k * D_k
/// whose pixelwise sum over patches equals the variance-corrected fusion of
/// the reference path. Contributions are added into an on-disk tile store,
/// so no canvas-sized buffer ever exists in memory: the working set is a few
/// patch buffers per worker plus one tile during each read-modify-write.
template <typename S>
struct StreamOptions {
    int parallelism = 1;

    /// Apply contributions to every tile in ascending patch order, making
    /// the output bitwise independent of scheduling. Off, tiles accumulate
    /// in arrival order (still correct up to floating-point reassociation).
    bool deterministic_reduction = true;

    /// Share coefficient tiles between translation-equivalent patches.
    /// Forced off for clamp-last grids, where border patches are irregular.
    bool shared_coefficients = true;

    /// Processing order of patch indices; empty means ascending. Must be a
    /// permutation of 0..count-1. With deterministic reduction the result
    /// does not depend on it.
    std::vector<int> patch_order;

    MemoryAccounting* accounting = nullptr;

    /// Called after each committed step with the new timestep state.
    std::function<void(int t)> step_done;
};

/// Seeds the store's current generation with the standard-normal initial
/// field, tile by tile. The field is keyed by absolute pixel coordinates, so
/// it matches the reference chain's initial canvas exactly.
template <typename S>
void init_noise_canvas(TileStore<S>& store, const NoiseSource& noise,
                       MemoryAccounting* accounting = nullptr);

/// One reverse step: reads patch latents from the store's readable
/// generation, accumulates affine contributions into the write generation,
/// commits. The store must be at timestep t.
template <typename S>
void run_streaming_step(TileStore<S>& store, const PatchGrid& grid,
                        const WeightWindow& window,
                        const NoiseSchedule& schedule, Denoiser<S>& denoiser,
                        const NoiseSource& noise,
                        const ConditionSource<S>& condition, int t,
                        const StreamOptions<S>& opts);

/// Full chain from the store's current timestep down to 0.
template <typename S>
void run_streaming_chain(TileStore<S>& store, const PatchGrid& grid,
                         const WeightWindow& window,
                         const NoiseSchedule& schedule, Denoiser<S>& denoiser,
                         const NoiseSource& noise,
                         const ConditionSource<S>& condition,
                         const StreamOptions<S>& opts);

extern template void init_noise_canvas(TileStore<float>&, const NoiseSource&, MemoryAccounting*);
extern template void init_noise_canvas(TileStore<double>&, const NoiseSource&, MemoryAccounting*);
extern template void run_streaming_step(TileStore<float>&, const PatchGrid&, const WeightWindow&, const NoiseSchedule&, Denoiser<float>&, const NoiseSource&, const ConditionSource<float>&, int, const StreamOptions<float>&);
extern template void run_streaming_step(TileStore<double>&, const PatchGrid&, const WeightWindow&, const NoiseSchedule&, Denoiser<double>&, const NoiseSource&, const ConditionSource<double>&, int, const StreamOptions<double>&);
extern template void run_streaming_chain(TileStore<float>&, const PatchGrid&, const WeightWindow&, const NoiseSchedule&, Denoiser<float>&, const NoiseSource&, const ConditionSource<float>&, const StreamOptions<float>&);
extern template void run_streaming_chain(TileStore<double>&, const PatchGrid&, const WeightWindow&, const NoiseSchedule&, Denoiser<double>&, const NoiseSource&, const ConditionSource<double>&, const StreamOptions<double>&);

}  // namespace tilefuse
