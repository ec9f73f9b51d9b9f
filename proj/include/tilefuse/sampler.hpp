#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tilefuse/denoiser.hpp"
#include "tilefuse/geometry.hpp"
#include "tilefuse/grid.hpp"
#include "tilefuse/noise.hpp"
#include "tilefuse/schedule.hpp"
#include "tilefuse/weight_field.hpp"

namespace tilefuse {

/// Supplies the conditioning signal for any canvas window on demand, so
/// callers never need the full conditioning canvas in memory at once.
template <typename S>
using ConditionSource = std::function<Grid<S>(const Rect&)>;

/// A condition source backed by a whole in-memory canvas.
template <typename S>
ConditionSource<S> condition_from_canvas(const Grid<S>& canvas);

/// Noise-free portion of one reverse step:
///   D = (y_t - (1 - alpha) / sqrt(1 - gamma) * eps_hat) / sqrt(alpha)
template <typename S>
Grid<S> deterministic_component(const Grid<S>& y_t, const Grid<S>& eps_hat,
                                double alpha, double gamma);

/// Same, with alpha and gamma taken from the schedule at step t.
template <typename S>
Grid<S> deterministic_component(const Grid<S>& y_t, const Grid<S>& eps_hat,
                                const NoiseSchedule& schedule, int t);

/// y += sigma * z, the stochastic completion of a reverse step. Skipped at
/// the final step (t == 1), where sigma_target is still > 0 but the chain
/// terminates on the deterministic component.
template <typename S>
void add_noise(Grid<S>& y, const Grid<S>& z, double sigma);

/// Weighted per-pixel average of per-patch canvases:
///   Y(p) = sum_k w_k(p) v_k(p) / weight_sum(p)
/// `patch_values` holds one patch-sized grid per patch, grid order.
template <typename S>
Grid<S> naive_fuse(const std::vector<Grid<S>>& patch_values,
                   const PatchGrid& grid, const WeightWindow& window,
                   const NormalizationField& field);

/// Restores the noise variance the weighted average destroyed:
///   Y*(p) = (Y(p) - mean(p)) / sqrt(lambda(p)) + mean(p)
/// `mean` is the fused deterministic component, `lambda` the erosion map.
template <typename S>
Grid<S> corrected_project(const Grid<S>& fused, const Grid<S>& mean,
                          const Grid<double>& lambda);

/// How per-patch reverse steps are merged each timestep.
///  Independent: no cross-patch exchange; needs a non-overlapping grid.
///  Naive:       weighted average only; variance erodes in overlaps.
///  Corrected:   weighted average plus erosion compensation (the reference).
enum class FusionMode { Independent, Naive, Corrected };

const char* fusion_mode_name(FusionMode m);
FusionMode fusion_mode_from_name(const std::string& name);

template <typename S>
struct ChainOptions {
    FusionMode mode = FusionMode::Corrected;
    int parallelism = 1;
    /// Called after every completed timestep with the fused canvas.
    std::function<void(int t, const Grid<S>&)> snapshot;
};

/// Whole-canvas reverse chain, materialising the full latent each step.
/// Memory grows with the canvas; the streaming engine is the counterpart
/// that does not. Both begin from the same seed-keyed initial field and,
/// in Corrected mode, produce the same pixels.
template <typename S>
Grid<S> run_reference_chain(const PatchGrid& grid, const WeightWindow& window,
                            const NoiseSchedule& schedule,
                            Denoiser<S>& denoiser, const NoiseSource& noise,
                            const ConditionSource<S>& condition,
                            const ChainOptions<S>& opts);

extern template Grid<float> deterministic_component(const Grid<float>&, const Grid<float>&, double, double);
extern template Grid<double> deterministic_component(const Grid<double>&, const Grid<double>&, double, double);
extern template Grid<float> deterministic_component(const Grid<float>&, const Grid<float>&, const NoiseSchedule&, int);
extern template Grid<double> deterministic_component(const Grid<double>&, const Grid<double>&, const NoiseSchedule&, int);
extern template void add_noise(Grid<float>&, const Grid<float>&, double);
extern template void add_noise(Grid<double>&, const Grid<double>&, double);
extern template Grid<float> naive_fuse(const std::vector<Grid<float>>&, const PatchGrid&, const WeightWindow&, const NormalizationField&);
extern template Grid<double> naive_fuse(const std::vector<Grid<double>>&, const PatchGrid&, const WeightWindow&, const NormalizationField&);
extern template Grid<float> corrected_project(const Grid<float>&, const Grid<float>&, const Grid<double>&);
extern template Grid<double> corrected_project(const Grid<double>&, const Grid<double>&, const Grid<double>&);
extern template ConditionSource<float> condition_from_canvas(const Grid<float>&);
extern template ConditionSource<double> condition_from_canvas(const Grid<double>&);
extern template Grid<float> run_reference_chain(const PatchGrid&, const WeightWindow&, const NoiseSchedule&, Denoiser<float>&, const NoiseSource&, const ConditionSource<float>&, const ChainOptions<float>&);
extern template Grid<double> run_reference_chain(const PatchGrid&, const WeightWindow&, const NoiseSchedule&, Denoiser<double>&, const NoiseSource&, const ConditionSource<double>&, const ChainOptions<double>&);

}  // namespace tilefuse
