#include "tilefuse/sampler.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace tilefuse {

template <typename S>
ConditionSource<S> condition_from_canvas(const Grid<S>& canvas) {
    return [&canvas](const Rect& r) { return canvas.crop(r); };
}

template <typename S>
Grid<S> deterministic_component(const Grid<S>& y_t, const Grid<S>& eps_hat,
                                double alpha, double gamma) {
    if (!y_t.same_shape(eps_hat))
        throw std::invalid_argument(
            "deterministic_component: latent/estimate shape mismatch");
    const double eps_scale = (1.0 - alpha) / std::sqrt(1.0 - gamma);
    const double inv_root_alpha = 1.0 / std::sqrt(alpha);
    Grid<S> d(y_t.height(), y_t.width(), y_t.channels());
    for (size_t i = 0; i < d.size(); ++i)
        d.data()[i] = static_cast<S>(
            (static_cast<double>(y_t.data()[i]) -
             eps_scale * static_cast<double>(eps_hat.data()[i])) *
            inv_root_alpha);
    return d;
}

template <typename S>
Grid<S> deterministic_component(const Grid<S>& y_t, const Grid<S>& eps_hat,
                                const NoiseSchedule& schedule, int t) {
    return deterministic_component(y_t, eps_hat, schedule.alpha(t),
                                   schedule.gamma(t));
}

template <typename S>
void add_noise(Grid<S>& y, const Grid<S>& z, double sigma) {
    if (!y.same_shape(z))
        throw std::invalid_argument("add_noise: shape mismatch");
    for (size_t i = 0; i < y.size(); ++i)
        y.data()[i] = static_cast<S>(static_cast<double>(y.data()[i]) +
                                     sigma * static_cast<double>(z.data()[i]));
}

template <typename S>
Grid<S> naive_fuse(const std::vector<Grid<S>>& patch_values,
                   const PatchGrid& grid, const WeightWindow& window,
                   const NormalizationField& field) {
    if (static_cast<int>(patch_values.size()) != grid.count())
        throw std::invalid_argument("naive_fuse: got " +
                                    std::to_string(patch_values.size()) +
                                    " patches for a grid of " +
                                    std::to_string(grid.count()));
    const CanvasSpec& cv = grid.canvas();
    // accumulate in double whatever the latent type; overlaps can stack many
    // small weights and float accumulation would leak into the equivalence
    // budget of the streaming path
    Grid<double> acc(cv.height, cv.width, cv.channels);
    for (int k = 0; k < grid.count(); ++k) {
        const Rect r = grid.patch_rect(k);
        const Grid<S>& v = patch_values[k];
        if (v.height() != r.height || v.width() != r.width ||
            v.channels() != cv.channels)
            throw std::invalid_argument("naive_fuse: patch " +
                                        std::to_string(k) + " shape mismatch");
        for (int y = 0; y < r.height; ++y)
            for (int x = 0; x < r.width; ++x) {
                const double w = window.at(y, x);
                for (int ch = 0; ch < cv.channels; ++ch)
                    acc.at(r.row + y, r.col + x, ch) +=
                        w * static_cast<double>(v.at(y, x, ch));
            }
    }
    Grid<S> out(cv.height, cv.width, cv.channels);
    for (int r = 0; r < cv.height; ++r)
        for (int c = 0; c < cv.width; ++c) {
            const double wsum = field.weight_sum.at(r, c, 0);
            for (int ch = 0; ch < cv.channels; ++ch)
                out.at(r, c, ch) = static_cast<S>(acc.at(r, c, ch) / wsum);
        }
    return out;
}

template <typename S>
Grid<S> corrected_project(const Grid<S>& fused, const Grid<S>& mean,
                          const Grid<double>& lambda) {
    if (!fused.same_shape(mean))
        throw std::invalid_argument("corrected_project: canvas shape mismatch");
    if (lambda.height() != fused.height() || lambda.width() != fused.width())
        throw std::invalid_argument("corrected_project: erosion map mismatch");
    Grid<S> out(fused.height(), fused.width(), fused.channels());
    for (int r = 0; r < fused.height(); ++r)
        for (int c = 0; c < fused.width(); ++c) {
            const double scale = 1.0 / std::sqrt(lambda.at(r, c, 0));
            for (int ch = 0; ch < fused.channels(); ++ch) {
                const double m = static_cast<double>(mean.at(r, c, ch));
                const double y = static_cast<double>(fused.at(r, c, ch));
                out.at(r, c, ch) = static_cast<S>((y - m) * scale + m);
            }
        }
    return out;
}

const char* fusion_mode_name(FusionMode m) {
    switch (m) {
        case FusionMode::Independent: return "independent";
        case FusionMode::Naive: return "naive";
        case FusionMode::Corrected: return "corrected";
    }
    return "?";
}

FusionMode fusion_mode_from_name(const std::string& name) {
    if (name == "independent") return FusionMode::Independent;
    if (name == "naive") return FusionMode::Naive;
    if (name == "corrected") return FusionMode::Corrected;
    throw std::invalid_argument("unknown fusion mode '" + name +
                                "' (expected independent, naive or corrected)");
}

namespace {

/// Runs fn(k) for k in [0, count) on up to `parallelism` threads. Exceptions
/// are captured and rethrown on the caller thread.
template <typename Fn>
void parallel_for(int count, int parallelism, Fn&& fn) {
    if (parallelism <= 1 || count <= 1) {
        for (int k = 0; k < count; ++k) fn(k);
        return;
    }
    const int workers = parallelism < count ? parallelism : count;
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (int w = 0; w < workers; ++w)
        threads.emplace_back([&, w] {
            try {
                for (;;) {
                    const int k = next.fetch_add(1);
                    if (k >= count) return;
                    fn(k);
                }
            } catch (...) {
                errors[w] = std::current_exception();
                next.store(count);  // drain remaining work
            }
        });
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

template <typename S>
Grid<S> run_reference_chain(const PatchGrid& grid, const WeightWindow& window,
                            const NoiseSchedule& schedule,
                            Denoiser<S>& denoiser, const NoiseSource& noise,
                            const ConditionSource<S>& condition,
                            const ChainOptions<S>& opts) {
    const CanvasSpec& cv = grid.canvas();
    if (opts.mode == FusionMode::Independent &&
        (grid.stride_rows() != grid.patch_height() ||
         grid.stride_cols() != grid.patch_width()))
        throw std::invalid_argument(
            "independent mode needs a non-overlapping grid (stride == patch)");

    const NormalizationField field = compute_normalization(grid, window);
    const Grid<double> lambda = erosion_map(field);

    Grid<S> canvas(cv.height, cv.width, cv.channels);
    noise.fill_canvas_window(canvas, 0, 0);

    std::vector<Grid<S>> outputs(grid.count());
    std::vector<Grid<S>> components(grid.count());

    for (int t = schedule.steps(); t >= 1; --t) {
        const double gamma = schedule.gamma(t);
        const double sigma = schedule.sigma_target(t);
        parallel_for(grid.count(), opts.parallelism, [&](int k) {
            const Rect rect = grid.patch_rect(k);
            const Grid<S> latent = canvas.crop(rect);
            const Grid<S> cond = condition(rect);
            DenoiseRequest<S> req;
            req.condition = &cond;
            req.latent = &latent;
            req.gamma = gamma;
            req.origin_row = rect.row;
            req.origin_col = rect.col;
            const Grid<S> eps = denoiser.denoise(req);
            Grid<S> d = deterministic_component(latent, eps, schedule, t);
            if (t > 1) {
                Grid<S> z(rect.height, rect.width, cv.channels);
                noise.fill_patch(z, k, t);
                components[k] = d;
                add_noise(d, z, sigma);
                outputs[k] = std::move(d);
            } else {
                outputs[k] = d;
                components[k] = std::move(d);
            }
        });

        switch (opts.mode) {
            case FusionMode::Independent:
                for (int k = 0; k < grid.count(); ++k)
                    canvas.paste(grid.patch_rect(k), outputs[k]);
                break;
            case FusionMode::Naive:
                canvas = naive_fuse(outputs, grid, window, field);
                break;
            case FusionMode::Corrected: {
                const Grid<S> fused = naive_fuse(outputs, grid, window, field);
                const Grid<S> mean =
                    naive_fuse(components, grid, window, field);
                canvas = corrected_project(fused, mean, lambda);
                break;
            }
        }
        if (opts.snapshot) opts.snapshot(t, canvas);
    }
    return canvas;
}

template ConditionSource<float> condition_from_canvas(const Grid<float>&);
template ConditionSource<double> condition_from_canvas(const Grid<double>&);
template Grid<float> deterministic_component(const Grid<float>&, const Grid<float>&, double, double);
template Grid<double> deterministic_component(const Grid<double>&, const Grid<double>&, double, double);
template Grid<float> deterministic_component(const Grid<float>&, const Grid<float>&, const NoiseSchedule&, int);
template Grid<double> deterministic_component(const Grid<double>&, const Grid<double>&, const NoiseSchedule&, int);
template void add_noise(Grid<float>&, const Grid<float>&, double);
template void add_noise(Grid<double>&, const Grid<double>&, double);
template Grid<float> naive_fuse(const std::vector<Grid<float>>&, const PatchGrid&, const WeightWindow&, const NormalizationField&);
template Grid<double> naive_fuse(const std::vector<Grid<double>>&, const PatchGrid&, const WeightWindow&, const NormalizationField&);
template Grid<float> corrected_project(const Grid<float>&, const Grid<float>&, const Grid<double>&);
template Grid<double> corrected_project(const Grid<double>&, const Grid<double>&, const Grid<double>&);
template Grid<float> run_reference_chain(const PatchGrid&, const WeightWindow&, const NoiseSchedule&, Denoiser<float>&, const NoiseSource&, const ConditionSource<float>&, const ChainOptions<float>&);
template Grid<double> run_reference_chain(const PatchGrid&, const WeightWindow&, const NoiseSchedule&, Denoiser<double>&, const NoiseSource&, const ConditionSource<double>&, const ChainOptions<double>&);

}  // namespace tilefuse
