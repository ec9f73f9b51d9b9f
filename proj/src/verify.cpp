#include "tilefuse/verify.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <random>
#include <sstream>

#include "tilefuse/degrade.hpp"
#include "tilefuse/streaming.hpp"
#include "tilefuse/metrics.hpp"
#include "tilefuse/sampler.hpp"
#include "tilefuse/schedule.hpp"
#include "tilefuse/tile_store.hpp"
#include "tilefuse/weight_field.hpp"

namespace fs = std::filesystem;

namespace tilefuse {

GridF make_toy_scene(int height, int width, int channels) {
    GridF g(height, width, channels);
    constexpr double kTau = 6.283185307179586;
    for (int ch = 0; ch < channels; ++ch) {
        const double phase = 0.7 * ch;
        for (int r = 0; r < height; ++r)
            for (int c = 0; c < width; ++c) {
                const double v =
                    0.45 * std::sin(kTau * r / 61.0 + phase) *
                        std::cos(kTau * c / 53.0 - phase) +
                    0.25 * std::sin(kTau * (r + c) / 97.0 + 0.4 + phase) +
                    0.15 * ((r + c) / static_cast<double>(height + width) *
                                2.0 -
                            1.0);
                g.at(r, c, ch) = static_cast<float>(v);
            }
    }
    return g;
}

namespace {
constexpr uint64_t kDriftTag = 0x64726966u;
using check::ScratchDir;
}  // namespace

template <typename S>
double DriftedOracle<S>::bias_at(int origin_row, int origin_col) const {
    const uint64_t words[4] = {seed_, kDriftTag,
                               static_cast<uint64_t>(origin_row),
                               static_cast<uint64_t>(origin_col)};
    return amplitude_ * (2.0 * hash_to_unit(hash_words(words, 4)) - 1.0);
}

template <typename S>
Grid<S> DriftedOracle<S>::truth_patch(const DenoiseRequest<S>& req) const {
    Grid<S> t = ExactNoiseOracle<S>::truth_patch(req);
    const double bias = bias_at(req.origin_row, req.origin_col);
    for (size_t i = 0; i < t.size(); ++i)
        t.data()[i] = static_cast<S>(static_cast<double>(t.data()[i]) + bias);
    return t;
}

template class DriftedOracle<float>;
template class DriftedOracle<double>;

VarianceCheck run_variance_check(uint64_t seed, int trials) {
    const CanvasSpec canvas{64, 64, 1};
    const PatchGrid grid =
        build_grid(canvas, 32, 32, 16, 16, BorderPolicy::ExactTiling);
    const WeightWindow window = make_window(WindowKind::Constant, 32, 32);
    const NormalizationField field = compute_normalization(grid, window);
    const Grid<double> lambda = erosion_map(field);
    const Grid<double> zero_mean(64, 64, 1, 0.0);
    const NoiseSource noise(seed);

    // per-step noise scale the fusion must preserve; taken from the final
    // step of a realistic schedule so the check does not silently rely on
    // sigma == 1
    const double sigma =
        NoiseSchedule::linear(100, 1e-4, 2e-2).sigma_target(100);
    const double sigma_sq = sigma * sigma;

    // probes: (0,0) is covered by one patch, (20,20) by four
    const int pr = 20, pc = 20;

    VarianceCheck out;
    out.trials = trials;
    out.sigma_sq = sigma_sq;
    out.expected_overlap_lambda = erosion_factor(field, pr, pc);

    double s_n1 = 0, q_n1 = 0;  // single cover, naive
    double s_n4 = 0, q_n4 = 0;  // overlap, naive
    double s_c4 = 0, q_c4 = 0;  // overlap, corrected
    double s_c1 = 0, q_c1 = 0;  // single cover, corrected

    std::vector<Grid<double>> outputs(grid.count());
    for (int k = 0; k < grid.count(); ++k)
        outputs[k] = Grid<double>(32, 32, 1);

    for (int trial = 0; trial < trials; ++trial) {
        // per-patch latents: fixed D (zero) plus sigma * z, fresh z per trial
        for (int k = 0; k < grid.count(); ++k) {
            noise.fill_patch(outputs[k], k, trial + 1);
            for (size_t i = 0; i < outputs[k].size(); ++i)
                outputs[k].data()[i] *= sigma;
        }
        const Grid<double> fused = naive_fuse(outputs, grid, window, field);
        const Grid<double> corrected =
            corrected_project(fused, zero_mean, lambda);
        const double n1 = fused.at(0, 0, 0);
        const double n4 = fused.at(pr, pc, 0);
        const double c4 = corrected.at(pr, pc, 0);
        const double c1 = corrected.at(0, 0, 0);
        s_n1 += n1, q_n1 += n1 * n1;
        s_n4 += n4, q_n4 += n4 * n4;
        s_c4 += c4, q_c4 += c4 * c4;
        s_c1 += c1, q_c1 += c1 * c1;
    }

    auto var = [trials](double s, double q) {
        return (q - s * s / trials) / (trials - 1);
    };
    out.single_cover_naive = var(s_n1, q_n1);
    out.overlap_naive = var(s_n4, q_n4);
    out.overlap_corrected = var(s_c4, q_c4);
    out.single_cover_corrected = var(s_c1, q_c1);

    // a sample variance of n normal draws has SE = true_var * sqrt(2/(n-1))
    const double se = std::sqrt(2.0 / (trials - 1));
    out.tol_unit = 3.0 * sigma_sq * se;
    out.tol_eroded = 3.0 * sigma_sq * out.expected_overlap_lambda * se;

    out.naive_matches_prediction =
        std::abs(out.single_cover_naive - sigma_sq) <= out.tol_unit &&
        std::abs(out.overlap_naive -
                 sigma_sq * out.expected_overlap_lambda) <= out.tol_eroded;
    out.corrected_restores_unit =
        std::abs(out.overlap_corrected - sigma_sq) <= out.tol_unit &&
        std::abs(out.single_cover_corrected - sigma_sq) <= out.tol_unit;
    return out;
}

namespace {

template <typename S>
EquivalenceCase run_equivalence_case(std::mt19937_64& rng, double tolerance) {
    auto pick = [&rng](std::initializer_list<int> v) {
        std::vector<int> vv(v);
        return vv[std::uniform_int_distribution<size_t>(0, vv.size() - 1)(rng)];
    };

    // menu: patch 16 or 32, stride 8 or 16 (capped by patch), canvas up to
    // 128 x 128, constant or gaussian weights, 10-step chain
    const int patch = pick({16, 32});
    const int stride = std::min(patch, pick({8, 16}));
    const int rows = pick({2, 3, 4});
    const int cols = pick({2, 3, 4});
    const int h = (rows - 1) * stride + patch;
    const int w = (cols - 1) * stride + patch;
    const int ch = pick({1, 3});
    const WindowKind kind =
        pick({0, 1}) == 0 ? WindowKind::Constant : WindowKind::Gaussian;
    const int steps = 10;
    const int tile = pick({12, 16, 24, 40});
    const int parallelism = pick({1, 3});
    const uint64_t case_seed = rng();

    const CanvasSpec canvas{h, w, ch};
    const PatchGrid grid =
        build_grid(canvas, patch, patch, stride, stride,
                   BorderPolicy::ExactTiling);
    const WeightWindow window = make_window(kind, patch, patch);
    const NoiseSchedule schedule = NoiseSchedule::linear(steps, 1e-4, 2e-2);
    const NoiseSource noise(case_seed);

    const GridF scene_f = make_toy_scene(h, w, ch);
    const Grid<S> scene = scene_f.template cast<S>();
    const Grid<S> condition_canvas =
        degrade(scene_f, 2).condition.template cast<S>();
    const ConditionSource<S> condition = condition_from_canvas(condition_canvas);

    DriftedOracle<S> oracle(scene, 0.05, case_seed ^ 0x5eedu);

    ChainOptions<S> ref_opts;
    ref_opts.mode = FusionMode::Corrected;
    ref_opts.parallelism = 1;
    const Grid<S> reference = run_reference_chain(
        grid, window, schedule, oracle, noise, condition, ref_opts);

    ScratchDir scratch("eq");
    TileStore<S> store =
        TileStore<S>::create(scratch.path(), canvas, tile, steps);
    init_noise_canvas(store, noise);
    StreamOptions<S> stream_opts;
    stream_opts.parallelism = parallelism;
    stream_opts.deterministic_reduction = true;
    run_streaming_chain(store, grid, window, schedule, oracle, noise,
                        condition, stream_opts);
    const Grid<S> streamed = store.assemble();

    EquivalenceCase c;
    std::ostringstream desc;
    desc << "patch" << patch << " stride" << stride << " grid" << rows << "x"
         << cols << " ch" << ch << " " << window_kind_name(kind) << " T"
         << steps << " tile" << tile << " par" << parallelism;
    c.description = desc.str();
    c.is_double = sizeof(S) == 8;
    c.max_abs = max_abs_diff(reference, streamed);
    c.tolerance = tolerance;
    c.pass = c.max_abs <= tolerance;
    return c;
}

}  // namespace

EquivalenceCheck run_equivalence_check(uint64_t seed, int double_cases,
                                       int float_cases) {
    std::mt19937_64 rng(seed);
    EquivalenceCheck out;
    out.pass = true;
    for (int i = 0; i < double_cases; ++i) {
        auto c = run_equivalence_case<double>(rng, 1e-10);
        out.worst_double = std::max(out.worst_double, c.max_abs);
        out.pass = out.pass && c.pass;
        out.cases.push_back(std::move(c));
    }
    for (int i = 0; i < float_cases; ++i) {
        auto c = run_equivalence_case<float>(rng, 1e-4);
        out.worst_float = std::max(out.worst_float, c.max_abs);
        out.pass = out.pass && c.pass;
        out.cases.push_back(std::move(c));
    }
    return out;
}

PeriodicityCheck run_periodicity_check(double tolerance) {
    struct Geometry {
        int patch, stride, rows, cols;
        WindowKind kind;
    };
    const Geometry geometries[] = {
        {32, 16, 5, 7, WindowKind::Gaussian},
        {32, 8, 7, 7, WindowKind::Gaussian},
        {16, 16, 4, 4, WindowKind::Constant},
        {24, 12, 3, 5, WindowKind::LinearRamp},
    };

    PeriodicityCheck out;
    out.pass = true;
    for (const auto& g : geometries) {
        const CanvasSpec canvas{(g.rows - 1) * g.stride + g.patch,
                                (g.cols - 1) * g.stride + g.patch, 1};
        const PatchGrid grid = build_grid(canvas, g.patch, g.patch, g.stride,
                                          g.stride, BorderPolicy::ExactTiling);
        const WeightWindow window = make_window(g.kind, g.patch, g.patch);
        const CoefficientTiles tiles = CoefficientTiles::precompute(grid, window);

        PeriodicityCheck::Case c;
        std::ostringstream desc;
        desc << "patch" << g.patch << " stride" << g.stride << " grid"
             << g.rows << "x" << g.cols << " " << window_kind_name(g.kind);
        c.description = desc.str();
        c.class_count = tiles.class_count();

        Grid<double> identity(canvas.height, canvas.width, 1, 0.0);
        for (int k = 0; k < grid.count(); ++k) {
            const CoefficientTile direct = direct_coefficients(grid, window, k);
            const CoefficientTile& shared = tiles.for_patch(k);
            c.max_abs_dev = std::max(
                c.max_abs_dev,
                std::max(max_abs_diff(direct.gain, shared.gain),
                         max_abs_diff(direct.shift, shared.shift)));
            const Rect r = grid.patch_rect(k);
            for (int y = 0; y < r.height; ++y)
                for (int x = 0; x < r.width; ++x)
                    identity.at(r.row + y, r.col + x, 0) +=
                        shared.gain.at(y, x, 0) + shared.shift.at(y, x, 0);
        }
        for (size_t i = 0; i < identity.size(); ++i)
            c.max_identity_dev = std::max(
                c.max_identity_dev, std::abs(identity.data()[i] - 1.0));

        out.worst_dev = std::max(out.worst_dev, c.max_abs_dev);
        out.worst_identity = std::max(out.worst_identity, c.max_identity_dev);
        out.pass = out.pass && c.max_abs_dev <= tolerance &&
                   c.max_identity_dev <= tolerance;
        out.cases.push_back(std::move(c));
    }
    return out;
}

IdentityCheck run_identity_check(uint64_t seed, int vectors,
                                 double tolerance) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> weight_dist(0.1, 2.0);
    std::uniform_real_distribution<double> value_dist(-2.0, 2.0);
    std::uniform_int_distribution<int> count_dist(1, 6);

    IdentityCheck out;
    out.vectors = vectors;
    for (int v = 0; v < vectors; ++v) {
        const int m = count_dist(rng);
        double wsum = 0.0, wsq = 0.0;
        std::vector<double> w(m), x(m), d(m);
        for (int i = 0; i < m; ++i) {
            w[i] = weight_dist(rng);
            x[i] = value_dist(rng);
            d[i] = value_dist(rng);
            wsum += w[i];
            wsq += w[i] * w[i];
        }
        const double wrss = std::sqrt(wsq);

        const double naive_x =
            std::inner_product(w.begin(), w.end(), x.begin(), 0.0) / wsum;
        const double mean_d =
            std::inner_product(w.begin(), w.end(), d.begin(), 0.0) / wsum;
        const double corrected = (naive_x - mean_d) * (wsum / wrss) + mean_d;

        double affine = 0.0, gain_sum = 0.0, unit_sum = 0.0;
        for (int i = 0; i < m; ++i) {
            const double gain = w[i] / wrss;
            const double shift = w[i] * (1.0 / wsum - 1.0 / wrss);
            affine += gain * x[i] + shift * d[i];
            gain_sum += gain;
            unit_sum += gain + shift;
        }

        out.max_dev = std::max(out.max_dev, std::abs(corrected - affine));
        out.max_dev = std::max(out.max_dev, std::abs(gain_sum - wsum / wrss));
        out.max_dev = std::max(out.max_dev, std::abs(unit_sum - 1.0));

        // Cauchy-Schwarz: lambda = sum(w^2) / (sum w)^2 <= 1, with equality
        // exactly when a single weight carries the pixel
        const double lam = wsq / (wsum * wsum);
        out.max_lambda = std::max(out.max_lambda, lam);
        if (m == 1) {
            if (std::abs(lam - 1.0) > tolerance) out.lambda_law_holds = false;
        } else {
            if (!(lam < 1.0 - 1e-6)) out.lambda_law_holds = false;
        }
    }
    out.pass = out.max_dev <= tolerance && out.lambda_law_holds &&
               out.max_lambda <= 1.0 + tolerance;
    return out;
}

MemoryCheck run_memory_check(double max_spread) {
    MemoryCheck out;
    for (int extent : {128, 256, 512}) {
        const CanvasSpec canvas{extent, extent, 1};
        const PatchGrid grid =
            build_grid(canvas, 32, 32, 16, 16, BorderPolicy::ExactTiling);
        const WeightWindow window = make_window(WindowKind::Gaussian, 32, 32);
        const NoiseSchedule schedule = NoiseSchedule::linear(3, 1e-4, 2e-2);
        const NoiseSource noise(0x5ca1ab1eu);
        ZeroDenoiser<float> denoiser;
        const ConditionSource<float> condition = [](const Rect& r) {
            GridF g(r.height, r.width, 1);
            for (int y = 0; y < r.height; ++y)
                for (int x = 0; x < r.width; ++x)
                    g.at(y, x, 0) = static_cast<float>(
                        0.2 * std::sin(0.05 * (r.row + y)) *
                        std::cos(0.07 * (r.col + x)));
            return g;
        };

        MemoryAccounting accounting;
        ScratchDir scratch("mem");
        TileStore<float> store =
            TileStore<float>::create(scratch.path(), canvas, 32, 3);
        store.set_accounting(&accounting);
        init_noise_canvas(store, noise, &accounting);
        StreamOptions<float> opts;
        // Default sequential schedule: the peak is then a property of the
        // algorithm alone, not of thread interleaving, so the three canvases
        // are comparable byte for byte.
        opts.parallelism = 1;
        opts.accounting = &accounting;
        run_streaming_chain(store, grid, window, schedule, denoiser, noise,
                            condition, opts);

        out.points.push_back({extent, accounting.peak_bytes()});
    }
    size_t lo = out.points[0].peak_bytes, hi = lo;
    for (const auto& p : out.points) {
        lo = std::min(lo, p.peak_bytes);
        hi = std::max(hi, p.peak_bytes);
    }
    out.max_rel_spread =
        lo > 0 ? static_cast<double>(hi - lo) / static_cast<double>(lo) : 0.0;
    out.pass = out.max_rel_spread < max_spread;
    return out;
}

SeamCheck run_seam_check(uint64_t seed, int steps, double min_independent,
                         double max_streaming) {
    const int extent = 96;
    const GridF scene = make_toy_scene(extent, extent, 1);
    const GridF condition_canvas = degrade(scene, 2).condition;
    const ConditionSource<float> condition =
        condition_from_canvas(condition_canvas);
    const NoiseSchedule schedule = NoiseSchedule::linear(steps, 1e-4, 2e-2);
    const NoiseSource noise(seed);
    const CanvasSpec canvas{extent, extent, 1};
    const double amplitude = 0.08;
    DriftedOracle<float> oracle(scene, amplitude, seed ^ 0xd01fu);

    // independent per-patch chains on a seam-adjacent, non-overlapping grid
    const PatchGrid grid_ind =
        build_grid(canvas, 32, 32, 32, 32, BorderPolicy::ExactTiling);
    const WeightWindow window_ind = make_window(WindowKind::Constant, 32, 32);
    ChainOptions<float> ind_opts;
    ind_opts.mode = FusionMode::Independent;
    ind_opts.parallelism = 2;
    const GridF out_ind = run_reference_chain(grid_ind, window_ind, schedule,
                                              oracle, noise, condition,
                                              ind_opts);

    // streaming fusion on an overlapping grid
    const PatchGrid grid_str =
        build_grid(canvas, 32, 32, 16, 16, BorderPolicy::ExactTiling);
    const WeightWindow window_str = make_window(WindowKind::LinearRamp, 32, 32);
    ScratchDir scratch("seam");
    TileStore<float> store =
        TileStore<float>::create(scratch.path(), canvas, 32, steps);
    init_noise_canvas(store, noise);
    StreamOptions<float> str_opts;
    str_opts.parallelism = 2;
    run_streaming_chain(store, grid_str, window_str, schedule, oracle, noise,
                        condition, str_opts);
    const GridF out_str = store.assemble();

    SeamCheck out;
    out.seam_independent = seam_index(out_ind, grid_ind);
    out.seam_streaming = seam_index(out_str, grid_str);
    out.psnr_independent = rmse_psnr(scene, out_ind, 2.0).psnr;
    out.psnr_streaming = rmse_psnr(scene, out_str, 2.0).psnr;
    out.pass_independent = out.seam_independent >= min_independent;
    out.pass_streaming = out.seam_streaming <= max_streaming;
    out.pass_psnr = out.psnr_streaming > out.psnr_independent;
    return out;
}

namespace {

template <typename S>
bool same_bits(const Grid<S>& a, const Grid<S>& b) {
    return a.same_shape(b) &&
           std::memcmp(a.data(), b.data(), a.bytes()) == 0;
}

}  // namespace

DeterminismCheck run_determinism_check(uint64_t seed) {
    const int extent = 64;
    const CanvasSpec canvas{extent, extent, 1};
    const PatchGrid grid =
        build_grid(canvas, 32, 32, 16, 16, BorderPolicy::ExactTiling);
    const WeightWindow window = make_window(WindowKind::Gaussian, 32, 32);
    const NoiseSchedule schedule = NoiseSchedule::linear(20, 1e-4, 2e-2);
    const NoiseSource noise(seed);
    const GridF scene = make_toy_scene(extent, extent, 1);
    const GridF condition_canvas = degrade(scene, 2).condition;
    const ConditionSource<float> condition =
        condition_from_canvas(condition_canvas);
    DriftedOracle<float> oracle(scene, 0.05, seed ^ 0xfadeu);

    auto stream_run = [&](int parallelism, std::vector<int> order) {
        ScratchDir scratch("det");
        TileStore<float> store =
            TileStore<float>::create(scratch.path(), canvas, 24,
                                     schedule.steps());
        init_noise_canvas(store, noise);
        StreamOptions<float> opts;
        opts.parallelism = parallelism;
        opts.patch_order = std::move(order);
        run_streaming_chain(store, grid, window, schedule, oracle, noise,
                            condition, opts);
        return store.assemble();
    };

    std::vector<int> permuted(grid.count());
    for (int k = 0; k < grid.count(); ++k) permuted[k] = k;
    std::mt19937 shuffle_rng(static_cast<uint32_t>(seed));
    std::shuffle(permuted.begin(), permuted.end(), shuffle_rng);

    const GridF base = stream_run(1, {});
    const GridF rerun = stream_run(1, {});
    const GridF parallel = stream_run(4, {});
    const GridF shuffled = stream_run(3, permuted);

    DeterminismCheck out;
    out.stream_parallel_identical =
        same_bits(base, rerun) && same_bits(base, parallel);
    out.stream_permuted_identical = same_bits(base, shuffled);

    ChainOptions<float> ref1;
    ref1.mode = FusionMode::Corrected;
    ref1.parallelism = 1;
    ChainOptions<float> ref4 = ref1;
    ref4.parallelism = 4;
    const GridF r1 = run_reference_chain(grid, window, schedule, oracle, noise,
                                         condition, ref1);
    const GridF r4 = run_reference_chain(grid, window, schedule, oracle, noise,
                                         condition, ref4);
    out.reference_parallel_identical = same_bits(r1, r4);

    out.pass = out.stream_parallel_identical &&
               out.stream_permuted_identical &&
               out.reference_parallel_identical;
    return out;
}

}  // namespace tilefuse
