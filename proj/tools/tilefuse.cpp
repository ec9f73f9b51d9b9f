// Command-line front end for the tiled synthesis engine.

#include <CLI11.hpp>

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "tilefuse/config.hpp"
#include "tilefuse/degrade.hpp"
#include "tilefuse/image_io.hpp"
#include "tilefuse/metrics.hpp"
#include "tilefuse/sampler.hpp"
#include "tilefuse/stitcher.hpp"
#include "tilefuse/tile_store.hpp"
#include "tilefuse/verify.hpp"
#include "tilefuse/weight_field.hpp"

using namespace tilefuse;

namespace {

void print_kv(const std::string& key, const std::string& value) {
    std::cout << key << " = " << value << "\n";
}

void print_kv(const std::string& key, double value) {
    char buf[64];
    snprintf(buf, sizeof buf, "%.10g", value);
    print_kv(key, std::string(buf));
}

void print_kv(const std::string& key, size_t value) {
    print_kv(key, std::to_string(value));
}

void print_kv(const std::string& key, int value) {
    print_kv(key, std::to_string(value));
}

// ---------------------------------------------------------------- plan ----

int cmd_plan(const std::string& input, int height, int width, int channels,
             int patch, int stride, const std::string& border,
             const std::string& window_name, int tile,
             const std::string& dtype, int parallelism) {
    CanvasSpec canvas{height, width, channels};
    if (!input.empty()) {
        const ImageU8 img = read_png(input);
        canvas = CanvasSpec{img.height, img.width, img.channels};
    }
    canvas.validate();

    const BorderPolicy policy = border_policy_from_name(border);
    const PatchGrid grid =
        build_grid(canvas, patch, patch, stride, stride, policy);
    const WeightWindow window =
        make_window(window_kind_from_name(window_name), patch, patch);

    const size_t dsize = dtype == "float64" ? 8 : 4;
    const size_t patch_bytes =
        static_cast<size_t>(patch) * patch * canvas.channels * dsize;
    const size_t tile_bytes =
        static_cast<size_t>(tile) * tile * canvas.channels * dsize;
    const size_t canvas_bytes = canvas.pixels() * canvas.channels * dsize;

    print_kv("canvas", std::to_string(canvas.height) + "x" +
                           std::to_string(canvas.width) + "x" +
                           std::to_string(canvas.channels));
    print_kv("border", border_policy_name(policy));
    print_kv("patch_rows", grid.rows());
    print_kv("patch_cols", grid.cols());
    print_kv("patches", grid.count());
    print_kv("window", window_kind_name(window.kind));

    const NormalizationField field = compute_normalization(grid, window);
    double wmin = field.weight_sum.at(0, 0, 0), wmax = wmin;
    double smin = field.weight_rss.at(0, 0, 0), smax = smin;
    for (size_t i = 0; i < field.weight_sum.size(); ++i) {
        wmin = std::min(wmin, field.weight_sum.data()[i]);
        wmax = std::max(wmax, field.weight_sum.data()[i]);
        smin = std::min(smin, field.weight_rss.data()[i]);
        smax = std::max(smax, field.weight_rss.data()[i]);
    }
    const Grid<double> erosion = erosion_map(field);
    double lmin = erosion.at(0, 0, 0), lmax = lmin;
    for (size_t i = 0; i < erosion.size(); ++i) {
        lmin = std::min(lmin, erosion.data()[i]);
        lmax = std::max(lmax, erosion.data()[i]);
    }
    print_kv("weight_sum_min", wmin);
    print_kv("weight_sum_max", wmax);
    print_kv("weight_rss_min", smin);
    print_kv("weight_rss_max", smax);
    print_kv("erosion_min", lmin);
    print_kv("erosion_max", lmax);
    if (policy == BorderPolicy::ExactTiling) {
        const CoefficientTiles tiles = CoefficientTiles::precompute(grid, window);
        print_kv("coefficient_classes", tiles.class_count());
        print_kv("coefficient_bytes", tiles.bytes());
    } else {
        print_kv("coefficient_classes", std::string("per-patch (clamped border)"));
    }
    print_kv("tile", tile);
    print_kv("tile_grid", std::to_string((canvas.height + tile - 1) / tile) +
                              "x" +
                              std::to_string((canvas.width + tile - 1) / tile));
    print_kv("patch_buffer_bytes", patch_bytes);
    print_kv("tile_buffer_bytes", tile_bytes);
    print_kv("reference_canvas_bytes", canvas_bytes);
    // per worker: latent, condition, estimate, component, output, psi
    print_kv("stream_working_set_estimate",
             static_cast<size_t>(parallelism) * 6 * patch_bytes + tile_bytes);
    return 0;
}

// ----------------------------------------------------------------- run ----

int cmd_run(const RunConfig& cfg) {
    const RunOutcome r = execute_run(cfg);
    print_kv("output", r.output_path);
    print_kv("patches", r.patches);
    print_kv("steps", r.steps);
    print_kv("peak_bytes", r.peak_bytes);
    print_kv("seam_index", r.seam);
    return 0;
}

// -------------------------------------------------------------- verify ----

int cmd_verify(const std::string& suite, uint64_t seed, int trials, int steps,
               int quick) {
    bool all_pass = true;
    const bool all = suite == "all";

    if (all || suite == "variance") {
        const VarianceCheck v = run_variance_check(seed, trials);
        print_kv("variance.trials", v.trials);
        print_kv("variance.single_cover_naive", v.single_cover_naive);
        print_kv("variance.overlap_naive", v.overlap_naive);
        print_kv("variance.expected_overlap", v.expected_overlap_lambda);
        print_kv("variance.overlap_corrected", v.overlap_corrected);
        print_kv("variance.single_cover_corrected", v.single_cover_corrected);
        print_kv("variance.tolerance_unit", v.tol_unit);
        print_kv("variance.tolerance_eroded", v.tol_eroded);
        print_kv("variance.erosion_matches",
                 std::string(v.naive_matches_prediction ? "PASS" : "FAIL"));
        print_kv("variance.correction_restores",
                 std::string(v.corrected_restores_unit ? "PASS" : "FAIL"));
        all_pass = all_pass && v.naive_matches_prediction &&
                   v.corrected_restores_unit;
    }

    if (all || suite == "equivalence") {
        const int nd = quick ? 5 : check::kEquivalenceDoubleCases;
        const int nf = quick ? 5 : check::kEquivalenceFloatCases;
        const EquivalenceCheck e = run_equivalence_check(seed, nd, nf);
        for (const auto& c : e.cases)
            std::cout << "equivalence.case"
                      << (c.is_double ? " float64 " : " float32 ")
                      << c.description << " max_abs " << c.max_abs << " "
                      << (c.pass ? "PASS" : "FAIL") << "\n";
        print_kv("equivalence.cases", static_cast<int>(e.cases.size()));
        print_kv("equivalence.worst_float64", e.worst_double);
        print_kv("equivalence.worst_float32", e.worst_float);
        print_kv("equivalence", std::string(e.pass ? "PASS" : "FAIL"));
        all_pass = all_pass && e.pass;
    }

    if (all || suite == "tiles") {
        const PeriodicityCheck p = run_periodicity_check(check::kCoefficientTol);
        for (const auto& c : p.cases)
            std::cout << "tiles.case " << c.description << " classes "
                      << c.class_count << " dev " << c.max_abs_dev
                      << " identity " << c.max_identity_dev << "\n";
        print_kv("tiles.worst_dev", p.worst_dev);
        print_kv("tiles.worst_identity", p.worst_identity);
        print_kv("tiles", std::string(p.pass ? "PASS" : "FAIL"));
        all_pass = all_pass && p.pass;
    }

    if (all || suite == "identities") {
        const IdentityCheck i =
            run_identity_check(seed, check::kIdentityVectors,
                               check::kIdentityTol);
        print_kv("identities.vectors", i.vectors);
        print_kv("identities.max_dev", i.max_dev);
        print_kv("identities.max_lambda", i.max_lambda);
        print_kv("identities", std::string(i.pass ? "PASS" : "FAIL"));
        all_pass = all_pass && i.pass;
    }

    if (all || suite == "memory") {
        const MemoryCheck m = run_memory_check(check::kMemoryMaxSpread);
        for (const auto& p : m.points)
            print_kv("memory.peak_" + std::to_string(p.canvas_extent),
                     p.peak_bytes);
        print_kv("memory.max_rel_spread", m.max_rel_spread);
        print_kv("memory", std::string(m.pass ? "PASS" : "FAIL"));
        all_pass = all_pass && m.pass;
    }

    if (all || suite == "seam") {
        const SeamCheck s =
            run_seam_check(seed, steps, check::kSeamIndependentMin,
                           check::kSeamStreamingMax);
        print_kv("seam.independent", s.seam_independent);
        print_kv("seam.streaming", s.seam_streaming);
        print_kv("seam.psnr_independent", s.psnr_independent);
        print_kv("seam.psnr_streaming", s.psnr_streaming);
        print_kv("seam", std::string(s.pass_independent && s.pass_streaming &&
                                             s.pass_psnr
                                         ? "PASS"
                                         : "FAIL"));
        all_pass = all_pass && s.pass_independent && s.pass_streaming &&
                   s.pass_psnr;
    }

    if (all || suite == "determinism") {
        const DeterminismCheck d = run_determinism_check(seed);
        print_kv("determinism.stream_parallel",
                 std::string(d.stream_parallel_identical ? "PASS" : "FAIL"));
        print_kv("determinism.stream_permuted",
                 std::string(d.stream_permuted_identical ? "PASS" : "FAIL"));
        print_kv("determinism.reference_parallel",
                 std::string(d.reference_parallel_identical ? "PASS" : "FAIL"));
        all_pass = all_pass && d.pass;
    }

    print_kv("verify", std::string(all_pass ? "PASS" : "FAIL"));
    return all_pass ? 0 : 1;
}

// ------------------------------------------------------------- degrade ----

int cmd_degrade(const std::string& input, int factor,
                const std::string& output, const std::string& low) {
    const ImageU8 img = read_png(input);
    const DegradeResult r = degrade(to_unit_range<float>(img), factor);
    write_png(output, from_unit_range(r.condition));
    print_kv("condition", output);
    if (!low.empty()) {
        write_png(low, from_unit_range(r.low_res));
        print_kv("low_res", low);
        print_kv("low_res_size", std::to_string(r.low_res.height()) + "x" +
                                     std::to_string(r.low_res.width()));
    }
    return 0;
}

// -------------------------------------------------------------- stitch ----

int cmd_stitch(const std::string& manifest, int height, int width,
               double sigma, const std::string& output,
               const std::string& mask, float threshold) {
    const std::string dir =
        std::filesystem::path(manifest).parent_path().string();
    std::ifstream in(manifest);
    if (!in) throw std::runtime_error("cannot open " + manifest);

    std::vector<PatchPrediction> patches;
    std::string base;
    int row = 0, col = 0;
    while (in >> base >> row >> col) {
        PatchPrediction p;
        p.row = row;
        p.col = col;
        p.values = read_flat<float>(dir.empty() ? base : dir + "/" + base);
        patches.push_back(std::move(p));
    }
    if (patches.empty())
        throw std::runtime_error("manifest lists no prediction patches");
    const int size = patches.front().values.height();
    if (patches.front().values.width() != size)
        throw std::runtime_error("blend window expects square patches");

    const GridF blended = blend_predictions(
        patches, height, width, gaussian_blend_window(size, sigma));
    write_flat(output, blended);
    print_kv("patches", static_cast<int>(patches.size()));
    print_kv("blended", output + ".bin");

    if (!mask.empty()) {
        const Grid<uint8_t> m = threshold_mask(blended, threshold);
        ImageU8 img;
        img.height = m.height();
        img.width = m.width();
        img.channels = 1;
        img.data.assign(m.data(), m.data() + m.size());
        write_png(mask, img);
        print_kv("mask", mask);
    }
    return 0;
}

// ------------------------------------------------------------- metrics ----

GridF u8_to_float(const ImageU8& img) {
    GridF g(img.height, img.width, img.channels);
    for (size_t i = 0; i < g.size(); ++i)
        g.data()[i] = static_cast<float>(img.data[i]);
    return g;
}

Grid<uint8_t> u8_to_mask(const ImageU8& img) {
    if (img.channels != 1)
        throw std::runtime_error("mask images must be single-channel");
    Grid<uint8_t> m(img.height, img.width, 1);
    std::copy(img.data.begin(), img.data.end(), m.data());
    return m;
}

int cmd_metrics(const std::string& reference, const std::string& candidate,
                double max_value, int patch, int stride,
                const std::string& border, const std::string& mask_pred,
                const std::string& mask_truth, const std::string& fid_image,
                const std::string& fid_out) {
    if (!reference.empty() && !candidate.empty()) {
        const GridF ref = u8_to_float(read_png(reference));
        const GridF cand = u8_to_float(read_png(candidate));
        const FidelityResult f = rmse_psnr(ref, cand, max_value);
        print_kv("rmse", f.rmse);
        print_kv("psnr", f.psnr);
        print_kv("ssim", ssim(ref, cand, max_value));
        if (patch > 0 && stride > 0) {
            const PatchGrid grid = build_grid(
                CanvasSpec{cand.height(), cand.width(), cand.channels()},
                patch, patch, stride, stride,
                border_policy_from_name(border));
            print_kv("seam_index", seam_index(cand, grid));
        }
    }
    if (!mask_pred.empty() && !mask_truth.empty()) {
        const SegmentationScores s = segmentation_scores(
            u8_to_mask(read_png(mask_pred)), u8_to_mask(read_png(mask_truth)));
        print_kv("accuracy", s.accuracy);
        print_kv("precision", s.precision);
        print_kv("recall", s.recall);
        print_kv("f1", s.f1);
        print_kv("iou", s.iou);
    }
    if (!fid_image.empty() && !fid_out.empty()) {
        const auto patches = export_fid_patches(read_png(fid_image), fid_out);
        print_kv("fid_patches", static_cast<int>(patches.size()));
        print_kv("fid_dir", fid_out);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tiled diffusion synthesis engine"};
    app.require_subcommand(1);

    // plan
    auto* plan = app.add_subcommand("plan", "inspect run geometry and budgets");
    std::string p_input, p_border = "exact", p_window = "gaussian",
                p_dtype = "float32";
    int p_h = 0, p_w = 0, p_c = 1, p_patch = 32, p_stride = 16, p_tile = 64,
        p_par = 1;
    plan->add_option("--input", p_input, "canvas size from this PNG");
    plan->add_option("--height", p_h);
    plan->add_option("--width", p_w);
    plan->add_option("--channels", p_c);
    plan->add_option("--patch", p_patch);
    plan->add_option("--stride", p_stride);
    plan->add_option("--border", p_border, "exact | clamp-last");
    plan->add_option("--window", p_window, "constant | gaussian | linear");
    plan->add_option("--tile", p_tile);
    plan->add_option("--dtype", p_dtype, "float32 | float64");
    plan->add_option("--parallelism", p_par);

    // run
    auto* run = app.add_subcommand("run", "synthesize an image");
    std::string r_config;
    run->add_option("--config", r_config, "key = value config file");
    std::map<std::string, std::string> r_overrides;
    const std::vector<std::pair<std::string, std::string>> run_keys = {
        {"input", "--input"}, {"output", "--output"}, {"mode", "--mode"},
        {"backend", "--backend"}, {"patch", "--patch"}, {"stride", "--stride"},
        {"border", "--border"}, {"window", "--window"},
        {"window_sigma", "--window-sigma"}, {"steps", "--steps"},
        {"beta_start", "--beta-start"}, {"beta_end", "--beta-end"},
        {"seed", "--seed"}, {"degrade_factor", "--degrade-factor"},
        {"dtype", "--dtype"}, {"store_dir", "--store"}, {"tile", "--tile"},
        {"parallelism", "--parallelism"},
        {"deterministic", "--deterministic"},
        {"snapshot_every", "--snapshot-every"},
        {"snapshot_dir", "--snapshot-dir"},
        {"timeout_seconds", "--timeout"}, {"max_channels", "--max-channels"},
    };
    for (const auto& [key, flag] : run_keys)
        run->add_option_function<std::string>(
            flag,
            [&r_overrides, key = key](const std::string& v) {
                r_overrides[key] = v;
            },
            "overrides config key " + key);

    // verify
    auto* verify = app.add_subcommand("verify", "run the verification suites");
    std::string v_suite = "all";
    uint64_t v_seed = check::kSeed;
    int v_trials = check::kVarianceTrials;
    int v_steps = check::kSeamSteps;
    bool v_quick = false;
    verify->add_option("--suite", v_suite,
                       "all | variance | equivalence | tiles | identities | "
                       "memory | seam | determinism");
    verify->add_option("--seed", v_seed);
    verify->add_option("--trials", v_trials, "Monte-Carlo trials");
    verify->add_option("--steps", v_steps, "seam check chain length");
    verify->add_flag("--quick", v_quick, "smaller case counts");

    // degrade
    auto* deg = app.add_subcommand("degrade",
                                   "build a conditioning image pair");
    std::string d_input, d_output, d_low;
    int d_factor = 4;
    deg->add_option("--input", d_input)->required();
    deg->add_option("--output", d_output)->required();
    deg->add_option("--factor", d_factor);
    deg->add_option("--low", d_low, "also write the downsampled image");

    // stitch
    auto* stitch = app.add_subcommand(
        "stitch", "blend overlapping prediction patches into a canvas");
    std::string s_manifest, s_output, s_mask;
    int s_h = 0, s_w = 0;
    double s_sigma = 0.0;
    float s_tau = 0.5f;
    stitch->add_option("--manifest", s_manifest,
                       "lines: <flat-base> <row> <col>")
        ->required();
    stitch->add_option("--height", s_h)->required();
    stitch->add_option("--width", s_w)->required();
    stitch->add_option("--sigma", s_sigma, "blend window sigma (0 = size/4)");
    stitch->add_option("--output", s_output, "output flat base")->required();
    stitch->add_option("--mask", s_mask, "also write a thresholded mask PNG");
    stitch->add_option("--threshold", s_tau);

    // metrics
    auto* met = app.add_subcommand("metrics", "evaluate images and masks");
    std::string m_ref, m_cand, m_border = "exact", m_mp, m_mt, m_fimg, m_fout;
    double m_max = 255.0;
    int m_patch = 0, m_stride = 0;
    met->add_option("--reference", m_ref);
    met->add_option("--candidate", m_cand);
    met->add_option("--max-value", m_max);
    met->add_option("--patch", m_patch, "with --stride: report seam index");
    met->add_option("--stride", m_stride);
    met->add_option("--border", m_border);
    met->add_option("--mask-pred", m_mp);
    met->add_option("--mask-truth", m_mt);
    met->add_option("--fid-image", m_fimg);
    met->add_option("--fid-out", m_fout);

    // merge-partials
    auto* merge = app.add_subcommand(
        "merge-partials", "sum two partial accumulation tile stores");
    std::string g_a, g_b, g_out;
    merge->add_option("--a", g_a)->required();
    merge->add_option("--b", g_b)->required();
    merge->add_option("--out", g_out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (plan->parsed())
            return cmd_plan(p_input, p_h, p_w, p_c, p_patch, p_stride,
                            p_border, p_window, p_tile, p_dtype, p_par);
        if (run->parsed()) {
            RunConfig cfg = r_config.empty() ? RunConfig{}
                                             : load_run_config(r_config);
            for (const auto& [k, v] : r_overrides)
                apply_config_entry(cfg, k, v);
            return cmd_run(cfg);
        }
        if (verify->parsed())
            return cmd_verify(v_suite, v_seed, v_trials, v_steps, v_quick);
        if (deg->parsed()) return cmd_degrade(d_input, d_factor, d_output, d_low);
        if (stitch->parsed())
            return cmd_stitch(s_manifest, s_h, s_w, s_sigma, s_output, s_mask,
                              s_tau);
        if (met->parsed())
            return cmd_metrics(m_ref, m_cand, m_max, m_patch, m_stride,
                               m_border, m_mp, m_mt, m_fimg, m_fout);
        if (merge->parsed()) {
            merge_partials(g_a, g_b, g_out);
            print_kv("merged", g_out);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
