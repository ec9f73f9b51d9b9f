#include "tilefuse/config.hpp"

#include <unistd.h>

#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "tilefuse/degrade.hpp"
#include "tilefuse/image_io.hpp"
#include "tilefuse/streaming.hpp"
#include "tilefuse/metrics.hpp"
#include "tilefuse/sampler.hpp"
#include "tilefuse/tile_store.hpp"
#include "tilefuse/verify.hpp"

namespace fs = std::filesystem;

namespace tilefuse {

void apply_config_entry(RunConfig& cfg, const std::string& key,
                        const std::string& value) {
    try {
        if (key == "input") cfg.input = value;
        else if (key == "output") cfg.output = value;
        else if (key == "mode") cfg.mode = value;
        else if (key == "backend") cfg.backend = value;
        else if (key == "patch") cfg.patch = std::stoi(value);
        else if (key == "stride") cfg.stride = std::stoi(value);
        else if (key == "border") cfg.border = value;
        else if (key == "window") cfg.window = value;
        else if (key == "window_sigma") cfg.window_sigma = std::stod(value);
        else if (key == "steps") cfg.steps = std::stoi(value);
        else if (key == "beta_start") cfg.beta_start = std::stod(value);
        else if (key == "beta_end") cfg.beta_end = std::stod(value);
        else if (key == "seed") cfg.seed = std::stoull(value);
        else if (key == "degrade_factor") cfg.degrade_factor = std::stoi(value);
        else if (key == "dtype") cfg.dtype = value;
        else if (key == "store_dir") cfg.store_dir = value;
        else if (key == "tile") cfg.tile = std::stoi(value);
        else if (key == "parallelism") cfg.parallelism = std::stoi(value);
        else if (key == "deterministic")
            cfg.deterministic = value == "1" || value == "true" || value == "on";
        else if (key == "snapshot_every") cfg.snapshot_every = std::stoi(value);
        else if (key == "snapshot_dir") cfg.snapshot_dir = value;
        else if (key == "timeout_seconds") cfg.timeout_seconds = std::stod(value);
        else if (key == "max_channels") cfg.max_channels = std::stoi(value);
        else
            throw std::invalid_argument("unknown config key '" + key + "'");
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception&) {
        throw std::invalid_argument("bad value '" + value + "' for config key '" +
                                    key + "'");
    }
}

namespace {

// Keys the run writer appends to an output manifest. They describe results,
// not inputs, so feeding a manifest back in as a config skips them.
bool is_result_key(const std::string& key) {
    return key == "canvas_height" || key == "canvas_width" ||
           key == "canvas_channels" || key == "patches" ||
           key == "peak_bytes" || key == "seam_index";
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    RunConfig cfg;
    for (const auto& [k, v] : read_kv_file(path))
        if (!is_result_key(k)) apply_config_entry(cfg, k, v);
    return cfg;
}

std::vector<std::pair<std::string, std::string>> describe_config(
    const RunConfig& cfg) {
    std::ostringstream sigma, bs, be, timeout;
    sigma.precision(17), bs.precision(17), be.precision(17);
    sigma << cfg.window_sigma;
    bs << cfg.beta_start;
    be << cfg.beta_end;
    timeout << cfg.timeout_seconds;
    return {
        {"input", cfg.input},
        {"output", cfg.output},
        {"mode", cfg.mode},
        {"backend", cfg.backend},
        {"patch", std::to_string(cfg.patch)},
        {"stride", std::to_string(cfg.stride)},
        {"border", cfg.border},
        {"window", cfg.window},
        {"window_sigma", sigma.str()},
        {"steps", std::to_string(cfg.steps)},
        {"beta_start", bs.str()},
        {"beta_end", be.str()},
        {"seed", std::to_string(cfg.seed)},
        {"degrade_factor", std::to_string(cfg.degrade_factor)},
        {"dtype", cfg.dtype},
        {"store_dir", cfg.store_dir},
        {"tile", std::to_string(cfg.tile)},
        {"parallelism", std::to_string(cfg.parallelism)},
        {"deterministic", cfg.deterministic ? "true" : "false"},
        {"snapshot_every", std::to_string(cfg.snapshot_every)},
        {"snapshot_dir", cfg.snapshot_dir},
        {"timeout_seconds", timeout.str()},
        {"max_channels", std::to_string(cfg.max_channels)},
    };
}

namespace {

std::vector<std::string> split_command(const std::string& s) {
    std::vector<std::string> parts;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) parts.push_back(tok);
    return parts;
}

template <typename S>
RunOutcome execute_run_typed(const RunConfig& cfg) {
    if (cfg.input.empty()) throw std::invalid_argument("run needs an input image");
    if (cfg.output.empty()) throw std::invalid_argument("run needs an output path");

    const ImageU8 input_img = read_png(cfg.input);
    const GridF scene_f = to_unit_range<float>(input_img);
    const CanvasSpec canvas{scene_f.height(), scene_f.width(),
                            scene_f.channels()};

    const GridF condition_f = degrade(scene_f, cfg.degrade_factor).condition;
    const Grid<S> condition_canvas = condition_f.template cast<S>();
    const ConditionSource<S> condition = condition_from_canvas(condition_canvas);

    const PatchGrid grid =
        build_grid(canvas, cfg.patch, cfg.patch, cfg.stride, cfg.stride,
                   border_policy_from_name(cfg.border));
    const WeightWindow window = make_window(
        window_kind_from_name(cfg.window), cfg.patch, cfg.patch,
        cfg.window_sigma);
    const NoiseSchedule schedule =
        NoiseSchedule::linear(cfg.steps, cfg.beta_start, cfg.beta_end);
    const NoiseSource noise(cfg.seed);

    std::unique_ptr<Denoiser<S>> denoiser;
    if (cfg.backend == "zero") {
        denoiser = std::make_unique<ZeroDenoiser<S>>();
    } else if (cfg.backend == "oracle-exact") {
        // inverts against the input itself; a demo/test setting
        denoiser = std::make_unique<ExactNoiseOracle<S>>(
            scene_f.template cast<S>());
    } else if (cfg.backend.rfind("exec:", 0) == 0) {
        typename ExternalDenoiser<S>::Options opts;
        opts.command = split_command(cfg.backend.substr(5));
        opts.timeout_seconds = cfg.timeout_seconds;
        opts.max_channels = cfg.max_channels;
        denoiser = std::make_unique<ExternalDenoiser<S>>(std::move(opts));
    } else {
        throw std::invalid_argument(
            "unknown backend '" + cfg.backend +
            "' (expected zero, oracle-exact or exec:<command>)");
    }

    auto snapshot_path = [&](int t) {
        return cfg.snapshot_dir + "/step_" + std::to_string(t);
    };
    if (cfg.snapshot_every > 0 && !cfg.snapshot_dir.empty())
        fs::create_directories(cfg.snapshot_dir);

    RunOutcome outcome;
    outcome.patches = grid.count();
    outcome.steps = cfg.steps;

    Grid<S> result;
    MemoryAccounting accounting;
    if (cfg.mode == "stream") {
        std::string store_dir = cfg.store_dir;
        const bool temporary = store_dir.empty();
        if (temporary) {
            store_dir = (fs::temp_directory_path() /
                         ("tilefuse_run_" + std::to_string(::getpid())))
                            .string();
            std::error_code ec;
            fs::remove_all(store_dir, ec);  // stale leftovers from this pid
        }
        TileStore<S> store =
            TileStore<S>::create(store_dir, canvas, cfg.tile, cfg.steps);
        store.set_accounting(&accounting);
        init_noise_canvas(store, noise, &accounting);
        StreamOptions<S> opts;
        opts.parallelism = cfg.parallelism;
        opts.deterministic_reduction = cfg.deterministic;
        opts.accounting = &accounting;
        if (cfg.snapshot_every > 0 && !cfg.snapshot_dir.empty())
            opts.step_done = [&](int t) {
                if (t > 0 && t % cfg.snapshot_every == 0)
                    write_flat(snapshot_path(t), store.assemble());
            };
        run_streaming_chain(store, grid, window, schedule, *denoiser, noise,
                            condition, opts);
        result = store.assemble();
        if (temporary) {
            std::error_code ec;
            fs::remove_all(store_dir, ec);
        }
    } else {
        ChainOptions<S> opts;
        opts.mode = fusion_mode_from_name(
            cfg.mode == "stream" ? "corrected" : cfg.mode);
        opts.parallelism = cfg.parallelism;
        if (cfg.snapshot_every > 0 && !cfg.snapshot_dir.empty())
            opts.snapshot = [&](int t, const Grid<S>& c) {
                if (t % cfg.snapshot_every == 0) write_flat(snapshot_path(t), c);
            };
        result = run_reference_chain(grid, window, schedule, *denoiser, noise,
                                     condition, opts);
    }

    outcome.peak_bytes = accounting.peak_bytes();
    outcome.seam = seam_index(result.template cast<float>(), grid);
    write_png(cfg.output, from_unit_range(result));

    auto manifest = describe_config(cfg);
    manifest.emplace_back("canvas_height", std::to_string(canvas.height));
    manifest.emplace_back("canvas_width", std::to_string(canvas.width));
    manifest.emplace_back("canvas_channels", std::to_string(canvas.channels));
    manifest.emplace_back("patches", std::to_string(grid.count()));
    manifest.emplace_back("peak_bytes", std::to_string(outcome.peak_bytes));
    {
        std::ostringstream s;
        s.precision(17);
        s << outcome.seam;
        manifest.emplace_back("seam_index", s.str());
    }
    write_kv_file(cfg.output + ".meta", manifest);

    outcome.output_path = cfg.output;
    return outcome;
}

}  // namespace

RunOutcome execute_run(const RunConfig& cfg) {
    if (cfg.dtype == "float32") return execute_run_typed<float>(cfg);
    if (cfg.dtype == "float64") return execute_run_typed<double>(cfg);
    throw std::invalid_argument("unknown dtype '" + cfg.dtype +
                                "' (expected float32 or float64)");
}

}  // namespace tilefuse
