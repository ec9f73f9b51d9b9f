#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace tilefuse {

/// Everything one synthesis run needs, loadable from a key = value file and
/// overridable by command-line flags. Field names match the file keys.
struct RunConfig {
    std::string input;             // conditioning source image (PNG)
    std::string output;            // result image (PNG)

    std::string mode = "stream";   // stream | corrected | naive | independent
    std::string backend = "zero";  // zero | oracle-exact | exec:<command>

    int patch = 32;
    int stride = 16;
    std::string border = "exact";  // exact | clamp-last
    std::string window = "gaussian";
    double window_sigma = 0.0;     // 0 = patch / 4 default

    int steps = 2000;
    double beta_start = 1e-6;
    double beta_end = 1e-2;
    uint64_t seed = 1;

    int degrade_factor = 4;

    std::string dtype = "float32";  // float32 | float64
    std::string store_dir;          // empty = temporary, removed after run
    int tile = 64;
    int parallelism = 1;
    bool deterministic = true;

    int snapshot_every = 0;         // 0 = no snapshots
    std::string snapshot_dir;

    double timeout_seconds = 60.0;  // external backend deadline per call
    int max_channels = 8;           // external backend process cap
};

/// Applies one key. Unknown keys and malformed values throw.
void apply_config_entry(RunConfig& cfg, const std::string& key,
                        const std::string& value);

/// Loads a key = value file over the defaults.
RunConfig load_run_config(const std::string& path);

/// The config as manifest lines, in stable order.
std::vector<std::pair<std::string, std::string>> describe_config(
    const RunConfig& cfg);

struct RunOutcome {
    std::string output_path;
    size_t peak_bytes = 0;       // accounted engine buffers (stream mode)
    double seam = 0.0;           // seam index of the result
    int patches = 0;
    int steps = 0;
};

/// Executes a full run per the config and writes the output image plus a
/// `<output>.meta` manifest. Returns summary numbers for the caller to print.
RunOutcome execute_run(const RunConfig& cfg);

}  // namespace tilefuse
