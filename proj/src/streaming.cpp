#include "tilefuse/streaming.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace tilefuse {

namespace {

/// Runs fn(order[i]) for every i with a bounded dispatch window: index i is
/// handed out only once all indices below i - window are finished. With the
/// default ascending patch order this caps how far any worker can run ahead
/// of the slowest one, which in turn caps the bytes the deterministic
/// reducer can ever park (out-of-order pieces come only from in-window
/// patches). Without the cap one stalled worker would let the others flood
/// the pending set.
template <typename Fn>
void parallel_for_order(const std::vector<int>& order, int parallelism,
                        Fn&& fn) {
    const int count = static_cast<int>(order.size());
    if (parallelism <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) fn(order[i]);
        return;
    }
    const int workers = std::min(parallelism, count);
    const int window = 2 * workers;  // >= workers + 1, so never deadlocks

    std::mutex mu;
    std::condition_variable cv;
    int next = 0;
    int frontier = 0;  // all indices below are finished
    std::vector<char> done(order.size(), 0);
    std::exception_ptr error;

    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (int w = 0; w < workers; ++w)
        threads.emplace_back([&] {
            for (;;) {
                int i = 0;
                {
                    std::unique_lock<std::mutex> lock(mu);
                    cv.wait(lock, [&] {
                        return error || next >= count ||
                               next < frontier + window;
                    });
                    if (error || next >= count) return;
                    i = next++;
                }
                try {
                    fn(order[i]);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!error) error = std::current_exception();
                    cv.notify_all();
                    return;
                }
                {
                    std::lock_guard<std::mutex> lock(mu);
                    done[i] = 1;
                    while (frontier < count && done[frontier]) ++frontier;
                }
                cv.notify_all();
            }
        });
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

/// Inclusive index range of lattice positions whose patches intersect
/// [lo, hi) along one axis. Origins ascending, spans of width `extent`.
std::pair<int, int> intersecting_range(const std::vector<int>& origins,
                                       int extent, int lo, int hi) {
    // first origin with origin + extent > lo, last origin with origin < hi
    const auto first =
        std::upper_bound(origins.begin(), origins.end(), lo - extent);
    const auto last = std::lower_bound(origins.begin(), origins.end(), hi);
    return {static_cast<int>(first - origins.begin()),
            static_cast<int>(last - origins.begin()) - 1};
}

/// Applies per-tile contributions in ascending patch order no matter when
/// they arrive. Early arrivals are parked (and accounted as pending bytes)
/// until their turn; the store add below is then serialised per tile, which
/// pins the floating-point reduction order.
template <typename S>
class DeterministicReducer {
public:
    DeterministicReducer(TileStore<S>& store, const PatchGrid& grid,
                         MemoryAccounting* accounting)
        : store_(store), grid_(grid), accounting_(accounting) {}

    void submit(int ty, int tx, int patch, const Rect& region, Grid<S> piece) {
        const long id = static_cast<long>(ty) * store_.tile_cols() + tx;
        TileSeq* seq = nullptr;
        {
            std::lock_guard<std::mutex> lock(map_mu_);
            auto it = states_.find(id);
            if (it == states_.end()) {
                auto fresh = std::make_unique<TileSeq>();
                const Rect tr = store_.tile_rect(ty, tx);
                auto [ylo, yhi] = intersecting_range(
                    grid_.row_origins(), grid_.patch_height(), tr.row,
                    tr.row_end());
                auto [xlo, xhi] = intersecting_range(
                    grid_.col_origins(), grid_.patch_width(), tr.col,
                    tr.col_end());
                fresh->ylo = ylo, fresh->yhi = yhi;
                fresh->xlo = xlo, fresh->xhi = xhi;
                fresh->cy = ylo, fresh->cx = xlo;
                it = states_.emplace(id, std::move(fresh)).first;
            }
            seq = it->second.get();
        }

        bool finished = false;
        {
            std::lock_guard<std::mutex> lock(seq->mu);
            const int iy = patch / grid_.cols();
            const int ix = patch % grid_.cols();
            if (iy == seq->cy && ix == seq->cx) {
                store_.accumulate(region, piece);
                seq->advance();
                while (!seq->done()) {
                    auto it = seq->pending.find(seq->expected(grid_.cols()));
                    if (it == seq->pending.end()) break;
                    store_.accumulate(it->second.region, it->second.piece);
                    seq->pending.erase(it);
                    seq->advance();
                }
            } else {
                Parked parked;
                parked.region = region;
                parked.lease = MemLease(accounting_, BufferClass::Pending,
                                        piece.bytes());
                parked.piece = std::move(piece);
                seq->pending.emplace(iy * grid_.cols() + ix, std::move(parked));
            }
            finished = seq->done();
        }
        if (finished) {
            std::lock_guard<std::mutex> lock(map_mu_);
            states_.erase(id);  // no further submissions can target this tile
        }
    }

    /// All contributions of the step must have been applied by now.
    void check_drained() const {
        std::lock_guard<std::mutex> lock(map_mu_);
        if (!states_.empty())
            throw std::logic_error(
                "stream reducer still holds " +
                std::to_string(states_.size()) +
                " unfinished tiles after all patches were submitted");
    }

private:
    struct Parked {
        Rect region;
        Grid<S> piece;
        MemLease lease;
    };
    struct TileSeq {
        std::mutex mu;
        int ylo = 0, yhi = -1, xlo = 0, xhi = -1;
        int cy = 0, cx = 0;
        std::map<int, Parked> pending;

        bool done() const { return cy > yhi; }
        int expected(int grid_cols) const { return cy * grid_cols + cx; }
        void advance() {
            if (++cx > xhi) {
                cx = xlo;
                ++cy;
            }
        }
    };

    TileStore<S>& store_;
    const PatchGrid& grid_;
    MemoryAccounting* accounting_;
    mutable std::mutex map_mu_;
    std::map<long, std::unique_ptr<TileSeq>> states_;
};

template <typename S>
MemLease patch_lease(MemoryAccounting* sink, const Grid<S>& g) {
    return MemLease(sink, BufferClass::Patch, g.bytes());
}

}  // namespace

template <typename S>
void init_noise_canvas(TileStore<S>& store, const NoiseSource& noise,
                       MemoryAccounting* accounting) {
    store.for_each_tile([&](int ty, int tx) {
        const Rect r = store.tile_rect(ty, tx);
        MemLease lease(accounting, BufferClass::Tile,
                       static_cast<size_t>(r.height) * r.width *
                           store.canvas().channels * sizeof(S));
        Grid<S> tile(r.height, r.width, store.canvas().channels);
        noise.fill_canvas_window(tile, r.row, r.col);
        store.write_tile(ty, tx, tile);
    });
}

template <typename S>
void run_streaming_step(TileStore<S>& store, const PatchGrid& grid,
                        const WeightWindow& window,
                        const NoiseSchedule& schedule, Denoiser<S>& denoiser,
                        const NoiseSource& noise,
                        const ConditionSource<S>& condition, int t,
                        const StreamOptions<S>& opts) {
    if (store.timestep() != t)
        throw std::invalid_argument("store is at timestep " +
                                    std::to_string(store.timestep()) +
                                    ", step asked for " + std::to_string(t));
    const CanvasSpec& cv = grid.canvas();
    if (cv.height != store.canvas().height ||
        cv.width != store.canvas().width ||
        cv.channels != store.canvas().channels)
        throw std::invalid_argument("patch grid and store canvases disagree");

    const bool shared = opts.shared_coefficients &&
                        grid.policy() == BorderPolicy::ExactTiling;
    std::unique_ptr<CoefficientTiles> tiles;
    if (shared)
        tiles = std::make_unique<CoefficientTiles>(
            CoefficientTiles::precompute(grid, window));

    std::vector<int> order = opts.patch_order;
    if (order.empty()) {
        order.resize(grid.count());
        for (int k = 0; k < grid.count(); ++k) order[k] = k;
    } else {
        std::vector<char> seen(grid.count(), 0);
        for (int k : order) {
            if (k < 0 || k >= grid.count() || seen[k])
                throw std::invalid_argument(
                    "patch_order is not a permutation of the grid");
            seen[k] = 1;
        }
        if (static_cast<int>(order.size()) != grid.count())
            throw std::invalid_argument("patch_order has wrong length");
    }

    const double gamma = schedule.gamma(t);
    const double sigma = schedule.sigma_target(t);

    store.begin_step(t - 1);
    DeterministicReducer<S> reducer(store, grid, opts.accounting);

    parallel_for_order(order, opts.parallelism, [&](int k) {
        const Rect rect = grid.patch_rect(k);

        Grid<S> latent = store.read_region(rect);
        MemLease l_latent = patch_lease(opts.accounting, latent);
        Grid<S> cond = condition(rect);
        MemLease l_cond = patch_lease(opts.accounting, cond);

        DenoiseRequest<S> req;
        req.condition = &cond;
        req.latent = &latent;
        req.gamma = gamma;
        req.origin_row = rect.row;
        req.origin_col = rect.col;
        Grid<S> eps = denoiser.denoise(req);
        MemLease l_eps = patch_lease(opts.accounting, eps);

        Grid<S> component = deterministic_component(latent, eps, schedule, t);
        MemLease l_comp = patch_lease(opts.accounting, component);
        l_eps.release();
        l_latent.release();
        l_cond.release();

        Grid<S> output = component;
        MemLease l_out = patch_lease(opts.accounting, output);
        if (t > 1) {
            Grid<S> z(rect.height, rect.width, cv.channels);
            MemLease l_z = patch_lease(opts.accounting, z);
            noise.fill_patch(z, k, t);
            add_noise(output, z, sigma);
        }

        // psi = gain * output + shift * component, the patch's whole say in
        // the next canvas state
        CoefficientTile direct;
        if (!shared) direct = direct_coefficients(grid, window, k);
        const CoefficientTile& coeff = shared ? tiles->for_patch(k) : direct;
        Grid<S> psi(rect.height, rect.width, cv.channels);
        MemLease l_psi = patch_lease(opts.accounting, psi);
        for (int y = 0; y < rect.height; ++y)
            for (int x = 0; x < rect.width; ++x) {
                const double g = coeff.gain.at(y, x, 0);
                const double s = coeff.shift.at(y, x, 0);
                for (int ch = 0; ch < cv.channels; ++ch)
                    psi.at(y, x, ch) = static_cast<S>(
                        g * static_cast<double>(output.at(y, x, ch)) +
                        s * static_cast<double>(component.at(y, x, ch)));
            }
        l_out.release();
        l_comp.release();

        const int ty0 = rect.row / store.tile_size();
        const int ty1 = (rect.row_end() - 1) / store.tile_size();
        const int tx0 = rect.col / store.tile_size();
        const int tx1 = (rect.col_end() - 1) / store.tile_size();
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx) {
                const Rect ov = store.tile_rect(ty, tx).intersect(rect);
                Grid<S> piece = psi.crop(Rect{ov.row - rect.row,
                                              ov.col - rect.col, ov.height,
                                              ov.width});
                if (opts.deterministic_reduction) {
                    reducer.submit(ty, tx, k, ov, std::move(piece));
                } else {
                    store.accumulate(ov, piece);
                }
            }
    });

    if (opts.deterministic_reduction) reducer.check_drained();
    store.commit_step();
    if (opts.step_done) opts.step_done(t - 1);
}

template <typename S>
void run_streaming_chain(TileStore<S>& store, const PatchGrid& grid,
                         const WeightWindow& window,
                         const NoiseSchedule& schedule, Denoiser<S>& denoiser,
                         const NoiseSource& noise,
                         const ConditionSource<S>& condition,
                         const StreamOptions<S>& opts) {
    if (store.timestep() > schedule.steps())
        throw std::invalid_argument("store timestep exceeds schedule length");
    for (int t = store.timestep(); t >= 1; --t)
        run_streaming_step(store, grid, window, schedule, denoiser, noise,
                           condition, t, opts);
}

template void init_noise_canvas(TileStore<float>&, const NoiseSource&, MemoryAccounting*);
template void init_noise_canvas(TileStore<double>&, const NoiseSource&, MemoryAccounting*);
template void run_streaming_step(TileStore<float>&, const PatchGrid&, const WeightWindow&, const NoiseSchedule&, Denoiser<float>&, const NoiseSource&, const ConditionSource<float>&, int, const StreamOptions<float>&);
template void run_streaming_step(TileStore<double>&, const PatchGrid&, const WeightWindow&, const NoiseSchedule&, Denoiser<double>&, const NoiseSource&, const ConditionSource<double>&, int, const StreamOptions<double>&);
template void run_streaming_chain(TileStore<float>&, const PatchGrid&, const WeightWindow&, const NoiseSchedule&, Denoiser<float>&, const NoiseSource&, const ConditionSource<float>&, const StreamOptions<float>&);
template void run_streaming_chain(TileStore<double>&, const PatchGrid&, const WeightWindow&, const NoiseSchedule&, Denoiser<double>&, const NoiseSource&, const ConditionSource<double>&, const StreamOptions<double>&);

}  // namespace tilefuse
