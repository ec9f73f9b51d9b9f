#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tilefuse/grid.hpp"
#include "tilefuse/wire.hpp"

namespace tilefuse {

/// One patch-sized denoise call. `gamma` is the cumulative noise level of the
/// latent; the origin locates the patch on the canvas (backends that look up
/// position-dependent state need it, the wire protocol does not carry it).
template <typename S>
struct DenoiseRequest {
    const Grid<S>* condition = nullptr;
    const Grid<S>* latent = nullptr;
    double gamma = 0.0;
    int origin_row = 0;
    int origin_col = 0;
};

/// Predicts the standard-normal noise component of the latent. denoise()
/// must be safe to call from multiple threads at once.
template <typename S>
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual Grid<S> denoise(const DenoiseRequest<S>& req) = 0;
};

/// Predicts zero noise everywhere. Useful as a protocol reference and for
/// throughput or memory measurements where model output is irrelevant.
template <typename S>
class ZeroDenoiser final : public Denoiser<S> {
public:
    Grid<S> denoise(const DenoiseRequest<S>& req) override {
        return Grid<S>(req.latent->height(), req.latent->width(),
                       req.latent->channels(), S{0});
    }
};

/// Inverts the forward corruption against a known clean canvas:
/// eps = (latent - sqrt(gamma) * truth) / sqrt(1 - gamma). With this backend
/// the reverse chain is exactly solvable, which makes it the workhorse for
/// equivalence and convergence tests.
template <typename S>
class ExactNoiseOracle : public Denoiser<S> {
public:
    explicit ExactNoiseOracle(Grid<S> truth) : truth_(std::move(truth)) {}

    Grid<S> denoise(const DenoiseRequest<S>& req) override;

protected:
    /// Clean content for the patch at this origin; subclasses may perturb it.
    virtual Grid<S> truth_patch(const DenoiseRequest<S>& req) const;

    Grid<S> truth_;
};

/// Runs an external model process per channel and speaks the binary wire
/// protocol over its stdin/stdout. Channels are spawned on demand, one per
/// concurrent caller, and reused across calls. Any protocol violation or
/// missed deadline kills the offending channel and throws ProtocolError.
template <typename S>
class ExternalDenoiser final : public Denoiser<S> {
public:
    struct Options {
        std::vector<std::string> command;  // argv, command[0] is the binary
        double timeout_seconds = 60.0;
        int max_channels = 8;
    };

    explicit ExternalDenoiser(Options opts);
    ~ExternalDenoiser() override;

    Grid<S> denoise(const DenoiseRequest<S>& req) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

extern template class ZeroDenoiser<float>;
extern template class ZeroDenoiser<double>;
extern template class ExactNoiseOracle<float>;
extern template class ExactNoiseOracle<double>;
extern template class ExternalDenoiser<float>;
extern template class ExternalDenoiser<double>;

}  // namespace tilefuse
