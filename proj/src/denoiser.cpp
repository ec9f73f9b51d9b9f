#include "tilefuse/denoiser.hpp"

#include <cmath>
#include <stdexcept>

namespace tilefuse {

template <typename S>
Grid<S> ExactNoiseOracle<S>::truth_patch(const DenoiseRequest<S>& req) const {
    const Rect r{req.origin_row, req.origin_col, req.latent->height(),
                 req.latent->width()};
    return truth_.crop(r);
}

template <typename S>
Grid<S> ExactNoiseOracle<S>::denoise(const DenoiseRequest<S>& req) {
    if (!(req.gamma > 0.0) || !(req.gamma < 1.0))
        throw std::invalid_argument(
            "noise inversion needs gamma in (0, 1), got " +
            std::to_string(req.gamma));
    const Grid<S> clean = truth_patch(req);
    if (!clean.same_shape(*req.latent))
        throw std::invalid_argument("oracle truth shape mismatch");
    const double root_g = std::sqrt(req.gamma);
    const double inv_root_1mg = 1.0 / std::sqrt(1.0 - req.gamma);
    Grid<S> eps(clean.height(), clean.width(), clean.channels());
    for (size_t i = 0; i < eps.size(); ++i)
        eps.data()[i] = static_cast<S>(
            (static_cast<double>(req.latent->data()[i]) -
             root_g * static_cast<double>(clean.data()[i])) *
            inv_root_1mg);
    return eps;
}

template class ZeroDenoiser<float>;
template class ZeroDenoiser<double>;
template class ExactNoiseOracle<float>;
template class ExactNoiseOracle<double>;

}  // namespace tilefuse
