#include "tilefuse/schedule.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tilefuse {

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start,
                                    double beta_end) {
    if (steps < 1)
        throw std::invalid_argument("schedule needs at least one step");
    if (!(beta_start > 0.0) || !(beta_end < 1.0) || beta_start > beta_end)
        throw std::invalid_argument(
            "beta range must satisfy 0 < beta_start <= beta_end < 1");

    NoiseSchedule s;
    s.beta_start_ = beta_start;
    s.beta_end_ = beta_end;
    s.beta_.resize(steps);
    s.gamma_.resize(steps + 1);
    s.gamma_[0] = 1.0;
    for (int t = 1; t <= steps; ++t) {
        const double frac =
            steps == 1 ? 0.0 : static_cast<double>(t - 1) / (steps - 1);
        s.beta_[t - 1] = beta_start + (beta_end - beta_start) * frac;
        s.gamma_[t] = s.gamma_[t - 1] * (1.0 - s.beta_[t - 1]);
    }
    return s;
}

void NoiseSchedule::check_t(int t, int lo) const {
    if (t < lo || t > steps())
        throw std::out_of_range("timestep " + std::to_string(t) +
                                " outside [" + std::to_string(lo) + ", " +
                                std::to_string(steps()) + "]");
}

double NoiseSchedule::beta(int t) const {
    check_t(t, 1);
    return beta_[t - 1];
}

double NoiseSchedule::gamma(int t) const {
    check_t(t, 0);
    return gamma_[t];
}

double NoiseSchedule::alpha(int t) const {
    check_t(t, 1);
    return 1.0 - beta_[t - 1];
}

double NoiseSchedule::sigma_target(int t) const {
    check_t(t, 1);
    return std::sqrt(1.0 - alpha(t));
}

std::string NoiseSchedule::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "schedule = linear\n"
       << "steps = " << steps() << "\n"
       << "beta_start = " << beta_start_ << "\n"
       << "beta_end = " << beta_end_ << "\n"
       << "gamma_final = " << gamma_[steps()] << "\n";
    return os.str();
}

}  // namespace tilefuse
