#pragma once

#include <string>
#include <vector>

namespace tilefuse {

/// Variance schedule for the reverse diffusion chain. Indexing is 1-based:
/// timesteps run t = T .. 1 and gamma(0) == 1 by construction, so the final
/// step removes all remaining noise scale. All quantities are doubles; the
/// cumulative product is the single source every derived value is computed
/// from, which keeps alpha(t) * gamma(t-1) == gamma(t) exact to rounding.
class NoiseSchedule {
public:
    /// Linear beta ramp from beta_start to beta_end inclusive over `steps`
    /// entries (the conventional setting is 1e-6 .. 1e-2 over 2000 steps).
    static NoiseSchedule linear(int steps, double beta_start, double beta_end);

    int steps() const { return static_cast<int>(beta_.size()); }

    /// t in [1, steps] for beta/alpha/sigma; gamma additionally accepts 0.
    double beta(int t) const;
    double gamma(int t) const;
    double alpha(int t) const;           // gamma(t) / gamma(t-1)
    double sigma_target(int t) const;    // sqrt(1 - alpha(t))

    double beta_start() const { return beta_start_; }
    double beta_end() const { return beta_end_; }

    /// Key-value lines describing the schedule, for run manifests.
    std::string describe() const;

private:
    void check_t(int t, int lo) const;

    std::vector<double> beta_;
    std::vector<double> gamma_;  // gamma_[t] for t in 0..steps, gamma_[0] == 1
    double beta_start_ = 0.0;
    double beta_end_ = 0.0;
};

}  // namespace tilefuse
