#pragma once

#include <cstdint>
#include <vector>

#include "scgan/params.hpp"

namespace scgan {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const;  // throws ConfigError
};

// Standard bias-corrected Adam over one ParamStore. Moment buffers mirror the
// store layout; the step reads gradients but never clears them.
class AdamState {
public:
    AdamState(const ParamStore& store, AdamConfig cfg);

    // Throws TrainingError naming the parameter if a gradient is non-finite.
    void step(ParamStore& store);

    std::uint64_t steps_taken() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    std::uint64_t t_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

inline void adam_step(AdamState& state, ParamStore& store) { state.step(store); }

}  // namespace scgan
