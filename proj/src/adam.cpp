#include "scgan/adam.hpp"

#include <cmath>
#include <string>

#include "scgan/errors.hpp"

namespace scgan {

void AdamConfig::validate() const {
    if (!(lr > 0.0)) throw ConfigError("adam lr must be positive");
    if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("adam beta1 must be in (0,1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("adam beta2 must be in (0,1)");
    if (!(eps > 0.0)) throw ConfigError("adam eps must be positive");
}

AdamState::AdamState(const ParamStore& store, AdamConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    m_.resize(store.count());
    v_.resize(store.count());
    for (std::size_t i = 0; i < store.count(); ++i) {
        m_[i].assign(store.entry(i).values.size(), 0.0);
        v_[i].assign(store.entry(i).values.size(), 0.0);
    }
}

void AdamState::step(ParamStore& store) {
    if (store.count() != m_.size())
        throw UsageError("adam state does not match store layout");
    ++t_;
    const double corr1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double corr2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < store.count(); ++i) {
        ParamEntry& e = store.entry(i);
        if (e.values.size() != m_[i].size())
            throw UsageError("adam state does not match store layout at '" + e.name + "'");
        double* m = m_[i].data();
        double* v = v_[i].data();
        for (std::size_t k = 0; k < e.values.size(); ++k) {
            const double g = e.grad[k];
            if (!std::isfinite(g))
                throw TrainingError("non-finite gradient for parameter '" + e.name + "'");
            m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g;
            v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m[k] / corr1;
            const double vhat = v[k] / corr2;
            e.values[k] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

}  // namespace scgan
