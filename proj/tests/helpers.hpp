#pragma once

// Shared fixtures for the test binaries: finite-difference gradient checking,
// a tape-free forward pass that records pre-activations (for kink exclusion),
// and a self-cleaning temp directory.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "scgan/errors.hpp"
#include "scgan/graph.hpp"
#include "scgan/losses.hpp"
#include "scgan/matrix.hpp"
#include "scgan/mlp.hpp"
#include "scgan/params.hpp"
#include "scgan/rng.hpp"

namespace testutil {

class TempDir {
public:
    explicit TempDir(const std::string& hint) {
        auto base = std::filesystem::temp_directory_path();
        for (int i = 0; i < 10000; ++i) {
            auto candidate = base / (hint + "-" + std::to_string(counter_++));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate;
                return;
            }
        }
        throw scgan::IoError("could not create temp directory under " + base.string());
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    static inline int counter_ = 0;
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline scgan::Matrix random_matrix(std::size_t r, std::size_t c, scgan::Rng& rng,
                                   double scale = 1.0) {
    scgan::Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
    return m;
}

// Forward pass that keeps every pre-activation so finite-difference checks
// can detect relu/leaky kink crossings.
struct ManualForward {
    scgan::Matrix out;
    std::vector<scgan::Matrix> preacts;
};

inline ManualForward manual_forward(const scgan::MlpSpec& spec, const scgan::ParamStore& store,
                                    const std::string& prefix, const scgan::Matrix& x) {
    ManualForward r;
    scgan::Matrix h = x;
    for (std::size_t l = 0; l < spec.layer_count(); ++l) {
        const auto& W = store.entry(prefix + "W" + std::to_string(l));
        const auto& b = store.entry(prefix + "b" + std::to_string(l));
        scgan::Matrix z(h.rows(), W.cols);
        for (std::size_t i = 0; i < h.rows(); ++i)
            for (std::size_t j = 0; j < W.cols; ++j) {
                double acc = b.values[j];
                for (std::size_t k = 0; k < W.rows; ++k)
                    acc += h(i, k) * W.values[k * W.cols + j];
                z(i, j) = acc;
            }
        r.preacts.push_back(z);
        const scgan::Activation act = spec.activation_at(l);
        for (std::size_t i = 0; i < z.size(); ++i) {
            double& v = z.data()[i];
            switch (act) {
                case scgan::Activation::relu: v = v > 0.0 ? v : 0.0; break;
                case scgan::Activation::leaky_relu: v = v > 0.0 ? v : spec.leaky_slope * v; break;
                case scgan::Activation::tanh: v = std::tanh(v); break;
                case scgan::Activation::linear: break;
            }
        }
        h = std::move(z);
    }
    r.out = std::move(h);
    return r;
}

// Mean over rows of the squared Euclidean distance, matching mse_loss.
inline double manual_mse(const scgan::Matrix& a, const scgan::Matrix& b) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        total += d * d;
    }
    return total / static_cast<double>(a.rows());
}

struct FdReport {
    double max_rel = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;
};

// Central finite differences over every parameter coordinate of one MLP with
// an MSE head. Coordinates whose perturbation lands a relu/leaky pre-activation
// within `kink_tol` of zero, or flips its sign between the two evaluation
// points, are excluded: the loss is not differentiable there.
inline FdReport fd_check_mlp(const scgan::MlpSpec& spec, scgan::ParamStore& store,
                             const std::string& prefix, const scgan::Matrix& x,
                             const scgan::Matrix& target, double h = 1e-4,
                             double kink_tol = 1e-6) {
    store.zero_grad();
    {
        scgan::Graph g;
        const auto in = g.input(x);
        const auto out = scgan::forward_mlp(g, spec, store, prefix, in);
        const auto loss = scgan::mse_loss(g, out, g.input(target));
        g.backward(loss);
    }

    const bool has_kinks = spec.hidden == scgan::Activation::relu ||
                           spec.hidden == scgan::Activation::leaky_relu ||
                           spec.output == scgan::Activation::relu ||
                           spec.output == scgan::Activation::leaky_relu;

    FdReport rep;
    for (std::size_t ei = 0; ei < store.count(); ++ei) {
        auto& e = store.entry(ei);
        if (e.name.rfind(prefix, 0) != 0) continue;
        for (std::size_t k = 0; k < e.values.size(); ++k) {
            const double saved = e.values[k];

            e.values[k] = saved + h;
            const ManualForward fp = manual_forward(spec, store, prefix, x);
            e.values[k] = saved - h;
            const ManualForward fm = manual_forward(spec, store, prefix, x);
            e.values[k] = saved;

            bool near_kink = false;
            if (has_kinks) {
                for (std::size_t l = 0; l < fp.preacts.size() && !near_kink; ++l) {
                    const scgan::Activation act = spec.activation_at(l);
                    if (act != scgan::Activation::relu && act != scgan::Activation::leaky_relu)
                        continue;
                    const auto& zp = fp.preacts[l];
                    const auto& zm = fm.preacts[l];
                    for (std::size_t i = 0; i < zp.size(); ++i) {
                        const double a = zp.data()[i];
                        const double b = zm.data()[i];
                        // Units the coordinate does not influence (a == b,
                        // e.g. dead relu rows) cannot produce a kink error.
                        if (a == b) continue;
                        if (std::abs(a) < kink_tol || std::abs(b) < kink_tol ||
                            (a > 0.0) != (b > 0.0)) {
                            near_kink = true;
                            break;
                        }
                    }
                }
            }
            if (near_kink) {
                ++rep.skipped;
                continue;
            }

            const double fd = (manual_mse(fp.out, target) - manual_mse(fm.out, target)) / (2.0 * h);
            const double an = e.grad[k];
            const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
            const double rel = std::abs(fd - an) / denom;
            if (rel > rep.max_rel) rep.max_rel = rel;
            ++rep.checked;
        }
    }
    return rep;
}

// One randomized MLP per call, cycling through activation pairs; used by both
// the unit suite and the acceptance gate.
inline FdReport fd_check_random_mlp(std::uint64_t seed) {
    using scgan::Activation;
    static const Activation hiddens[] = {Activation::relu, Activation::tanh,
                                         Activation::leaky_relu, Activation::linear};
    static const Activation outputs[] = {Activation::linear, Activation::tanh};

    scgan::Rng rng(seed);
    const std::size_t in = 1 + rng.index(4);
    const std::size_t mid = 2 + rng.index(6);
    const std::size_t out = 1 + rng.index(3);
    const std::size_t depth_extra = rng.index(2);  // 1 or 2 hidden layers

    std::vector<std::size_t> hidden{mid};
    if (depth_extra) hidden.push_back(2 + rng.index(4));
    const Activation hact = hiddens[seed % 4];
    const Activation oact = outputs[(seed / 4) % 2];

    auto spec = scgan::make_mlp_spec(in, hidden, out, hact, oact);
    scgan::ParamStore store;
    scgan::init_mlp_params(spec, store, "t.", rng);

    const std::size_t batch = 3 + rng.index(4);
    const scgan::Matrix x = random_matrix(batch, in, rng);
    const scgan::Matrix target = random_matrix(batch, out, rng);
    return fd_check_mlp(spec, store, "t.", x, target);
}

}  // namespace testutil
