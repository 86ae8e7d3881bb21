#include "scgan/mlp.hpp"

#include <cmath>

#include "scgan/errors.hpp"

namespace scgan {

const char* to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::leaky_relu: return "leaky_relu";
        case Activation::linear: return "linear";
    }
    return "?";
}

void MlpSpec::validate() const {
    if (widths.size() < 2) throw ConfigError("mlp spec needs at least 2 widths");
    for (std::size_t w : widths)
        if (w == 0) throw ConfigError("mlp spec widths must be positive");
    if ((hidden == Activation::leaky_relu || output == Activation::leaky_relu) &&
        !(leaky_slope > 0.0 && leaky_slope < 1.0))
        throw ConfigError("leaky_relu slope must be in (0,1), got " +
                          std::to_string(leaky_slope));
}

MlpSpec make_mlp_spec(std::size_t in, const std::vector<std::size_t>& hidden_widths,
                      std::size_t out, Activation hidden, Activation output) {
    MlpSpec spec;
    spec.widths.reserve(hidden_widths.size() + 2);
    spec.widths.push_back(in);
    for (std::size_t w : hidden_widths) spec.widths.push_back(w);
    spec.widths.push_back(out);
    spec.hidden = hidden;
    spec.output = output;
    spec.validate();
    return spec;
}

namespace {

std::string weight_name(const std::string& prefix, std::size_t layer) {
    return prefix + "W" + std::to_string(layer);
}

std::string bias_name(const std::string& prefix, std::size_t layer) {
    return prefix + "b" + std::to_string(layer);
}

void check_layer_shapes(const MlpSpec& spec, const ParamStore& store,
                        const std::string& prefix, std::size_t layer) {
    const std::string wn = weight_name(prefix, layer);
    const std::string bn = bias_name(prefix, layer);
    if (!store.has(wn) || !store.has(bn))
        throw ConfigError("layer " + std::to_string(layer) + ": missing parameters '" + wn +
                          "'/'" + bn + "'");
    const ParamEntry& w = store.entry(wn);
    const ParamEntry& b = store.entry(bn);
    if (w.rows != spec.widths[layer] || w.cols != spec.widths[layer + 1])
        throw ConfigError("layer " + std::to_string(layer) + ": weight is " +
                          std::to_string(w.rows) + "x" + std::to_string(w.cols) +
                          ", spec wants " + std::to_string(spec.widths[layer]) + "x" +
                          std::to_string(spec.widths[layer + 1]));
    if (b.rows != 1 || b.cols != spec.widths[layer + 1])
        throw ConfigError("layer " + std::to_string(layer) + ": bias is " +
                          std::to_string(b.rows) + "x" + std::to_string(b.cols) +
                          ", spec wants 1x" + std::to_string(spec.widths[layer + 1]));
}

}  // namespace

void init_mlp_params(const MlpSpec& spec, ParamStore& store, const std::string& prefix,
                     Rng& rng) {
    spec.validate();
    for (std::size_t l = 0; l < spec.layer_count(); ++l) {
        const std::size_t fan_in = spec.widths[l];
        const std::size_t fan_out = spec.widths[l + 1];
        const Activation act = spec.activation_at(l);
        const double bound =
            (act == Activation::relu || act == Activation::leaky_relu)
                ? std::sqrt(6.0 / static_cast<double>(fan_in))
                : std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        const std::size_t wi = store.add(weight_name(prefix, l), fan_in, fan_out);
        for (double& v : store.entry(wi).values) v = rng.uniform(-bound, bound);
        store.add(bias_name(prefix, l), 1, fan_out);
    }
}

Graph::Id forward_mlp(Graph& g, const MlpSpec& spec, ParamStore& store,
                      const std::string& prefix, Graph::Id input) {
    spec.validate();
    if (g.value(input).cols() != spec.input_width())
        throw ConfigError("layer 0: input width " + std::to_string(g.value(input).cols()) +
                          " does not match spec input " + std::to_string(spec.input_width()));
    Graph::Id h = input;
    for (std::size_t l = 0; l < spec.layer_count(); ++l) {
        check_layer_shapes(spec, store, prefix, l);
        const Graph::Id w = g.param(store, weight_name(prefix, l));
        const Graph::Id b = g.param(store, bias_name(prefix, l));
        h = g.add_rowvec(g.matmul(h, w), b);
        switch (spec.activation_at(l)) {
            case Activation::relu: h = g.relu(h); break;
            case Activation::tanh: h = g.tanh_act(h); break;
            case Activation::leaky_relu: h = g.leaky_relu(h, spec.leaky_slope); break;
            case Activation::linear: break;
        }
    }
    return h;
}

Graph::Id forward_mlp_frozen(Graph& g, const MlpSpec& spec, const ParamStore& store,
                             const std::string& prefix, Graph::Id input) {
    spec.validate();
    if (g.value(input).cols() != spec.input_width())
        throw ConfigError("layer 0: input width " + std::to_string(g.value(input).cols()) +
                          " does not match spec input " + std::to_string(spec.input_width()));
    Graph::Id h = input;
    for (std::size_t l = 0; l < spec.layer_count(); ++l) {
        check_layer_shapes(spec, store, prefix, l);
        const ParamEntry& we = store.entry(weight_name(prefix, l));
        const ParamEntry& be = store.entry(bias_name(prefix, l));
        Matrix wm(we.rows, we.cols);
        std::copy(we.values.begin(), we.values.end(), wm.data());
        Matrix bm(1, be.cols);
        std::copy(be.values.begin(), be.values.end(), bm.data());
        h = g.add_rowvec(g.matmul(h, g.input(std::move(wm))), g.input(std::move(bm)));
        switch (spec.activation_at(l)) {
            case Activation::relu: h = g.relu(h); break;
            case Activation::tanh: h = g.tanh_act(h); break;
            case Activation::leaky_relu: h = g.leaky_relu(h, spec.leaky_slope); break;
            case Activation::linear: break;
        }
    }
    return h;
}

Matrix forward_mlp_plain(const MlpSpec& spec, const ParamStore& store,
                         const std::string& prefix, const Matrix& input) {
    spec.validate();
    if (input.cols() != spec.input_width())
        throw ConfigError("layer 0: input width " + std::to_string(input.cols()) +
                          " does not match spec input " + std::to_string(spec.input_width()));
    Matrix h = input;
    for (std::size_t l = 0; l < spec.layer_count(); ++l) {
        check_layer_shapes(spec, store, prefix, l);
        const ParamEntry& we = store.entry(weight_name(prefix, l));
        const ParamEntry& be = store.entry(bias_name(prefix, l));
        Matrix wm(we.rows, we.cols);
        std::copy(we.values.begin(), we.values.end(), wm.data());
        Matrix out = matmul(h, wm);
        for (std::size_t i = 0; i < out.rows(); ++i) {
            double* orow = out.row(i);
            for (std::size_t j = 0; j < out.cols(); ++j) orow[j] += be.values[j];
        }
        switch (spec.activation_at(l)) {
            case Activation::relu:
                for (std::size_t k = 0; k < out.size(); ++k)
                    if (out.data()[k] < 0.0) out.data()[k] = 0.0;
                break;
            case Activation::tanh:
                for (std::size_t k = 0; k < out.size(); ++k)
                    out.data()[k] = std::tanh(out.data()[k]);
                break;
            case Activation::leaky_relu:
                for (std::size_t k = 0; k < out.size(); ++k)
                    if (out.data()[k] < 0.0) out.data()[k] *= spec.leaky_slope;
                break;
            case Activation::linear: break;
        }
        h = std::move(out);
    }
    return h;
}

}  // namespace scgan
