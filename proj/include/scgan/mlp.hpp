#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "scgan/graph.hpp"
#include "scgan/matrix.hpp"
#include "scgan/params.hpp"
#include "scgan/rng.hpp"

namespace scgan {

enum class Activation { relu, tanh, leaky_relu, linear };

const char* to_string(Activation a);

// Fully connected stack: widths[0] inputs through widths.back() outputs.
// `hidden` applies to every layer but the last, `output` to the last.
struct MlpSpec {
    std::vector<std::size_t> widths;
    Activation hidden = Activation::relu;
    Activation output = Activation::linear;
    double leaky_slope = 0.2;

    std::size_t layer_count() const { return widths.empty() ? 0 : widths.size() - 1; }
    std::size_t input_width() const { return widths.front(); }
    std::size_t output_width() const { return widths.back(); }
    Activation activation_at(std::size_t layer) const {
        return layer + 1 == layer_count() ? output : hidden;
    }

    void validate() const;  // throws ConfigError
};

MlpSpec make_mlp_spec(std::size_t in, const std::vector<std::size_t>& hidden_widths,
                      std::size_t out, Activation hidden, Activation output);

// Creates "<prefix>W<l>" / "<prefix>b<l>" entries. Weights use uniform
// He-style fan-in scaling for relu/leaky_relu layers and Xavier-style for
// tanh/linear; biases start at zero.
void init_mlp_params(const MlpSpec& spec, ParamStore& store, const std::string& prefix,
                     Rng& rng);

// Records the full affine/activation chain on the tape. Throws ConfigError
// naming the offending layer if the store layout does not match the spec.
Graph::Id forward_mlp(Graph& g, const MlpSpec& spec, ParamStore& store,
                      const std::string& prefix, Graph::Id input);

// Same chain with the parameters entered as constants: gradient flows through
// the network to its input but not into the store (frozen discriminators).
Graph::Id forward_mlp_frozen(Graph& g, const MlpSpec& spec, const ParamStore& store,
                             const std::string& prefix, Graph::Id input);

// Tape-free forward pass for inference.
Matrix forward_mlp_plain(const MlpSpec& spec, const ParamStore& store,
                         const std::string& prefix, const Matrix& input);

}  // namespace scgan
