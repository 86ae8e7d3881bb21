#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "scgan/adam.hpp"
#include "scgan/datasets.hpp"
#include "scgan/graph.hpp"
#include "scgan/matrix.hpp"
#include "scgan/mlp.hpp"
#include "scgan/params.hpp"

namespace scgan {

// Deterministic contrastive encoder. The latent used downstream is the
// backbone output; the projection head exists only for the training loss.
struct EncoderModel {
    MlpSpec backbone;  // 2 -> ... -> d_eps, params "enc.*"
    MlpSpec head;      // d_eps -> ... -> d_proj, params "proj.*"
    ParamStore params;

    std::size_t d_eps() const { return backbone.output_width(); }
    std::size_t d_proj() const { return head.output_width(); }
};

EncoderModel make_encoder(const std::vector<std::size_t>& backbone_hidden,
                          std::size_t d_eps, const std::vector<std::size_t>& head_hidden,
                          std::size_t d_proj, std::uint64_t seed);

struct ContrastiveConfig {
    double temperature = 0.5;
    std::size_t batch_size = 256;  // pairs per step; the loss sees 2N rows
    // Long enough that every mode of the multi-modal toys lands in its own
    // latent island; shorter budgets leave neighbouring modes merged.
    std::size_t iterations = 1800;
    double sigma_aug = 0.05;
    AdamConfig adam{};

    void validate() const;  // throws ConfigError
};

// NT-Xent over 2N projection rows: rows [0,N) are view one, [N,2N) view two,
// row a pairing with row (a+N) mod 2N. Mean over all 2N anchors of
// -log( exp(cos(z_a,z_p)/tau) / sum_{b != a} exp(cos(z_a,z_b)/tau) ).
Graph::Id nt_xent_loss(Graph& g, Graph::Id projections, std::size_t n_pairs,
                       double temperature);

// Convenience evaluation without keeping the tape.
double nt_xent_value(const Matrix& projections, double temperature);

struct EncoderHistory {
    std::vector<double> loss;  // one entry per iteration
};

EncoderHistory train_encoder(const Batch2D& data, const ContrastiveConfig& cfg,
                             EncoderModel& enc, std::uint64_t seed);

// Backbone output only; no projection head.
Matrix embed(const EncoderModel& enc, const Batch2D& batch);
Matrix embed(const EncoderModel& enc, const Matrix& points);

void save_encoder_history(const EncoderHistory& history, const std::filesystem::path& path);

// Self-contained checkpoint: widths travel with the parameters.
void save_encoder(const EncoderModel& enc, const std::filesystem::path& path);
EncoderModel load_encoder(const std::filesystem::path& path);

}  // namespace scgan
