#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "scgan/adam.hpp"
#include "scgan/matrix.hpp"
#include "scgan/mlp.hpp"
#include "scgan/params.hpp"

namespace scgan {

// K-means result over the latent rows it was fit to.
struct ClusterModel {
    std::size_t k = 0;
    Matrix centroids;                       // k x d
    std::vector<std::size_t> assignments;   // one per input row
    std::vector<std::size_t> member_counts; // per cluster
    Matrix per_cluster_std;                 // k x d, population std
    double inertia = 0.0;
    std::vector<double> inertia_trace;      // recorded per Lloyd iteration

    std::vector<double> weights() const;    // member_counts / total
};

// k-means++ seeding followed by Lloyd iterations. Empty clusters are re-seeded
// at the point currently farthest from its assigned centroid.
ClusterModel kmeans(const Matrix& latents, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters = 100);

// Lloyd from caller-supplied centroids (used to check against brute-force
// optima and to resume).
ClusterModel kmeans_from(const Matrix& latents, Matrix centroids,
                         std::size_t max_iters = 100);

void save_clusters(const ClusterModel& model, const std::filesystem::path& clusters_csv,
                   const std::filesystem::path& assignments_csv);
ClusterModel load_clusters(const std::filesystem::path& clusters_csv,
                           const std::filesystem::path& assignments_csv);

struct MapperConfig {
    std::size_t d_omega = 2;
    std::vector<std::size_t> hidden = {32, 32};
    double lambda_eps = 10.0;
    // The aggregate posterior needs the long tail of adversarial training to
    // settle onto the unit Gaussian; reconstruction converges much earlier.
    std::size_t iterations = 5000;
    std::size_t batch_size = 128;
    AdamConfig adam{};
    AdamConfig disc_adam{};

    void validate() const;  // throws ConfigError
};

// One per-cluster adversarial autoencoder: omega-encoder q(omega|eps),
// eps-decoder p(eps|omega), omega-discriminator. Clusters too small to train
// fall back to a diagonal Gaussian around the cluster mean.
struct ClusterMapper {
    std::size_t d_omega = 0;
    bool fallback = false;
    std::vector<double> fallback_mean;
    std::vector<double> fallback_std;

    // Per-dimension whitening of the cluster's latents, learned at training
    // time. encode() subtracts/divides, decode() undoes it, so the networks
    // always see unit-scale inputs regardless of how tight the cluster is.
    // Empty means identity (hand-built mappers).
    std::vector<double> input_mean;
    std::vector<double> input_std;

    MlpSpec enc_spec, dec_spec, disc_spec;
    ParamStore enc_params, dec_params, disc_params;

    Matrix encode(const Matrix& eps) const;    // q(omega|eps)
    Matrix decode(const Matrix& omega) const;  // p(eps|omega)
};

ClusterMapper train_mapper(const Matrix& cluster_latents, const MapperConfig& cfg,
                           std::uint64_t seed);

// Draws from the diagonal Gaussian of a fallback mapper (latent-space rows).
Matrix sample_fallback(const ClusterMapper& mapper, std::size_t n, Rng& rng);

struct MapperEnsemble {
    std::size_t d_omega = 0;
    std::vector<ClusterMapper> mappers;
    std::vector<double> cluster_weights;  // sums to 1
};

MapperEnsemble train_mappers(const Matrix& latents, const ClusterModel& clusters,
                             const MapperConfig& cfg, std::uint64_t seed);

struct PosteriorStats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

// Empirical per-dimension moments of q(omega) over a cluster's latents.
PosteriorStats aggregate_posterior_stats(const ClusterMapper& mapper,
                                         const Matrix& cluster_latents);

void save_mapper(const ClusterMapper& mapper, double weight,
                 const std::filesystem::path& path);
std::pair<ClusterMapper, double> load_mapper(const std::filesystem::path& path);
void save_mapper_ensemble(const MapperEnsemble& ensemble,
                          const std::filesystem::path& dir);
MapperEnsemble load_mapper_ensemble(const std::filesystem::path& dir, std::size_t k);

enum class LatentSamplingMode {
    single_gaussian,
    noisy_cluster_centers,
    mapping_network,
    real_data_latents,
};

const char* to_string(LatentSamplingMode mode);
std::optional<LatentSamplingMode> mode_from_string(std::string_view name);
std::vector<LatentSamplingMode> all_modes();

struct GaussianFit {
    std::vector<double> mean;
    std::vector<double> stddev;
};

GaussianFit fit_gaussian(const Matrix& latents);

// Whichever sources the chosen sampling mode needs; the rest may stay null.
struct LatentSources {
    const GaussianFit* gaussian = nullptr;
    const ClusterModel* clusters = nullptr;
    const MapperEnsemble* mappers = nullptr;
    const Matrix* train_latents = nullptr;
};

Matrix sample_latent(LatentSamplingMode mode, std::size_t n, const LatentSources& sources,
                     std::uint64_t seed);

}  // namespace scgan
