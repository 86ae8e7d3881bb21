#include "scgan/latent.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "scgan/errors.hpp"
#include "scgan/graph.hpp"
#include "scgan/losses.hpp"
#include "scgan/rng.hpp"

namespace scgan {

namespace {

double sq_dist(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
    double s = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) {
        const double d = a(i, c) - b(j, c);
        s += d * d;
    }
    return s;
}

std::size_t nearest_centroid(const Matrix& points, std::size_t i, const Matrix& centroids) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
        const double d = sq_dist(points, i, centroids, c);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

// Lloyd iterations from given centroids; fills every ClusterModel field.
ClusterModel lloyd(const Matrix& latents, Matrix centroids, std::size_t max_iters) {
    const std::size_t n = latents.rows();
    const std::size_t d = latents.cols();
    const std::size_t k = centroids.rows();

    ClusterModel model;
    model.k = k;
    model.assignments.assign(n, 0);

    std::vector<std::size_t> prev(n, k);  // k is an impossible assignment
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = nearest_centroid(latents, i, centroids);
            model.assignments[i] = c;
            inertia += sq_dist(latents, i, centroids, c);
        }
        model.inertia_trace.push_back(inertia);
        model.inertia = inertia;
        if (model.assignments == prev) break;
        prev = model.assignments;

        // Mean update.
        Matrix sums(k, d);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = model.assignments[i];
            ++counts[c];
            for (std::size_t j = 0; j < d; ++j) sums(c, j) += latents(i, j);
        }
        std::vector<bool> taken(n, false);
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                for (std::size_t j = 0; j < d; ++j)
                    centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
                continue;
            }
            // Re-seed an empty cluster at the point farthest from its
            // current centroid (ignoring points already used this round).
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (taken[i]) continue;
                const double dist = sq_dist(latents, i, centroids, model.assignments[i]);
                if (dist > far_d) {
                    far_d = dist;
                    far = i;
                }
            }
            taken[far] = true;
            for (std::size_t j = 0; j < d; ++j) centroids(c, j) = latents(far, j);
        }
    }

    model.centroids = std::move(centroids);
    model.member_counts.assign(k, 0);
    for (const std::size_t c : model.assignments) ++model.member_counts[c];

    model.per_cluster_std = Matrix(k, d);
    Matrix mean_acc(k, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            mean_acc(model.assignments[i], j) += latents(i, j);
    for (std::size_t c = 0; c < k; ++c) {
        if (model.member_counts[c] == 0) continue;
        for (std::size_t j = 0; j < d; ++j)
            mean_acc(c, j) /= static_cast<double>(model.member_counts[c]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = model.assignments[i];
        for (std::size_t j = 0; j < d; ++j) {
            const double dev = latents(i, j) - mean_acc(c, j);
            model.per_cluster_std(c, j) += dev * dev;
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t j = 0; j < d; ++j) {
            model.per_cluster_std(c, j) =
                model.member_counts[c] > 1
                    ? std::sqrt(model.per_cluster_std(c, j) /
                                static_cast<double>(model.member_counts[c]))
                    : 0.0;
        }
    }
    return model;
}

}  // namespace

std::vector<double> ClusterModel::weights() const {
    std::size_t total = 0;
    for (const std::size_t c : member_counts) total += c;
    std::vector<double> w(member_counts.size(), 0.0);
    if (total == 0) return w;
    for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = static_cast<double>(member_counts[i]) / static_cast<double>(total);
    return w;
}

ClusterModel kmeans(const Matrix& latents, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters) {
    const std::size_t n = latents.rows();
    if (k == 0) throw UsageError("kmeans: K must be >= 1");
    if (k > n) throw UsageError("kmeans: K exceeds number of points");
    if (max_iters == 0) throw UsageError("kmeans: max_iters must be >= 1");

    Rng rng(derive_seed(seed, "kmeans/seeding"));
    const std::size_t d = latents.cols();
    Matrix centroids(k, d);

    // k-means++: first uniform, the rest proportional to squared distance to
    // the nearest already-chosen centroid.
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::size_t first = rng.index(n);
    for (std::size_t j = 0; j < d; ++j) centroids(0, j) = latents(first, j);
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            best[i] = std::min(best[i], sq_dist(latents, i, centroids, c - 1));
            total += best[i];
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += best[i];
                if (acc > target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.index(n);
        }
        for (std::size_t j = 0; j < d; ++j) centroids(c, j) = latents(pick, j);
    }
    return lloyd(latents, std::move(centroids), max_iters);
}

ClusterModel kmeans_from(const Matrix& latents, Matrix centroids, std::size_t max_iters) {
    if (centroids.rows() == 0) throw UsageError("kmeans_from: no centroids");
    if (centroids.rows() > latents.rows())
        throw UsageError("kmeans_from: K exceeds number of points");
    if (centroids.cols() != latents.cols())
        throw UsageError("kmeans_from: centroid width mismatch");
    if (max_iters == 0) throw UsageError("kmeans_from: max_iters must be >= 1");
    return lloyd(latents, std::move(centroids), max_iters);
}

namespace {

void append_g17(std::string& line, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    line += buf;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

double field_double(const std::string& s, std::size_t line_no, const std::string& file) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError("bad float '" + s + "' at line " + std::to_string(line_no) +
                         " of " + file);
    return v;
}

std::size_t field_count(const std::string& s, std::size_t line_no, const std::string& file) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError("bad count '" + s + "' at line " + std::to_string(line_no) +
                         " of " + file);
    return v;
}

}  // namespace

void save_clusters(const ClusterModel& model, const std::filesystem::path& clusters_csv,
                   const std::filesystem::path& assignments_csv) {
    const std::size_t d = model.centroids.cols();
    {
        std::ofstream out(clusters_csv, std::ios::trunc);
        if (!out) throw IoError("cannot open " + clusters_csv.string() + " for writing");
        out << "cluster,count,inertia";
        for (std::size_t j = 0; j < d; ++j) out << ",c" << j + 1;
        for (std::size_t j = 0; j < d; ++j) out << ",s" << j + 1;
        out << "\n";
        std::string line;
        for (std::size_t c = 0; c < model.k; ++c) {
            line = std::to_string(c) + "," + std::to_string(model.member_counts[c]) + ",";
            append_g17(line, model.inertia);
            for (std::size_t j = 0; j < d; ++j) {
                line += ',';
                append_g17(line, model.centroids(c, j));
            }
            for (std::size_t j = 0; j < d; ++j) {
                line += ',';
                append_g17(line, model.per_cluster_std(c, j));
            }
            out << line << "\n";
        }
        if (!out) throw IoError("write failed for " + clusters_csv.string());
    }
    {
        std::ofstream out(assignments_csv, std::ios::trunc);
        if (!out) throw IoError("cannot open " + assignments_csv.string() + " for writing");
        out << "index,cluster\n";
        for (std::size_t i = 0; i < model.assignments.size(); ++i)
            out << i << "," << model.assignments[i] << "\n";
        if (!out) throw IoError("write failed for " + assignments_csv.string());
    }
}

ClusterModel load_clusters(const std::filesystem::path& clusters_csv,
                           const std::filesystem::path& assignments_csv) {
    ClusterModel model;
    {
        std::ifstream in(clusters_csv);
        if (!in) throw IoError("cannot open " + clusters_csv.string());
        std::string line;
        if (!std::getline(in, line)) throw ParseError("empty file " + clusters_csv.string());
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto header = split_fields(line);
        if (header.size() < 5 || header[0] != "cluster" || header[1] != "count" ||
            header[2] != "inertia" || (header.size() - 3) % 2 != 0)
            throw ParseError("unexpected header in " + clusters_csv.string());
        const std::size_t d = (header.size() - 3) / 2;

        std::vector<std::vector<std::string>> rows;
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            auto fields = split_fields(line);
            if (fields.size() != header.size())
                throw ParseError("wrong field count at line " + std::to_string(line_no) +
                                 " of " + clusters_csv.string());
            rows.push_back(std::move(fields));
        }
        model.k = rows.size();
        model.centroids = Matrix(model.k, d);
        model.per_cluster_std = Matrix(model.k, d);
        model.member_counts.assign(model.k, 0);
        for (std::size_t c = 0; c < model.k; ++c) {
            const auto& f = rows[c];
            if (field_count(f[0], c + 2, clusters_csv.string()) != c)
                throw ParseError("cluster rows out of order in " + clusters_csv.string());
            model.member_counts[c] = field_count(f[1], c + 2, clusters_csv.string());
            model.inertia = field_double(f[2], c + 2, clusters_csv.string());
            for (std::size_t j = 0; j < d; ++j) {
                model.centroids(c, j) = field_double(f[3 + j], c + 2, clusters_csv.string());
                model.per_cluster_std(c, j) =
                    field_double(f[3 + d + j], c + 2, clusters_csv.string());
            }
        }
    }
    {
        std::ifstream in(assignments_csv);
        if (!in) throw IoError("cannot open " + assignments_csv.string());
        std::string line;
        if (!std::getline(in, line))
            throw ParseError("empty file " + assignments_csv.string());
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line != "index,cluster")
            throw ParseError("expected header 'index,cluster' in " +
                             assignments_csv.string());
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            const auto fields = split_fields(line);
            if (fields.size() != 2)
                throw ParseError("wrong field count at line " + std::to_string(line_no) +
                                 " of " + assignments_csv.string());
            const std::size_t idx = field_count(fields[0], line_no, assignments_csv.string());
            if (idx != model.assignments.size())
                throw ParseError("assignment rows out of order in " +
                                 assignments_csv.string());
            const std::size_t c = field_count(fields[1], line_no, assignments_csv.string());
            if (c >= model.k)
                throw ParseError("assignment to unknown cluster at line " +
                                 std::to_string(line_no) + " of " + assignments_csv.string());
            model.assignments.push_back(c);
        }
    }
    return model;
}

void MapperConfig::validate() const {
    if (d_omega == 0) throw ConfigError("mapper.d_omega must be >= 1");
    if (hidden.empty()) throw ConfigError("mapper.hidden must not be empty");
    for (const std::size_t w : hidden)
        if (w == 0) throw ConfigError("mapper.hidden widths must be >= 1");
    if (lambda_eps < 0.0) throw ConfigError("mapper.lambda_eps must be >= 0");
    if (iterations == 0) throw ConfigError("mapper.iterations must be >= 1");
    if (batch_size == 0) throw ConfigError("mapper.batch_size must be >= 1");
    adam.validate();
    disc_adam.validate();
}

Matrix ClusterMapper::encode(const Matrix& eps) const {
    if (fallback) throw UsageError("mapper encode: fallback mapper has no network");
    if (input_mean.empty()) return forward_mlp_plain(enc_spec, enc_params, "", eps);
    Matrix z = eps;
    for (std::size_t i = 0; i < z.rows(); ++i)
        for (std::size_t j = 0; j < z.cols(); ++j)
            z(i, j) = (z(i, j) - input_mean[j]) / input_std[j];
    return forward_mlp_plain(enc_spec, enc_params, "", z);
}

Matrix ClusterMapper::decode(const Matrix& omega) const {
    if (fallback) throw UsageError("mapper decode: fallback mapper has no network");
    Matrix out = forward_mlp_plain(dec_spec, dec_params, "", omega);
    if (!input_mean.empty())
        for (std::size_t i = 0; i < out.rows(); ++i)
            for (std::size_t j = 0; j < out.cols(); ++j)
                out(i, j) = out(i, j) * input_std[j] + input_mean[j];
    return out;
}

// Fallback clusters sample straight from the fitted diagonal Gaussian.
Matrix sample_fallback(const ClusterMapper& mapper, std::size_t n, Rng& rng) {
    Matrix out(n, mapper.fallback_mean.size());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < out.cols(); ++j)
            out(i, j) = mapper.fallback_mean[j] + mapper.fallback_std[j] * rng.normal();
    return out;
}

ClusterMapper train_mapper(const Matrix& cluster_latents, const MapperConfig& cfg,
                           std::uint64_t seed) {
    cfg.validate();
    const std::size_t n = cluster_latents.rows();
    const std::size_t d = cluster_latents.cols();
    if (n == 0) throw UsageError("train_mapper: empty cluster");

    ClusterMapper mapper;
    mapper.d_omega = cfg.d_omega;

    if (n < 2 * cfg.d_omega) {
        // Too little data for an adversarial fit; a diagonal Gaussian around
        // the cluster mean stands in for the mapping.
        mapper.fallback = true;
        mapper.fallback_mean.assign(d, 0.0);
        mapper.fallback_std.assign(d, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) mapper.fallback_mean[j] += cluster_latents(i, j);
        for (std::size_t j = 0; j < d; ++j) mapper.fallback_mean[j] /= static_cast<double>(n);
        if (n > 1) {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < d; ++j) {
                    const double dev = cluster_latents(i, j) - mapper.fallback_mean[j];
                    mapper.fallback_std[j] += dev * dev;
                }
            for (std::size_t j = 0; j < d; ++j)
                mapper.fallback_std[j] = std::sqrt(mapper.fallback_std[j] / static_cast<double>(n));
        }
        return mapper;
    }

    // Whiten the cluster so the networks train on unit-scale inputs; a tight
    // off-center blob would otherwise start with vanishing gradients.
    mapper.input_mean.assign(d, 0.0);
    mapper.input_std.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mapper.input_mean[j] += cluster_latents(i, j);
    for (std::size_t j = 0; j < d; ++j) mapper.input_mean[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double dev = cluster_latents(i, j) - mapper.input_mean[j];
            mapper.input_std[j] += dev * dev;
        }
    for (std::size_t j = 0; j < d; ++j) {
        mapper.input_std[j] = std::sqrt(mapper.input_std[j] / static_cast<double>(n));
        if (mapper.input_std[j] == 0.0) mapper.input_std[j] = 1.0;  // constant dimension
    }
    Matrix whitened = cluster_latents;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            whitened(i, j) = (whitened(i, j) - mapper.input_mean[j]) / mapper.input_std[j];

    mapper.enc_spec =
        make_mlp_spec(d, cfg.hidden, cfg.d_omega, Activation::relu, Activation::linear);
    mapper.dec_spec =
        make_mlp_spec(cfg.d_omega, cfg.hidden, d, Activation::relu, Activation::linear);
    mapper.disc_spec =
        make_mlp_spec(cfg.d_omega, cfg.hidden, 1, Activation::leaky_relu, Activation::linear);

    Rng init_rng(derive_seed(seed, "mapper/init"));
    init_mlp_params(mapper.enc_spec, mapper.enc_params, "", init_rng);
    init_mlp_params(mapper.dec_spec, mapper.dec_params, "", init_rng);
    init_mlp_params(mapper.disc_spec, mapper.disc_params, "", init_rng);

    Rng rng(derive_seed(seed, "mapper/train"));
    AdamState enc_adam(mapper.enc_params, cfg.adam);
    AdamState dec_adam(mapper.dec_params, cfg.adam);
    AdamState disc_adam(mapper.disc_params, cfg.disc_adam);

    const std::size_t b = std::min(cfg.batch_size, n);
    for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
        Matrix eps(b, d);
        for (std::size_t i = 0; i < b; ++i) {
            const std::size_t r = rng.index(n);
            for (std::size_t j = 0; j < d; ++j) eps(i, j) = whitened(r, j);
        }
        Matrix prior(b, cfg.d_omega);
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < cfg.d_omega; ++j) prior(i, j) = rng.normal();

        // Discriminator: prior omega vs pushed-forward (frozen encoder) omega.
        {
            Graph g;
            const Graph::Id eps_in = g.input(eps);
            const Graph::Id omega_fake =
                forward_mlp_frozen(g, mapper.enc_spec, mapper.enc_params, "", eps_in);
            const Graph::Id omega_real = g.input(prior);
            const Graph::Id logit_real =
                forward_mlp(g, mapper.disc_spec, mapper.disc_params, "", omega_real);
            const Graph::Id logit_fake =
                forward_mlp(g, mapper.disc_spec, mapper.disc_params, "", omega_fake);
            const Graph::Id loss = g.add(bce_real(g, logit_real), bce_fake(g, logit_fake));
            if (!std::isfinite(g.value(loss)(0, 0)))
                throw TrainingError("mapper discriminator loss non-finite at iteration " +
                                    std::to_string(iter));
            mapper.disc_params.zero_grad();
            g.backward(loss);
            disc_adam.step(mapper.disc_params);
        }

        // Generator side: reconstruction plus prior matching in one step so
        // lambda_eps keeps its meaning as a trade-off weight.
        {
            Graph g;
            const Graph::Id eps_in = g.input(eps);
            const Graph::Id omega = forward_mlp(g, mapper.enc_spec, mapper.enc_params, "", eps_in);
            const Graph::Id eps_hat =
                forward_mlp(g, mapper.dec_spec, mapper.dec_params, "", omega);
            const Graph::Id recon = mse_loss(g, eps_hat, eps_in);
            const Graph::Id logit =
                forward_mlp_frozen(g, mapper.disc_spec, mapper.disc_params, "", omega);
            const Graph::Id loss =
                g.add(g.scale(recon, cfg.lambda_eps), nonsaturating_loss(g, logit));
            if (!std::isfinite(g.value(loss)(0, 0)))
                throw TrainingError("mapper generator loss non-finite at iteration " +
                                    std::to_string(iter));
            mapper.enc_params.zero_grad();
            mapper.dec_params.zero_grad();
            g.backward(loss);
            enc_adam.step(mapper.enc_params);
            dec_adam.step(mapper.dec_params);
        }
    }
    return mapper;
}

MapperEnsemble train_mappers(const Matrix& latents, const ClusterModel& clusters,
                             const MapperConfig& cfg, std::uint64_t seed) {
    if (clusters.assignments.size() != latents.rows())
        throw UsageError("train_mappers: assignment count does not match latents");
    MapperEnsemble ensemble;
    ensemble.d_omega = cfg.d_omega;
    ensemble.cluster_weights = clusters.weights();
    ensemble.mappers.reserve(clusters.k);
    for (std::size_t c = 0; c < clusters.k; ++c) {
        Matrix members(clusters.member_counts[c], latents.cols());
        std::size_t row = 0;
        for (std::size_t i = 0; i < latents.rows(); ++i) {
            if (clusters.assignments[i] != c) continue;
            for (std::size_t j = 0; j < latents.cols(); ++j) members(row, j) = latents(i, j);
            ++row;
        }
        ensemble.mappers.push_back(
            train_mapper(members, cfg, derive_seed(seed, "mapper/" + std::to_string(c))));
    }
    return ensemble;
}

PosteriorStats aggregate_posterior_stats(const ClusterMapper& mapper,
                                         const Matrix& cluster_latents) {
    if (mapper.fallback)
        throw UsageError("aggregate_posterior_stats: fallback mapper has no encoder");
    const Matrix omega = mapper.encode(cluster_latents);
    PosteriorStats stats;
    stats.mean.assign(omega.cols(), 0.0);
    stats.stddev.assign(omega.cols(), 0.0);
    const auto n = static_cast<double>(omega.rows());
    for (std::size_t i = 0; i < omega.rows(); ++i)
        for (std::size_t j = 0; j < omega.cols(); ++j) stats.mean[j] += omega(i, j);
    for (double& m : stats.mean) m /= n;
    for (std::size_t i = 0; i < omega.rows(); ++i)
        for (std::size_t j = 0; j < omega.cols(); ++j) {
            const double dev = omega(i, j) - stats.mean[j];
            stats.stddev[j] += dev * dev;
        }
    for (double& s : stats.stddev) s = std::sqrt(s / n);
    return stats;
}

namespace {

void add_meta(ParamStore& store, const std::string& name, const std::vector<double>& row) {
    const std::size_t idx = store.add(name, 1, row.size());
    store.entry(idx).values = row;
}

std::vector<std::size_t> widths_from_meta(const ParamStore& store, const std::string& name) {
    const ParamEntry& e = store.entry(name);
    std::vector<std::size_t> widths;
    widths.reserve(e.values.size());
    for (const double v : e.values) {
        if (!(v >= 1.0) || v != std::floor(v))
            throw CheckpointError("invalid width in '" + name + "'");
        widths.push_back(static_cast<std::size_t>(v));
    }
    return widths;
}

std::vector<double> widths_to_meta(const std::vector<std::size_t>& widths) {
    std::vector<double> out;
    out.reserve(widths.size());
    for (const std::size_t w : widths) out.push_back(static_cast<double>(w));
    return out;
}

}  // namespace

void save_mapper(const ClusterMapper& mapper, double weight,
                 const std::filesystem::path& path) {
    ParamStore store;
    add_meta(store, "meta.d_omega", {static_cast<double>(mapper.d_omega)});
    add_meta(store, "meta.weight", {weight});
    if (mapper.fallback) {
        add_meta(store, "fallback.mean", mapper.fallback_mean);
        add_meta(store, "fallback.std", mapper.fallback_std);
    } else {
        add_meta(store, "meta.enc_widths", widths_to_meta(mapper.enc_spec.widths));
        add_meta(store, "meta.dec_widths", widths_to_meta(mapper.dec_spec.widths));
        add_meta(store, "meta.disc_widths", widths_to_meta(mapper.disc_spec.widths));
        if (!mapper.input_mean.empty()) {
            add_meta(store, "meta.input_mean", mapper.input_mean);
            add_meta(store, "meta.input_std", mapper.input_std);
        }
        const ParamStore merged = merge_stores({{"enc.", &mapper.enc_params},
                                                {"dec.", &mapper.dec_params},
                                                {"disc.", &mapper.disc_params}});
        for (std::size_t i = 0; i < merged.count(); ++i) {
            const ParamEntry& e = merged.entry(i);
            const std::size_t idx = store.add(e.name, e.rows, e.cols);
            store.entry(idx).values = e.values;
        }
    }
    save_params(store, path);
}

std::pair<ClusterMapper, double> load_mapper(const std::filesystem::path& path) {
    const ParamStore store = load_params(path);
    if (!store.has("meta.d_omega") || !store.has("meta.weight"))
        throw CheckpointError("mapper checkpoint missing meta entries: " + path.string());

    ClusterMapper mapper;
    const double d_omega = store.entry("meta.d_omega").values.at(0);
    if (!(d_omega >= 1.0) || d_omega != std::floor(d_omega))
        throw CheckpointError("invalid meta.d_omega in " + path.string());
    mapper.d_omega = static_cast<std::size_t>(d_omega);
    const double weight = store.entry("meta.weight").values.at(0);

    if (store.has("fallback.mean")) {
        mapper.fallback = true;
        mapper.fallback_mean = store.entry("fallback.mean").values;
        mapper.fallback_std = store.entry("fallback.std").values;
        return {std::move(mapper), weight};
    }

    const auto enc_w = widths_from_meta(store, "meta.enc_widths");
    const auto dec_w = widths_from_meta(store, "meta.dec_widths");
    const auto disc_w = widths_from_meta(store, "meta.disc_widths");
    if (store.has("meta.input_mean")) {
        mapper.input_mean = store.entry("meta.input_mean").values;
        mapper.input_std = store.entry("meta.input_std").values;
        if (mapper.input_std.size() != mapper.input_mean.size())
            throw CheckpointError("inconsistent whitening vectors in " + path.string());
    }
    mapper.enc_spec = MlpSpec{enc_w, Activation::relu, Activation::linear, 0.2};
    mapper.dec_spec = MlpSpec{dec_w, Activation::relu, Activation::linear, 0.2};
    mapper.disc_spec = MlpSpec{disc_w, Activation::leaky_relu, Activation::linear, 0.2};
    mapper.enc_spec.validate();
    mapper.dec_spec.validate();
    mapper.disc_spec.validate();

    Rng dummy(0);
    init_mlp_params(mapper.enc_spec, mapper.enc_params, "", dummy);
    init_mlp_params(mapper.dec_spec, mapper.dec_params, "", dummy);
    init_mlp_params(mapper.disc_spec, mapper.disc_params, "", dummy);

    ParamStore nets_only;
    for (std::size_t i = 0; i < store.count(); ++i) {
        const ParamEntry& e = store.entry(i);
        if (e.name.rfind("meta.", 0) == 0) continue;
        const std::size_t idx = nets_only.add(e.name, e.rows, e.cols);
        nets_only.entry(idx).values = e.values;
    }
    split_store(nets_only, {{"enc.", &mapper.enc_params},
                            {"dec.", &mapper.dec_params},
                            {"disc.", &mapper.disc_params}});
    return {std::move(mapper), weight};
}

void save_mapper_ensemble(const MapperEnsemble& ensemble,
                          const std::filesystem::path& dir) {
    for (std::size_t i = 0; i < ensemble.mappers.size(); ++i)
        save_mapper(ensemble.mappers[i], ensemble.cluster_weights[i],
                    dir / ("mapper_" + std::to_string(i) + ".ckpt"));
}

MapperEnsemble load_mapper_ensemble(const std::filesystem::path& dir, std::size_t k) {
    if (k == 0) throw UsageError("load_mapper_ensemble: K must be >= 1");
    MapperEnsemble ensemble;
    ensemble.mappers.reserve(k);
    ensemble.cluster_weights.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        auto [mapper, weight] =
            load_mapper(dir / ("mapper_" + std::to_string(i) + ".ckpt"));
        if (i == 0)
            ensemble.d_omega = mapper.d_omega;
        else if (mapper.d_omega != ensemble.d_omega)
            throw CheckpointError("mapper ensemble mixes omega widths");
        ensemble.mappers.push_back(std::move(mapper));
        ensemble.cluster_weights.push_back(weight);
    }
    double total = 0.0;
    for (const double w : ensemble.cluster_weights) total += w;
    if (std::abs(total - 1.0) > 1e-6)
        throw CheckpointError("mapper ensemble weights sum to " + std::to_string(total));
    return ensemble;
}

const char* to_string(LatentSamplingMode mode) {
    switch (mode) {
        case LatentSamplingMode::single_gaussian: return "single_gaussian";
        case LatentSamplingMode::noisy_cluster_centers: return "noisy_cluster_centers";
        case LatentSamplingMode::mapping_network: return "mapping_network";
        case LatentSamplingMode::real_data_latents: return "real_data_latents";
    }
    throw UsageError("unknown latent sampling mode");
}

std::optional<LatentSamplingMode> mode_from_string(std::string_view name) {
    for (const LatentSamplingMode m : all_modes())
        if (name == to_string(m)) return m;
    return std::nullopt;
}

std::vector<LatentSamplingMode> all_modes() {
    return {LatentSamplingMode::single_gaussian, LatentSamplingMode::noisy_cluster_centers,
            LatentSamplingMode::mapping_network, LatentSamplingMode::real_data_latents};
}

GaussianFit fit_gaussian(const Matrix& latents) {
    if (latents.rows() == 0) throw UsageError("fit_gaussian: empty latents");
    GaussianFit fit;
    const std::size_t d = latents.cols();
    fit.mean.assign(d, 0.0);
    fit.stddev.assign(d, 0.0);
    const auto n = static_cast<double>(latents.rows());
    for (std::size_t i = 0; i < latents.rows(); ++i)
        for (std::size_t j = 0; j < d; ++j) fit.mean[j] += latents(i, j);
    for (double& m : fit.mean) m /= n;
    for (std::size_t i = 0; i < latents.rows(); ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double dev = latents(i, j) - fit.mean[j];
            fit.stddev[j] += dev * dev;
        }
    for (double& s : fit.stddev) s = std::sqrt(s / n);
    return fit;
}

namespace {

std::size_t pick_weighted(const std::vector<double>& weights, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    return weights.size() - 1;
}

}  // namespace

Matrix sample_latent(LatentSamplingMode mode, std::size_t n, const LatentSources& sources,
                     std::uint64_t seed) {
    Rng rng(derive_seed(seed, std::string("latent/") + to_string(mode)));
    switch (mode) {
        case LatentSamplingMode::single_gaussian: {
            if (!sources.gaussian)
                throw UsageError("sample_latent: mode single_gaussian needs a fitted Gaussian");
            const GaussianFit& fit = *sources.gaussian;
            Matrix out(n, fit.mean.size());
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < fit.mean.size(); ++j)
                    out(i, j) = fit.mean[j] + fit.stddev[j] * rng.normal();
            return out;
        }
        case LatentSamplingMode::noisy_cluster_centers: {
            if (!sources.clusters)
                throw UsageError("sample_latent: mode noisy_cluster_centers needs clusters");
            const ClusterModel& cm = *sources.clusters;
            const std::vector<double> w = cm.weights();
            Matrix out(n, cm.centroids.cols());
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t c = pick_weighted(w, rng);
                for (std::size_t j = 0; j < cm.centroids.cols(); ++j)
                    out(i, j) = cm.centroids(c, j) + cm.per_cluster_std(c, j) * rng.normal();
            }
            return out;
        }
        case LatentSamplingMode::mapping_network: {
            if (!sources.mappers)
                throw UsageError("sample_latent: mode mapping_network needs the mapper ensemble");
            const MapperEnsemble& ens = *sources.mappers;
            if (ens.mappers.empty())
                throw UsageError("sample_latent: mapper ensemble is empty");
            Matrix omega(1, ens.d_omega);
            Matrix out;
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t c = pick_weighted(ens.cluster_weights, rng);
                Matrix eps;
                if (ens.mappers[c].fallback) {
                    eps = sample_fallback(ens.mappers[c], 1, rng);
                } else {
                    for (std::size_t j = 0; j < ens.d_omega; ++j) omega(0, j) = rng.normal();
                    eps = ens.mappers[c].decode(omega);
                }
                if (out.rows() == 0) out = Matrix(n, eps.cols());
                for (std::size_t j = 0; j < eps.cols(); ++j) out(i, j) = eps(0, j);
            }
            if (out.rows() == 0) out = Matrix(0, 0);
            return out;
        }
        case LatentSamplingMode::real_data_latents: {
            if (!sources.train_latents)
                throw UsageError("sample_latent: mode real_data_latents needs stored latents");
            const Matrix& src = *sources.train_latents;
            if (src.rows() == 0)
                throw UsageError("sample_latent: stored latent set is empty");
            Matrix out(n, src.cols());
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t r = rng.index(src.rows());
                for (std::size_t j = 0; j < src.cols(); ++j) out(i, j) = src(r, j);
            }
            return out;
        }
    }
    throw UsageError("unknown latent sampling mode");
}

}  // namespace scgan
