#include "scgan/encoder.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "scgan/errors.hpp"
#include "scgan/rng.hpp"

namespace scgan {

EncoderModel make_encoder(const std::vector<std::size_t>& backbone_hidden,
                          std::size_t d_eps, const std::vector<std::size_t>& head_hidden,
                          std::size_t d_proj, std::uint64_t seed) {
    EncoderModel enc;
    enc.backbone = make_mlp_spec(2, backbone_hidden, d_eps, Activation::relu,
                                 Activation::linear);
    enc.head = make_mlp_spec(d_eps, head_hidden, d_proj, Activation::relu,
                             Activation::linear);
    Rng rng(derive_seed(seed, "encoder/init"));
    init_mlp_params(enc.backbone, enc.params, "enc.", rng);
    init_mlp_params(enc.head, enc.params, "proj.", rng);
    return enc;
}

void ContrastiveConfig::validate() const {
    if (!(temperature > 0.0)) throw ConfigError("encoder.temperature must be > 0");
    if (batch_size < 2) throw ConfigError("encoder.batch_size must be >= 2");
    if (iterations == 0) throw ConfigError("encoder.iterations must be >= 1");
    if (sigma_aug < 0.0) throw ConfigError("encoder.sigma_aug must be >= 0");
    adam.validate();
}

Graph::Id nt_xent_loss(Graph& g, Graph::Id projections, std::size_t n_pairs,
                       double temperature) {
    if (n_pairs < 2) throw UsageError("nt_xent_loss: need at least 2 pairs");
    if (!(temperature > 0.0)) throw UsageError("nt_xent_loss: temperature must be > 0");
    const std::size_t m = 2 * n_pairs;
    if (g.value(projections).rows() != m)
        throw UsageError("nt_xent_loss: expected " + std::to_string(m) + " rows, got " +
                         std::to_string(g.value(projections).rows()));

    Matrix offdiag(m, m);
    offdiag.fill(1.0);
    Matrix partner(m, m);
    for (std::size_t a = 0; a < m; ++a) {
        offdiag(a, a) = 0.0;
        partner(a, (a + n_pairs) % m) = 1.0;
    }

    const Graph::Id y = g.row_l2_normalize(projections);
    const Graph::Id sims = g.scale(g.matmul_nt(y, y), 1.0 / temperature);
    const Graph::Id e = g.exp_elem(sims);
    const Graph::Id denom = g.row_sum(g.mul(e, g.input(std::move(offdiag))));
    const Graph::Id numer = g.row_sum(g.mul(e, g.input(std::move(partner))));
    return g.mean_all(g.sub(g.log_elem(denom), g.log_elem(numer)));
}

double nt_xent_value(const Matrix& projections, double temperature) {
    if (projections.rows() % 2 != 0)
        throw UsageError("nt_xent_value: row count must be even");
    Graph g;
    const Graph::Id loss =
        nt_xent_loss(g, g.input(projections), projections.rows() / 2, temperature);
    return g.value(loss)(0, 0);
}

EncoderHistory train_encoder(const Batch2D& data, const ContrastiveConfig& cfg,
                             EncoderModel& enc, std::uint64_t seed) {
    cfg.validate();
    if (data.empty()) throw UsageError("train_encoder: empty dataset");

    Rng rng(derive_seed(seed, "encoder/train"));
    AdamState adam(enc.params, cfg.adam);
    EncoderHistory history;
    history.loss.reserve(cfg.iterations);

    const std::size_t n = cfg.batch_size;
    for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
        Matrix views(2 * n, 2);
        for (std::size_t i = 0; i < n; ++i) {
            const Point2& p = data.points[rng.index(data.size())];
            views(i, 0) = p.x1 + rng.normal(0.0, cfg.sigma_aug);
            views(i, 1) = p.x2 + rng.normal(0.0, cfg.sigma_aug);
            views(n + i, 0) = p.x1 + rng.normal(0.0, cfg.sigma_aug);
            views(n + i, 1) = p.x2 + rng.normal(0.0, cfg.sigma_aug);
        }

        Graph g;
        const Graph::Id x = g.input(std::move(views));
        const Graph::Id eps = forward_mlp(g, enc.backbone, enc.params, "enc.", x);
        const Graph::Id proj = forward_mlp(g, enc.head, enc.params, "proj.", eps);
        const Graph::Id loss = nt_xent_loss(g, proj, n, cfg.temperature);

        const double value = g.value(loss)(0, 0);
        if (!std::isfinite(value))
            throw TrainingError("encoder loss non-finite at iteration " +
                                std::to_string(iter));
        history.loss.push_back(value);

        enc.params.zero_grad();
        g.backward(loss);
        adam.step(enc.params);
    }
    return history;
}

Matrix embed(const EncoderModel& enc, const Matrix& points) {
    return forward_mlp_plain(enc.backbone, enc.params, "enc.", points);
}

Matrix embed(const EncoderModel& enc, const Batch2D& batch) {
    return embed(enc, to_matrix(batch));
}

void save_encoder_history(const EncoderHistory& history,
                          const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "iter,loss\n";
    char buf[64];
    for (std::size_t i = 0; i < history.loss.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, history.loss[i]);
        out << buf;
    }
    if (!out) throw IoError("write failed for " + path.string());
}

namespace {

void add_widths(ParamStore& store, const std::string& name,
                const std::vector<std::size_t>& widths) {
    const std::size_t idx = store.add(name, 1, widths.size());
    auto& values = store.entry(idx).values;
    for (std::size_t i = 0; i < widths.size(); ++i)
        values[i] = static_cast<double>(widths[i]);
}

std::vector<std::size_t> read_widths(const ParamStore& store, const std::string& name,
                                     const std::string& file) {
    if (!store.has(name)) throw CheckpointError("missing '" + name + "' in " + file);
    std::vector<std::size_t> widths;
    for (const double v : store.entry(name).values) {
        if (!(v >= 1.0) || v != std::floor(v))
            throw CheckpointError("invalid width in '" + name + "' in " + file);
        widths.push_back(static_cast<std::size_t>(v));
    }
    return widths;
}

}  // namespace

void save_encoder(const EncoderModel& enc, const std::filesystem::path& path) {
    ParamStore store;
    add_widths(store, "meta.backbone_widths", enc.backbone.widths);
    add_widths(store, "meta.head_widths", enc.head.widths);
    for (std::size_t i = 0; i < enc.params.count(); ++i) {
        const ParamEntry& e = enc.params.entry(i);
        const std::size_t idx = store.add(e.name, e.rows, e.cols);
        store.entry(idx).values = e.values;
    }
    save_params(store, path);
}

EncoderModel load_encoder(const std::filesystem::path& path) {
    const ParamStore store = load_params(path);
    EncoderModel enc;
    enc.backbone = MlpSpec{read_widths(store, "meta.backbone_widths", path.string()),
                           Activation::relu, Activation::linear, 0.2};
    enc.head = MlpSpec{read_widths(store, "meta.head_widths", path.string()),
                       Activation::relu, Activation::linear, 0.2};
    enc.backbone.validate();
    enc.head.validate();
    Rng dummy(0);
    init_mlp_params(enc.backbone, enc.params, "enc.", dummy);
    init_mlp_params(enc.head, enc.params, "proj.", dummy);
    for (std::size_t i = 0; i < store.count(); ++i) {
        const ParamEntry& e = store.entry(i);
        if (e.name.rfind("meta.", 0) == 0) continue;
        if (!enc.params.has(e.name))
            throw CheckpointError("unexpected entry '" + e.name + "' in " + path.string());
        ParamEntry& dst = enc.params.entry(e.name);
        if (dst.rows != e.rows || dst.cols != e.cols)
            throw CheckpointError("shape mismatch for '" + e.name + "' in " + path.string());
        dst.values = e.values;
    }
    return enc;
}

}  // namespace scgan
