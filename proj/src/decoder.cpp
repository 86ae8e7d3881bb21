#include "scgan/decoder.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "scgan/errors.hpp"
#include "scgan/losses.hpp"

namespace scgan {

namespace {

std::string w_name(std::size_t l) { return "W" + std::to_string(l); }
std::string b_name(std::size_t l) { return "b" + std::to_string(l); }
std::string a_name(std::size_t l) { return "A" + std::to_string(l); }

double apply_act(Activation act, double v, double slope) {
    switch (act) {
        case Activation::relu: return v > 0.0 ? v : 0.0;
        case Activation::leaky_relu: return v > 0.0 ? v : slope * v;
        case Activation::tanh: return std::tanh(v);
        case Activation::linear: return v;
    }
    return v;
}

}  // namespace

StochasticDecoder make_decoder(std::size_t d_eps, const std::vector<std::size_t>& hidden,
                               std::size_t d_out, std::size_t d_z, std::uint64_t seed) {
    if (d_z == 0) throw ConfigError("decoder.d_z must be >= 1");
    StochasticDecoder dec;
    dec.spec = make_mlp_spec(d_eps, hidden, d_out, Activation::leaky_relu,
                             Activation::linear);
    dec.d_z = d_z;
    Rng rng(derive_seed(seed, "decoder/init"));
    init_mlp_params(dec.spec, dec.params, "", rng);
    for (std::size_t l = 0; l < dec.depth(); ++l) {
        const std::size_t out = dec.spec.widths[l + 1];
        const std::size_t idx = dec.params.add(a_name(l), d_z, out);
        auto& values = dec.params.entry(idx).values;
        const double bound = std::sqrt(6.0 / static_cast<double>(d_z + out));
        for (double& v : values) v = rng.uniform(-bound, bound);
    }
    return dec;
}

NoiseBundle zero_bundle(const StochasticDecoder& dec) {
    NoiseBundle bundle;
    bundle.z.assign(dec.depth(), std::vector<double>(dec.d_z, 0.0));
    return bundle;
}

NoiseBundle random_bundle(const StochasticDecoder& dec, Rng& rng) {
    NoiseBundle bundle;
    bundle.z.assign(dec.depth(), std::vector<double>(dec.d_z, 0.0));
    for (auto& layer : bundle.z)
        for (double& v : layer) v = rng.normal();
    return bundle;
}

namespace {

void check_bundle(const StochasticDecoder& dec, const NoiseBundle& bundle) {
    if (bundle.z.size() != dec.depth())
        throw UsageError("decode: bundle depth " + std::to_string(bundle.z.size()) +
                         " does not match decoder depth " + std::to_string(dec.depth()));
    for (const auto& layer : bundle.z) {
        if (layer.size() != dec.d_z)
            throw UsageError("decode: bundle noise width mismatch");
        for (const double v : layer)
            if (!std::isfinite(v)) throw UsageError("decode: non-finite bundle value");
    }
}

Matrix decode_with_noise(const StochasticDecoder& dec, const Matrix& eps,
                         const std::vector<Matrix>& noise) {
    Matrix h = eps;
    for (std::size_t l = 0; l < dec.depth(); ++l) {
        const ParamEntry& we = dec.params.entry(w_name(l));
        const ParamEntry& be = dec.params.entry(b_name(l));
        const ParamEntry& ae = dec.params.entry(a_name(l));
        const std::size_t out_w = we.cols;
        Matrix pre(h.rows(), out_w);
        for (std::size_t i = 0; i < h.rows(); ++i) {
            for (std::size_t j = 0; j < out_w; ++j) {
                double acc = be.values[j];
                for (std::size_t k = 0; k < we.rows; ++k)
                    acc += h(i, k) * we.values[k * out_w + j];
                for (std::size_t k = 0; k < dec.d_z; ++k)
                    acc += noise[l](i, k) * ae.values[k * out_w + j];
                pre(i, j) = acc;
            }
        }
        const Activation act = dec.spec.activation_at(l);
        for (std::size_t i = 0; i < pre.rows(); ++i)
            for (std::size_t j = 0; j < pre.cols(); ++j)
                pre(i, j) = apply_act(act, pre(i, j), dec.spec.leaky_slope);
        h = std::move(pre);
    }
    return h;
}

}  // namespace

std::vector<Matrix> bundle_rows(const StochasticDecoder& dec, const NoiseBundle& bundle,
                                std::size_t n) {
    check_bundle(dec, bundle);
    std::vector<Matrix> rows;
    rows.reserve(dec.depth());
    for (std::size_t l = 0; l < dec.depth(); ++l) {
        Matrix z(n, dec.d_z);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < dec.d_z; ++k) z(i, k) = bundle.z[l][k];
        rows.push_back(std::move(z));
    }
    return rows;
}

std::vector<Matrix> random_noise_rows(const StochasticDecoder& dec, std::size_t n,
                                      Rng& rng) {
    std::vector<Matrix> rows;
    rows.reserve(dec.depth());
    for (std::size_t l = 0; l < dec.depth(); ++l) {
        Matrix z(n, dec.d_z);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < dec.d_z; ++k) z(i, k) = rng.normal();
        rows.push_back(std::move(z));
    }
    return rows;
}

Matrix decode(const StochasticDecoder& dec, const Matrix& eps, const NoiseBundle& bundle) {
    if (eps.cols() != dec.spec.input_width())
        throw UsageError("decode: latent width mismatch");
    return decode_with_noise(dec, eps, bundle_rows(dec, bundle, eps.rows()));
}

Matrix decode_random(const StochasticDecoder& dec, const Matrix& eps, Rng& rng) {
    if (eps.cols() != dec.spec.input_width())
        throw UsageError("decode: latent width mismatch");
    return decode_with_noise(dec, eps, random_noise_rows(dec, eps.rows(), rng));
}

Graph::Id decode_graph(Graph& g, StochasticDecoder& dec, Graph::Id eps,
                       const std::vector<Matrix>& noise) {
    if (noise.size() != dec.depth())
        throw UsageError("decode_graph: noise depth mismatch");
    const std::size_t n = g.value(eps).rows();
    Graph::Id h = eps;
    for (std::size_t l = 0; l < dec.depth(); ++l) {
        if (noise[l].rows() != n || noise[l].cols() != dec.d_z)
            throw UsageError("decode_graph: noise shape mismatch at layer " +
                             std::to_string(l));
        const Graph::Id w = g.param(dec.params, w_name(l));
        const Graph::Id b = g.param(dec.params, b_name(l));
        const Graph::Id a = g.param(dec.params, a_name(l));
        const Graph::Id z = g.input(noise[l]);
        Graph::Id pre = g.add(g.add_rowvec(g.matmul(h, w), b), g.matmul(z, a));
        switch (dec.spec.activation_at(l)) {
            case Activation::relu: h = g.relu(pre); break;
            case Activation::leaky_relu: h = g.leaky_relu(pre, dec.spec.leaky_slope); break;
            case Activation::tanh: h = g.tanh_act(pre); break;
            case Activation::linear: h = pre; break;
        }
    }
    return h;
}

Discriminator make_discriminator(std::size_t d_in, const std::vector<std::size_t>& hidden,
                                 std::uint64_t seed) {
    Discriminator disc;
    disc.spec = make_mlp_spec(d_in, hidden, 1, Activation::leaky_relu, Activation::linear);
    Rng rng(derive_seed(seed, "disc/init"));
    init_mlp_params(disc.spec, disc.params, "", rng);
    return disc;
}

void DecoderTrainConfig::validate() const {
    if (lambda_x < 0.0) throw ConfigError("decoder.lambda_x must be >= 0");
    if (gamma_rec < 0.0) throw ConfigError("decoder.gamma_rec must be >= 0");
    if (iterations == 0) throw ConfigError("decoder.iterations must be >= 1");
    if (batch_size == 0) throw ConfigError("decoder.batch_size must be >= 1");
    if (hidden.empty()) throw ConfigError("decoder.hidden must not be empty");
    for (const std::size_t w : hidden)
        if (w == 0) throw ConfigError("decoder.hidden widths must be >= 1");
    if (d_z == 0) throw ConfigError("decoder.d_z must be >= 1");
    if (disc_hidden.empty()) throw ConfigError("decoder.disc_hidden must not be empty");
    for (const std::size_t w : disc_hidden)
        if (w == 0) throw ConfigError("decoder.disc_hidden widths must be >= 1");
    if (history_every == 0) throw ConfigError("decoder.history_every must be >= 1");
    adam.validate();
    disc_adam.validate();
}

NoiseBundle fixed_bundle(const StochasticDecoder& dec, const DecoderTrainConfig& cfg) {
    if (cfg.bundle_policy == BundlePolicy::zeros) return zero_bundle(dec);
    Rng rng(derive_seed(cfg.bundle_seed, "decoder/bundle"));
    return random_bundle(dec, rng);
}

namespace {

double update_discriminator(Discriminator& disc, AdamState& adam, const Matrix& real,
                            const Matrix& fake) {
    Graph g;
    const Graph::Id logit_real =
        forward_mlp(g, disc.spec, disc.params, "", g.input(real));
    const Graph::Id logit_fake =
        forward_mlp(g, disc.spec, disc.params, "", g.input(fake));
    const Graph::Id loss = g.add(bce_real(g, logit_real), bce_fake(g, logit_fake));
    const double value = g.value(loss)(0, 0);
    if (!std::isfinite(value)) throw TrainingError("discriminator loss non-finite");
    disc.params.zero_grad();
    g.backward(loss);
    adam.step(disc.params);
    return value;
}

double nonsat_plain(const Discriminator& disc, const Matrix& fake) {
    const Matrix logits = forward_mlp_plain(disc.spec, disc.params, "", fake);
    double acc = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const double l = -logits(i, 0);
        acc += l > 30.0 ? l : std::log1p(std::exp(std::min(l, 30.0)));
    }
    return acc / static_cast<double>(logits.rows());
}

}  // namespace

ReconStepResult reconstruction_step(StochasticDecoder& dec, const EncoderModel& enc,
                                    const Matrix& x, Discriminator& d_rec,
                                    AdamState& d_rec_adam, const DecoderTrainConfig& cfg,
                                    const NoiseBundle& bundle) {
    ReconStepResult result;
    const Matrix eps = embed(enc, x);
    const std::vector<Matrix> noise = bundle_rows(dec, bundle, x.rows());
    const Matrix xhat_detached = decode_with_noise(dec, eps, noise);

    result.disc_loss = update_discriminator(d_rec, d_rec_adam, x, xhat_detached);

    Graph g;
    const Graph::Id eps_in = g.input(eps);
    const Graph::Id xhat = decode_graph(g, dec, eps_in, noise);
    const Graph::Id x_in = g.input(x);
    const Graph::Id recon = mse_loss(g, xhat, x_in);
    Graph::Id loss = recon;
    Graph::Id adv = -1;
    if (cfg.gamma_rec > 0.0) {
        adv = nonsaturating_loss(g, forward_mlp_frozen(g, d_rec.spec, d_rec.params, "", xhat));
        loss = g.add(recon, g.scale(adv, cfg.gamma_rec));
    }
    result.mse = g.value(recon)(0, 0);
    result.adv_rec = adv >= 0 ? g.value(adv)(0, 0) : nonsat_plain(d_rec, xhat_detached);
    if (!std::isfinite(g.value(loss)(0, 0)))
        throw TrainingError("reconstruction loss non-finite");
    g.backward(loss);
    return result;
}

GenStepResult generation_step(StochasticDecoder& dec, const LatentSources& sources,
                              const Matrix& x_real, Discriminator& d_gen,
                              AdamState& d_gen_adam, const DecoderTrainConfig& cfg,
                              Rng& rng) {
    GenStepResult result;
    const std::size_t n = x_real.rows();
    const Matrix eps = sample_latent(cfg.mode, n, sources, rng.next_u64());
    const std::vector<Matrix> noise = random_noise_rows(dec, n, rng);
    const Matrix fake_detached = decode_with_noise(dec, eps, noise);

    result.disc_loss = update_discriminator(d_gen, d_gen_adam, x_real, fake_detached);

    if (cfg.lambda_x > 0.0) {
        Graph g;
        const Graph::Id fake = decode_graph(g, dec, g.input(eps), noise);
        const Graph::Id adv =
            nonsaturating_loss(g, forward_mlp_frozen(g, d_gen.spec, d_gen.params, "", fake));
        result.adv_gen = g.value(adv)(0, 0);
        const Graph::Id loss = g.scale(adv, cfg.lambda_x);
        if (!std::isfinite(g.value(loss)(0, 0)))
            throw TrainingError("generation loss non-finite");
        g.backward(loss);
    } else {
        result.adv_gen = nonsat_plain(d_gen, fake_detached);
    }
    return result;
}

DecoderRun train_decoder(const EncoderModel& enc, const LatentSources& sources,
                         const Batch2D& train_data, const DecoderTrainConfig& cfg,
                         std::uint64_t seed) {
    cfg.validate();
    if (train_data.empty()) throw UsageError("train_decoder: empty dataset");

    DecoderRun run;
    run.dec = make_decoder(enc.d_eps(), cfg.hidden, 2, cfg.d_z, derive_seed(seed, "decoder"));
    run.discs.rec = make_discriminator(2, cfg.disc_hidden, derive_seed(seed, "drec"));
    run.discs.gen = make_discriminator(2, cfg.disc_hidden, derive_seed(seed, "dgen"));

    const NoiseBundle bundle = fixed_bundle(run.dec, cfg);
    AdamState dec_adam(run.dec.params, cfg.adam);
    AdamState drec_adam(run.discs.rec.params, cfg.disc_adam);
    AdamState dgen_adam(run.discs.gen.params, cfg.disc_adam);
    Rng rng(derive_seed(seed, "decoder/train"));

    const std::size_t b = std::min(cfg.batch_size, train_data.size());
    for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
        Matrix x(b, 2);
        for (std::size_t i = 0; i < b; ++i) {
            const Point2& p = train_data.points[rng.index(train_data.size())];
            x(i, 0) = p.x1;
            x(i, 1) = p.x2;
        }

        run.dec.params.zero_grad();
        ReconStepResult rec;
        GenStepResult gen;
        try {
            rec = reconstruction_step(run.dec, enc, x, run.discs.rec, drec_adam, cfg, bundle);
            gen = generation_step(run.dec, sources, x, run.discs.gen, dgen_adam, cfg, rng);
        } catch (const TrainingError& e) {
            throw TrainingError(std::string(e.what()) + " at iteration " +
                                std::to_string(iter));
        }
        dec_adam.step(run.dec.params);

        if (iter % cfg.history_every == 0 || iter + 1 == cfg.iterations) {
            if (!run.history.empty() && run.history.back().iter == iter) continue;
            run.history.push_back({iter, rec.mse, rec.adv_rec, gen.adv_gen});
        }
    }
    return run;
}

double reconstruct_eval(const StochasticDecoder& dec, const EncoderModel& enc,
                        const Batch2D& test, const NoiseBundle& bundle) {
    if (test.empty()) throw UsageError("reconstruct_eval: empty test set");
    const Matrix x = to_matrix(test);
    const Matrix xhat = decode(dec, embed(enc, x), bundle);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) {
            const double d = x(i, j) - xhat(i, j);
            acc += d * d;
        }
    return acc / static_cast<double>(x.rows());
}

namespace {

void add_meta_row(ParamStore& store, const std::string& name, const std::vector<double>& row) {
    const std::size_t idx = store.add(name, 1, row.size());
    store.entry(idx).values = row;
}

std::vector<double> widths_as_doubles(const std::vector<std::size_t>& widths) {
    std::vector<double> out;
    out.reserve(widths.size());
    for (const std::size_t w : widths) out.push_back(static_cast<double>(w));
    return out;
}

std::vector<std::size_t> widths_from_entry(const ParamStore& store, const std::string& name,
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

ParamStore with_meta_stripped(const ParamStore& store) {
    ParamStore out;
    for (std::size_t i = 0; i < store.count(); ++i) {
        const ParamEntry& e = store.entry(i);
        if (e.name.rfind("meta.", 0) == 0) continue;
        const std::size_t idx = out.add(e.name, e.rows, e.cols);
        out.entry(idx).values = e.values;
    }
    return out;
}

}  // namespace

void save_decoder(const StochasticDecoder& dec, const std::filesystem::path& path) {
    ParamStore store;
    add_meta_row(store, "meta.widths", widths_as_doubles(dec.spec.widths));
    add_meta_row(store, "meta.d_z", {static_cast<double>(dec.d_z)});
    for (std::size_t i = 0; i < dec.params.count(); ++i) {
        const ParamEntry& e = dec.params.entry(i);
        const std::size_t idx = store.add(e.name, e.rows, e.cols);
        store.entry(idx).values = e.values;
    }
    save_params(store, path);
}

StochasticDecoder load_decoder(const std::filesystem::path& path) {
    const ParamStore store = load_params(path);
    StochasticDecoder dec;
    const auto widths = widths_from_entry(store, "meta.widths", path.string());
    dec.spec = MlpSpec{widths, Activation::leaky_relu, Activation::linear, 0.2};
    dec.spec.validate();
    if (!store.has("meta.d_z")) throw CheckpointError("missing 'meta.d_z' in " + path.string());
    const double dz = store.entry("meta.d_z").values.at(0);
    if (!(dz >= 1.0) || dz != std::floor(dz))
        throw CheckpointError("invalid meta.d_z in " + path.string());
    dec.d_z = static_cast<std::size_t>(dz);

    Rng dummy(0);
    init_mlp_params(dec.spec, dec.params, "", dummy);
    for (std::size_t l = 0; l < dec.depth(); ++l)
        dec.params.add(a_name(l), dec.d_z, dec.spec.widths[l + 1]);
    split_store(with_meta_stripped(store), {{"", &dec.params}});
    return dec;
}

void save_discriminator(const Discriminator& disc, const std::filesystem::path& path) {
    ParamStore store;
    add_meta_row(store, "meta.widths", widths_as_doubles(disc.spec.widths));
    for (std::size_t i = 0; i < disc.params.count(); ++i) {
        const ParamEntry& e = disc.params.entry(i);
        const std::size_t idx = store.add(e.name, e.rows, e.cols);
        store.entry(idx).values = e.values;
    }
    save_params(store, path);
}

Discriminator load_discriminator(const std::filesystem::path& path) {
    const ParamStore store = load_params(path);
    Discriminator disc;
    const auto widths = widths_from_entry(store, "meta.widths", path.string());
    disc.spec = MlpSpec{widths, Activation::leaky_relu, Activation::linear, 0.2};
    disc.spec.validate();
    Rng dummy(0);
    init_mlp_params(disc.spec, disc.params, "", dummy);
    split_store(with_meta_stripped(store), {{"", &disc.params}});
    return disc;
}

void save_decoder_history(const std::vector<DecoderHistoryRow>& history,
                          const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "iter,mse,adv_rec,adv_gen\n";
    char buf[160];
    for (const DecoderHistoryRow& row : history) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", row.iter, row.mse,
                      row.adv_rec, row.adv_gen);
        out << buf;
    }
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace scgan
