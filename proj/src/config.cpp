#include "scgan/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "scgan/errors.hpp"
#include "scgan/rng.hpp"

namespace scgan {

std::size_t default_k(DatasetId dataset) {
    switch (dataset) {
        case DatasetId::eight_gaussians: return 8;
        case DatasetId::checkerboard: return 8;
        case DatasetId::two_spirals: return 20;
        case DatasetId::abs: return 2;
        case DatasetId::sinewaved_cube: return 10;
        case DatasetId::four_circles: return 4;
    }
    throw UsageError("unknown dataset id");
}

std::size_t ExperimentConfig::k() const {
    return k_override ? *k_override : default_k(dataset);
}

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
    return v;
}

std::size_t parse_size(const std::string& key, const std::string& value) {
    return static_cast<std::size_t>(parse_u64(key, value));
}

double parse_double(const std::string& key, const std::string& value) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw ConfigError(key + ": expected a number, got '" + value + "'");
    return v;
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = value.find(',', start);
        if (comma == std::string::npos) {
            parts.push_back(trim(value.substr(start)));
            return parts;
        }
        parts.push_back(trim(value.substr(start, comma - start)));
        start = comma + 1;
    }
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    for (const std::string& part : split_list(value)) out.push_back(parse_size(key, part));
    return out;
}

std::string join_sizes(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                        const std::string& value) {
    using Setter = std::function<void(ExperimentConfig&, const std::string&)>;
    // Key table; every entry parses and assigns one field.
    static const std::map<std::string, Setter> setters = {
        {"dataset",
         [](ExperimentConfig& c, const std::string& v) {
             const auto id = dataset_from_string(v);
             if (!id) throw ConfigError("dataset: unknown dataset '" + v + "'");
             c.dataset = *id;
         }},
        {"n_train",
         [](ExperimentConfig& c, const std::string& v) { c.n_train = parse_size("n_train", v); }},
        {"n_test",
         [](ExperimentConfig& c, const std::string& v) { c.n_test = parse_size("n_test", v); }},
        {"seed",
         [](ExperimentConfig& c, const std::string& v) { c.seed = parse_u64("seed", v); }},
        {"output_dir",
         [](ExperimentConfig& c, const std::string& v) {
             if (v.empty()) throw ConfigError("output_dir: must not be empty");
             c.output_dir = v;
         }},
        {"encoder.d_eps",
         [](ExperimentConfig& c, const std::string& v) {
             c.d_eps = parse_size("encoder.d_eps", v);
         }},
        {"encoder.hidden",
         [](ExperimentConfig& c, const std::string& v) {
             c.encoder_hidden = parse_size_list("encoder.hidden", v);
         }},
        {"encoder.head_hidden",
         [](ExperimentConfig& c, const std::string& v) {
             c.head_hidden = parse_size_list("encoder.head_hidden", v);
         }},
        {"encoder.d_proj",
         [](ExperimentConfig& c, const std::string& v) {
             c.d_proj = parse_size("encoder.d_proj", v);
         }},
        {"encoder.temperature",
         [](ExperimentConfig& c, const std::string& v) {
             c.contrastive.temperature = parse_double("encoder.temperature", v);
         }},
        {"encoder.batch_size",
         [](ExperimentConfig& c, const std::string& v) {
             c.contrastive.batch_size = parse_size("encoder.batch_size", v);
         }},
        {"encoder.iterations",
         [](ExperimentConfig& c, const std::string& v) {
             c.contrastive.iterations = parse_size("encoder.iterations", v);
         }},
        {"encoder.sigma_aug",
         [](ExperimentConfig& c, const std::string& v) {
             c.contrastive.sigma_aug = parse_double("encoder.sigma_aug", v);
         }},
        {"encoder.lr",
         [](ExperimentConfig& c, const std::string& v) {
             c.contrastive.adam.lr = parse_double("encoder.lr", v);
         }},
        {"clustering.K",
         [](ExperimentConfig& c, const std::string& v) {
             c.k_override = parse_size("clustering.K", v);
         }},
        {"clustering.max_iters",
         [](ExperimentConfig& c, const std::string& v) {
             c.kmeans_max_iters = parse_size("clustering.max_iters", v);
         }},
        {"mapper.d_omega",
         [](ExperimentConfig& c, const std::string& v) {
             c.mapper.d_omega = parse_size("mapper.d_omega", v);
         }},
        {"mapper.hidden",
         [](ExperimentConfig& c, const std::string& v) {
             c.mapper.hidden = parse_size_list("mapper.hidden", v);
         }},
        {"mapper.lambda_eps",
         [](ExperimentConfig& c, const std::string& v) {
             c.mapper.lambda_eps = parse_double("mapper.lambda_eps", v);
         }},
        {"mapper.iterations",
         [](ExperimentConfig& c, const std::string& v) {
             c.mapper.iterations = parse_size("mapper.iterations", v);
         }},
        {"mapper.batch_size",
         [](ExperimentConfig& c, const std::string& v) {
             c.mapper.batch_size = parse_size("mapper.batch_size", v);
         }},
        {"mapper.lr",
         [](ExperimentConfig& c, const std::string& v) {
             c.mapper.adam.lr = parse_double("mapper.lr", v);
         }},
        {"mapper.disc_lr",
         [](ExperimentConfig& c, const std::string& v) {
             c.mapper.disc_adam.lr = parse_double("mapper.disc_lr", v);
         }},
        {"decoder.hidden",
         [](ExperimentConfig& c, const std::string& v) {
             c.decoder.hidden = parse_size_list("decoder.hidden", v);
         }},
        {"decoder.d_z",
         [](ExperimentConfig& c, const std::string& v) {
             c.decoder.d_z = parse_size("decoder.d_z", v);
         }},
        {"decoder.disc_hidden",
         [](ExperimentConfig& c, const std::string& v) {
             c.decoder.disc_hidden = parse_size_list("decoder.disc_hidden", v);
         }},
        {"decoder.lambda_x",
         [](ExperimentConfig& c, const std::string& v) {
             c.decoder.lambda_x = parse_double("decoder.lambda_x", v);
         }},
        {"decoder.gamma_rec",
         [](ExperimentConfig& c, const std::string& v) {
             c.decoder.gamma_rec = parse_double("decoder.gamma_rec", v);
         }},
        {"decoder.iterations",
         [](ExperimentConfig& c, const std::string& v) {
             c.decoder.iterations = parse_size("decoder.iterations", v);
         }},
        {"decoder.batch_size",
         [](ExperimentConfig& c, const std::string& v) {
             c.decoder.batch_size = parse_size("decoder.batch_size", v);
         }},
        {"decoder.lr",
         [](ExperimentConfig& c, const std::string& v) {
             c.decoder.adam.lr = parse_double("decoder.lr", v);
         }},
        {"decoder.disc_lr",
         [](ExperimentConfig& c, const std::string& v) {
             c.decoder.disc_adam.lr = parse_double("decoder.disc_lr", v);
         }},
        {"decoder.bundle_policy",
         [](ExperimentConfig& c, const std::string& v) {
             if (v == "zeros")
                 c.decoder.bundle_policy = BundlePolicy::zeros;
             else if (v == "frozen_sample")
                 c.decoder.bundle_policy = BundlePolicy::frozen_sample;
             else
                 throw ConfigError(
                     "decoder.bundle_policy: expected 'zeros' or 'frozen_sample', got '" +
                     v + "'");
         }},
        {"decoder.bundle_seed",
         [](ExperimentConfig& c, const std::string& v) {
             c.decoder.bundle_seed = parse_u64("decoder.bundle_seed", v);
         }},
        {"decoder.history_every",
         [](ExperimentConfig& c, const std::string& v) {
             c.decoder.history_every = parse_size("decoder.history_every", v);
         }},
        {"decoder.modes",
         [](ExperimentConfig& c, const std::string& v) {
             std::vector<LatentSamplingMode> modes;
             for (const std::string& part : split_list(v)) {
                 const auto mode = mode_from_string(part);
                 if (!mode)
                     throw ConfigError("decoder.modes: unknown mode '" + part + "'");
                 if (std::find(modes.begin(), modes.end(), *mode) != modes.end())
                     throw ConfigError("decoder.modes: duplicate mode '" + part + "'");
                 modes.push_back(*mode);
             }
             if (modes.empty()) throw ConfigError("decoder.modes: must not be empty");
             c.modes = std::move(modes);
         }},
        {"eval.n_generate",
         [](ExperimentConfig& c, const std::string& v) {
             c.n_generate = parse_size("eval.n_generate", v);
         }},
    };

    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown key '" + key + "'");
    it->second(cfg, value);
}

void ExperimentConfig::validate() const {
    if (n_train == 0) throw ConfigError("n_train: must be >= 1");
    if (n_test == 0) throw ConfigError("n_test: must be >= 1");
    if (d_eps == 0) throw ConfigError("encoder.d_eps: must be >= 1");
    if (d_proj == 0) throw ConfigError("encoder.d_proj: must be >= 1");
    for (const std::size_t w : encoder_hidden)
        if (w == 0) throw ConfigError("encoder.hidden: widths must be >= 1");
    for (const std::size_t w : head_hidden)
        if (w == 0) throw ConfigError("encoder.head_hidden: widths must be >= 1");
    contrastive.validate();
    if (k() == 0) throw ConfigError("clustering.K: must be >= 1");
    if (k() > n_train)
        throw ConfigError("clustering.K: must not exceed n_train (" +
                          std::to_string(k()) + " > " + std::to_string(n_train) + ")");
    if (kmeans_max_iters == 0) throw ConfigError("clustering.max_iters: must be >= 1");
    mapper.validate();
    decoder.validate();
    if (modes.empty()) throw ConfigError("decoder.modes: must not be empty");
    if (n_generate == 0) throw ConfigError("eval.n_generate: must be >= 1");
    if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
}

std::string ExperimentConfig::canonical() const {
    std::ostringstream out;
    out << "clustering.K=" << k() << "\n";
    out << "clustering.max_iters=" << kmeans_max_iters << "\n";
    out << "dataset=" << to_string(dataset) << "\n";
    out << "decoder.batch_size=" << decoder.batch_size << "\n";
    out << "decoder.bundle_policy="
        << (decoder.bundle_policy == BundlePolicy::zeros ? "zeros" : "frozen_sample")
        << "\n";
    out << "decoder.bundle_seed=" << decoder.bundle_seed << "\n";
    out << "decoder.d_z=" << decoder.d_z << "\n";
    out << "decoder.disc_hidden=" << join_sizes(decoder.disc_hidden) << "\n";
    out << "decoder.disc_lr=" << fmt_double(decoder.disc_adam.lr) << "\n";
    out << "decoder.gamma_rec=" << fmt_double(decoder.gamma_rec) << "\n";
    out << "decoder.hidden=" << join_sizes(decoder.hidden) << "\n";
    out << "decoder.history_every=" << decoder.history_every << "\n";
    out << "decoder.iterations=" << decoder.iterations << "\n";
    out << "decoder.lambda_x=" << fmt_double(decoder.lambda_x) << "\n";
    out << "decoder.lr=" << fmt_double(decoder.adam.lr) << "\n";
    std::string mode_list;
    for (std::size_t i = 0; i < modes.size(); ++i) {
        if (i) mode_list += ',';
        mode_list += to_string(modes[i]);
    }
    out << "decoder.modes=" << mode_list << "\n";
    out << "encoder.batch_size=" << contrastive.batch_size << "\n";
    out << "encoder.d_eps=" << d_eps << "\n";
    out << "encoder.d_proj=" << d_proj << "\n";
    out << "encoder.head_hidden=" << join_sizes(head_hidden) << "\n";
    out << "encoder.hidden=" << join_sizes(encoder_hidden) << "\n";
    out << "encoder.iterations=" << contrastive.iterations << "\n";
    out << "encoder.lr=" << fmt_double(contrastive.adam.lr) << "\n";
    out << "encoder.sigma_aug=" << fmt_double(contrastive.sigma_aug) << "\n";
    out << "encoder.temperature=" << fmt_double(contrastive.temperature) << "\n";
    out << "eval.n_generate=" << n_generate << "\n";
    out << "mapper.batch_size=" << mapper.batch_size << "\n";
    out << "mapper.d_omega=" << mapper.d_omega << "\n";
    out << "mapper.disc_lr=" << fmt_double(mapper.disc_adam.lr) << "\n";
    out << "mapper.hidden=" << join_sizes(mapper.hidden) << "\n";
    out << "mapper.iterations=" << mapper.iterations << "\n";
    out << "mapper.lambda_eps=" << fmt_double(mapper.lambda_eps) << "\n";
    out << "mapper.lr=" << fmt_double(mapper.adam.lr) << "\n";
    out << "n_test=" << n_test << "\n";
    out << "n_train=" << n_train << "\n";
    out << "seed=" << seed << "\n";
    return out.str();
}

std::string ExperimentConfig::fingerprint() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical())));
    return buf;
}

ExperimentConfig parse_config(const std::optional<std::filesystem::path>& file,
                              const std::vector<std::string>& overrides) {
    ExperimentConfig cfg;
    if (file) {
        std::ifstream in(*file);
        if (!in) throw IoError("cannot open config file " + file->string());
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.resize(hash);
            const std::string stripped = trim(line);
            if (stripped.empty()) continue;
            const std::size_t eq = stripped.find('=');
            if (eq == std::string::npos)
                throw ConfigError("line " + std::to_string(line_no) + " of " +
                                  file->string() + ": expected key=value");
            apply_config_entry(cfg, trim(stripped.substr(0, eq)),
                               trim(stripped.substr(eq + 1)));
        }
    }
    for (const std::string& entry : overrides) {
        const std::size_t eq = entry.find('=');
        if (eq == std::string::npos)
            throw ConfigError("override '" + entry + "': expected key=value");
        apply_config_entry(cfg, trim(entry.substr(0, eq)), trim(entry.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
}

}  // namespace scgan
