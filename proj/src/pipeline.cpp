#include "scgan/pipeline.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include "json.hpp"
#include "scgan/errors.hpp"
#include "scgan/eval.hpp"
#include "scgan/rng.hpp"
#include "scgan/svg.hpp"

namespace scgan {

namespace {

constexpr std::array<std::pair<Stage, const char*>, 7> kStageNames = {{
    {Stage::data, "data"},
    {Stage::encoder, "encoder"},
    {Stage::cluster, "cluster"},
    {Stage::mappers, "mappers"},
    {Stage::decoder, "decoder"},
    {Stage::evaluate, "evaluate"},
    {Stage::plot, "plot"},
}};

}  // namespace

const char* to_string(Stage stage) {
    for (const auto& [key, name] : kStageNames)
        if (key == stage) return name;
    throw UsageError("unknown stage");
}

std::optional<Stage> stage_from_string(std::string_view name) {
    for (const auto& [key, str] : kStageNames)
        if (name == str) return key;
    return std::nullopt;
}

std::vector<Stage> all_stages() {
    std::vector<Stage> out;
    for (const auto& [key, name] : kStageNames) out.push_back(key);
    return out;
}

namespace {

struct ManifestEntry {
    std::string config;
    std::vector<std::string> files;
    double wall_time_s = 0.0;
};

using Manifest = std::map<std::string, ManifestEntry>;

Manifest load_manifest(const std::filesystem::path& path) {
    Manifest manifest;
    std::ifstream in(path);
    if (!in) return manifest;
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("manifest " + path.string() + ": " + e.what());
    }
    if (!doc.contains("stages")) return manifest;
    for (const auto& [name, entry] : doc["stages"].items()) {
        ManifestEntry m;
        m.config = entry.value("config", "");
        m.wall_time_s = entry.value("wall_time_s", 0.0);
        if (entry.contains("files"))
            for (const auto& f : entry["files"]) m.files.push_back(f.get<std::string>());
        manifest[name] = std::move(m);
    }
    return manifest;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    nlohmann::json stages = nlohmann::json::object();
    for (const auto& [name, entry] : manifest) {
        stages[name] = {{"config", entry.config},
                        {"files", entry.files},
                        {"wall_time_s", entry.wall_time_s}};
    }
    nlohmann::json doc = {{"stages", stages}};
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << doc.dump(2) << "\n";
    if (!out) throw IoError("write failed for " + path.string());
}

std::size_t stage_rank(Stage stage) {
    for (std::size_t i = 0; i < kStageNames.size(); ++i)
        if (kStageNames[i].first == stage) return i;
    throw UsageError("unknown stage");
}

// ---- per-stage artifact helpers ------------------------------------------

std::filesystem::path train_csv(const ExperimentConfig& c) { return c.output_dir / "train.csv"; }
std::filesystem::path test_csv(const ExperimentConfig& c) { return c.output_dir / "test.csv"; }
std::filesystem::path encoder_ckpt(const ExperimentConfig& c) { return c.output_dir / "encoder.ckpt"; }
std::filesystem::path latents_csv(const ExperimentConfig& c) { return c.output_dir / "latents.csv"; }
std::filesystem::path clusters_csv(const ExperimentConfig& c) { return c.output_dir / "clusters.csv"; }
std::filesystem::path assignments_csv(const ExperimentConfig& c) { return c.output_dir / "assignments.csv"; }

std::vector<std::string> run_data(const ExperimentConfig& cfg) {
    const Batch2D train =
        sample_dataset(cfg.dataset, cfg.n_train, derive_seed(cfg.seed, "data/train"));
    const Batch2D test =
        sample_dataset(cfg.dataset, cfg.n_test, derive_seed(cfg.seed, "data/test"));
    save_batch(train, train_csv(cfg));
    save_batch(test, test_csv(cfg));
    return {"train.csv", "test.csv"};
}

std::vector<std::string> run_encoder(const ExperimentConfig& cfg) {
    const Batch2D train = load_batch(train_csv(cfg));
    EncoderModel enc = make_encoder(cfg.encoder_hidden, cfg.d_eps, cfg.head_hidden,
                                    cfg.d_proj, derive_seed(cfg.seed, "encoder"));
    const EncoderHistory history =
        train_encoder(train, cfg.contrastive, enc, derive_seed(cfg.seed, "encoder"));
    save_encoder(enc, encoder_ckpt(cfg));
    save_encoder_history(history, cfg.output_dir / "encoder_loss.csv");
    save_matrix_csv(embed(enc, train), latents_csv(cfg), "e");
    return {"encoder.ckpt", "encoder_loss.csv", "latents.csv"};
}

std::vector<std::string> run_cluster(const ExperimentConfig& cfg) {
    const Matrix latents = load_matrix_csv(latents_csv(cfg), "e");
    const ClusterModel clusters =
        kmeans(latents, cfg.k(), derive_seed(cfg.seed, "cluster"), cfg.kmeans_max_iters);
    save_clusters(clusters, clusters_csv(cfg), assignments_csv(cfg));
    return {"clusters.csv", "assignments.csv"};
}

std::vector<std::string> run_mappers(const ExperimentConfig& cfg) {
    const Matrix latents = load_matrix_csv(latents_csv(cfg), "e");
    const ClusterModel clusters = load_clusters(clusters_csv(cfg), assignments_csv(cfg));
    const MapperEnsemble ensemble =
        train_mappers(latents, clusters, cfg.mapper, derive_seed(cfg.seed, "mappers"));
    save_mapper_ensemble(ensemble, cfg.output_dir);
    std::vector<std::string> files;
    for (std::size_t i = 0; i < ensemble.mappers.size(); ++i)
        files.push_back("mapper_" + std::to_string(i) + ".ckpt");
    return files;
}

// Shared loading for the decoder/evaluate/plot stages.
struct FrozenSources {
    EncoderModel enc;
    Matrix latents;
    GaussianFit gaussian;
    ClusterModel clusters;
    MapperEnsemble mappers;

    LatentSources view() const {
        LatentSources s;
        s.gaussian = &gaussian;
        s.clusters = &clusters;
        s.mappers = &mappers;
        s.train_latents = &latents;
        return s;
    }
};

FrozenSources load_sources(const ExperimentConfig& cfg) {
    FrozenSources src;
    src.enc = load_encoder(encoder_ckpt(cfg));
    src.latents = load_matrix_csv(latents_csv(cfg), "e");
    src.gaussian = fit_gaussian(src.latents);
    src.clusters = load_clusters(clusters_csv(cfg), assignments_csv(cfg));
    src.mappers = load_mapper_ensemble(cfg.output_dir, src.clusters.k);
    return src;
}

std::vector<std::string> run_decoder(const ExperimentConfig& cfg) {
    const Batch2D train = load_batch(train_csv(cfg));
    const FrozenSources src = load_sources(cfg);
    const LatentSources sources = src.view();

    std::vector<std::string> files;
    std::string runtime_lines = "mode,runtime_s\n";
    for (const LatentSamplingMode mode : cfg.modes) {
        DecoderTrainConfig dtc = cfg.decoder;
        dtc.mode = mode;
        const auto start = std::chrono::steady_clock::now();
        const DecoderRun run =
            train_decoder(src.enc, sources, train, dtc,
                          derive_seed(cfg.seed, std::string("decoder/") + to_string(mode)));
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        const std::string tag = to_string(mode);
        save_decoder(run.dec, cfg.output_dir / ("decoder_" + tag + ".ckpt"));
        save_discriminator(run.discs.rec, cfg.output_dir / ("drec_" + tag + ".ckpt"));
        save_discriminator(run.discs.gen, cfg.output_dir / ("dgen_" + tag + ".ckpt"));
        save_decoder_history(run.history, cfg.output_dir / ("history_" + tag + ".csv"));
        files.push_back("decoder_" + tag + ".ckpt");
        files.push_back("drec_" + tag + ".ckpt");
        files.push_back("dgen_" + tag + ".ckpt");
        files.push_back("history_" + tag + ".csv");

        char buf[64];
        std::snprintf(buf, sizeof buf, "%s,%.3f\n", tag.c_str(), elapsed);
        runtime_lines += buf;
    }
    std::ofstream rt(cfg.output_dir / "runtimes.csv", std::ios::trunc);
    if (!rt) throw IoError("cannot open runtimes.csv for writing");
    rt << runtime_lines;
    files.push_back("runtimes.csv");
    return files;
}

std::map<std::string, double> load_runtimes(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || (line != "mode,runtime_s" && line != "mode,runtime_s\r"))
        throw ParseError("unexpected header in " + path.string());
    std::map<std::string, double> out;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw ParseError("missing comma in " + path.string());
        out[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
    }
    return out;
}

std::vector<std::string> run_evaluate(const ExperimentConfig& cfg) {
    const Batch2D test = load_batch(test_csv(cfg));
    const FrozenSources src = load_sources(cfg);
    const LatentSources sources = src.view();
    const auto runtimes = load_runtimes(cfg.output_dir / "runtimes.csv");

    std::vector<ModeMetrics> measured;
    for (const LatentSamplingMode mode : cfg.modes) {
        const std::string tag = to_string(mode);
        const StochasticDecoder dec =
            load_decoder(cfg.output_dir / ("decoder_" + tag + ".ckpt"));
        DecoderTrainConfig dtc = cfg.decoder;
        dtc.mode = mode;

        ModeMetrics row;
        row.mode = mode;
        row.present = true;
        row.recon_mse = reconstruct_eval(dec, src.enc, test, fixed_bundle(dec, dtc));

        const Matrix eps = sample_latent(mode, cfg.n_generate, sources,
                                         derive_seed(cfg.seed, "eval/" + tag));
        Rng noise_rng(derive_seed(cfg.seed, "eval/noise/" + tag));
        const Matrix gen = decode_random(dec, eps, noise_rng);
        row.energy_distance = energy_distance(from_matrix(gen, tag), test);
        const auto rt = runtimes.find(tag);
        row.runtime_s = rt == runtimes.end() ? 0.0 : rt->second;
        measured.push_back(row);
    }

    const MetricReport report = build_report(cfg.dataset, cfg.fingerprint(), measured);
    save_report_csv(report, cfg.output_dir / "report.csv");
    std::ofstream txt(cfg.output_dir / "report.txt", std::ios::trunc);
    if (!txt) throw IoError("cannot open report.txt for writing");
    txt << format_report_table(report);
    return {"report.csv", "report.txt"};
}

// Latent plots show the first two coordinates when d_eps > 2.
Matrix plane_view(const Matrix& points) {
    if (points.cols() <= 2) return points;
    Matrix out(points.rows(), 2);
    for (std::size_t i = 0; i < points.rows(); ++i) {
        out(i, 0) = points(i, 0);
        out(i, 1) = points(i, 1);
    }
    return out;
}

PlotStyle latent_style(const Matrix& points, const std::string& title) {
    PlotStyle style;
    style.title = title;
    double lo = -1.0, hi = 1.0;
    for (std::size_t i = 0; i < points.rows(); ++i)
        for (std::size_t j = 0; j < points.cols(); ++j) {
            lo = std::min(lo, points(i, j));
            hi = std::max(hi, points(i, j));
        }
    const double pad = 0.05 * (hi - lo);
    style.world_min = lo - pad;
    style.world_max = hi + pad;
    return style;
}

std::vector<std::string> run_plot(const ExperimentConfig& cfg) {
    const Batch2D train = load_batch(train_csv(cfg));
    const FrozenSources src = load_sources(cfg);
    const LatentSources sources = src.view();

    std::vector<std::string> files;
    PlotStyle data_style;
    data_style.title = to_string(cfg.dataset);
    plot_scatter(train, data_style, cfg.output_dir / "fig_data.svg");
    files.push_back("fig_data.svg");

    std::vector<int> labels;
    for (const std::size_t a : src.clusters.assignments)
        labels.push_back(static_cast<int>(a));
    const Matrix lat_view = plane_view(src.latents);
    plot_scatter(lat_view, labels, latent_style(lat_view, "training latents"),
                 cfg.output_dir / "fig_latents.svg");
    files.push_back("fig_latents.svg");

    const std::size_t n_plot = std::min<std::size_t>(cfg.n_generate, 2048);
    for (const LatentSamplingMode mode : cfg.modes) {
        const std::string tag = to_string(mode);
        const Matrix eps =
            sample_latent(mode, n_plot, sources, derive_seed(cfg.seed, "plot/" + tag));
        const Matrix eps_view = plane_view(eps);
        plot_scatter(eps_view, {}, latent_style(eps_view, "latents: " + tag),
                     cfg.output_dir / ("fig_latent_" + tag + ".svg"));
        files.push_back("fig_latent_" + tag + ".svg");

        const StochasticDecoder dec =
            load_decoder(cfg.output_dir / ("decoder_" + tag + ".ckpt"));
        Rng noise_rng(derive_seed(cfg.seed, "plot/noise/" + tag));
        const Matrix gen = decode_random(dec, eps, noise_rng);
        PlotStyle gen_style;
        gen_style.title = "generated: " + tag;
        plot_scatter(gen, {}, gen_style, cfg.output_dir / ("fig_gen_" + tag + ".svg"));
        files.push_back("fig_gen_" + tag + ".svg");
    }
    return files;
}

}  // namespace

void run_stage(Stage stage, const ExperimentConfig& cfg) {
    cfg.validate();
    std::filesystem::create_directories(cfg.output_dir);
    const std::filesystem::path manifest_path = cfg.output_dir / "manifest.txt";
    Manifest manifest = load_manifest(manifest_path);
    const std::string fp = cfg.fingerprint();

    const std::size_t rank = stage_rank(stage);
    for (std::size_t r = 0; r < rank; ++r) {
        const char* name = kStageNames[r].second;
        const auto it = manifest.find(name);
        if (it == manifest.end())
            throw PrerequisiteError("stage '" + std::string(to_string(stage)) +
                                    "' requires stage '" + name + "'; run '" + name +
                                    "' first");
        if (it->second.config != fp)
            throw StaleArtifactError("stage '" + std::string(name) +
                                     "' artifacts were built with config " +
                                     it->second.config + " but the current config is " +
                                     fp + "; rerun from '" + name + "'");
    }

    const auto own = manifest.find(to_string(stage));
    if (own != manifest.end() && own->second.config == fp) {
        std::cout << "stage " << to_string(stage) << ": up-to-date, skipping\n";
        return;
    }

    const auto start = std::chrono::steady_clock::now();
    std::vector<std::string> files;
    switch (stage) {
        case Stage::data: files = run_data(cfg); break;
        case Stage::encoder: files = run_encoder(cfg); break;
        case Stage::cluster: files = run_cluster(cfg); break;
        case Stage::mappers: files = run_mappers(cfg); break;
        case Stage::decoder: files = run_decoder(cfg); break;
        case Stage::evaluate: files = run_evaluate(cfg); break;
        case Stage::plot: files = run_plot(cfg); break;
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    // This stage's outputs changed; everything downstream is now stale.
    for (std::size_t r = rank + 1; r < kStageNames.size(); ++r)
        manifest.erase(kStageNames[r].second);
    manifest[to_string(stage)] = ManifestEntry{fp, std::move(files), elapsed};
    save_manifest(manifest, manifest_path);
    std::cout << "stage " << to_string(stage) << ": done\n";
}

void run_all(const ExperimentConfig& cfg) {
    for (const Stage stage : all_stages()) run_stage(stage, cfg);
}

}  // namespace scgan
