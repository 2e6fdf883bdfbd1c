#include <csignal>
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "mixmap/fingerprint.hpp"
#include "mixmap/gateway.hpp"
#include "mixmap/oracle.hpp"
#include "mixmap/serialize.hpp"

using namespace mixmap;
using json = nlohmann::json;

namespace {

struct CommonFlags {
    std::string config, data, schema, model, embedding, input_embedding, log_dir, host;
    int port = -1;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = -1;
};

void add_common(CLI::App* app, CommonFlags& f) {
    app->add_option("--config", f.config, "JSON config file; flags override it");
    app->add_option("--data", f.data, "dataset CSV");
    app->add_option("--schema", f.schema, "column schema JSON");
    app->add_option("--model", f.model, "surrogate model file");
    app->add_option("--embedding", f.embedding, "output-space embedding file");
    app->add_option("--seed", f.seed, "seed")->each([&f](const std::string&) { f.seed_set = true; });
    app->add_option("--threads", f.threads, "worker threads (0: all cores)");
}

ServerConfig resolve(const CommonFlags& f) {
    ServerConfig c = f.config.empty() ? ServerConfig{} : ServerConfig::load(f.config);
    if (!f.data.empty()) c.data = f.data;
    if (!f.schema.empty()) c.schema = f.schema;
    if (!f.model.empty()) c.model = f.model;
    if (!f.embedding.empty()) c.embedding = f.embedding;
    if (!f.input_embedding.empty()) c.input_embedding = f.input_embedding;
    if (!f.log_dir.empty()) c.session_log_dir = f.log_dir;
    if (!f.host.empty()) c.host = f.host;
    if (f.port >= 0) c.port = f.port;
    if (f.seed_set) {
        c.seed = f.seed;
        c.train.seed = f.seed;
        c.tsne.seed = f.seed;
    }
    if (f.threads >= 0) {
        c.train.threads = f.threads;
        c.tsne.threads = f.threads;
    }
    return c;
}

ColumnSchema schema_of(const ServerConfig& c) {
    return c.schema.empty() ? ColumnSchema::generic() : ColumnSchema::load(c.schema);
}

DatasetPtr load_data(const ServerConfig& c) {
    if (c.data.empty()) throw Error(ErrorKind::validation, "--data is required", "data");
    auto ds = std::make_shared<Dataset>(load_dataset(c.data, schema_of(c), true));
    ds->set_stats(compute_stats(*ds));
    return ds;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

HttpServer* g_server = nullptr;

extern "C" void on_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mixmap: mixture exploration engine"};
    app.require_subcommand(1);

    CommonFlags f;

    auto* synth = app.add_subcommand("synth", "generate a synthetic oracle dataset");
    std::size_t n_samples = 20000;
    double noise = 0.01;
    std::string schema_out;
    synth->add_option("--n", n_samples, "number of records")->check(CLI::PositiveNumber);
    synth->add_option("--noise", noise, "noise std as a fraction of each output's range")->check(CLI::NonNegativeNumber);
    synth->add_option("--schema-out", schema_out, "also write the generic schema here");
    add_common(synth, f);

    auto* ingest = app.add_subcommand("ingest", "validate a dataset and write its binary cache");
    add_common(ingest, f);

    auto* trainc = app.add_subcommand("train", "fit and save the surrogate ensemble");
    add_common(trainc, f);

    auto* embed = app.add_subcommand("embed", "compute and save a 2-D embedding");
    std::string space = "output";
    bool exact = false;
    std::optional<int> n_iter;
    std::optional<double> perplexity;
    std::optional<std::size_t> cap;
    embed->add_option("--space", space, "output or input")->check(CLI::IsMember({"output", "input"}));
    embed->add_flag("--exact", exact, "exact gradient (theta = 0)");
    embed->add_option("--iterations", n_iter, "gradient steps");
    embed->add_option("--perplexity", perplexity, "perplexity");
    embed->add_option("--cap", cap, "subsample cap");
    add_common(embed, f);

    auto* serve = app.add_subcommand("serve", "run the HTTP JSON API");
    add_common(serve, f);
    serve->add_option("--input-embedding", f.input_embedding, "input-space embedding file");
    serve->add_option("--port", f.port, "listen port");
    serve->add_option("--host", f.host, "listen address");
    serve->add_option("--session-log-dir", f.log_dir, "write one session log per session here");
    bool train_on_start = false, embed_on_start = false;
    serve->add_flag("--train-on-start", train_on_start, "train when the model file is missing");
    serve->add_flag("--embed-on-start", embed_on_start, "embed when the embedding file is missing");

    auto* replay = app.add_subcommand("replay", "re-run a session log and print the final state");
    std::string log_path;
    replay->add_option("log", log_path, "session log (.jsonl)")->required();
    add_common(replay, f);

    auto* pathc = app.add_subcommand("path", "interpolate between two records and print JSON");
    RecordId from_id = 0, to_id = 0;
    std::size_t steps = kDefaultPathSteps;
    pathc->add_option("--from", from_id, "start record id")->required();
    pathc->add_option("--to", to_id, "end record id")->required();
    pathc->add_option("--steps", steps, "number of steps including endpoints")->check(CLI::Range(2, 100000));
    add_common(pathc, f);

    CLI11_PARSE(app, argc, argv);

    try {
        ServerConfig cfg = resolve(f);

        if (synth->parsed()) {
            if (cfg.data.empty()) throw Error(ErrorKind::validation, "--data (output path) is required", "data");
            auto spec = OracleSpec::standard(cfg.seed);
            spec.set_relative_noise(noise);
            const auto ds = generate(spec, n_samples, cfg.seed);
            write_csv(ds, cfg.data);
            if (!schema_out.empty()) ds.schema().save(schema_out);
            std::cout << "wrote " << ds.size() << " records to " << cfg.data.string() << "\n"
                      << "dataset fingerprint: " << ds.fingerprint() << "\n"
                      << "file fingerprint: " << fingerprint_file(cfg.data) << "\n";
            return 0;
        }

        if (ingest->parsed()) {
            if (cfg.data.empty()) throw Error(ErrorKind::validation, "--data is required", "data");
            LoadReport report;
            const Dataset ds = load_csv(cfg.data, schema_of(cfg), &report);
            write_cache(ds, cache_path_for(cfg.data));
            const auto stats = compute_stats(ds);
            std::cout << "records: " << report.rows << "\n"
                      << "renormalized rows: " << report.renormalized << "\n"
                      << "constant outputs: " << stats.n_constant() << "\n"
                      << "cache: " << cache_path_for(cfg.data).string() << "\n"
                      << "dataset fingerprint: " << ds.fingerprint() << "\n";
            return 0;
        }

        if (trainc->parsed()) {
            if (cfg.model.empty()) throw Error(ErrorKind::validation, "--model (output path) is required", "model");
            const auto ds = load_data(cfg);
            const auto model = train(ds, cfg.train);
            model.save(cfg.model);
            const auto holdout = ds->subset(model.holdout_rows());
            const auto scores = evaluate(model, holdout);
            double min_r2 = 1.0;
            for (std::size_t j = 0; j < scores.size(); ++j) {
                const auto& name = ds->schema().output_names[j];
                if (scores[j].constant) {
                    std::cout << name << " R2 n/a (constant) rmse " << fmt(scores[j].rmse) << "\n";
                } else {
                    std::cout << name << " R2 " << fmt(scores[j].r2) << " rmse " << fmt(scores[j].rmse) << "\n";
                    min_r2 = std::min(min_r2, scores[j].r2);
                }
            }
            std::cout << "min R2 (non-constant): " << fmt(min_r2) << "\n"
                      << "model fingerprint: " << model.fingerprint() << "\n";
            return 0;
        }

        if (embed->parsed()) {
            if (cfg.embedding.empty())
                throw Error(ErrorKind::validation, "--embedding (output path) is required", "embedding");
            const auto ds = load_data(cfg);
            if (exact) cfg.tsne.theta = 0.0;
            if (n_iter) cfg.tsne.n_iter = *n_iter;
            if (perplexity) cfg.tsne.perplexity = *perplexity;
            if (cap) cfg.tsne.subsample_cap = *cap;
            const auto map = embed_dataset(*ds, parse_space(space), cfg.tsne);
            map.save(cfg.embedding);
            std::cout << "embedded " << map.size() << " records (" << space << " space)\n";
            if (!map.kl_trace.empty()) {
                std::cout << "initial KL: " << fmt(map.kl_trace.front().kl) << "\n"
                          << "final KL: " << fmt(map.kl_trace.back().kl) << "\n";
            }
            std::cout << "embedding fingerprint: " << map.fingerprint() << "\n";
            return 0;
        }

        if (serve->parsed()) {
            cfg.train_on_start = cfg.train_on_start || train_on_start;
            cfg.embed_on_start = cfg.embed_on_start || embed_on_start;
            auto engine = build_engine(cfg, &std::cout);
            Api api(engine, cfg.page_size, cfg.session_log_dir);
            HttpServer server(api, cfg.host, cfg.port);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            server.run([&](int port) {
                std::cout << "listening on http://" << cfg.host << ":" << port << std::endl;
            });
            g_server = nullptr;
            return 0;
        }

        if (replay->parsed()) {
            auto engine = build_engine(cfg);
            const auto entries = read_log(log_path);
            const auto session = Session::replay(*engine, entries);
            json out = session.state().to_json();
            out["entries"] = entries.size();
            out["recorded_hash"] = entries.back().state_hash;
            out["hash_match"] = entries.back().state_hash == session.state().hash();
            std::cout << out.dump(2) << "\n";
            return out["hash_match"].get<bool>() ? 0 : 1;
        }

        if (pathc->parsed()) {
            auto engine = build_engine(cfg);
            const auto& ds = engine->dataset();
            const auto& a = ds.record(from_id);
            const auto& b = ds.record(to_id);
            const auto path = trace_path(engine->model(), engine->snap_index(), engine->output_map(),
                                         PathEndpoint{a.id, a.input}, PathEndpoint{b.id, b.input}, steps);
            std::cout << to_json(path).dump() << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what();
        if (!e.field().empty()) std::cerr << " [" << e.field() << "]";
        std::cerr << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
