// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "mixmap/gateway.hpp"
#include "mixmap/oracle.hpp"
#include "mixmap/pathfinder.hpp"
#include "mixmap/rng.hpp"
#include "mixmap/sensitivity.hpp"
#include "mixmap/serialize.hpp"
#include "mixmap/session.hpp"
#include "support/oracles.hpp"

using namespace mixmap;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

int g_failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
    if (!pass) ++g_failures;
    std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// --- subprocesses -----------------------------------------------------------

pid_t spawn(const std::vector<std::string>& args, const fs::path& log) {
    const pid_t pid = fork();
    if (pid == 0) {
        const int fd = open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        dup2(fd, 1);
        dup2(fd, 2);
        close(fd);
        std::vector<char*> argv;
        argv.push_back(const_cast<char*>(MIXMAP_CLI_PATH));
        for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
        argv.push_back(nullptr);
        execv(MIXMAP_CLI_PATH, argv.data());
        _exit(127);
    }
    return pid;
}

int wait_exit(pid_t pid) {
    int status = 0;
    waitpid(pid, &status, 0);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Runs the CLI to completion; returns exit code, output in *out.
int cli(const std::vector<std::string>& args, const fs::path& log, std::string* out = nullptr) {
    const int rc = wait_exit(spawn(args, log));
    if (out) *out = slurp(log);
    return rc;
}

// --- criteria ----------------------------------------------------------------

bool mixture_ok(const InputMixture& m) {
    double s = 0;
    for (std::size_t i = 0; i < kInputDims; ++i) {
        if (!(m[i] >= 0.0 && m[i] <= 1.0)) return false;
        s += m[i];
    }
    return std::abs(s - 1.0) <= 1e-9;
}

void simplex_suite() {
    Timer t;
    std::size_t checked = 0, bad = 0;
    for (std::uint64_t s = 0; s < 100000; ++s) {
        Rng rng(derive_seed(0xACCE55, s));
        auto a = uniform_sample(rng);
        const auto b = uniform_sample(rng);
        // Occasionally push to a vertex so the degenerate branch is exercised.
        const std::size_t d0 = rng.below(kInputDims);
        const double v0 = rng.below(8) == 0 ? 1.0 : rng.uniform();
        a = rescale_dimension(a, d0, v0);
        const auto r = rescale_dimension(a, rng.below(kInputDims), rng.uniform());
        const auto path = interpolate_inputs(r, b, 2 + rng.below(5));
        for (const InputMixture* m : std::initializer_list<const InputMixture*>{&a, &r, &b}) {
            ++checked;
            bad += !mixture_ok(*m);
        }
        for (const auto& m : path) {
            ++checked;
            bad += !mixture_ok(m);
        }
    }
    const double secs = t.seconds();
    report("simplex", bad == 0 && secs < 10.0,
           std::to_string(checked) + " mixtures from 1e5 sequences, " + std::to_string(bad) + " violations, " +
               fmt(secs) + " s (limit 10 s)");
}

void knn_equivalence() {
    auto ds = oracle::synth_dataset(2000, 31);
    Timer t;
    const InputIndex in(ds);
    const OutputIndex out(ds);
    const auto unit = WeightedMetric::standardized(ds->stats());
    const std::vector<double> unit_w(kOutputDims, 1.0);
    std::size_t total = 0, same = 0;
    Rng rng(77);
    for (int q = 0; q < 200; ++q) {
        const std::size_t k = 1 + rng.below(20);
        const auto x = uniform_sample(rng);
        total++;
        same += oracle::hit_ids(in.query(x, k)) == oracle::knn_input(*ds, x.ratios(), k);

        OutputVector target = (*ds)[rng.below(ds->size())].output;
        for (std::size_t j = 0; j < kOutputDims; ++j)
            if (!ds->stats().output_constant[j]) target[j] += 0.3 * ds->stats().output_std[j] * rng.normal();
        total++;
        same += oracle::hit_ids(out.query(target, unit, k)) == oracle::knn_output(*ds, target, unit_w, k);

        std::vector<std::size_t> adjusted;
        for (int a = 0; a < 3; ++a) adjusted.push_back(rng.below(48));
        std::sort(adjusted.begin(), adjusted.end());
        adjusted.erase(std::unique(adjusted.begin(), adjusted.end()), adjusted.end());
        const auto emph = WeightedMetric::emphasized(ds->stats(), adjusted, 4.0);
        total++;
        same += oracle::hit_ids(out.query(target, emph, k)) ==
                oracle::knn_output(*ds, target, oracle::weights_for(adjusted, 4.0), k);
    }
    const double secs = t.seconds();
    report("knn", same == total && secs < 30.0,
           std::to_string(same) + "/" + std::to_string(total) + " id lists identical to brute force, " + fmt(secs) +
               " s (limit 30 s)");
}

void snapping_equivalence() {
    auto ds = oracle::synth_dataset(2000, 32);
    TrainConfig tc;
    tc.n_trees = 40;
    tc.seed = 1;
    const auto model = train(ds, tc);
    TsneConfig cfg;
    cfg.subsample_cap = 1000;
    cfg.n_iter = 300;
    cfg.seed = 5;
    const auto map = embed_dataset(*ds, EmbeddingSpace::output, cfg);
    auto rows = map.rows_in(*ds);
    const OutputIndex snap(ds, rows);
    const std::vector<double> unit_w(kOutputDims, 1.0);
    std::size_t total = 0, same = 0;
    Rng rng(8);
    for (int p = 0; p < 50; ++p) {
        const auto& a = (*ds)[rng.below(ds->size())];
        const auto& b = (*ds)[rng.below(ds->size())];
        const auto path = trace_path(model, snap, map, PathEndpoint{a.id, a.input}, PathEndpoint{b.id, b.input}, 21);
        for (const auto& st : path.steps) {
            ++total;
            same += st.snapped_id == oracle::knn_output(*ds, st.predicted, unit_w, 1, &rows).front();
        }
    }
    report("snapping", same == total,
           std::to_string(same) + "/" + std::to_string(total) + " snapped ids equal the brute-force argmin");
}

struct TrainedOracle {
    std::shared_ptr<Dataset> ds;
    std::shared_ptr<SurrogateEnsemble> model;
    OracleSpec spec;
};

TrainedOracle surrogate_fidelity() {
    TrainedOracle o;
    o.spec = OracleSpec::standard(2024);
    o.spec.set_relative_noise(0.01);
    o.ds = std::make_shared<Dataset>(generate(o.spec, 20000, 2024));
    o.ds->set_stats(compute_stats(*o.ds));
    Timer t;
    o.model = std::make_shared<SurrogateEnsemble>(train(o.ds, TrainConfig{}));
    const double secs = t.seconds();

    double min_r2 = 1e300;
    std::size_t n_nonconst = 0, monotone = 0;
    for (std::size_t j = 0; j < kOutputDims; ++j) {
        const auto& mse = o.model->models()[j].train_mse;
        bool mono = mse.size() == o.model->models()[j].trees.size() + 1;
        for (std::size_t r = 1; r < mse.size(); ++r) mono = mono && mse[r] <= mse[r - 1];
        monotone += mono;

        double mean = 0;
        const auto& hold = o.model->holdout_rows();
        for (auto r : hold) mean += (*o.ds)[r].output[j];
        mean /= static_cast<double>(hold.size());
        double ss_res = 0, ss_tot = 0;
        for (auto r : hold) {
            const double y = (*o.ds)[r].output[j];
            const double e = y - o.model->predict((*o.ds)[r].input.ratios())[j];
            ss_res += e * e;
            ss_tot += (y - mean) * (y - mean);
        }
        if (o.spec.surfaces[j].kind == ResponseKind::constant) continue;
        ++n_nonconst;
        min_r2 = std::min(min_r2, 1.0 - ss_res / ss_tot);
    }
    report("surrogate", min_r2 >= 0.9 && monotone == kOutputDims && secs < 300.0,
           "min holdout R2 " + fmt(min_r2) + " over " + std::to_string(n_nonconst) +
               " non-constant dims (need >= 0.9), monotone MSE " + std::to_string(monotone) + "/64, train " +
               fmt(secs) + " s (limit 300 s)");
    return o;
}

struct AffineStub : MixtureModel {
    InputPoint a{};
    double predict_single(const InputPoint& x, std::size_t) const override {
        double s = 0.25;
        for (std::size_t i = 0; i < kInputDims; ++i) s += a[i] * x[i];
        return s;
    }
};

void sensitivity_fidelity(const TrainedOracle& o) {
    const std::vector<std::size_t> dims{0, 12, 24, 36, 47};
    bool dims_ok = true;
    for (auto j : dims) dims_ok = dims_ok && o.spec.surfaces[j].kind != ResponseKind::constant;
    double sum_tangent = 0, sum_raw = 0, min_tangent = 1;
    std::size_t n = 0;
    for (std::uint64_t p = 0; p < 20; ++p) {
        const auto x = uniform_sample(derive_seed(555, p)).ratios();
        for (auto j : dims) {
            SmoothGradConfig cfg;
            cfg.seed = p;
            const auto sg = smoothgrad(*o.model, x, j, cfg);
            const auto g = analytic_gradient(o.spec, x, j);
            const double ct = oracle::cosine(sg.tangent, oracle::centered(g));
            sum_tangent += ct;
            min_tangent = std::min(min_tangent, ct);
            sum_raw += oracle::cosine(sg.values, g);
            ++n;
        }
    }
    const double mean_tangent = sum_tangent / static_cast<double>(n);

    AffineStub stub;
    stub.a = {1.5, -2.0, 0.25, 3.0, 0.0, -0.75};
    double max_err = 0;
    for (std::uint64_t p = 0; p < 20; ++p) {
        SmoothGradConfig cfg;
        cfg.seed = p;
        const auto sg = smoothgrad(stub, uniform_sample(p).ratios(), 0, cfg);
        for (std::size_t i = 0; i < kInputDims; ++i) max_err = std::max(max_err, std::abs(sg.values[i] - stub.a[i]));
    }
    report("sensitivity", dims_ok && mean_tangent >= 0.95 && max_err <= 1e-9,
           "mean cosine " + fmt(mean_tangent) + " (min " + fmt(min_tangent) + ", need >= 0.95) over " +
               std::to_string(n) + " point/dim pairs on the sum-zero tangent; raw-vector cosine " +
               fmt(sum_raw / static_cast<double>(n)) + " (info); affine stub max error " + fmt(max_err, 3) +
               " (limit 1e-9)");
}

PointMatrix matrix(std::vector<double> values, std::size_t dim) {
    PointMatrix m;
    m.dim = dim;
    m.n = values.size() / dim;
    m.values = std::move(values);
    return m;
}

void tsne_quality() {
    auto [values, labels] = oracle::gaussian_clusters(100, 64, 1.0, 9, 0.1);
    const auto pts = matrix(values, 64);
    Timer t;
    const auto aff = compute_affinities(pts, 30.0);
    double psum = 0;
    for (double p : aff.p) psum += p;
    TsneConfig cfg;
    cfg.theta = 0.0;
    cfg.seed = 3;
    const auto res = tsne(pts, cfg);
    const double secs = t.seconds();
    const double kl0 = res.kl_trace.front().kl, kl1 = res.kl_trace.back().kl;
    const double sil = oracle::silhouette(res.coords, labels);
    report("tsne-exact", kl1 < kl0 && std::abs(psum - 1.0) <= 1e-6 && sil >= 0.5 && secs < 60.0,
           "300 points, KL " + fmt(kl0) + " -> " + fmt(kl1) + ", affinity sum error " + fmt(std::abs(psum - 1.0), 3) +
               ", silhouette " + fmt(sil) + " (need >= 0.5), " + fmt(secs) + " s (limit 60 s)");

    // Barnes-Hut against exact on 500 points from the same cluster family.
    auto [v500, l500] = oracle::gaussian_clusters(167, 64, 1.0, 10, 0.1);
    v500.resize(500 * 64);
    const auto c500 = matrix(v500, 64);
    TsneConfig c2;
    c2.seed = 4;
    c2.theta = 0.0;
    const auto exact = tsne(c500, c2);
    c2.theta = 0.5;
    const auto bh = tsne(c500, c2);
    const double corr = oracle::pearson(oracle::pairwise(exact.coords), oracle::pairwise(bh.coords));
    report("tsne-barnes-hut", corr >= 0.9,
           "500 clustered points, distance-matrix correlation exact vs theta 0.5 = " + fmt(corr) + " (need >= 0.9)");

    // Unclustered data has no reproducible layout: even theta 1e-9, which
    // differs from exact only in summation order, decorrelates.
    auto ds = oracle::synth_dataset(500, 33);
    std::vector<RecordId> ids;
    for (const auto& r : ds->records()) ids.push_back(r.id);
    const auto p500 = embedding_points(*ds, EmbeddingSpace::output, ids);
    c2.theta = 0.0;
    const auto ue = tsne(p500, c2);
    c2.theta = 0.5;
    const auto ub = tsne(p500, c2);
    c2.theta = 1e-9;
    const auto uz = tsne(p500, c2);
    const auto de = oracle::pairwise(ue.coords);
    std::cout << "INFO tsne-unclustered: 500 synthetic output vectors, correlation exact vs theta 0.5 = "
              << fmt(oracle::pearson(de, oracle::pairwise(ub.coords))) << ", exact vs theta 1e-9 = "
              << fmt(oracle::pearson(de, oracle::pairwise(uz.coords))) << std::endl;
}

void determinism(const fs::path& dir) {
    const auto d = [&](const char* name) { return (dir / name).string(); };
    std::vector<std::string> problems;
    auto expect = [&](bool ok, const std::string& what) {
        if (!ok) problems.push_back(what);
    };

    expect(cli({"synth", "--n", "600", "--seed", "12", "--data", d("a.csv")}, dir / "l1") == 0, "synth a");
    expect(cli({"synth", "--n", "600", "--seed", "12", "--data", d("b.csv")}, dir / "l2") == 0, "synth b");
    expect(slurp(dir / "a.csv") == slurp(dir / "b.csv") && !slurp(dir / "a.csv").empty(), "synth bytes");

    const std::vector<std::string> base{"--data", d("a.csv"), "--seed", "12"};
    auto with = [&](std::vector<std::string> head, std::vector<std::string> tail) {
        head.insert(head.end(), base.begin(), base.end());
        head.insert(head.end(), tail.begin(), tail.end());
        return head;
    };
    std::string o1, o2;
    expect(cli(with({"train"}, {"--model", d("m1.bin")}), dir / "t1", &o1) == 0, "train 1");
    expect(cli(with({"train"}, {"--model", d("m2.bin"), "--threads", "3"}), dir / "t2", &o2) == 0, "train 2");
    expect(slurp(dir / "m1.bin") == slurp(dir / "m2.bin") && !slurp(dir / "m1.bin").empty(), "model bytes");

    const std::vector<std::string> emb{"--exact", "--iterations", "400", "--perplexity", "20"};
    auto embed = [&](const char* out) {
        auto args = with({"embed"}, {"--embedding", d(out), "--model", d("m1.bin")});
        args.insert(args.end(), emb.begin(), emb.end());
        return args;
    };
    expect(cli(embed("e1.csv"), dir / "e1") == 0, "embed 1");
    expect(cli(embed("e2.csv"), dir / "e2") == 0, "embed 2");
    expect(slurp(dir / "e1.csv") == slurp(dir / "e2.csv") && !slurp(dir / "e1.csv").empty(), "embedding bytes");

    // A logged session replayed twice through the CLI.
    std::string live_hash;
    try {
        ServerConfig cfg;
        cfg.data = dir / "a.csv";
        cfg.model = dir / "m1.bin";
        cfg.embedding = dir / "e1.csv";
        Api api(build_engine(cfg), 10000, dir / "logs");
        auto post = [&](const std::string& path, const json& body) {
            auto r = api.handle({"POST", path, {}, body.dump()});
            if (r.status != 200) throw std::runtime_error(path + ": " + r.body.dump());
            return r.body;
        };
        const std::string sid = post("/api/session", {{"seed", 3}})["session_id"];
        const std::string b = "/api/session/" + sid;
        post(b + "/input", {{"dim", 4}, {"value", 0.35}});
        const auto hits = post(b + "/search", {{"k", 5}})["hits"];
        post(b + "/select", {{"record_id", hits[0]["id"]}});
        post(b + "/target", {{"output_index", 7}, {"value", 1.25}});
        const auto sug = post(b + "/suggest", {{"k", 4}})["hits"];
        post(b + "/interpolate", {{"to_id", sug[3]["id"]}, {"steps", 11}});
        live_hash = post(b + "/commit", {{"step_index", 5}})["state_hash"];
        const auto log = (dir / "logs" / (sid + ".jsonl")).string();
        std::string r1, r2;
        expect(cli(with({"replay", log}, {"--model", d("m1.bin"), "--embedding", d("e1.csv")}), dir / "r1", &r1) == 0,
               "replay 1");
        expect(cli(with({"replay", log}, {"--model", d("m1.bin"), "--embedding", d("e1.csv")}), dir / "r2", &r2) == 0,
               "replay 2");
        expect(r1 == r2, "replay output");
        expect(r1.find(live_hash) != std::string::npos && r1.find("\"hash_match\": true") != std::string::npos,
               "replay hash");
    } catch (const std::exception& e) {
        problems.push_back(std::string("session: ") + e.what());
    }

    std::string detail = problems.empty() ? "synth, train, embed --exact and session replay reproduce bit for bit"
                                          : "mismatch:";
    for (const auto& p : problems) detail += " [" + p + "]";
    report("determinism", problems.empty(), detail);
}

void end_to_end(const fs::path& dir) {
    Timer t;
    const auto d = [&](const char* name) { return (dir / name).string(); };
    std::vector<std::string> problems;
    auto expect = [&](bool ok, const std::string& what) {
        if (!ok) problems.push_back(what);
        return ok;
    };
    const std::vector<std::string> art{"--data", d("big.csv"), "--model", d("big.model"),
                                       "--embedding", d("big.embed.csv"), "--seed", "20"};
    auto with = [&](std::vector<std::string> head, std::vector<std::string> tail = {}) {
        head.insert(head.end(), art.begin(), art.end());
        head.insert(head.end(), tail.begin(), tail.end());
        return head;
    };
    Timer ts;
    const bool built = expect(cli(with({"synth"}, {"--n", "20000"}), dir / "synth.log") == 0, "synth") &&
                       expect(cli(with({"train"}), dir / "train.log") == 0, "train") &&
                       expect(cli(with({"embed"}), dir / "embed.log") == 0, "embed");
    const double build_secs = ts.seconds();

    pid_t server = -1;
    int port = 0;
    if (built) {
        server = spawn(with({"serve"}, {"--port", "0"}), dir / "serve.log");
        const std::regex ready("listening on http://[^:]+:([0-9]+)");
        for (int i = 0; i < 1200 && port == 0; ++i) {
            std::smatch m;
            const auto text = slurp(dir / "serve.log");
            if (std::regex_search(text, m, ready)) port = std::stoi(m[1]);
            else std::this_thread::sleep_for(std::chrono::milliseconds(100));
            int status = 0;
            if (port == 0 && waitpid(server, &status, WNOHANG) == server) {
                server = -1;
                break;
            }
        }
        expect(port > 0, "server did not become ready: " + slurp(dir / "serve.log"));
    }

    if (port > 0) {
        httplib::Client http("127.0.0.1", port);
        http.set_read_timeout(120, 0);
        std::uint64_t revision = 0;
        auto call = [&](const std::string& method, const std::string& path, const json& body = nullptr) -> json {
            auto res = method == "GET" ? http.Get(path) : http.Post(path, body.dump(), "application/json");
            if (!res) throw std::runtime_error(method + " " + path + ": no response");
            if (res->status != 200) throw std::runtime_error(method + " " + path + ": " + res->body);
            return json::parse(res->body);
        };
        // Every mutating call bumps the revision and GET reflects the same state.
        auto consistent = [&](const std::string& b, const std::string& what) {
            const auto s = call("GET", b);
            expect(s["revision"] == ++revision, what + " revision");
            expect(oracle::on_simplex(mixture_from_json(s["mixture"])), what + " mixture off simplex");
            const auto h = call("GET", b + "/history");
            expect(h["history"].back()["state_hash"] == s["state_hash"], what + " history hash");
            return s;
        };
        try {
            const auto meta = call("GET", "/api/meta");
            expect(meta["n_records"] == 20000, "meta n_records");
            const auto created = call("POST", "/api/session", {{"seed", 99}});
            const std::string b = "/api/session/" + created["session_id"].get<std::string>();
            revision = created["revision"];

            const auto hits = call("POST", b + "/search", {{"k", 10}})["hits"];
            auto s = consistent(b, "search");
            expect(hits.size() == 10, "search size");
            expect(s["current_record"].is_null(), "search anchored");

            const RecordId pick = hits[2]["id"];
            call("POST", b + "/select", {{"record_id", pick}});
            s = consistent(b, "select");
            expect(s["current_record"] == pick, "select record");
            const auto point = call("GET", "/api/point/" + std::to_string(pick));
            expect(s["mixture"] == point["input"], "select mixture");

            const std::size_t j = 20;
            const double target = point["output"][j].get<double>() + 2.0 * meta["stats"]["output_std"][j].get<double>();
            call("POST", b + "/target", {{"output_index", j}, {"value", target}});
            s = consistent(b, "target");
            expect(s["pending_adjustments"].size() == 1 && s["pending_adjustments"][0]["value"] == target,
                   "target recorded");

            const auto sug = call("POST", b + "/suggest", {{"k", 5}})["hits"];
            consistent(b, "suggest");
            expect(sug.size() == 5, "suggest size");
            // The boosted dimension moved toward the target.
            const double before = std::abs(point["output"][j].get<double>() - target);
            expect(std::abs(sug[0]["output"][j].get<double>() - target) < before, "suggest moved toward target");

            const RecordId to = sug[0]["id"];
            const auto path = call("POST", b + "/interpolate", {{"to_id", to}})["path"];
            consistent(b, "interpolate");
            expect(path.size() == 21, "path length");
            expect(path.front()["input"] == s["mixture"], "path start");
            expect(path.back()["input"] == call("GET", "/api/point/" + std::to_string(to))["input"], "path end");
            for (const auto& st : path) {
                const auto snapped = call("GET", "/api/point/" + st["snapped_id"].dump());
                expect(snapped["embed_xy"] == st["embed_xy"], "snapped point embedded");
            }

            call("POST", b + "/commit", {{"step_index", 10}});
            s = consistent(b, "commit");
            expect(s["current_record"] == path[10]["snapped_id"], "commit record");
            expect(s["mixture"] == path[10]["input"], "commit mixture");
            expect(s["pending_adjustments"].empty(), "commit clears targets");
        } catch (const std::exception& e) {
            problems.push_back(e.what());
        }
    }
    if (server > 0) {
        kill(server, SIGTERM);
        expect(wait_exit(server) == 0, "server exit status");
    }
    const double secs = t.seconds();
    expect(secs < 600.0, "over 10 min");
    std::string detail = "synth 20k + train + embed " + fmt(build_secs) + " s, total " + fmt(secs) +
                         " s (limit 600 s); search, select, target, suggest, interpolate, commit mid-step consistent";
    if (!problems.empty()) {
        detail = "problems:";
        for (const auto& p : problems) detail += " [" + p + "]";
    }
    report("end-to-end", problems.empty(), detail);
}

}  // namespace

int main() {
    std::cout.setf(std::ios::unitbuf);
    const fs::path work = fs::temp_directory_path() / ("mixmap-acceptance-" + std::to_string(getpid()));
    fs::create_directories(work / "det");
    fs::create_directories(work / "e2e");

    simplex_suite();
    knn_equivalence();
    snapping_equivalence();
    const auto trained = surrogate_fidelity();
    sensitivity_fidelity(trained);
    tsne_quality();
    determinism(work / "det");
    end_to_end(work / "e2e");

    std::error_code ec;
    fs::remove_all(work, ec);
    std::cout << (g_failures == 0 ? "all criteria passed" : std::to_string(g_failures) + " criteria failed")
              << std::endl;
    return g_failures == 0 ? 0 : 1;
}
