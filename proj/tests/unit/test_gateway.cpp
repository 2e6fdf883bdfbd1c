#include <doctest.h>

#include <fstream>

#include <httplib.h>

#include "mixmap/gateway.hpp"
#include "mixmap/serialize.hpp"
#include "support/engine_fixture.hpp"

using namespace mixmap;
using nlohmann::json;

namespace {

std::shared_ptr<const Engine> shared_engine() {
    static std::shared_ptr<const Engine> e = oracle::small_engine(900, 4);
    return e;
}

ApiResponse call(Api& api, const std::string& method, const std::string& path, const json& body = nullptr,
                 std::map<std::string, std::string> query = {}) {
    return api.handle(ApiRequest{method, path, std::move(query), body.is_null() ? "" : body.dump()});
}

void check_error(const ApiResponse& r, int status, ErrorKind kind) {
    CHECK(r.status == status);
    REQUIRE(r.body.contains("error"));
    CHECK(r.body["error"]["code"] == to_string(kind));
    CHECK(r.body["error"]["message"].get<std::string>() != "");
}

}  // namespace

TEST_CASE("status mapping") {
    CHECK(http_status(ErrorKind::schema) == 400);
    CHECK(http_status(ErrorKind::parse) == 400);
    CHECK(http_status(ErrorKind::validation) == 400);
    CHECK(http_status(ErrorKind::invalid_argument) == 400);
    CHECK(http_status(ErrorKind::state) == 400);
    CHECK(http_status(ErrorKind::not_found) == 404);
    CHECK(http_status(ErrorKind::busy) == 409);
    CHECK(http_status(ErrorKind::io) == 500);
    const auto j = error_json(Error(ErrorKind::validation, "bad", "k"));
    CHECK(j == json{{"code", "validation_error"}, {"message", "bad"}, {"field", "k"}});
}

TEST_CASE("pagination") {
    json ids = json::array(), vals = json::array();
    for (int i = 0; i < 25; ++i) {
        ids.push_back(i);
        vals.push_back(i * 10);
    }
    json all_ids = json::array();
    for (std::size_t p = 0; p < 3; ++p) {
        const auto page = paginate(ids, vals, "v", p, 10);
        CHECK(page["total"] == 25);
        CHECK(page["n_pages"] == 3);
        for (std::size_t i = 0; i < page["ids"].size(); ++i) {
            CHECK(page["v"][i] == page["ids"][i].get<int>() * 10);
            all_ids.push_back(page["ids"][i]);
        }
    }
    CHECK(all_ids == ids);
    CHECK_THROWS_AS(paginate(ids, vals, "v", 3, 10), Error);
    CHECK(paginate(json::array(), json::array(), "v", 0, 10)["n_pages"] == 1);
}

TEST_CASE("read endpoints agree with direct calls") {
    auto engine = shared_engine();
    Api api(engine, 100);
    const auto& ds = engine->dataset();

    auto meta = call(api, "GET", "/api/meta");
    REQUIRE(meta.status == 200);
    CHECK(meta.body["n_records"] == ds.size());
    CHECK(meta.body["output_names"].size() == kOutputDims);
    CHECK(meta.body["embedded_records"] == engine->output_map().size());
    CHECK(meta.body["fingerprints"]["dataset"] == ds.fingerprint());
    CHECK(meta.body["fingerprints"]["model"] == engine->model().fingerprint());
    CHECK(meta.body["request"]["path"] == "/api/meta");

    // Embedding pages concatenate to the full map.
    std::vector<RecordId> ids;
    std::vector<Point2> xy;
    const auto first = call(api, "GET", "/api/embedding", nullptr, {{"page_size", "128"}});
    REQUIRE(first.status == 200);
    const std::size_t n_pages = first.body["n_pages"];
    for (std::size_t p = 0; p < n_pages; ++p) {
        const auto r = call(api, "GET", "/api/embedding", nullptr,
                            {{"page", std::to_string(p)}, {"page_size", "128"}, {"space", "output"}});
        REQUIRE(r.status == 200);
        for (std::size_t i = 0; i < r.body["ids"].size(); ++i) {
            ids.push_back(r.body["ids"][i]);
            xy.push_back({r.body["xy"][i][0], r.body["xy"][i][1]});
        }
    }
    CHECK(ids == engine->output_map().ids());
    CHECK(xy == engine->output_map().coords());
    CHECK(call(api, "GET", "/api/embedding").body["page_size"] == 100);
    check_error(call(api, "GET", "/api/embedding", nullptr, {{"page", "99"}}), 400, ErrorKind::validation);
    check_error(call(api, "GET", "/api/embedding", nullptr, {{"page_size", "0"}}), 400, ErrorKind::validation);
    check_error(call(api, "GET", "/api/embedding", nullptr, {{"space", "input"}}), 404, ErrorKind::not_found);

    const auto id = ds[3].id, sel = ds[8].id;
    const auto pt = call(api, "GET", "/api/point/" + std::to_string(id), nullptr, {{"selected", std::to_string(sel)}});
    REQUIRE(pt.status == 200);
    CHECK(pt.body["output"] == to_json(ds.record(id).output));
    const auto scores = similarity_scores(ds, sel);
    CHECK(pt.body["similarity_to_selection"] == scores.scores[ds.require_row(id)]);
    CHECK(pt.body["embed_xy"].is_null() == !engine->output_map().contains(id));
    check_error(call(api, "GET", "/api/point/12345678"), 404, ErrorKind::not_found);
    check_error(call(api, "GET", "/api/point/abc"), 400, ErrorKind::validation);

    const auto sim = call(api, "GET", "/api/similarity", nullptr, {{"selected", std::to_string(sel)}, {"page_size", "1000"}});
    REQUIRE(sim.status == 200);
    CHECK(sim.body["scores"] == json(scores.scores));
    check_error(call(api, "GET", "/api/similarity"), 400, ErrorKind::validation);

    const auto mix = ds.record(id).input;
    const json sbody{{"mixture", to_json(mix)}, {"output_index", 7}, {"n_samples", 10}, {"seed", 3}};
    const auto sens = call(api, "POST", "/api/sensitivity", sbody);
    REQUIRE(sens.status == 200);
    SmoothGradConfig cfg = engine->config().sensitivity;
    cfg.n_samples = 10;
    cfg.seed = 3;
    const auto direct = smoothgrad(engine->model(), mix.ratios(), 7, cfg);
    CHECK(sens.body["tangent"] == json(direct.tangent));
    CHECK(sens.body["values"] == json(direct.values));
    check_error(call(api, "POST", "/api/sensitivity", json{{"mixture", {1, 2, 3}}, {"output_index", 0}}), 400,
                ErrorKind::validation);
    check_error(call(api, "POST", "/api/sensitivity", json{{"mixture", to_json(mix)}, {"output_index", 64}}), 400,
                ErrorKind::validation);
    check_error(call(api, "POST", "/api/sensitivity", json{{"mixture", to_json(mix)}, {"output_index", 1},
                                                              {"sigma", -1.0}}),
                400, ErrorKind::validation);

    check_error(call(api, "GET", "/api/nothing"), 404, ErrorKind::not_found);
    check_error(call(api, "DELETE", "/api/meta"), 404, ErrorKind::not_found);
    check_error(api.handle(ApiRequest{"POST", "/api/session", {}, "{not json"}), 400, ErrorKind::parse);
}

TEST_CASE("session workflow through the api matches a direct session") {
    auto engine = shared_engine();
    oracle::TempDir dir("gateway");
    Api api(engine, 10000, dir.path);

    const auto created = call(api, "POST", "/api/session", json{{"seed", 12}});
    REQUIRE(created.status == 200);
    const std::string sid = created.body["session_id"];
    CHECK(sid == "s1");
    auto direct = Session::create(*engine, 12, sid);
    const std::string base = "/api/session/" + sid;

    auto r = call(api, "POST", base + "/input", json{{"dim", 1}, {"value", 0.3}});
    REQUIRE(r.status == 200);
    direct.adjust_input(1, 0.3);
    CHECK(r.body["mixture"] == to_json(direct.state().current_mixture));

    r = call(api, "POST", base + "/search", json{{"k", 4}});
    REQUIRE(r.status == 200);
    const auto hits = direct.search_initial(4);
    REQUIRE(r.body["hits"].size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(r.body["hits"][i]["id"] == hits[i].id);
        CHECK(r.body["hits"][i]["distance"] == hits[i].distance);
    }

    check_error(call(api, "POST", base + "/target", json{{"output_index", 2}, {"value", 1.0}}), 400, ErrorKind::state);

    r = call(api, "POST", base + "/select", json{{"record_id", hits[0].id}});
    REQUIRE(r.status == 200);
    direct.select_record(hits[0].id);
    const double tv = direct.suggest_target()[2] + 0.5;
    REQUIRE(call(api, "POST", base + "/target", json{{"output_index", 2}, {"value", tv}}).status == 200);
    direct.adjust_output_target(2, tv);

    r = call(api, "POST", base + "/suggest", json{{"k", 5}});
    REQUIRE(r.status == 200);
    const auto sug = direct.suggest(5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(r.body["hits"][i]["id"] == sug[i].id);

    r = call(api, "POST", base + "/interpolate", json{{"to_id", sug[4].id}, {"steps", 7}});
    REQUIRE(r.status == 200);
    const auto path = direct.interpolate_to(sug[4].id, 7);
    json stripped = r.body;
    stripped.erase("request");
    stripped.erase("fingerprints");
    CHECK(stripped == to_json(path));
    REQUIRE(r.body["path"].size() == 7);
    CHECK(r.body["path"][0]["lambda"] == 1.0);

    REQUIRE(call(api, "POST", base + "/commit", json{{"step_index", 3}}).status == 200);
    direct.commit_step(3);
    REQUIRE(call(api, "POST", base + "/clear", json::object()).status == 200);
    direct.clear_targets();
    r = call(api, "POST", base + "/pick", json{{"record_id", engine->dataset()[5].id}});
    REQUIRE(r.status == 200);
    direct.free_pick(engine->dataset()[5].id);
    CHECK(r.body["state_hash"] == direct.state().hash());

    r = call(api, "GET", base);
    CHECK(r.body["state_hash"] == direct.state().hash());
    r = call(api, "GET", base + "/history");
    REQUIRE(r.body["history"].size() == direct.state().history.size());

    // The session log replays to the same state.
    const auto replayed = Session::replay(*engine, read_log(dir / (sid + ".jsonl")));
    CHECK(replayed.state().hash() == direct.state().hash());

    check_error(call(api, "POST", base + "/input", json{{"dim", 9}, {"value", 0.3}}), 400, ErrorKind::validation);
    check_error(call(api, "POST", base + "/input", json{{"value", 0.3}}), 400, ErrorKind::validation);
    check_error(call(api, "POST", base + "/commit", json{{"step_index", 70}}), 400, ErrorKind::validation);
    check_error(call(api, "POST", base + "/interpolate", json{{"to_id", 99999999}}), 404, ErrorKind::not_found);
    check_error(call(api, "POST", base + "/warp", json::object()), 404, ErrorKind::not_found);
    check_error(call(api, "GET", "/api/session/s99"), 404, ErrorKind::not_found);

    // A session held by another request answers 409.
    auto held = api.slot(sid);
    {
        std::lock_guard lock(held->mutex);
        check_error(call(api, "GET", base), 409, ErrorKind::busy);
    }
    CHECK(call(api, "GET", base).status == 200);

    CHECK(call(api, "POST", "/api/session", json::object()).body["session_id"] == "s2");
}

TEST_CASE("server config") {
    const auto c = ServerConfig::from_json(json{{"data", "d.csv"},
                                                {"model", "m.json"},
                                                {"embedding", "e.csv"},
                                                {"port", 9000},
                                                {"engine", {{"beta", 2.5}}},
                                                {"train", {{"n_trees", 50}}},
                                                {"tsne", {{"perplexity", 12.0}}}});
    CHECK(c.data == "d.csv");
    CHECK(c.port == 9000);
    CHECK(c.engine.beta == 2.5);
    CHECK(c.train.n_trees == 50);
    CHECK(c.tsne.perplexity == 12.0);
    CHECK(c.page_size == 10000);
    const auto back = ServerConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());

    CHECK_THROWS_AS(ServerConfig::from_json(json{{"dtaa", "x"}}), Error);
    CHECK_THROWS_AS(ServerConfig::from_json(json{{"train", {{"n_tres", 3}}}}), Error);
    CHECK_THROWS_AS(ServerConfig::from_json(json{{"port", "eighty"}}), Error);

    oracle::TempDir dir("config");
    std::ofstream(dir / "c.json") << "{\"data\": \"x.csv\",";
    CHECK_THROWS_AS(ServerConfig::load(dir / "c.json"), Error);
    CHECK_THROWS_AS(ServerConfig::load(dir / "none.json"), Error);
}

TEST_CASE("http server serves the api") {
    Api api(shared_engine());
    HttpServer server(api, "127.0.0.1", 0);
    server.start();
    REQUIRE(server.port() > 0);
    httplib::Client client("127.0.0.1", server.port());
    auto res = client.Get("/api/meta");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body)["n_records"] == 900);

    res = client.Post("/api/session", "{\"seed\": 1}", "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    const std::string sid = json::parse(res->body)["session_id"];
    res = client.Post(("/api/session/" + sid + "/search").c_str(), "{\"k\": 3}", "application/json");
    REQUIRE(res);
    CHECK(json::parse(res->body)["hits"].size() == 3);

    res = client.Get("/api/embedding?page=0&page_size=5");
    REQUIRE(res);
    CHECK(json::parse(res->body)["ids"].size() == 5);

    res = client.Get("/nope");
    REQUIRE(res);
    CHECK(res->status == 404);
    server.stop();
}
