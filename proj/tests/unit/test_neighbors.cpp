#include <doctest.h>

#include "mixmap/rng.hpp"
#include "support/oracles.hpp"

using namespace mixmap;

namespace {

std::shared_ptr<Dataset> from_records(std::vector<SampleRecord> recs) {
    auto ds = std::make_shared<Dataset>(ColumnSchema::generic(), std::move(recs));
    ds->set_stats(compute_stats(*ds));
    return ds;
}

SampleRecord make(RecordId id, std::vector<double> in, double out0, double rest) {
    SampleRecord r;
    r.id = id;
    r.input = validate_mixture(in);
    r.output.fill(rest);
    r.output[0] = out0;
    return r;
}

}  // namespace

TEST_CASE("input index small cases") {
    auto one = from_records({make(0, {1, 0, 0, 0, 0, 0}, 1, 2)});
    InputIndex idx1(one);
    auto hits = idx1.query(uniform_sample(3), 5);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].id == 0);

    auto two = from_records({make(0, {1, 0, 0, 0, 0, 0}, 1, 2), make(1, {0, 1, 0, 0, 0, 0}, 3, 4)});
    InputIndex idx2(two);
    auto q = validate_mixture(std::vector<double>{0.9, 0.1, 0, 0, 0, 0});
    CHECK(idx2.query(q, 1)[0].id == 0);
    CHECK_THROWS_AS(idx2.query(q, 0), Error);

    auto exact = idx2.query((*two)[1].input, 2);
    CHECK(exact[0].id == 1);
    CHECK(exact[0].distance == 0.0);
}

TEST_CASE("input index equals brute force") {
    auto ds = oracle::synth_dataset(1000, 21);
    InputIndex idx(ds);
    Rng rng(3);
    for (int t = 0; t < 100; ++t) {
        const auto q = uniform_sample(rng);
        const auto hits = idx.query(q, 10);
        CHECK(oracle::hit_ids(hits) == oracle::knn_input(*ds, q.ratios(), 10));
        for (std::size_t i = 1; i < hits.size(); ++i) CHECK(hits[i - 1].distance <= hits[i].distance);
    }
    // Query at an existing record, and k beyond n.
    CHECK(idx.query((*ds)[77].input, 1)[0].id == (*ds)[77].id);
    CHECK(idx.query(uniform_sample(1), 5000).size() == 1000);
}

TEST_CASE("input ties resolve by id") {
    std::vector<SampleRecord> recs;
    for (RecordId id = 0; id < 40; ++id) recs.push_back(make(id, {0.5, 0.5, 0, 0, 0, 0}, id, 1));
    recs.push_back(make(40, {0.2, 0.2, 0.2, 0.2, 0.1, 0.1}, 0, 1));
    auto ds = from_records(recs);
    InputIndex idx(ds);
    auto hits = idx.query(validate_mixture(std::vector<double>{0.5, 0.5, 0, 0, 0, 0}), 7);
    for (std::size_t i = 0; i < hits.size(); ++i) CHECK(hits[i].id == i);
}

TEST_CASE("restricted input index") {
    auto ds = oracle::synth_dataset(500, 8);
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < ds->size(); r += 3) rows.push_back(r);
    InputIndex idx(ds, rows);
    auto sub = ds->subset(rows);
    Rng rng(9);
    for (int t = 0; t < 30; ++t) {
        auto q = uniform_sample(rng);
        CHECK(oracle::hit_ids(idx.query(q, 6)) == oracle::knn_input(sub, q.ratios(), 6));
    }
}

TEST_CASE("output queries equal brute force under several metrics") {
    auto ds = oracle::synth_dataset(1000, 33);
    OutputIndex idx(ds);
    Rng rng(4);
    const std::vector<std::size_t> adjusted{2, 19, 40};
    const auto unit = WeightedMetric::standardized(ds->stats());
    const auto boosted = WeightedMetric::emphasized(ds->stats(), adjusted, 4.0);
    for (int t = 0; t < 100; ++t) {
        const auto& base = (*ds)[rng.below(ds->size())].output;
        OutputVector target = base;
        for (auto j : adjusted) target[j] += ds->stats().output_std[j] * (rng.uniform() - 0.5);
        CHECK(oracle::hit_ids(idx.query(target, unit, 10)) ==
              oracle::knn_output(*ds, target, oracle::weights_for({}, 0.0), 10));
        CHECK(oracle::hit_ids(idx.query(target, boosted, 10)) ==
              oracle::knn_output(*ds, target, oracle::weights_for(adjusted, 4.0), 10));
        const auto nearest = idx.nearest(target);
        CHECK(nearest == idx.query(target, unit, 1)[0]);
    }
}

TEST_CASE("metric construction") {
    auto ds = oracle::synth_dataset(200, 2);
    const auto& st = ds->stats();
    const std::vector<std::size_t> adjusted{5, 50};
    auto m = WeightedMetric::emphasized(st, adjusted, 4.0);
    for (std::size_t j = 0; j < kOutputDims; ++j) {
        if (st.output_constant[j]) {
            CHECK(m.weights[j] == 0.0);
            CHECK(m.scales[j] == 1.0);
        } else {
            CHECK(m.weights[j] == (j == 5 ? 5.0 : 1.0));
            CHECK(m.scales[j] == st.output_std[j]);
        }
    }
    WeightedMetric zero = m;
    zero.weights.fill(0.0);
    OutputIndex idx(ds);
    CHECK_THROWS_AS(idx.query((*ds)[0].output, zero, 3), Error);
    CHECK_THROWS_AS(idx.query((*ds)[0].output, m, 0), Error);
}

TEST_CASE("single weighted dimension decides") {
    std::vector<SampleRecord> recs{make(0, {1, 0, 0, 0, 0, 0}, 5, 0), make(1, {0, 1, 0, 0, 0, 0}, 0, 100)};
    recs[1].output[7] = -3;
    auto ds = from_records(recs);
    WeightedMetric m = WeightedMetric::standardized(ds->stats());
    m.weights.fill(0.0);
    m.weights[0] = 1.0;
    OutputVector t{};
    t.fill(0.0);
    CHECK(OutputIndex(ds).query(t, m, 2)[0].id == 1);
}

TEST_CASE("nearest tie picks the lower id") {
    std::vector<SampleRecord> recs{make(0, {1, 0, 0, 0, 0, 0}, 0, 1), make(1, {0, 1, 0, 0, 0, 0}, 2, 1),
                                   make(2, {0, 0, 1, 0, 0, 0}, 4, 1)};
    auto ds = from_records(recs);
    OutputIndex idx(ds);
    OutputVector p = recs[0].output;
    p[0] = 1.0;  // equidistant from ids 0 and 1
    CHECK(idx.nearest(p).id == 0);
    p = recs[2].output;
    CHECK(idx.nearest(p).id == 2);
    CHECK(idx.nearest(p).distance == 0.0);
}

TEST_CASE("rankings are invariant to rescaling one output") {
    auto ds = oracle::synth_dataset(400, 5);
    auto scaled_recs = ds->records();
    for (auto& r : scaled_recs) r.output[3] *= 7.5;
    auto scaled = from_records(scaled_recs);
    OutputIndex a(ds), b(scaled);
    Rng rng(1);
    for (int t = 0; t < 30; ++t) {
        OutputVector target = (*ds)[rng.below(ds->size())].output;
        target[3] += 0.3;
        OutputVector target_b = target;
        target_b[3] *= 7.5;
        const std::vector<std::size_t> adj{3};
        auto ha = a.query(target, WeightedMetric::emphasized(ds->stats(), adj, 4.0), 8);
        auto hb = b.query(target_b, WeightedMetric::emphasized(scaled->stats(), adj, 4.0), 8);
        CHECK(oracle::hit_ids(ha) == oracle::hit_ids(hb));
    }
}

TEST_CASE("similarity scores") {
    std::vector<SampleRecord> recs{make(0, {1, 0, 0, 0, 0, 0}, 0, 1), make(1, {0, 1, 0, 0, 0, 0}, 2, 3),
                                   make(2, {0, 0, 1, 0, 0, 0}, 0, 1), make(3, {0, 0, 0, 1, 0, 0}, 9, 9)};
    auto ds = from_records(recs);
    auto s = similarity_scores(*ds, 0);
    REQUIRE(s.ids.size() == 4);
    CHECK(s.scores[0] == 1.0);
    CHECK(s.scores[2] == 1.0);
    CHECK(s.scores[3] == 0.0);
    CHECK(s.scores[1] > 0.0);
    CHECK(s.scores[1] < 1.0);
    CHECK_THROWS_AS(similarity_scores(*ds, 99), Error);
}
