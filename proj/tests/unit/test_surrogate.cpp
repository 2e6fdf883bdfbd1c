#include <doctest.h>

#include <functional>

#include "mixmap/rng.hpp"
#include "mixmap/surrogate.hpp"
#include "support/oracles.hpp"

using namespace mixmap;

namespace {

TrainConfig small_config(std::uint64_t seed = 3) {
    TrainConfig c;
    c.n_trees = 30;
    c.seed = seed;
    c.threads = 1;
    return c;
}

struct FnModel : MixtureModel {
    std::function<double(const InputPoint&, std::size_t)> fn;
    double predict_single(const InputPoint& x, std::size_t j) const override { return fn(x, j); }
};

}  // namespace

TEST_CASE("config validation") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    auto bad = c;
    bad.n_trees = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = c;
    bad.holdout_fraction = 0.7;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = c;
    bad.blend_gamma = 1.5;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("holdout split") {
    auto s = split_holdout(1000, 0.1, 4);
    CHECK(s.holdout.size() == 100);
    CHECK(s.training.size() == 900);
    std::vector<std::size_t> all = s.training;
    all.insert(all.end(), s.holdout.begin(), s.holdout.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
    CHECK(std::is_sorted(s.holdout.begin(), s.holdout.end()));
    CHECK(split_holdout(1000, 0.1, 4).holdout == s.holdout);
    CHECK(split_holdout(1000, 0.1, 5).holdout != s.holdout);
}

TEST_CASE("boosted model on simple targets") {
    Rng rng(8);
    std::vector<InputPoint> x;
    for (int i = 0; i < 3000; ++i) x.push_back(uniform_sample(rng).ratios());

    SUBCASE("constant target") {
        std::vector<double> y(x.size(), 4.25);
        auto m = fit_boosted(x, y, small_config(), 0);
        CHECK(m.base_score == 4.25);
        for (int t = 0; t < 50; ++t) CHECK(m.predict(uniform_sample(rng).ratios()) == 4.25);
    }
    SUBCASE("structure and monotone loss") {
        std::vector<double> y;
        for (const auto& p : x) y.push_back(std::sin(6 * p[0]) + p[1] * p[2] * 10);
        auto cfg = small_config();
        cfg.max_depth = 4;
        auto m = fit_boosted(x, y, cfg, 1);
        CHECK(m.trees.size() == 30);
        CHECK(m.train_mse.size() == 31);
        for (std::size_t t = 1; t < m.train_mse.size(); ++t) CHECK(m.train_mse[t] <= m.train_mse[t - 1]);
        CHECK(m.train_mse.back() < 0.5 * m.train_mse.front());
        for (const auto& tree : m.trees) CHECK(tree.depth() <= 4);

        double mean = 0;
        for (double v : y) mean += v / y.size();
        CHECK(m.base_score == doctest::Approx(mean).epsilon(1e-12));

        // Dropping the last tree changes the prediction by lr * tree(x).
        for (int t = 0; t < 20; ++t) {
            auto p = uniform_sample(rng).ratios();
            const double full = m.predict(p);
            const double prefix = m.predict_prefix(p, m.trees.size() - 1);
            CHECK(full - prefix == doctest::Approx(m.learning_rate * m.trees.back().predict(p)).epsilon(1e-9));
        }
    }
    SUBCASE("noise-free linear target fits well") {
        std::vector<InputPoint> xs;
        for (int i = 0; i < 20000; ++i) xs.push_back(uniform_sample(rng).ratios());
        std::vector<double> y;
        for (const auto& p : xs) y.push_back(2 * p[0]);
        TrainConfig cfg;
        cfg.threads = 1;
        auto m = fit_boosted(std::vector<InputPoint>(xs.begin(), xs.begin() + 18000),
                             std::vector<double>(y.begin(), y.begin() + 18000), cfg, 0);
        double ss_res = 0, ss_tot = 0, mean = 0;
        for (std::size_t i = 18000; i < xs.size(); ++i) mean += y[i] / 2000;
        for (std::size_t i = 18000; i < xs.size(); ++i) {
            ss_res += std::pow(y[i] - m.predict(xs[i]), 2);
            ss_tot += std::pow(y[i] - mean, 2);
        }
        CHECK(1 - ss_res / ss_tot >= 0.99);
    }
}

TEST_CASE("ensemble blend rules") {
    auto ds = oracle::synth_dataset(800, 12);
    auto cfg = small_config();
    auto model = train(ds, cfg);
    Rng rng(2);
    for (int t = 0; t < 20; ++t) {
        const auto x = uniform_sample(rng).ratios();
        const auto all = model.predict(x);
        for (std::size_t j = 0; j < kOutputDims; ++j) {
            const double b = model.boosted(x, j), k = model.knn(x, j);
            CHECK(all[j] == model.predict_single(x, j));
            CHECK(all[j] == doctest::Approx(0.5 * b + 0.5 * k).epsilon(1e-12));
            CHECK(all[j] >= std::min(b, k) - 1e-12 * std::abs(b));
            CHECK(all[j] <= std::max(b, k) + 1e-12 * std::abs(b));
            if (j >= 48) CHECK(all[j] == (*ds)[0].output[j]);
        }
    }
    auto boosted_only = model;
    boosted_only.set_gamma(1.0);
    auto knn_only = model;
    knn_only.set_gamma(0.0);
    const auto x = uniform_sample(rng).ratios();
    for (std::size_t j = 0; j < kOutputDims; ++j) {
        CHECK(boosted_only.predict_single(x, j) == model.boosted(x, j));
        CHECK(knn_only.predict_single(x, j) == model.knn(x, j));
    }
    CHECK_THROWS_AS(model.set_gamma(-0.1), Error);
}

TEST_CASE("knn regressor matches inverse distance weighting") {
    auto ds = oracle::synth_dataset(500, 13);
    std::vector<std::size_t> rows(ds->size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    KnnRegressor knn(ds, rows, 5);
    Rng rng(6);
    for (int t = 0; t < 20; ++t) {
        const auto q = uniform_sample(rng).ratios();
        const auto ids = oracle::knn_input(*ds, q, 5);
        double wsum = 0, acc = 0;
        for (auto id : ids) {
            double d2 = 0;
            for (std::size_t i = 0; i < 6; ++i) d2 += std::pow(ds->record(id).input[i] - q[i], 2);
            const double w = 1.0 / (std::sqrt(d2) + 1e-12);
            wsum += w;
            acc += w * ds->record(id).output[7];
        }
        CHECK(knn.predict_single(q, 7) == doctest::Approx(acc / wsum).epsilon(1e-12));
    }
    // Exact match returns the stored outputs.
    CHECK(knn.predict((*ds)[10].input.ratios()) == (*ds)[10].output);
}

TEST_CASE("memorizing ensemble gives R2 = 1; mean predictor gives 0") {
    auto ds = oracle::synth_dataset(400, 14);
    auto cfg = small_config();
    cfg.knn_k = 1;
    cfg.blend_gamma = 0.0;
    auto model = train(ds, cfg);
    auto seen = ds->subset(model.training_rows());
    const auto scores = evaluate(model, seen);
    for (std::size_t j = 0; j < kOutputDims; ++j) {
        if (scores[j].constant) continue;
        CHECK(scores[j].r2 == 1.0);
        CHECK(scores[j].rmse == 0.0);
    }

    FnModel mean_model;
    const auto held = ds->subset(model.holdout_rows());
    OutputVector mean{};
    for (const auto& r : held.records())
        for (std::size_t j = 0; j < kOutputDims; ++j) mean[j] += r.output[j] / held.size();
    mean_model.fn = [&](const InputPoint&, std::size_t j) { return mean[j]; };
    const auto zero = evaluate(mean_model, held);
    for (std::size_t j = 0; j < 48; ++j) CHECK(zero[j].r2 == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(evaluate(mean_model, Dataset()), Error);
}

TEST_CASE("training is deterministic across thread counts and round trips") {
    auto ds = oracle::synth_dataset(600, 15);
    auto c1 = small_config(9);
    auto c4 = c1;
    c4.threads = 4;
    auto a = train(ds, c1);
    auto b = train(ds, c4);
    CHECK(a.fingerprint() == b.fingerprint());
    CHECK(a.serialize() == b.serialize());
    auto c = train(ds, small_config(10));
    CHECK(c.fingerprint() != a.fingerprint());

    oracle::TempDir dir("surrogate");
    a.save(dir / "m.bin");
    auto loaded = SurrogateEnsemble::load(dir / "m.bin", ds);
    CHECK(loaded.fingerprint() == a.fingerprint());
    Rng rng(1);
    for (int t = 0; t < 100; ++t) {
        const auto x = uniform_sample(rng).ratios();
        CHECK(loaded.predict(x) == a.predict(x));
    }
    auto other = oracle::synth_dataset(600, 16);
    CHECK_THROWS_AS(SurrogateEnsemble::load(dir / "m.bin", other), Error);
    CHECK_THROWS_AS(SurrogateEnsemble::deserialize("not a model", ds), Error);
}

TEST_CASE("too few records") {
    auto ds = oracle::synth_dataset(6, 1);
    CHECK_THROWS_AS(train(ds, small_config()), Error);
}
