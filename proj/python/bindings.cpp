#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mixmap/gateway.hpp"
#include "mixmap/oracle.hpp"
#include "mixmap/serialize.hpp"

namespace py = pybind11;
using namespace mixmap;

namespace {

InputMixture mixture_arg(const std::vector<double>& r) { return validate_mixture(r); }

std::shared_ptr<Dataset> with_stats(Dataset ds) {
    auto p = std::make_shared<Dataset>(std::move(ds));
    p->set_stats(compute_stats(*p));
    return p;
}

std::vector<std::pair<RecordId, double>> hits_out(const std::vector<NeighborHit>& hits) {
    std::vector<std::pair<RecordId, double>> out;
    for (const auto& h : hits) out.emplace_back(h.id, h.distance);
    return out;
}

}  // namespace

PYBIND11_MODULE(_mixmap, m) {
    m.doc() = "mixture exploration engine";

    py::register_exception<Error>(m, "MixmapError", PyExc_ValueError);

    m.def("uniform_sample", [](std::uint64_t seed) { return uniform_sample(seed).ratios(); }, py::arg("seed"));
    m.def("validate_mixture", [](const std::vector<double>& r) { return validate_mixture(r).ratios(); });
    m.def(
        "rescale_dimension",
        [](const std::vector<double>& r, std::size_t dim, double value) {
            return rescale_dimension(mixture_arg(r), dim, value).ratios();
        },
        py::arg("mixture"), py::arg("dim"), py::arg("value"));
    m.def("lambda_grid", &lambda_grid, py::arg("n_steps") = kDefaultPathSteps);
    m.def(
        "interpolate_inputs",
        [](const std::vector<double>& a, const std::vector<double>& b, std::size_t n) {
            std::vector<InputPoint> out;
            for (const auto& x : interpolate_inputs(mixture_arg(a), mixture_arg(b), n)) out.push_back(x.ratios());
            return out;
        },
        py::arg("x0"), py::arg("x1"), py::arg("n_steps") = kDefaultPathSteps);

    py::class_<Dataset, std::shared_ptr<Dataset>>(m, "Dataset")
        .def("__len__", &Dataset::size)
        .def("fingerprint", &Dataset::fingerprint)
        .def_property_readonly("ids",
                               [](const Dataset& d) {
                                   std::vector<RecordId> ids;
                                   for (const auto& r : d.records()) ids.push_back(r.id);
                                   return ids;
                               })
        .def_property_readonly("input_names", [](const Dataset& d) { return d.schema().input_names; })
        .def_property_readonly("output_names", [](const Dataset& d) { return d.schema().output_names; })
        .def("input", [](const Dataset& d, RecordId id) { return d.record(id).input.ratios(); })
        .def("output", [](const Dataset& d, RecordId id) { return d.record(id).output; })
        .def("write_csv", [](const Dataset& d, const std::filesystem::path& p) { write_csv(d, p); });

    m.def(
        "synth",
        [](std::size_t n, std::uint64_t seed, double noise) {
            auto spec = OracleSpec::standard(seed);
            spec.set_relative_noise(noise);
            return with_stats(generate(spec, n, seed));
        },
        py::arg("n"), py::arg("seed") = 0, py::arg("noise") = 0.01);
    m.def(
        "analytic_output",
        [](const std::vector<double>& x, std::uint64_t seed) {
            return analytic_output(OracleSpec::standard(seed), mixture_arg(x).ratios());
        },
        py::arg("x"), py::arg("seed") = 0);
    m.def(
        "load_dataset",
        [](const std::filesystem::path& csv, const std::filesystem::path& schema) {
            const auto s = schema.empty() ? ColumnSchema::generic() : ColumnSchema::load(schema);
            return with_stats(load_dataset(csv, s, false));
        },
        py::arg("path"), py::arg("schema") = std::filesystem::path());

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("n_trees", &TrainConfig::n_trees)
        .def_readwrite("max_depth", &TrainConfig::max_depth)
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("histogram_bins", &TrainConfig::histogram_bins)
        .def_readwrite("min_samples_leaf", &TrainConfig::min_samples_leaf)
        .def_readwrite("row_subsample", &TrainConfig::row_subsample)
        .def_readwrite("holdout_fraction", &TrainConfig::holdout_fraction)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("knn_k", &TrainConfig::knn_k)
        .def_readwrite("blend_gamma", &TrainConfig::blend_gamma)
        .def_readwrite("threads", &TrainConfig::threads);

    py::class_<SurrogateEnsemble, std::shared_ptr<SurrogateEnsemble>>(m, "Surrogate")
        .def("predict", [](const SurrogateEnsemble& s, const std::vector<double>& x) {
            return s.predict(mixture_arg(x));
        })
        .def("fingerprint", &SurrogateEnsemble::fingerprint)
        .def("save", &SurrogateEnsemble::save)
        .def("holdout_r2",
             [](const SurrogateEnsemble& s, const std::shared_ptr<Dataset>& ds) {
                 std::vector<std::optional<double>> out;
                 for (const auto& sc : evaluate(s, ds->subset(s.holdout_rows())))
                     out.push_back(sc.constant ? std::nullopt : std::optional<double>(sc.r2));
                 return out;
             })
        .def_static("load", [](const std::filesystem::path& p, std::shared_ptr<Dataset> ds) {
            return std::make_shared<SurrogateEnsemble>(SurrogateEnsemble::load(p, ds));
        });
    m.def(
        "train",
        [](std::shared_ptr<Dataset> ds, const TrainConfig& cfg) {
            py::gil_scoped_release release;
            return std::make_shared<SurrogateEnsemble>(train(ds, cfg));
        },
        py::arg("dataset"), py::arg("config") = TrainConfig());

    m.def(
        "smoothgrad",
        [](const SurrogateEnsemble& model, const std::vector<double>& x, std::size_t j, int n_samples, double sigma,
           std::uint64_t seed) {
            SmoothGradConfig cfg;
            cfg.n_samples = n_samples;
            cfg.sigma = sigma;
            cfg.seed = seed;
            const auto s = smoothgrad(model, mixture_arg(x).ratios(), j, cfg);
            return py::dict(py::arg("values") = s.values, py::arg("tangent") = s.tangent,
                            py::arg("sample_std") = s.sample_std, py::arg("clamp_count") = s.clamp_count);
        },
        py::arg("model"), py::arg("mixture"), py::arg("output_index"), py::arg("n_samples") = 50,
        py::arg("sigma") = 0.1, py::arg("seed") = 0);

    py::class_<TsneConfig>(m, "TsneConfig")
        .def(py::init<>())
        .def_readwrite("perplexity", &TsneConfig::perplexity)
        .def_readwrite("n_iter", &TsneConfig::n_iter)
        .def_readwrite("theta", &TsneConfig::theta)
        .def_readwrite("seed", &TsneConfig::seed)
        .def_readwrite("learning_rate", &TsneConfig::learning_rate)
        .def_readwrite("early_exaggeration", &TsneConfig::early_exaggeration)
        .def_readwrite("exaggeration_iters", &TsneConfig::exaggeration_iters)
        .def_readwrite("subsample_cap", &TsneConfig::subsample_cap)
        .def_readwrite("threads", &TsneConfig::threads);

    m.def(
        "tsne",
        [](const std::vector<std::vector<double>>& rows, const TsneConfig& cfg) {
            PointMatrix pm;
            pm.n = rows.size();
            pm.dim = rows.empty() ? 0 : rows[0].size();
            for (const auto& r : rows) {
                if (r.size() != pm.dim) throw Error(ErrorKind::validation, "ragged point rows", "points");
                pm.values.insert(pm.values.end(), r.begin(), r.end());
            }
            py::gil_scoped_release release;
            const auto res = tsne(pm, cfg);
            std::vector<std::pair<int, double>> kl;
            for (const auto& s : res.kl_trace) kl.emplace_back(s.iteration, s.kl);
            return std::make_pair(res.coords, kl);
        },
        py::arg("points"), py::arg("config") = TsneConfig());

    py::class_<EmbeddingMap, std::shared_ptr<EmbeddingMap>>(m, "EmbeddingMap")
        .def_property_readonly("ids", &EmbeddingMap::ids)
        .def_property_readonly("coords", &EmbeddingMap::coords)
        .def_property_readonly("space", [](const EmbeddingMap& e) { return std::string(to_string(e.space())); })
        .def_property_readonly("kl_trace",
                               [](const EmbeddingMap& e) {
                                   std::vector<std::pair<int, double>> kl;
                                   for (const auto& s : e.kl_trace) kl.emplace_back(s.iteration, s.kl);
                                   return kl;
                               })
        .def("fingerprint", &EmbeddingMap::fingerprint)
        .def("save", &EmbeddingMap::save)
        .def_static("load", [](const std::filesystem::path& p) {
            return std::make_shared<EmbeddingMap>(EmbeddingMap::load(p));
        });
    m.def(
        "embed",
        [](std::shared_ptr<Dataset> ds, const std::string& space, const TsneConfig& cfg) {
            py::gil_scoped_release release;
            return std::make_shared<EmbeddingMap>(embed_dataset(*ds, parse_space(space), cfg));
        },
        py::arg("dataset"), py::arg("space") = "output", py::arg("config") = TsneConfig());

    m.def(
        "query_input",
        [](std::shared_ptr<Dataset> ds, const std::vector<double>& x, std::size_t k) {
            return hits_out(InputIndex(ds).query(mixture_arg(x), k));
        },
        py::arg("dataset"), py::arg("mixture"), py::arg("k"));
    m.def(
        "query_output",
        [](std::shared_ptr<Dataset> ds, const std::vector<double>& target, std::size_t k,
           const std::vector<std::size_t>& adjusted, double beta) {
            if (target.size() != kOutputDims)
                throw Error(ErrorKind::validation, "target needs 64 values", "target");
            const auto metric = WeightedMetric::emphasized(ds->stats(), adjusted, beta);
            return hits_out(OutputIndex(ds).query(target, metric, k));
        },
        py::arg("dataset"), py::arg("target"), py::arg("k"), py::arg("adjusted") = std::vector<std::size_t>{},
        py::arg("beta") = 4.0);

    py::class_<Engine, std::shared_ptr<Engine>>(m, "Engine")
        .def(py::init([](std::shared_ptr<Dataset> ds, std::shared_ptr<SurrogateEnsemble> model,
                         std::shared_ptr<EmbeddingMap> map, double beta) {
                 EngineConfig cfg;
                 cfg.beta = beta;
                 return std::make_shared<Engine>(ds, model, map, nullptr, cfg);
             }),
             py::arg("dataset"), py::arg("model"), py::arg("embedding"), py::arg("beta") = 4.0);

    // In-process access to the HTTP API: same routing, same JSON.
    py::class_<Api, std::shared_ptr<Api>>(m, "Api")
        .def(py::init([](std::shared_ptr<Engine> engine, std::size_t page_size) {
                 return std::make_shared<Api>(engine, page_size);
             }),
             py::arg("engine"), py::arg("page_size") = 10000)
        .def(
            "handle",
            [](Api& api, const std::string& method, const std::string& path, const std::string& body,
               const std::map<std::string, std::string>& query) {
                ApiResponse r;
                {
                    py::gil_scoped_release release;
                    r = api.handle(ApiRequest{method, path, query, body});
                }
                return std::make_pair(r.status, r.body.dump());
            },
            py::arg("method"), py::arg("path"), py::arg("body") = "",
            py::arg("query") = std::map<std::string, std::string>{});
}
