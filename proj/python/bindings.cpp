#include "mge/adversarial.hpp"
#include "mge/errors.hpp"
#include "mge/evolution.hpp"
#include "mge/fitness.hpp"
#include "mge/generator.hpp"
#include "mge/parallel.hpp"
#include "mge/pool_store.hpp"
#include "mge/train.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace mge;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::span<const double> view(const Array& a) { return {a.data(), static_cast<std::size_t>(a.size())}; }

Array to_array(const Vec& v) {
    Array a(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

py::dict candidate_dict(const Candidate& c) {
    py::dict d;
    d["id"] = c.id;
    d["params"] = c.params;
    d["val_accuracy"] = c.val_accuracy;
    d["accepted"] = c.accepted;
    d["op"] = c.lineage.op;
    d["parents"] = c.lineage.parents;
    return d;
}

} // namespace

PYBIND11_MODULE(_mge, m) {
    m.doc() = "Training-free model generation and evolution";

    static py::exception<Error> error(m, "MgeError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::handle(error)(std::string(error_kind_name(e.kind())) + ": " + e.what());
            exc.attr("kind") = error_kind_name(e.kind());
            exc.attr("exit_code") = exit_code(e.kind());
            PyErr_SetObject(error.ptr(), exc.ptr());
        }
    });

    m.def("set_workers", &set_worker_count, py::arg("n"));
    m.def("workers", &worker_count);

    m.def("dct2", [](const Array& x) { return to_array(dct2(view(x))); }, py::arg("x"));
    m.def("idct2", [](const Array& c) { return to_array(idct2(view(c))); }, py::arg("c"));
    m.def("cumulative_energy", [](const Array& c) { return to_array(cumulative_energy(view(c))); }, py::arg("c"));
    m.def(
        "importance_mask",
        [](const Array& layer, double t) {
            const LayerMask mask = importance_mask(view(layer), t);
            py::array_t<bool> out(static_cast<py::ssize_t>(mask.size()));
            auto w = out.mutable_unchecked<1>();
            for (std::size_t i = 0; i < mask.size(); ++i) w(static_cast<py::ssize_t>(i)) = mask.retained[i] != 0;
            return py::make_tuple(out, mask.retained_fraction);
        },
        py::arg("layer"), py::arg("t"));
    m.def(
        "sample_latent",
        [](double z, std::size_t count, std::uint64_t seed) {
            RngStream rng(seed);
            return to_array(sample_bounded_normal(z, count, rng));
        },
        py::arg("z"), py::arg("count"), py::arg("seed") = 0);
    m.def("ks_statistic", [](const Array& a, const Array& b) { return ks_statistic(view(a), view(b)); });
    m.def("accept", &accept, py::arg("candidate_accuracy"), py::arg("base_accuracy"), py::arg("epsilon") = 0.05);
    m.def("time_ratio", &time_ratio, py::arg("t_generated"), py::arg("t_trained"));

    py::class_<Dataset>(m, "Dataset")
        .def_property_readonly("size", &Dataset::size)
        .def_property_readonly("dim", &Dataset::dim)
        .def_readonly("classes", &Dataset::classes)
        .def_property_readonly("features",
                               [](const Dataset& d) {
                                   Array a({static_cast<py::ssize_t>(d.size()), static_cast<py::ssize_t>(d.dim())});
                                   std::copy(d.features.begin(), d.features.end(), a.mutable_data());
                                   return a;
                               })
        .def_readonly("labels", &Dataset::labels)
        .def("slice", [](const Dataset& d, std::size_t begin, std::size_t end) { return d.slice(begin, end, d.split); });

    m.def(
        "make_blobs",
        [](std::size_t n, std::size_t classes, std::size_t dim, double noise, std::uint64_t seed,
           std::optional<std::uint64_t> center_seed) {
            SyntheticSpec s;
            s.n = n;
            s.classes = classes;
            s.dim = dim;
            s.noise = noise;
            s.seed = seed;
            s.center_seed = center_seed.value_or(seed);
            return make_synthetic(s);
        },
        py::arg("n"), py::arg("classes") = 4, py::arg("dim") = 16, py::arg("noise") = 0.15, py::arg("seed") = 0,
        py::arg("center_seed") = py::none());

    py::class_<NetworkSpec>(m, "NetworkSpec")
        .def_readonly("classes", &NetworkSpec::classes)
        .def_readonly("input_shape", &NetworkSpec::input_shape)
        .def_property_readonly("input_size", &NetworkSpec::input_size);
    m.def("make_mlp", &make_mlp, py::arg("inputs"), py::arg("hidden"), py::arg("classes"));
    m.def("make_lenet", &make_lenet_like, py::arg("channels"), py::arg("side"), py::arg("classes"));

    py::class_<ParamSet>(m, "ParamSet")
        .def("__len__", &ParamSet::size)
        .def_property_readonly("parameter_count", &ParamSet::parameter_count)
        .def_property_readonly("names",
                               [](const ParamSet& p) {
                                   std::vector<std::string> out;
                                   for (const auto& t : p.tensors()) out.push_back(t.name);
                                   return out;
                               })
        .def("tensor", [](const ParamSet& p, std::size_t i) {
            if (i >= p.size()) throw py::index_error("tensor index out of range");
            return to_array(p[i].values);
        })
        .def("flat", [](const ParamSet& p) { return to_array(p.flat()); })
        .def("rounded_f32", &ParamSet::rounded_f32)
        .def("__eq__", [](const ParamSet& a, const ParamSet& b) { return a == b; });

    m.def(
        "train",
        [](const NetworkSpec& spec, const Dataset& data, int epochs, double learning_rate, std::size_t batch_size,
           std::uint64_t seed, const std::string& optimizer) {
            TrainConfig cfg;
            cfg.epochs = epochs;
            cfg.learning_rate = learning_rate;
            cfg.batch_size = batch_size;
            cfg.seed = seed;
            cfg.optimizer = parse_optimizer(optimizer);
            TrainResult r;
            {
                py::gil_scoped_release release;
                r = train(spec, data, cfg);
            }
            return py::make_tuple(r.params, r.seconds);
        },
        py::arg("spec"), py::arg("data"), py::arg("epochs") = 10, py::arg("learning_rate") = 0.001,
        py::arg("batch_size") = 32, py::arg("seed") = 0, py::arg("optimizer") = "adam");
    m.def("evaluate_accuracy", &evaluate_accuracy, py::arg("spec"), py::arg("params"), py::arg("data"));

    m.def(
        "generate_pool",
        [](const ParamSet& base, const NetworkSpec& spec, const Dataset& valset, std::size_t count, double t, double z,
           int n_D, double epsilon, std::uint64_t seed) {
            GeneratorConfig cfg;
            cfg.t = t;
            cfg.z = z;
            cfg.n_D = n_D;
            cfg.epsilon = epsilon;
            cfg.seed = seed;
            PoolResult r;
            {
                py::gil_scoped_release release;
                r = generate_pool(base, spec, cfg, valset, count);
            }
            py::list members;
            for (const auto& c : r.accepted) members.append(candidate_dict(c));
            py::dict d;
            d["members"] = members;
            d["attempts"] = r.attempts;
            d["seconds"] = r.seconds;
            d["base_accuracy"] = r.base_accuracy;
            return d;
        },
        py::arg("base"), py::arg("spec"), py::arg("valset"), py::arg("count") = 10, py::arg("t") = 0.8,
        py::arg("z") = 0.2, py::arg("n_D") = 100, py::arg("epsilon") = 0.05, py::arg("seed") = 0);

    m.def(
        "fgsm",
        [](const NetworkSpec& spec, const ParamSet& params, const Array& x, int label, double eps,
           std::optional<int> target) {
            const AdvExample ex = target ? fgsm_targeted(spec, params, view(x), label, *target, eps)
                                         : fgsm(spec, params, view(x), label, eps);
            return to_array(ex.perturbed);
        },
        py::arg("spec"), py::arg("params"), py::arg("x"), py::arg("label"), py::arg("eps"), py::arg("target") = py::none());
    m.def("robust_accuracy", &robust_accuracy, py::arg("spec"), py::arg("params"), py::arg("data"), py::arg("eps"));

    m.def(
        "evolve",
        [](const ParamSet& base, const NetworkSpec& spec, const Dataset& valset, int generations, std::size_t parents,
           std::size_t mutations, std::size_t fusions, double attack_eps, double gamma, std::uint64_t seed) {
            EvolutionConfig e;
            e.generations = generations;
            e.parents = parents;
            e.mutations = mutations;
            e.fusions = fusions;
            e.seed = seed;
            GeneratorConfig g;
            g.seed = seed;
            const FitnessConfig fit{Criterion::accuracy(valset), Criterion::robust_accuracy(valset, attack_eps), gamma};
            EvolutionResult r;
            {
                py::gil_scoped_release release;
                const Generator gen(spec, base, g, valset);
                r = evolve(gen, e, fit);
            }
            py::list max_fitness;
            for (const auto& rec : r.history) max_fitness.append(rec.max_fitness);
            py::dict d;
            d["best"] = candidate_dict(r.best.candidate);
            d["best_fitness"] = r.best.fitness;
            d["max_fitness"] = max_fitness;
            d["history_csv"] = r.history_csv();
            return d;
        },
        py::arg("base"), py::arg("spec"), py::arg("valset"), py::arg("generations") = 10, py::arg("parents") = 10,
        py::arg("mutations") = 10, py::arg("fusions") = 20, py::arg("attack_eps") = 0.1, py::arg("gamma") = 1.0,
        py::arg("seed") = 0);

    m.def(
        "save_model", [](const ParamSet& p, const std::filesystem::path& path) { return save_model(p, path).hash; },
        py::arg("params"), py::arg("path"));
    m.def("load_model", &load_model, py::arg("path"));
}
