#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pmsm/converter.hpp"
#include "pmsm/energy.hpp"
#include "pmsm/entropy.hpp"
#include "pmsm/error.hpp"
#include "pmsm/io.hpp"
#include "pmsm/runtime.hpp"
#include "pmsm/trainer.hpp"

namespace py = pybind11;
using namespace pmsm;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const FloatArray& a)
{
    Shape shape(a.shape(), a.shape() + a.ndim());
    return Tensor(std::move(shape), std::vector<float>(a.data(), a.data() + a.size()));
}

FloatArray to_array(const Tensor& t)
{
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    FloatArray out(shape);
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return out;
}

std::vector<Tensor> to_batch(const FloatArray& a, const Shape& sample_shape)
{
    const auto per = shape_size(sample_shape);
    if (a.ndim() < 1 || per == 0 || static_cast<std::size_t>(a.size()) % per != 0) {
        throw DimensionError("batch does not divide into samples of shape " +
                             shape_to_string(sample_shape));
    }
    std::vector<Tensor> out;
    for (std::size_t i = 0; i < static_cast<std::size_t>(a.size()) / per; ++i) {
        out.emplace_back(sample_shape, std::vector<float>(a.data() + i * per, a.data() + (i + 1) * per));
    }
    return out;
}

py::dict run_to_dict(const RunReport& r)
{
    py::dict d;
    d["timesteps"] = r.timesteps;
    d["labels"] = r.labels;
    d["thresholds"] = r.thresholds;
    d["spikes"] = r.spikes;
    py::list psp;
    for (const auto& t : r.psp) {
        psp.append(to_array(t));
    }
    d["psp"] = psp;
    d["head_output"] = to_array(r.head_output);
    d["prediction"] = decode_prediction(r);
    d["total_spike_events"] = r.total_spike_events;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Quantized ANN to multi-spike SNN conversion kernels";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<StructureError>(m, "StructureError", base.ptr());
    py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
    py::register_exception<NumericError>(m, "NumericError", base.ptr());
    py::register_exception<TrainingError>(m, "TrainingError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());

    py::class_<QuantParams>(m, "QuantParams")
        .def(py::init<int, double, double, double>(), py::arg("L") = 8, py::arg("theta") = 8.0,
             py::arg("alpha") = -0.25, py::arg("beta") = 1.0)
        .def_readwrite("L", &QuantParams::levels)
        .def_readwrite("theta", &QuantParams::theta)
        .def_readwrite("alpha", &QuantParams::alpha)
        .def_readwrite("beta", &QuantParams::beta)
        .def("validate", [](const QuantParams& q) { validate_quant_params(q); })
        .def("__repr__", [](const QuantParams& q) {
            return "QuantParams(L=" + std::to_string(q.levels) + ", theta=" +
                   io::format_double(q.theta) + ", alpha=" + io::format_double(q.alpha) +
                   ", beta=" + io::format_double(q.beta) + ")";
        });

    py::class_<AifParams>(m, "AifParams")
        .def_readonly("theta_snn", &AifParams::theta_snn)
        .def_readonly("c_neg", &AifParams::c_neg)
        .def_readonly("c_pos", &AifParams::c_pos)
        .def_readonly("v_init", &AifParams::v_init);

    m.def("pqa_forward", [](const QuantParams& q, const FloatArray& x) {
        return to_array(pqa_forward(q, to_tensor(x)));
    });
    m.def("pqa_indices", [](const QuantParams& q, const FloatArray& x) {
        return pqa_indices(q, to_tensor(x));
    });
    m.def("qa_forward", [](const QuantParams& q, const FloatArray& x) {
        return to_array(qa_forward(q, to_tensor(x)));
    });
    m.def("transfer_pqa_to_aif", &transfer_pqa_to_aif);

    py::class_<AnnModel>(m, "AnnModel")
        .def_static("load", &io::load_ann)
        .def("save", [](const AnnModel& a, const std::filesystem::path& p) { io::save_model(p, a); })
        .def_property_readonly("input_shape", [](const AnnModel& a) { return a.input_shape; })
        .def_property_readonly("layer_kinds", [](const AnnModel& a) {
            std::vector<std::string> k;
            for (const auto& l : a.layers) {
                k.push_back(layer_kind(l));
            }
            return k;
        })
        .def("forward", [](const AnnModel& a, const FloatArray& x) {
            return to_array(ann_forward(a, to_tensor(x).reshaped(a.input_shape)));
        });

    py::class_<SnnModel>(m, "SnnModel")
        .def_static("load", &io::load_snn)
        .def("save", [](const SnnModel& s, const std::filesystem::path& p) { io::save_model(p, s); })
        .def_property_readonly("input_shape", [](const SnnModel& s) { return s.input_shape; })
        .def_property_readonly("aif", [](const SnnModel& s) {
            std::vector<AifParams> out;
            for (auto i : s.spiking_layers()) {
                out.push_back(*s.layers[i].aif);
            }
            return out;
        });

    m.def("convert", &convert_model, py::arg("ann"));
    m.def("fold_batchnorm", &fold_batchnorm, py::arg("ann"));

    m.def(
        "run",
        [](const SnnModel& s, const FloatArray& x, int timesteps, bool teacher_forced) {
            const RunOptions opt{teacher_forced ? DriveMode::teacher_forced : DriveMode::propagated};
            return run_to_dict(run_snn(s, to_tensor(x).reshaped(s.input_shape), timesteps, opt));
        },
        py::arg("snn"), py::arg("x"), py::arg("timesteps"), py::arg("teacher_forced") = false);

    m.def(
        "verify",
        [](const AnnModel& a, const SnnModel& s, const FloatArray& batch) {
            const auto r = verify_equivalence(a, s, to_batch(batch, a.input_shape));
            py::dict d;
            d["samples"] = r.samples;
            d["max_abs_diff"] = r.max_abs_diff;
            d["argmax_agreement"] = r.argmax_agreement;
            d["index_mismatches"] = r.index_mismatches;
            d["neurons_checked"] = r.neurons_checked;
            return d;
        },
        py::arg("ann"), py::arg("snn"), py::arg("inputs"));

    m.def(
        "train_gaussians",
        [](std::uint64_t seed, std::size_t n, int epochs) {
            const auto data = gen_synthetic_dataset(DatasetKind::gaussians, n, seed);
            const auto [train, test] = train_test_split(data, 0.8, seed);
            TrainConfig cfg;
            cfg.seed = seed;
            cfg.epochs = epochs;
            auto result = train_ann(cfg, train);
            const double acc = eval_accuracy(result.model, test);
            return py::make_tuple(std::move(result.model), acc, to_array(test.points), test.labels);
        },
        py::arg("seed") = 42, py::arg("n") = 1000, py::arg("epochs") = 50);

    m.def("power", &power, py::arg("spikes"), py::arg("timesteps"),
          py::arg("eta") = kDefaultTimestepSeconds, py::arg("xi") = kDefaultJoulesPerSpike);

    m.def("entropy_bn", &entropy_bn);
    m.def("entropy_relu", [] {
        const auto r = entropy_relu();
        return py::make_tuple(r.value, r.ratio_to_bn, r.note);
    });
    m.def(
        "entropy_pqa",
        [](const QuantParams& q, const std::string& formula) {
            return entropy_pqa(q, entropy_formula_from_string(formula));
        },
        py::arg("q"), py::arg("formula") = "printed");
    m.def(
        "entropy_grid",
        [](int levels, double theta, const std::string& formula) {
            const auto g = entropy_ratio_grid(levels, theta, entropy_formula_from_string(formula));
            return py::make_tuple(g.alphas, g.betas, g.ratios);
        },
        py::arg("L"), py::arg("theta"), py::arg("formula") = "printed");
    m.def(
        "regime",
        [](const QuantParams& q, double tol) { return to_string(regime_classify(q, tol)); },
        py::arg("q"), py::arg("tolerance") = kDefaultRegimeTolerance);
}
