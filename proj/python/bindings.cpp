#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "commands.hpp"
#include "polyglot/dataset.hpp"
#include "polyglot/diffusion.hpp"
#include "polyglot/errors.hpp"
#include "polyglot/metrics.hpp"
#include "polyglot/morphable.hpp"
#include "polyglot/paf.hpp"

namespace py = pybind11;
using namespace polyglot;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

py::array_t<float> to_numpy(const PafArray& a) {
    std::vector<py::ssize_t> shape(a.dims.begin(), a.dims.end());
    py::array_t<float> out(shape);
    std::copy(a.values.begin(), a.values.end(), out.mutable_data());
    return out;
}

PafArray from_numpy(const FloatArray& a) {
    PafArray out;
    for (py::ssize_t i = 0; i < a.ndim(); ++i) {
        out.dims.push_back(static_cast<std::uint32_t>(a.shape(i)));
    }
    out.values.assign(a.data(), a.data() + a.size());
    return out;
}

py::dict paf_to_dict(const PafFile& f) {
    py::dict out;
    for (const auto& [name, array] : f.entries()) {
        out[py::str(name)] = to_numpy(array);
    }
    return out;
}

PafFile dict_to_paf(const py::dict& d) {
    PafFile f;
    for (const auto& [key, value] : d) {
        f.set(py::cast<std::string>(key), from_numpy(py::cast<FloatArray>(value)));
    }
    return f;
}

Matrix to_matrix(const FloatArray& a) {
    if (a.ndim() != 2) {
        throw ShapeError("expected a 2-D array");
    }
    Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), m.data.begin());
    return m;
}

py::object json_to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json py_to_json(const py::object& o) {
    return nlohmann::json::parse(py::cast<std::string>(py::module_::import("json").attr("dumps")(o)));
}

py::list records_to_py(const std::vector<SampleRecord>& rs) {
    py::list out;
    for (const auto& r : rs) {
        out.append(json_to_py(nlohmann::json(r)));
    }
    return out;
}

std::vector<SampleRecord> records_from_py(const py::list& rs) {
    std::vector<SampleRecord> out;
    for (const auto& r : rs) {
        out.push_back(py_to_json(py::reinterpret_borrow<py::object>(r)).get<SampleRecord>());
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(polyglot, m) {
    m.doc() = "Polyglot talking-face diffusion: data contracts, metrics and the command line";

    static py::exception<DataError> data_error(m, "DataError", PyExc_ValueError);
    static py::exception<PafError> paf_error(m, "PafError", data_error.ptr());
    static py::exception<ShapeError> shape_error(m, "ShapeError", PyExc_ValueError);
    static py::exception<NumericError> numeric_error(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const PafError& e) {
            py::set_error(paf_error, e.what());
        } catch (const DataError& e) {
            py::set_error(data_error, e.what());
        } catch (const ShapeError& e) {
            py::set_error(shape_error, e.what());
        } catch (const NumericError& e) {
            py::set_error(numeric_error, e.what());
        }
    });

    m.attr("MIN_PESQ") = kMinPesq;
    m.attr("MAX_RLE") = kMaxRle;
    m.attr("MOTION_FPS") = kMotionFps;

    m.def("read_paf", [](const std::filesystem::path& p) { return paf_to_dict(PafFile::read(p)); }, py::arg("path"),
          "Named float32 arrays of a PAF file, in file order.");
    m.def("write_paf", [](const std::filesystem::path& p, const py::dict& d) { dict_to_paf(d).write(p); },
          py::arg("path"), py::arg("arrays"));
    m.def("encode_paf", [](const py::dict& d) {
        const auto bytes = dict_to_paf(d).encode();
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    });
    m.def("decode_paf", [](const py::bytes& b) {
        const std::string s = b;
        return paf_to_dict(PafFile::decode({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()}));
    });

    m.def(
        "load_manifest",
        [](const std::filesystem::path& p) {
            const Manifest man = load_manifest(p);
            return py::make_tuple(records_to_py(man.records), man.base_dir);
        },
        py::arg("path"), "(records, base_dir); record paths stay relative to base_dir.");
    m.def(
        "save_manifest",
        [](const std::filesystem::path& p, const py::list& records, const std::filesystem::path& base) {
            save_manifest(p, records_from_py(records), base);
        },
        py::arg("path"), py::arg("records"), py::arg("records_base_dir"));
    m.def("filter_manifest", [](const py::list& records) {
        const FilterResult r = filter_manifest(records_from_py(records));
        py::list rejected;
        for (const auto& x : r.rejected) {
            rejected.append(py::make_tuple(json_to_py(nlohmann::json(x.record)), x.reason));
        }
        return py::make_tuple(records_to_py(r.kept), rejected);
    });
    m.def(
        "split_by_language",
        [](const py::list& records, std::uint64_t seed, std::size_t train, std::size_t val, std::size_t test,
           bool speaker_disjoint) {
            const SplitResult r =
                split_by_language(records_from_py(records), SplitSpec{train, val, test, speaker_disjoint}, seed);
            py::dict out;
            out["train"] = records_to_py(r.train);
            out["val"] = records_to_py(r.val);
            out["test"] = records_to_py(r.test);
            out["warnings"] = r.warnings;
            return out;
        },
        py::arg("records"), py::arg("seed"), py::arg("train") = 450, py::arg("val") = 50, py::arg("test") = 50,
        py::arg("speaker_disjoint") = false);

    m.def(
        "dtw",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> cost) {
            if (cost.ndim() != 2) {
                throw ShapeError("dtw: expected a 2-D cost matrix");
            }
            const std::vector<double> c(cost.data(), cost.data() + cost.size());
            const DtwResult r = dtw(c, static_cast<std::size_t>(cost.shape(0)), static_cast<std::size_t>(cost.shape(1)));
            return py::make_tuple(r.total, r.length);
        },
        py::arg("cost"), "(total, path length) of the cheapest monotone alignment.");
    m.def(
        "evaluate",
        [](const FloatArray& pred, const FloatArray& gt, const std::filesystem::path& model_path,
           std::optional<FloatArray> beta) {
            const MorphableModel face = load_model(model_path);
            const std::vector<float> b = beta ? std::vector<float>(beta->data(), beta->data() + beta->size())
                                              : std::vector<float>(face.n_shape, 0.0F);
            const MeshSeq pm = expressions_to_meshes(face, b, ExpressionSeq{to_matrix(pred), kMotionFps});
            const MeshSeq gm = expressions_to_meshes(face, b, ExpressionSeq{to_matrix(gt), kMotionFps});
            const MetricValues v = evaluate_pair(pm, gm, face);
            py::dict out;
            out["lve"] = v.lve;
            out["mve"] = v.mve;
            out["dtw"] = v.dtw;
            out["mod"] = v.mod;
            return out;
        },
        py::arg("pred"), py::arg("gt"), py::arg("model"), py::arg("beta") = py::none(),
        "LVE, MVE, DTW and MOD of two T x k expression sequences.");
    m.def(
        "cosine_schedule",
        [](std::size_t steps) {
            const DiffusionSchedule s = cosine_schedule(steps);
            return py::make_tuple(s.alpha_bar, s.betas);
        },
        py::arg("steps"), "(alpha_bar[0..N], betas[0..N]).");

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out;
            std::ostringstream err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = cli::run_cli(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "(exit code, stdout, stderr) of one command; args exclude the program name.");
}
