// Thin pybind11 layer. Structured results cross the boundary as JSON text
// using the same keys as the CLI; the Python package decodes them.

#include "fbmreg/baselines.hpp"
#include "fbmreg/crlb.hpp"
#include "fbmreg/errors.hpp"
#include "fbmreg/io.hpp"
#include "fbmreg/likelihood.hpp"
#include "fbmreg/screening.hpp"
#include "fbmreg/simulate.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <string>

namespace py = pybind11;
using namespace fbmreg;

namespace {

FragmentPair make_pair(const Matrix& ref, const Matrix& tpl, double noise_var_ri, double noise_var_ti) {
    return {Fragment(ref, noise_var_ri), Fragment(tpl, noise_var_ti)};
}

RstParams rst_from_report(const std::array<double, 4>& v) {
    RstParams r{v[0], v[1], deg_to_rad(v[2]), v[3]};
    r.validate();
    return r;
}

FullParams params_from_text(const std::string& text) { return full_params_from_json(Json::parse(text)); }

}  // namespace

PYBIND11_MODULE(_fbmreg, m) {
    m.doc() = "ML registration of fBm-textured fragments under RST motion";

    py::register_exception<Error>(m, "FbmregError", PyExc_RuntimeError);

    m.def("test_point", [](int id) { return to_json(test_point(id)).dump(); }, py::arg("id"));

    m.def(
        "simulate",
        [](const std::string& params, int n_ri, int n_ti, double noise_std_ri, double noise_std_ti,
           std::uint64_t seed) {
            const FullParams p = params_from_text(params);
            const PairGeometry g{n_ri, n_ti};
            const NoiseVariances noise{noise_std_ri * noise_std_ri, noise_std_ti * noise_std_ti};
            FragmentPair pair;
            {
                py::gil_scoped_release release;
                pair = simulate_pair(p, g, noise, seed);
            }
            return py::make_tuple(pair.reference.pixels(), pair.tmpl.pixels());
        },
        py::arg("params"), py::arg("n_ri"), py::arg("n_ti"), py::arg("noise_std_ri"), py::arg("noise_std_ti"),
        py::arg("seed"));

    m.def(
        "crlb",
        [](const std::string& params, int n_ri, int n_ti, double noise_var_ri, double noise_var_ti,
           bool include_cov) {
            const FullParams p = params_from_text(params);
            CrlbResult c;
            {
                py::gil_scoped_release release;
                c = crlb(p, PairGeometry{n_ri, n_ti}, NoiseVariances{noise_var_ri, noise_var_ti});
            }
            return to_json(c, include_cov).dump();
        },
        py::arg("params"), py::arg("n_ri"), py::arg("n_ti"), py::arg("noise_var_ri"), py::arg("noise_var_ti"),
        py::arg("include_cov") = false);

    m.def(
        "log_likelihood",
        [](const Matrix& ref, const Matrix& tpl, double noise_var_ri, double noise_var_ti,
           const std::string& params) {
            const FragmentPair pair = make_pair(ref, tpl, noise_var_ri, noise_var_ti);
            return log_likelihood(pair, params_from_text(params)).log_lf;
        },
        py::arg("ref"), py::arg("tpl"), py::arg("noise_var_ri"), py::arg("noise_var_ti"), py::arg("params"));

    m.def(
        "estimate_ml",
        [](const Matrix& ref, const Matrix& tpl, double noise_var_ri, double noise_var_ti,
           const std::array<double, 4>& init) {
            const FragmentPair pair = make_pair(ref, tpl, noise_var_ri, noise_var_ti);
            const RstParams r0 = rst_from_report(init);
            MlEstimate e;
            {
                py::gil_scoped_release release;
                e = estimate_ml(pair, r0);
            }
            return to_json(e).dump();
        },
        py::arg("ref"), py::arg("tpl"), py::arg("noise_var_ri"), py::arg("noise_var_ti"), py::arg("init"));

    m.def(
        "estimate_baseline",
        [](const Matrix& ref, const Matrix& tpl, const std::array<double, 4>& init, const std::string& measure) {
            SimilarityMeasure mm;
            if (measure == "ncc") {
                mm = SimilarityMeasure::Ncc;
            } else if (measure == "ssd") {
                mm = SimilarityMeasure::Ssd;
            } else {
                throw Error(ErrorCode::InvalidArgument, "measure must be 'ncc' or 'ssd', got '" + measure + "'");
            }
            const FragmentPair pair = make_pair(ref, tpl, 0.0, 0.0);
            const RstParams r0 = rst_from_report(init);
            SimilarityEstimate e;
            {
                py::gil_scoped_release release;
                e = estimate_baseline(pair, r0, mm);
            }
            return to_json(e).dump();
        },
        py::arg("ref"), py::arg("tpl"), py::arg("init"), py::arg("measure"));

    m.def(
        "screen",
        [](const Matrix& ref, const Matrix& tpl) { return to_json(classify(make_pair(ref, tpl, 0.0, 0.0))).dump(); },
        py::arg("ref"), py::arg("tpl"));

    m.def("chi2_4_upper_quantile", &chi2_4_upper_quantile, py::arg("tail"));
}
