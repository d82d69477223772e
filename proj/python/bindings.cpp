#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "lrukit/cli.hpp"
#include "lrukit/experiments.hpp"

namespace py = pybind11;
using namespace lrukit;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

SequenceBatch to_batch(const Array& a) {
    if (a.ndim() != 3) throw InvalidInput("expected an array of shape (batch, length, features)");
    SequenceBatch u(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                    static_cast<std::size_t>(a.shape(2)));
    std::copy(a.data(), a.data() + a.size(), u.data().begin());
    return u;
}

Array from_batch(const SequenceBatch& y) {
    Array out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(y.batch()), static_cast<py::ssize_t>(y.length()),
                                       static_cast<py::ssize_t>(y.features())});
    std::copy(y.data().begin(), y.data().end(), out.mutable_data());
    return out;
}

py::array_t<std::complex<double>> to_numpy(const ComplexVec& v) {
    py::array_t<std::complex<double>> out(static_cast<py::ssize_t>(v.size()));
    auto* p = out.mutable_data();
    for (std::size_t i = 0; i < v.size(); ++i) p[i] = {v.re[i], v.im[i]};
    return out;
}

class LruLayer {
public:
    LruLayer(std::size_t input_dim, std::size_t state_dim, std::size_t output_dim, double r_min, double r_max,
             double max_phase, std::uint64_t seed) {
        Rng rng(seed);
        params_ = lru_init(RingConfig{r_min, r_max, 0.0, max_phase}, LruDims{input_dim, state_dim, output_dim}, rng);
    }

    Array forward(const Array& u, bool parallel) const {
        const LruOutput out = lru_forward(params_, to_batch(u), parallel ? ScanMode::parallel : ScanMode::sequential);
        return from_batch(out.y);
    }

    py::array_t<std::complex<double>> eigenvalues() const { return to_numpy(params_.lambda()); }

private:
    LruParams params_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Linear recurrent unit toolkit";

    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    m.def("gain_formula", &gain_formula, py::arg("r_min"), py::arg("r_max"));
    m.def(
        "gain_monte_carlo",
        [](double r_min, double r_max, std::size_t n, std::size_t length, const std::string& mode, std::size_t trials,
           std::uint64_t seed) {
            if (mode != "white_noise" && mode != "constant") throw InvalidInput("mode must be white_noise or constant");
            Rng rng(seed);
            py::gil_scoped_release release;
            const GainResult g = gain_monte_carlo(r_min, r_max, n, length,
                                                  mode == "constant" ? InputMode::constant : InputMode::white_noise,
                                                  trials, rng);
            py::gil_scoped_acquire acquire;
            py::dict d;
            d["closed_form"] = g.closed_form;
            d["monte_carlo"] = g.monte_carlo;
            d["p5"] = g.p5;
            d["p95"] = g.p95;
            d["trials"] = g.trials;
            d["transient_warning"] = g.transient_warning;
            return d;
        },
        py::arg("r_min"), py::arg("r_max"), py::arg("n") = 500, py::arg("length") = 10000,
        py::arg("mode") = "white_noise", py::arg("trials") = 10, py::arg("seed") = 0);

    m.def(
        "sample_ring",
        [](double r_min, double r_max, std::size_t n, std::uint64_t seed, double phase_min, double phase_max) {
            Rng rng(seed);
            const RingSample s = sample_ring(RingConfig{r_min, r_max, phase_min, phase_max}, n, rng);
            ComplexVec lam(n);
            for (std::size_t i = 0; i < n; ++i) {
                const auto z = std::exp(std::complex<double>(-s.nu[i], s.theta[i]));
                lam.re[i] = z.real();
                lam.im[i] = z.imag();
            }
            return to_numpy(lam);
        },
        py::arg("r_min"), py::arg("r_max"), py::arg("n"), py::arg("seed") = 0, py::arg("phase_min") = 0.0,
        py::arg("phase_max") = 2.0 * std::numbers::pi);

    m.def(
        "dft", [](const std::vector<double>& x) { return to_numpy(dft_complex(std::span<const double>(x))); },
        py::arg("signal"));

    m.def(
        "spectral_radius",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a, int k) {
            if (a.ndim() != 2 || a.shape(0) != a.shape(1)) throw InvalidInput("expected a square matrix");
            DenseMatrix mat(a.shape(0), a.shape(1));
            std::copy(a.data(), a.data() + a.size(), mat.data());
            return gelfand_spectral_radius(mat, k).radius;
        },
        py::arg("matrix"), py::arg("k") = 64);

    m.def("conv_kernel_value", &conv_kernel_value, py::arg("k"));
    m.def("scan_equivalence_error", &scan_equivalence_error, py::arg("length"), py::arg("state"), py::arg("batch") = 1,
          py::arg("features") = 1, py::arg("seed") = 0, py::arg("threads") = 0);

    py::class_<LruLayer>(m, "LruLayer")
        .def(py::init<std::size_t, std::size_t, std::size_t, double, double, double, std::uint64_t>(),
             py::arg("input_dim"), py::arg("state_dim"), py::arg("output_dim"), py::arg("r_min") = 0.0,
             py::arg("r_max") = 1.0, py::arg("max_phase") = 2.0 * std::numbers::pi, py::arg("seed") = 0)
        .def("forward", &LruLayer::forward, py::arg("u"), py::arg("parallel") = true)
        .def("eigenvalues", &LruLayer::eigenvalues);

    m.def(
        "run_cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "lrukit");
            std::vector<const char*> argv;
            for (const auto& a : args) argv.push_back(a.c_str());
            std::ostringstream out, err;
            const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
