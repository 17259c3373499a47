#include <complex>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cli.hpp"
#include "zlab/arcs.hpp"
#include "zlab/census.hpp"
#include "zlab/cf.hpp"
#include "zlab/dimension.hpp"
#include "zlab/ensemble.hpp"
#include "zlab/error.hpp"

namespace py = pybind11;
using namespace zlab;

namespace {

py::int_ to_py(const BigInt& x) {
  const std::string text = x.get_str();
  return py::reinterpret_steal<py::int_>(PyLong_FromString(text.c_str(), nullptr, 10));
}

Alphabet to_alphabet(const py::object& obj) {
  if (py::isinstance<py::str>(obj)) return Alphabet::parse(obj.cast<std::string>());
  return Alphabet(obj.cast<std::vector<Letter>>());
}

py::object from_json(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

arcs::NormHistogram to_histogram(const std::map<std::uint64_t, std::uint64_t>& counts) {
  return arcs::NormHistogram(counts);
}

}  // namespace

PYBIND11_MODULE(_zlab, m) {
  m.doc() = "Continued fractions with bounded partial quotients: census, dimension, ensembles, arcs.";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<ResourceError>(m, "ResourceError", PyExc_MemoryError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_ArithmeticError);

  m.def("continuant", [](const std::vector<Letter>& w) { return to_py(continuant(Word(w))); },
        py::arg("word"));
  m.def(
      "cf_value",
      [](const std::vector<Letter>& w) {
        const Rational v = cf_value(Word(w));
        return py::module_::import("fractions").attr("Fraction")(to_py(v.get_num()),
                                                                  to_py(v.get_den()));
      },
      py::arg("word"));
  m.def(
      "word_matrix",
      [](const std::vector<Letter>& w) {
        const UniMat g = word_matrix(Word(w));
        return py::make_tuple(to_py(g.a), to_py(g.b), to_py(g.c), to_py(g.d));
      },
      py::arg("word"));
  m.def(
      "separation_check",
      [](const py::object& alphabet, const std::vector<Letter>& d, const std::vector<Letter>& t,
         const std::vector<Letter>& w) {
        const auto r = separation_check(to_alphabet(alphabet), Word(d), Word(t), Word(w));
        py::dict out;
        out["holds"] = r.holds;
        out["lower_bound"] = r.lower_bound.get_str();
        out["gap"] = r.actual_gap.get_str();
        return out;
      },
      py::arg("alphabet"), py::arg("D"), py::arg("T"), py::arg("W"));

  m.def(
      "census",
      [](const py::object& alphabet, std::uint64_t limit, bool multiplicity, unsigned threads) {
        census::CensusOptions opt;
        opt.collect_multiplicity = multiplicity;
        opt.threads = threads;
        const Alphabet a = to_alphabet(alphabet);
        census::CensusResult r;
        {
          py::gil_scoped_release release;
          r = census::enumerate_denominators(a, limit, opt);
        }
        py::dict out;
        out["limit"] = r.limit;
        out["count"] = r.count;
        out["missing"] = census::missing_denominators(r);
        out["words_visited"] = r.words_visited;
        if (r.multiplicity) out["multiplicity"] = *r.multiplicity;
        return out;
      },
      py::arg("alphabet"), py::arg("limit"), py::arg("multiplicity") = false,
      py::arg("threads") = 0);
  m.def(
      "missing_denominators",
      [](const py::object& alphabet, std::uint64_t limit) {
        return census::missing_denominators(to_alphabet(alphabet), limit);
      },
      py::arg("alphabet"), py::arg("limit"));
  m.def(
      "proportion_table",
      [](const py::object& alphabet, const std::vector<std::uint64_t>& limits) {
        std::vector<py::tuple> rows;
        for (const auto& r : census::proportion_table(to_alphabet(alphabet), limits)) {
          rows.push_back(py::make_tuple(r.limit, r.count, r.ratio));
        }
        return rows;
      },
      py::arg("alphabet"), py::arg("limits"));

  m.def(
      "transfer_eigenvalue",
      [](const py::object& alphabet, double s, int mesh) {
        return dimension::transfer_eigenvalue(to_alphabet(alphabet), s, mesh);
      },
      py::arg("alphabet"), py::arg("s"), py::arg("mesh_size") = 32);
  m.def(
      "hausdorff_dimension",
      [](const py::object& alphabet, double tol) {
        const auto e = dimension::hausdorff_dimension(to_alphabet(alphabet), tol);
        py::dict out;
        out["delta"] = e.delta;
        out["gamma"] = e.gamma();
        out["residual"] = e.residual;
        out["mesh_size"] = e.mesh_size;
        out["mesh_drift"] = e.mesh_drift;
        return out;
      },
      py::arg("alphabet"), py::arg("tol") = 1e-8);

  m.def(
      "build_ladder",
      [](double limit, double eps0, Letter max_letter, std::optional<double> q1) {
        return from_json(ensemble::to_json(ensemble::build_ladder(limit, eps0, max_letter, q1)));
      },
      py::arg("limit"), py::arg("eps0"), py::arg("max_letter"), py::arg("q1") = py::none());

  m.def(
      "dirichlet_decompose",
      [](double theta, double limit, double q1) {
        return from_json(arcs::to_json(arcs::dirichlet_decompose(theta, limit, q1)));
      },
      py::arg("theta"), py::arg("limit"), py::arg("q1"));
  m.def("split_K", &arcs::split_K, py::arg("K"));
  m.def(
      "trig_sum",
      [](const std::map<std::uint64_t, std::uint64_t>& counts, double theta) {
        return arcs::trig_sum(to_histogram(counts), theta);
      },
      py::arg("histogram"), py::arg("theta"));
  m.def(
      "parseval_check",
      [](const std::map<std::uint64_t, std::uint64_t>& counts, int points, double limit) {
        return from_json(arcs::to_json(arcs::parseval_check(to_histogram(counts), points, limit)));
      },
      py::arg("histogram"), py::arg("points"), py::arg("limit"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"),
      "Runs a zlab subcommand in-process; returns (exit_code, stdout, stderr).");
}
