#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "stlab/audits.hpp"
#include "stlab/harness.hpp"

namespace py = pybind11;
using namespace stlab;

namespace {

Index to_index(const std::vector<std::int64_t>& m) {
  if (m.size() > kMaxDim) throw Error("too many index components");
  Index out{};
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i];
  return out;
}

std::vector<std::int64_t> from_index(const Index& m, int dim) { return {m.begin(), m.begin() + dim}; }

Point to_point(const std::vector<double>& x) {
  if (x.size() > kMaxDim) throw Error("too many coordinates");
  Point out{};
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i];
  return out;
}

py::dict row_dict(const AuditRow& r) {
  py::dict d;
  d["experiment"] = r.experiment;
  d["instance"] = r.instance;
  d["quantity"] = r.quantity;
  d["value"] = r.value;
  d["bound"] = r.bound ? py::cast(*r.bound) : py::none();
  d["flag"] = flag_name(r.flag);
  return d;
}

py::list rows_list(const std::vector<AuditRow>& rows) {
  py::list out;
  for (const auto& r : rows) out.append(row_dict(r));
  return out;
}

std::string rows_csv(const std::vector<AuditRow>& rows) {
  std::ostringstream out;
  write_csv(out, rows);
  return out.str();
}

}  // namespace

PYBIND11_MODULE(_stlab, m) {
  m.doc() = "Dyadic model sets, thick families, measures and trace audits";
  py::register_exception<Error>(m, "Error", PyExc_ValueError);

  py::class_<DyadicCube>(m, "DyadicCube")
      .def(py::init([](int dim, int level, const std::vector<std::int64_t>& index) {
             check_dim(dim);
             return DyadicCube{dim, level, to_index(index)};
           }),
           py::arg("dim"), py::arg("level"), py::arg("index"))
      .def_readonly("dim", &DyadicCube::dim)
      .def_readonly("level", &DyadicCube::level)
      .def_property_readonly("index", [](const DyadicCube& q) { return from_index(q.index, q.dim); })
      .def_property_readonly("side", &DyadicCube::side)
      .def("__eq__", [](const DyadicCube& a, const DyadicCube& b) { return a == b; })
      .def("__hash__", [](const DyadicCube& q) { return py::hash(py::make_tuple(q.dim, q.level, from_index(q.index, q.dim))); })
      .def("__repr__", [](const DyadicCube& q) { return to_string(q); });
  m.def("children", &children);
  m.def("dilate_bounds", [](const DyadicCube& q, int c) {
    const auto box = dilate(q, c);
    return py::make_tuple(from_index(box.lo, q.dim), from_index(box.hi, q.dim));
  }, "Lattice bounds (lo, hi) of cQ at the level of Q.");
  m.def("gamma", [](const DyadicCube& q, int c) { return stlab::gamma(q, c); });
  m.def("multiplicity_bound", &multiplicity_bound);

  py::class_<DyadicSet>(m, "DyadicSet")
      .def_property_readonly("dim", &DyadicSet::dim)
      .def_property_readonly("resolution", &DyadicSet::resolution)
      .def_property_readonly("label", &DyadicSet::label)
      .def_property_readonly("marked_count", &DyadicSet::marked_count)
      .def("marked", [](const DyadicSet& s) {
        std::vector<std::vector<std::int64_t>> out;
        for (const auto& idx : s.marked_indices()) out.push_back(from_index(idx, s.dim()));
        return out;
      })
      .def("is_marked", [](const DyadicSet& s, const std::vector<std::int64_t>& m) { return s.is_marked(to_index(m)); })
      .def("__repr__", [](const DyadicSet& s) {
        return "DyadicSet(" + s.label() + ", n=" + std::to_string(s.dim()) + ", K=" + std::to_string(s.resolution()) + ")";
      });
  m.def("generate_set", [](const std::string& spec, int dim, int resolution, std::uint64_t seed) {
    return generate_set(dim, resolution, GeneratorSpec::parse(spec), seed);
  }, py::arg("spec"), py::arg("dim"), py::arg("resolution"), py::arg("seed") = 0);
  m.def("load_set", &load_set);
  m.def("save_set", &save_set);

  py::class_<ContentTree>(m, "ContentTree")
      .def_property_readonly("d", &ContentTree::d)
      .def_property_readonly("root", &ContentTree::root)
      .def("value", py::overload_cast<const DyadicCube&>(&ContentTree::value, py::const_));
  m.def("content_tree", &content_tree, py::arg("set"), py::arg("d"));

  py::class_<KeystoneIndex>(m, "KeystoneIndex")
      .def_property_readonly("d", &KeystoneIndex::d)
      .def_property_readonly("lam", &KeystoneIndex::lambda)
      .def_property_readonly("content", &KeystoneIndex::content)
      .def("is_thick", py::overload_cast<const DyadicCube&>(&KeystoneIndex::is_thick, py::const_))
      .def("df", &KeystoneIndex::df)
      .def("df_size", &KeystoneIndex::df_size);
  m.def("keystone", &keystone, py::arg("set"), py::arg("d"), py::arg("lam"));
  m.def("decomposition", [](const KeystoneIndex& ki, const DyadicSet& s) {
    const auto dec = canonical_decomposition(ki, s);
    return py::make_tuple(dec.generations, dec.defect);
  }, "Generations of the canonical decomposition and their covering defects.");
  m.def("covering_cubes", &covering_cubes, py::arg("ki"), py::arg("q"), py::arg("c"), py::arg("strong") = false);
  m.def("shadow", &shadow);
  m.def("porous_family", &porous_family);

  py::class_<FrostmanSequence>(m, "FrostmanSequence")
      .def_property_readonly("kmax", &FrostmanSequence::kmax)
      .def("total_mass", &FrostmanSequence::total_mass)
      .def("mass", &FrostmanSequence::mass)
      .def("weights", &FrostmanSequence::weights);
  m.def("build_sequence", &build_sequence, py::arg("set"), py::arg("d"), py::arg("kmax") = -1);
  m.def("audit_sequence", [](const FrostmanSequence& seq, const ContentTree& h, std::uint64_t seed) {
    const auto a = audit_sequence(seq, h, seed);
    py::dict d;
    d["c1"] = a.c1;
    d["c2"] = a.c2;
    d["c3"] = a.c3;
    d["c3_capped"] = a.c3_capped;
    d["arbitrary_cube"] = a.arbitrary_cube;
    return d;
  }, py::arg("seq"), py::arg("tree"), py::arg("seed") = 0);

  m.def("psi0", &psi0);
  m.def("psi", [](int dim, int k, const std::vector<std::int64_t>& idx, const std::vector<double>& y) {
    return psi(dim, k, to_index(idx), to_point(y));
  });
  m.def("phi", [](const std::vector<double>& f, const DyadicCube& a, const DyadicCube& b, const FrostmanSequence& seq) {
    return phi(f, a, b, seq);
  });
  m.def("trace_functional", [](const std::vector<double>& f, const KeystoneIndex& ki, const FrostmanSequence& seq,
                               double p, int c) {
    const auto r = trace_functional(f, ki, seq, p, c);
    return py::make_tuple(r.lp_m0, r.sharp_lp, r.total);
  }, py::arg("f"), py::arg("ki"), py::arg("seq"), py::arg("p"), py::arg("c") = 7);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("n", &ExperimentConfig::n)
      .def_readwrite("K", &ExperimentConfig::K)
      .def_readwrite("Kf", &ExperimentConfig::Kf)
      .def_readwrite("set", &ExperimentConfig::set)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("dstar", &ExperimentConfig::dstar)
      .def_readwrite("d", &ExperimentConfig::d)
      .def_readwrite("lambda_frac", &ExperimentConfig::lambda_frac)
      .def_readwrite("lam", &ExperimentConfig::lambda)
      .def_readwrite("p", &ExperimentConfig::p)
      .def_readwrite("eps", &ExperimentConfig::eps)
      .def_readwrite("c", &ExperimentConfig::c)
      .def_readwrite("kappa", &ExperimentConfig::kappa)
      .def_readwrite("budget", &ExperimentConfig::budget)
      .def("validate", &ExperimentConfig::validate, py::arg("direct") = false);

  m.def("run_content", [](const ExperimentConfig& c) { return rows_list(run_content(c)); });
  m.def("run_keystone", [](const ExperimentConfig& c) { return rows_list(run_keystone(c)); });
  m.def("run_frostman_audit", [](const ExperimentConfig& c) { return rows_list(run_frostman_audit(c)); });
  m.def("run_verify_reverse", [](const ExperimentConfig& c, const std::string& f, int instances) {
    return rows_list(run_verify_reverse(c, FunctionSource::parse(f, c.seed), instances));
  }, py::arg("cfg"), py::arg("f") = "random-lipschitz", py::arg("instances") = 10);
  m.def("run_verify_direct", [](const ExperimentConfig& c, const std::string& field, int instances) {
    return rows_list(run_verify_direct(c, FieldSpec::parse(field), instances));
  }, py::arg("cfg"), py::arg("field") = "trig:0", py::arg("instances") = 10);
  m.def("run_roundtrip", [](const ExperimentConfig& c, const std::string& f, int instances) {
    return rows_list(run_roundtrip(c, FunctionSource::parse(f, c.seed), instances));
  }, py::arg("cfg"), py::arg("f") = "random-lipschitz", py::arg("instances") = 10);
  m.def("run_packing_audit", [](const ExperimentConfig& c) { return rows_list(run_packing_audit(c)); });
  m.def("content_csv", [](const ExperimentConfig& c) { return rows_csv(run_content(c)); },
        "Rows of the content command as CSV text.");
}
