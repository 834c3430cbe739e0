#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "maskcheck/corpus.hpp"
#include "maskcheck/errors.hpp"
#include "maskcheck/obligations.hpp"
#include "maskcheck/oracle.hpp"
#include "maskcheck/pipeline.hpp"
#include "maskcheck/report.hpp"
#include "maskcheck/selfcheck.hpp"

namespace py = pybind11;
using namespace maskcheck;

namespace {

std::pair<Netlist, LabelConfig> load(const std::string& netlist_json,
                                     const std::string& labels_json) {
  Netlist n = parse_netlist(netlist_json);
  LabelConfig cfg = LabelConfig::parse(labels_json, n);
  return {std::move(n), std::move(cfg)};
}

std::string py_verify(const std::string& netlist_json, const std::string& labels_json,
                      const std::string& stages, std::uint32_t budget,
                      const std::string& solver, std::uint64_t seed, std::uint32_t timeout_s,
                      const std::string& dump_dir) {
  auto [n, cfg] = load(netlist_json, labels_json);
  BackendConfig be;
  be.limits.exhaustive_bit_budget = budget;
  be.limits.seed = seed;
  be.limits.wall_timeout_s = timeout_s;
  be.solver_cmd = solver;
  be.dump_dir = dump_dir;
  be.cross_check = !solver.empty();
  PipelineResult pr = run_pipeline(n, cfg, be, StageSet::parse(stages));
  return build_report_json(n, cfg, pr);
}

py::dict py_oracle(const std::string& netlist_json, const std::string& labels_json,
                   const std::string& wire_name) {
  auto [n, cfg] = load(netlist_json, labels_json);
  for (const Cell& c : n.cells) {
    if (n.wire_name(c.output.net_id()) != wire_name) continue;
    OracleResult res = oracle(n, cfg, c.output);
    py::dict out;
    out["dist_independent"] = res.dist_independent;
    out["value_independent"] = res.value_independent;
    out["mask_space"] = res.mask_space;
    out["secret_count"] = res.secret_count;
    return out;
  }
  throw Error(Errc::usage, "no wire named " + wire_name);
}

py::dict py_corpus_gen(const std::string& kind, std::uint64_t q, std::uint32_t width) {
  auto k = gadget_kind_from_name(kind);
  if (!k) throw Error(Errc::usage, "unknown gadget kind " + kind);
  GadgetSpec spec;
  spec.kind = *k;
  spec.q = q;
  spec.width = width;
  GadgetOutput out = generate(spec);
  py::dict d;
  d["netlist"] = out.netlist_json;
  d["labels"] = out.labels_json;
  d["expected"] = out.expected_json;
  return d;
}

py::list py_selfcheck() {
  py::list out;
  for (const auto& c : run_selfchecks())
    out.append(py::make_tuple(c.name, c.pass, c.expected, c.got));
  return out;
}

py::list py_obligations(bool with_t1) {
  py::list out;
  for (const auto& ob : run_proof_obligations(with_t1))
    out.append(py::make_tuple(ob.id, ob.pass, ob.detail));
  return out;
}

py::dict py_netlist_info(const std::string& netlist_json) {
  Netlist n = parse_netlist(netlist_json);
  py::dict out;
  out["module_name"] = n.module_name;
  out["cells"] = n.cells.size();
  out["nets"] = n.net_count;
  out["dffs"] = n.dff_cells.size();
  out["source_hash"] = n.source_hash;
  return out;
}

} // namespace

PYBIND11_MODULE(_maskcheck, m) {
  m.doc() = "gate-level masking verification core";
  m.attr("__version__") = kToolVersion;

  py::register_exception<Error>(m, "MaskcheckError");

  m.def("verify", &py_verify, py::arg("netlist_json"), py::arg("labels_json"),
        py::arg("stages") = "d1,mc,fm,bsadc,asadc", py::arg("budget") = 24,
        py::arg("solver") = "", py::arg("seed") = 0, py::arg("timeout_s") = 0,
        py::arg("dump_dir") = "",
        "Run the verification hierarchy; returns the report JSON text.");
  m.def("summarize", &summarize_report, py::arg("report_json"));
  m.def("oracle", &py_oracle, py::arg("netlist_json"), py::arg("labels_json"),
        py::arg("wire_name"), "Brute-force distribution check for one named wire.");
  m.def("corpus_gen", &py_corpus_gen, py::arg("kind"), py::arg("q") = 17, py::arg("width") = 0);
  m.def("selfcheck", &py_selfcheck, "Run the 17 known-answer checks.");
  m.def("proof_obligations", &py_obligations, py::arg("with_t1") = false);
  m.def("netlist_info", &py_netlist_info, py::arg("netlist_json"));
}
