#include "maskcheck/report.hpp"

#include "maskcheck/errors.hpp"

#include <nlohmann/json.hpp>
#include <sstream>

using nlohmann::json;

namespace maskcheck {

namespace {

json witness_json(const Witness& w) {
  json bits = json::array();
  for (const auto& [name, v] : w.bits) bits.push_back(json::array({name, v ? 1 : 0}));
  json groups = json::object();
  for (const auto& [name, v] : w.groups) groups[name] = v;
  return {{"assignment_hex", w.hex()}, {"bits", bits}, {"groups", groups}};
}

json sat_json(const SatResult& r) {
  switch (r.kind) {
  case SatKind::Sat: return "sat";
  case SatKind::Unsat: return "unsat";
  case SatKind::ResourceOut: return "resource_out";
  }
  return "?";
}

const char* sadc_name(SadcVerdict::Kind k) {
  switch (k) {
  case SadcVerdict::Kind::Secure: return "secure";
  case SadcVerdict::Kind::Insecure: return "insecure";
  case SadcVerdict::Kind::InsecureConservative: return "insecure_conservative";
  case SadcVerdict::Kind::Indeterminate: return "indeterminate";
  }
  return "?";
}

json counts_json(const StageCounts& c) {
  return {{"structural_candidates", c.structural_candidates},
          {"sc_flagged", c.sc_flagged},
          {"d0d1_promoted", c.d0d1_promoted},
          {"flagged", c.flagged},
          {"fm_promoted", c.fm_promoted},
          {"bsadc_secure", c.bsadc_secure},
          {"bsadc_insecure", c.bsadc_insecure},
          {"bsadc_indeterminate", c.bsadc_indeterminate},
          {"asadc_secure", c.asadc_secure},
          {"asadc_candidate", c.asadc_candidate},
          {"asadc_indeterminate", c.asadc_indeterminate},
          {"residual", c.residual},
          {"indeterminate", c.indeterminate},
          {"structural_flagged", c.structural_flagged}};
}

} // namespace

std::string build_report_json(const Netlist& n, const LabelConfig& cfg,
                              const PipelineResult& pr) {
  json wires = json::array();
  for (const WireVerdict& wv : pr.wires) {
    json stages = json::object();
    if (wv.structural) {
      json s = {{"d0", sat_json(wv.structural->d0)}};
      s["d1"] = wv.structural->d1 ? sat_json(*wv.structural->d1) : json("skipped");
      s["verdict"] = wv.structural->kind == StructuralVerdict::Kind::Secure
                         ? "secure"
                         : wv.structural->kind == StructuralVerdict::Kind::PotentiallyInsecure
                               ? "potentially_insecure"
                               : "unknown";
      stages["d0d1"] = s;
    }
    if (wv.fm_applicable)
      stages["fm"] = wv.fm_promoted ? json({{"promoted", true}, {"bit", wv.fm_bit}})
                                    : json({{"promoted", false}});
    if (wv.bsadc) stages["bsadc"] = sadc_name(wv.bsadc->kind);
    if (wv.asadc) stages["asadc"] = sadc_name(wv.asadc->kind);

    json e = {{"net", wv.net},
              {"name", wv.name},
              {"dff", wv.is_dff_q},
              {"mc_only", wv.mc_only},
              {"sc_label", label_name(wv.sc_label)},
              {"label", label_name(wv.mc_label)},
              {"stages", stages},
              {"final", wire_final_name(wv.final)}};
    if (!wv.secure_stage.empty()) e["secure_stage"] = wv.secure_stage;
    if (wv.witness) e["witness"] = witness_json(*wv.witness);
    wires.push_back(std::move(e));
  }

  json root = {{"schema_version", 1},
               {"tool", "maskcheck"},
               {"module_name", pr.module_name},
               {"source_hash", n.source_hash},
               {"label_digest", cfg.source_digest()},
               {"stages", pr.stages.to_string()},
               {"classification", classification_name(pr.classification)},
               {"limits",
                {{"exhaustive_bit_budget", pr.limits.exhaustive_bit_budget},
                 {"smt_resource_limit", pr.limits.smt_resource_limit},
                 {"wall_timeout_s", pr.limits.wall_timeout_s},
                 {"seed", pr.limits.seed}}},
               {"counts", counts_json(pr.counts)},
               {"agreement",
                {{"queries", pr.stats.queries},
                 {"exhaustive", pr.stats.exhaustive},
                 {"smt", pr.stats.smt},
                 {"cross_checked", pr.stats.cross_checked},
                 {"disagreements", pr.stats.disagreements}}},
               {"wires", wires}};
  if (pr.mc) {
    root["bound_d"] = pr.mc->bound_d;
    root["iterations_used"] = pr.mc->iterations_used;
    root["converged"] = pr.mc->converged;
  }
  if (pr.root_cause) {
    root["root_cause"] = {{"true_convergence", pr.root_cause->true_convergence.size()},
                          {"amplification", pr.root_cause->amplification.size()},
                          {"downstream", pr.root_cause->downstream.size()},
                          {"dff_both", pr.root_cause->dff_both.size()},
                          {"total", pr.root_cause->total()},
                          {"coverage_ok", pr.coverage_ok}};
  }
  return root.dump(2) + "\n";
}

std::string build_manifest_json(const Netlist& n, const LabelConfig& cfg,
                                const PipelineResult& pr, const BackendConfig& be,
                                const std::string& netlist_path, const std::string& labels_path) {
  json solver;
  if (be.solver_cmd.empty()) solver = "exhaustive-only";
  else solver = {{"cmd", be.solver_cmd}, {"cross_check", be.cross_check}};
  json root = {{"tool_version", kToolVersion},
               {"inputs",
                {{"netlist", {{"path", netlist_path}, {"sha256", n.source_hash}}},
                 {"labels", {{"path", labels_path}, {"sha256", cfg.source_digest()}}}}},
               {"stages", pr.stages.to_string()},
               {"limits",
                {{"exhaustive_bit_budget", be.limits.exhaustive_bit_budget},
                 {"smt_resource_limit", be.limits.smt_resource_limit},
                 {"wall_timeout_s", be.limits.wall_timeout_s},
                 {"seed", be.limits.seed}}},
               {"solver", solver},
               {"smt_dump_dir", be.dump_dir},
               {"wall_times_s",
                {{"labels", pr.secs_labels},
                 {"d0d1", pr.secs_d0d1},
                 {"fm", pr.secs_fm},
                 {"bsadc", pr.secs_bsadc},
                 {"asadc", pr.secs_asadc},
                 {"total",
                  pr.secs_labels + pr.secs_d0d1 + pr.secs_fm + pr.secs_bsadc + pr.secs_asadc}}}};
  return root.dump(2) + "\n";
}

std::string summarize_report(const std::string& report_json) {
  json r;
  try {
    r = json::parse(report_json);
  } catch (const json::exception& e) {
    throw Error(Errc::malformed_json, e.what());
  }
  std::ostringstream os;
  os << "module         " << r.value("module_name", std::string("?")) << "\n";
  os << "classification " << r.value("classification", std::string("?")) << "\n";
  os << "stages         " << r.value("stages", std::string("?")) << "\n";
  if (r.contains("bound_d"))
    os << "mc             D=" << r["bound_d"].get<std::uint64_t>() << ", "
       << r["iterations_used"].get<std::uint64_t>() << " iterations, "
       << (r["converged"].get<bool>() ? "converged" : "cut short") << "\n";
  const json& c = r["counts"];
  os << "\n";
  os << "stage                 residual  promoted/confirmed\n";
  std::uint64_t cand = c["structural_candidates"].get<std::uint64_t>();
  os << "structural            " << cand << "\n";
  os << "d0/d1                 " << c["flagged"].get<std::uint64_t>() << "        ("
     << c["d0d1_promoted"].get<std::uint64_t>() << " promoted)\n";
  std::uint64_t after_fm =
      c["flagged"].get<std::uint64_t>() - c["fm_promoted"].get<std::uint64_t>();
  os << "+ fm                  " << after_fm << "        (" << c["fm_promoted"].get<std::uint64_t>()
     << " promoted)\n";
  std::uint64_t after_b = after_fm - c["bsadc_secure"].get<std::uint64_t>();
  os << "+ boolean sadc        " << after_b << "        ("
     << c["bsadc_secure"].get<std::uint64_t>() << " promoted, "
     << c["bsadc_insecure"].get<std::uint64_t>() << " confirmed insecure)\n";
  os << "+ arithmetic sadc     " << c["residual"].get<std::uint64_t>() << "        ("
     << c["asadc_secure"].get<std::uint64_t>() << " promoted, "
     << c["asadc_candidate"].get<std::uint64_t>() << " candidate)\n";
  os << "\n";
  os << "residual " << c["residual"].get<std::uint64_t>() << ", indeterminate "
     << c["indeterminate"].get<std::uint64_t>() << "\n";
  if (r.contains("root_cause")) {
    const json& rc = r["root_cause"];
    os << "root cause: " << rc["true_convergence"].get<std::uint64_t>() << " true convergence, "
       << rc["amplification"].get<std::uint64_t>() << " amplification, "
       << rc["downstream"].get<std::uint64_t>() << " downstream, "
       << rc["dff_both"].get<std::uint64_t>() << " dff (sum " << rc["total"].get<std::uint64_t>()
       << ", coverage " << (rc["coverage_ok"].get<bool>() ? "ok" : "VIOLATED") << ")\n";
  }
  const json& a = r["agreement"];
  os << "backend: " << a["queries"].get<std::uint64_t>() << " queries, "
     << a["cross_checked"].get<std::uint64_t>() << " cross-checked, "
     << a["disagreements"].get<std::uint64_t>() << " disagreements\n";
  return os.str();
}

} // namespace maskcheck
