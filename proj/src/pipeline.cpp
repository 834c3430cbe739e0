#include "maskcheck/pipeline.hpp"

#include "maskcheck/errors.hpp"
#include "maskcheck/selfcheck.hpp"
#include "maskcheck/wirefunc.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <sstream>

namespace maskcheck {

StageSet StageSet::parse(const std::string& csv) {
  StageSet s;
  s.d1 = s.mc = s.fm = s.bsadc = s.asadc = false;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (item == "d1") s.d1 = true;
    else if (item == "mc") s.mc = true;
    else if (item == "fm") s.fm = true;
    else if (item == "bsadc") s.bsadc = true;
    else if (item == "asadc") s.asadc = true;
    else throw Error(Errc::usage, "unknown stage \"" + item + "\" (d1,mc,fm,bsadc,asadc)");
  }
  return s;
}

std::string StageSet::to_string() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ",";
    out += name;
  };
  add(d1, "d1");
  add(mc, "mc");
  add(fm, "fm");
  add(bsadc, "bsadc");
  add(asadc, "asadc");
  return out;
}

const char* wire_final_name(WireFinal f) {
  switch (f) {
  case WireFinal::Secure: return "secure";
  case WireFinal::ConfirmedInsecure: return "confirmed_insecure";
  case WireFinal::CandidateInsecure: return "candidate_insecure";
  case WireFinal::Indeterminate: return "indeterminate";
  case WireFinal::StructuralFlagged: return "structural_flagged";
  }
  return "?";
}

const char* classification_name(Classification c) {
  switch (c) {
  case Classification::Clean: return "CLEAN";
  case Classification::Insecure: return "INSECURE";
  case Classification::Timeout: return "TIMEOUT";
  }
  return "?";
}

namespace {

double secs_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

PipelineResult run_pipeline(const Netlist& n, const LabelConfig& cfg, const BackendConfig& be,
                            StageSet stages) {
  ensure_selfchecks();

  PipelineResult pr;
  pr.module_name = n.module_name;
  pr.stages = stages;
  pr.limits = be.limits;

  auto t0 = std::chrono::steady_clock::now();
  pr.sc_labels = run_sc_d1_labels(n, cfg);
  const LabelMap* labels = &pr.sc_labels;
  if (stages.mc) {
    pr.mc = run_mc_d1(n, cfg);
    labels = &pr.mc->labels;
    pr.root_cause = decompose_root_causes(n, *pr.mc, pr.sc_labels);
    // Mandatory post-analysis assertion: every flagged wire sits in the
    // cone of a true convergence point.
    pr.coverage_ok = check_convergence_coverage(n, *pr.root_cause, *pr.mc);
  }
  pr.secs_labels = secs_since(t0);

  pr.counts.sc_flagged = count_both(n, pr.sc_labels);
  pr.counts.structural_candidates = count_both(n, *labels);

  // Candidate wires: every BOTH-labeled cell output, ascending net id.
  struct Cand {
    std::uint32_t net;
    std::uint32_t cell;
  };
  std::vector<Cand> cands;
  for (std::size_t ci = 0; ci < n.cells.size(); ++ci) {
    const Cell& c = n.cells[ci];
    if (labels->of(c.output) == Label::Both)
      cands.push_back({c.output.net_id(), static_cast<std::uint32_t>(ci)});
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.net < b.net; });

  WireFunctionBuilder wb(n);
  const auto& groups = cfg.arith_groups();

  std::set<std::uint32_t> group_nets;
  for (const ArithGroup& g : groups) {
    group_nets.insert(g.s0_nets.begin(), g.s0_nets.end());
    group_nets.insert(g.s1_nets.begin(), g.s1_nets.end());
  }

  for (const Cand& cand : cands) {
    const Cell& cell = n.cells[cand.cell];
    WireVerdict wv;
    wv.net = cand.net;
    wv.name = n.wire_name(cand.net);
    wv.is_dff_q = is_dff(cell.kind);
    wv.sc_label = pr.sc_labels.of(cell.output);
    wv.mc_label = labels->of(cell.output);
    wv.mc_only = wv.sc_label != Label::Both;
    pr.wires.push_back(std::move(wv));
  }

  // Stage 1: per-cone D0/D1 on single-cycle flagged combinational wires.
  // Multi-cycle-only flags keep their structural status: the single-cycle
  // cone query cannot see the cross-register convergence that raised them.
  t0 = std::chrono::steady_clock::now();
  if (stages.d1) {
    for (WireVerdict& wv : pr.wires) {
      if (wv.is_dff_q || wv.mc_only) continue;
      WireFunction wf = wb.build(BitRef::net(wv.net));
      wv.structural = classify_structural(wf, cfg, wb, be, &pr.stats, wv.name);
      if (wv.structural->kind == StructuralVerdict::Kind::Secure) {
        wv.final = WireFinal::Secure;
        wv.secure_stage = "d0d1";
        pr.counts.d0d1_promoted++;
      } else if (wv.structural->kind == StructuralVerdict::Kind::Unknown) {
        wv.final = WireFinal::Indeterminate;
      } else if (wv.structural->d0.witness) {
        wv.witness = wv.structural->d0.witness;
      }
    }
  }
  pr.secs_d0d1 = secs_since(t0);
  for (const WireVerdict& wv : pr.wires)
    if (wv.final != WireFinal::Secure) pr.counts.flagged++;

  auto unresolved = [&](const WireVerdict& wv) {
    return wv.final == WireFinal::StructuralFlagged;
  };

  // Stage 2: fresh-mask bijection refinement.
  t0 = std::chrono::steady_clock::now();
  if (stages.fm) {
    for (WireVerdict& wv : pr.wires) {
      if (!unresolved(wv)) continue;
      WireFunction wf = wb.build(BitRef::net(wv.net));
      Support sup = support(wf, cfg, wb);
      if (sup.c_r.empty()) continue; // FM needs randomness in the fan-in
      wv.fm_applicable = true;
      for (std::uint32_t r_index : sup.c_r) {
        if (check_fm(wf, r_index, cfg, wb, be, &pr.stats, wv.name)) {
          wv.fm_promoted = true;
          wv.fm_bit = static_cast<std::int32_t>(r_index);
          wv.final = WireFinal::Secure;
          wv.secure_stage = "fm";
          pr.counts.fm_promoted++;
          break;
        }
      }
    }
  }
  pr.secs_fm = secs_since(t0);

  // Stage 3: Boolean SADC.
  t0 = std::chrono::steady_clock::now();
  if (stages.bsadc) {
    for (WireVerdict& wv : pr.wires) {
      if (!unresolved(wv)) continue;
      WireFunction wf = wb.build(BitRef::net(wv.net));
      wv.bsadc = check_boolean_sadc(wf, cfg, wb, be, &pr.stats, wv.name);
      switch (wv.bsadc->kind) {
      case SadcVerdict::Kind::Secure:
        wv.final = WireFinal::Secure;
        wv.secure_stage = "bsadc";
        pr.counts.bsadc_secure++;
        break;
      case SadcVerdict::Kind::Insecure:
        wv.final = WireFinal::ConfirmedInsecure;
        wv.witness = wv.bsadc->witness;
        pr.counts.bsadc_insecure++;
        break;
      default:
        pr.counts.bsadc_indeterminate++; // the arithmetic stage may resolve it
        break;
      }
    }
  }
  pr.secs_bsadc = secs_since(t0);

  // Stage 4: arithmetic SADC, one pass per share group present in the cone.
  t0 = std::chrono::steady_clock::now();
  if (stages.asadc && !groups.empty()) {
    for (WireVerdict& wv : pr.wires) {
      if (!unresolved(wv) &&
          !(wv.final == WireFinal::Indeterminate && wv.bsadc &&
            wv.bsadc->kind == SadcVerdict::Kind::Indeterminate))
        continue;
      WireFunction wf = wb.build(BitRef::net(wv.net));
      std::vector<std::uint32_t> vars = cone_vars(wf);
      bool any_group = false;
      bool all_secure = true;
      bool indeterminate = false;
      for (const ArithGroup& g : groups) {
        bool present = false;
        for (std::uint32_t v : vars)
          if (group_nets.count(v) &&
              (std::find(g.s0_nets.begin(), g.s0_nets.end(), v) != g.s0_nets.end() ||
               std::find(g.s1_nets.begin(), g.s1_nets.end(), v) != g.s1_nets.end())) {
            present = true;
            break;
          }
        if (!present) continue;
        any_group = true;
        wv.asadc = check_arith_sadc(wf, cfg, wb, g, be, &pr.stats, wv.name);
        if (wv.asadc->kind == SadcVerdict::Kind::InsecureConservative) {
          wv.final = WireFinal::CandidateInsecure;
          wv.witness = wv.asadc->witness;
          pr.counts.asadc_candidate++;
          all_secure = false;
          break;
        }
        if (wv.asadc->kind == SadcVerdict::Kind::Indeterminate) {
          indeterminate = true;
          all_secure = false;
        }
      }
      if (!any_group) continue;
      if (all_secure) {
        wv.final = WireFinal::Secure;
        wv.secure_stage = "asadc";
        pr.counts.asadc_secure++;
      } else if (indeterminate && wv.final != WireFinal::CandidateInsecure) {
        wv.final = WireFinal::Indeterminate;
        pr.counts.asadc_indeterminate++;
      }
    }
  }
  pr.secs_asadc = secs_since(t0);

  // A wire whose only outcome was a resource-limited SADC pass ends
  // INDETERMINATE rather than structurally flagged.
  for (WireVerdict& wv : pr.wires) {
    if (wv.final == WireFinal::StructuralFlagged && wv.bsadc &&
        wv.bsadc->kind == SadcVerdict::Kind::Indeterminate &&
        (!wv.asadc || wv.asadc->kind == SadcVerdict::Kind::Indeterminate))
      wv.final = WireFinal::Indeterminate;
  }

  for (const WireVerdict& wv : pr.wires) {
    if (wv.final != WireFinal::Secure) pr.counts.residual++;
    if (wv.final == WireFinal::Indeterminate) pr.counts.indeterminate++;
    if (wv.final == WireFinal::StructuralFlagged) pr.counts.structural_flagged++;
  }

  bool any_insecure = false, any_indet = false;
  for (const WireVerdict& wv : pr.wires) {
    if (wv.final == WireFinal::ConfirmedInsecure || wv.final == WireFinal::CandidateInsecure ||
        wv.final == WireFinal::StructuralFlagged)
      any_insecure = true;
    if (wv.final == WireFinal::Indeterminate) any_indet = true;
  }
  // Findings dominate resource exhaustion; only a fully resolved run is CLEAN.
  pr.classification = any_insecure ? Classification::Insecure
                      : any_indet  ? Classification::Timeout
                                   : Classification::Clean;
  return pr;
}

} // namespace maskcheck
