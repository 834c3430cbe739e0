#pragma once

#include "maskcheck/labels.hpp"
#include "maskcheck/netlist.hpp"
#include "maskcheck/queries.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace maskcheck {

struct StageSet {
  bool d1 = true;    // per-cone D0/D1 refinement of single-cycle flags
  bool mc = true;    // multi-cycle label propagation (MC-D1)
  bool fm = true;    // fresh-mask bijection refinement
  bool bsadc = true; // Boolean SADC
  bool asadc = true; // arithmetic SADC

  static StageSet parse(const std::string& csv); // "d1,mc,fm,bsadc,asadc"
  static StageSet all() { return {}; }
  std::string to_string() const;
};

enum class WireFinal : std::uint8_t {
  Secure,
  ConfirmedInsecure,  // Boolean SADC SAT
  CandidateInsecure,  // arithmetic SADC SAT (sound upper bound)
  Indeterminate,      // a stage ran out of resources
  StructuralFlagged,  // flagged and unresolved by the enabled stages
};
const char* wire_final_name(WireFinal f);

struct WireVerdict {
  std::uint32_t net = 0;
  std::string name;
  bool is_dff_q = false;
  bool mc_only = false; // flagged only by the multi-cycle pass
  Label sc_label = Label::Bot;
  Label mc_label = Label::Bot;
  std::optional<StructuralVerdict> structural; // SC-flagged combinational wires
  bool fm_applicable = false;
  bool fm_promoted = false;
  std::int32_t fm_bit = -1; // promoting randomness role index
  std::optional<SadcVerdict> bsadc;
  std::optional<SadcVerdict> asadc;
  WireFinal final = WireFinal::StructuralFlagged;
  std::string secure_stage; // "d0d1" | "fm" | "bsadc" | "asadc" when Secure
  std::optional<Witness> witness;
};

struct StageCounts {
  std::uint64_t structural_candidates = 0; // BOTH-labeled wires, selected mode
  std::uint64_t sc_flagged = 0;            // BOTH under single-cycle labels
  std::uint64_t d0d1_promoted = 0;
  std::uint64_t flagged = 0; // residual after the D0/D1 stage
  std::uint64_t fm_promoted = 0;
  std::uint64_t bsadc_secure = 0, bsadc_insecure = 0, bsadc_indeterminate = 0;
  std::uint64_t asadc_secure = 0, asadc_candidate = 0, asadc_indeterminate = 0;
  std::uint64_t residual = 0; // wires not promoted to Secure
  std::uint64_t indeterminate = 0;
  std::uint64_t structural_flagged = 0;
};

enum class Classification : std::uint8_t { Clean, Insecure, Timeout };
const char* classification_name(Classification c);

struct PipelineResult {
  std::string module_name;
  StageSet stages;
  QueryLimits limits;
  LabelMap sc_labels;
  std::optional<McResult> mc;
  std::optional<RootCauseReport> root_cause;
  bool coverage_ok = true;
  std::vector<WireVerdict> wires; // analyzed candidates, ascending net id
  StageCounts counts;
  BackendStats stats;
  Classification classification = Classification::Clean;
  // Wall-clock seconds per stage; manifest-only (reports stay byte-stable).
  double secs_labels = 0, secs_d0d1 = 0, secs_fm = 0, secs_bsadc = 0, secs_asadc = 0;

  int exit_code() const { return classification == Classification::Clean ? 0 : 1; }
};

/// Runs the verification hierarchy over every structurally flagged wire.
/// Self-checks gate the entry (SelfCheckFailure halts before analysis).
PipelineResult run_pipeline(const Netlist& n, const LabelConfig& cfg, const BackendConfig& be,
                            StageSet stages = StageSet::all());

} // namespace maskcheck
