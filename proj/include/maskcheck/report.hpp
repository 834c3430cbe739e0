#pragma once

#include "maskcheck/labels.hpp"
#include "maskcheck/netlist.hpp"
#include "maskcheck/pipeline.hpp"

#include <string>

namespace maskcheck {

inline constexpr const char* kToolVersion = "0.1.0";

/// Deterministic report JSON (sorted keys, stable layout, no wall-clock
/// figures): identical inputs and flags produce byte-identical text.
std::string build_report_json(const Netlist& n, const LabelConfig& cfg,
                              const PipelineResult& pr);

/// repro_manifest.json: tool version, input digests, limits, backend
/// identity, and the per-stage wall times excluded from the report body.
std::string build_manifest_json(const Netlist& n, const LabelConfig& cfg,
                                const PipelineResult& pr, const BackendConfig& be,
                                const std::string& netlist_path, const std::string& labels_path);

/// Human-readable table for `report summarize`.
std::string summarize_report(const std::string& report_json);

} // namespace maskcheck
