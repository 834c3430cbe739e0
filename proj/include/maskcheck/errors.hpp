#pragma once

#include <stdexcept>
#include <string>

namespace maskcheck {

enum class Errc {
  malformed_json,
  unknown_cell_kind,
  multiple_drivers,
  combinational_cycle,
  bad_label_config,
  undriven_net,
  missing_assignment,
  overflow_precondition,
  space_too_large,
  not_converged,
  solver_process_failure,
  backend_disagreement,
  selfcheck_failure,
  obligation_failure,
  usage,
};

const char* errc_name(Errc c);

/// Toolkit-wide error type. `code()` distinguishes the failure classes the
/// per-operation contracts name (UnknownCellKind, MultipleDrivers, ...).
class Error : public std::runtime_error {
public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const { return code_; }

private:
  Errc code_;
};

} // namespace maskcheck
