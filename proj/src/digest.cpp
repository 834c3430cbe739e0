#include "maskcheck/digest.hpp"
#include "maskcheck/errors.hpp"

#include <array>
#include <openssl/evp.h>

namespace maskcheck {

std::string to_hex(const std::uint8_t* data, std::size_t len) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (std::size_t i = 0; i < len; ++i) {
    out.push_back(digits[data[i] >> 4]);
    out.push_back(digits[data[i] & 0xf]);
  }
  return out;
}

std::string sha256_hex(std::string_view data) {
  std::array<std::uint8_t, 32> md{};
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx, data.data(), data.size());
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  return to_hex(md.data(), len);
}

const char* errc_name(Errc c) {
  switch (c) {
  case Errc::malformed_json: return "MalformedJson";
  case Errc::unknown_cell_kind: return "UnknownCellKind";
  case Errc::multiple_drivers: return "MultipleDrivers";
  case Errc::combinational_cycle: return "CombinationalCycle";
  case Errc::bad_label_config: return "BadLabelConfig";
  case Errc::undriven_net: return "UndrivenNet";
  case Errc::missing_assignment: return "MissingAssignment";
  case Errc::overflow_precondition: return "OverflowPrecondition";
  case Errc::space_too_large: return "SpaceTooLarge";
  case Errc::not_converged: return "NotConverged";
  case Errc::solver_process_failure: return "SolverProcessFailure";
  case Errc::backend_disagreement: return "BackendDisagreement";
  case Errc::selfcheck_failure: return "SelfCheckFailure";
  case Errc::obligation_failure: return "ObligationFailure";
  case Errc::usage: return "Usage";
  }
  return "Error";
}

} // namespace maskcheck
