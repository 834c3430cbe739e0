#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace maskcheck {

struct ObligationResult {
  std::string id;
  std::string detail;
  bool pass = false;
};

/// Algebraic proof obligations backing the reparametrized checks:
///   T2  boolean round-trip (x ^ s1) ^ s1 = x (expression-DAG route plus
///       host-arithmetic sampling over 24-bit vectors)
///   T3  arithmetic round-trip ((x - s1 + q) mod q + s1) mod q = x,
///       exhaustive at q=5 and q=17, full 3329^2 at q=3329/w=24
///   T4  no-overflow window 1 <= (x - s1 + q) < 2q < 2^w for
///       (3329,24), (8380417,24) tight, (8380417,46)
///   T5  12-bit RNG reduced mod 3329: exact residue counts, bias ratio 2
///   T6  q=5 two-wire instance: value-independence soundness and the
///       constant-marginal tightness gap
///   T1  (optional, long) r-free value-independence theorem over the full
///       2^25 wire-function space at q=5
std::vector<ObligationResult> run_proof_obligations(bool include_t1 = false);

} // namespace maskcheck
