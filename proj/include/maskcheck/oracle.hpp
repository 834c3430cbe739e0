#pragma once

#include "maskcheck/labels.hpp"
#include "maskcheck/netlist.hpp"
#include "maskcheck/wirefunc.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace maskcheck {

/// Exact brute-force distribution check for one wire under the
/// reparametrized masking model (boolean: s0 = x xor s1; arithmetic:
/// s0 = (x - s1) mod q with x, s1 < q).
///
/// Public, DFF, and const-x variables are conditioning slices: the wire is
/// DIST_INDEPENDENT only if, in every slice, the per-secret histograms
/// over (mask, fresh randomness) coincide. value_independent additionally
/// requires the wire value to be constant in the secret at every fixed
/// (slice, mask, randomness) point. value_independent implies
/// DIST_INDEPENDENT.
struct OracleResult {
  bool dist_independent = true;
  bool value_independent = true;
  std::uint64_t mask_space = 0;  // per-slice (mask x randomness) assignments
  std::uint64_t slice_count = 1;
  std::uint64_t secret_count = 1;
  /// Per-secret output histograms {count of 0, count of 1} for the first
  /// distinguishing slice (or slice 0 when independent). Each histogram
  /// sums to mask_space.
  std::vector<std::pair<std::string, std::array<std::uint64_t, 2>>> histograms;
};

OracleResult oracle(const Netlist& n, const LabelConfig& cfg, BitRef wire,
                    std::uint64_t space_cap = 1ull << 28);

/// Same, reusing an existing builder (cheaper in sweeps).
OracleResult oracle(const WireFunction& wf, const LabelConfig& cfg,
                    const WireFunctionBuilder& b, std::uint64_t space_cap = 1ull << 28);

} // namespace maskcheck
