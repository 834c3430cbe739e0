#pragma once

#include "maskcheck/labels.hpp"
#include "maskcheck/wirefunc.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace maskcheck {

struct QueryLimits {
  std::uint32_t exhaustive_bit_budget = 24;
  std::uint64_t smt_resource_limit = 10'000'000; // recorded; substituted for {rlimit}
  std::uint32_t wall_timeout_s = 0;              // 0 disables the wall-clock fallback
  std::uint64_t seed = 0;
};

struct BackendConfig {
  QueryLimits limits;
  std::string solver_cmd; // empty: exhaustive backend only
  std::string dump_dir;   // when set, every emitted script lands here
  bool cross_check = false; // run both backends on in-budget queries
};

struct BackendStats {
  std::uint64_t queries = 0;
  std::uint64_t exhaustive = 0;
  std::uint64_t smt = 0;
  std::uint64_t cross_checked = 0;
  std::uint64_t disagreements = 0;
};

struct Witness {
  std::vector<std::pair<std::string, bool>> bits;          // free leaves, leaf order
  std::vector<std::pair<std::string, std::uint64_t>> groups;
  std::string hex() const; // packed free-leaf bits, LSB first
};

enum class SatKind : std::uint8_t { Sat, Unsat, ResourceOut };

struct SatResult {
  SatKind kind = SatKind::ResourceOut;
  std::optional<Witness> witness;
};

struct QueryGroupVar {
  std::string name;
  std::uint32_t width = 0;
  std::uint64_t less_than = 0; // 0: full width
};

struct QueryLeaf {
  std::string name;
  enum class Bind : std::uint8_t {
    Free,         // independent uniform bit
    GroupBit,     // bit `bit` of groups[group]
    DerivedSubBit // bit `bit` of ((groups[minuend] - groups[subtrahend] + q) mod q)
  } bind = Bind::Free;
  std::uint32_t group = 0, bit = 0;
  std::uint32_t minuend = 0, subtrahend = 0;
};

/// A satisfiability question over a Boolean predicate DAG whose leaves are
/// free bits, word-level group bits, or modular-subtraction reparametrized
/// bits. Both backends (exhaustive enumeration and SMT-LIB2 text) consume
/// the same structure through independent encodings.
struct Query {
  std::string name; // "<wire>/<stage>/<kind>"; doubles as the dump path
  std::vector<QueryGroupVar> groups;
  std::vector<QueryLeaf> leaves;
  std::shared_ptr<ExprDag> dag; // Var ids are leaf indices
  NodeId predicate = 0;
  std::optional<std::pair<std::uint32_t, std::uint32_t>> distinct_groups;
};

/// Conservative enumeration cost: free leaves plus ceil(log2(domain)) per
/// group variable.
std::uint32_t enumeration_bits(const Query& q);

/// Self-contained SMT-LIB2 script (QF_BV): declarations, range constraints,
/// the define-fun node chain, assert, check-sat, get-model. Byte-stable for
/// identical queries.
std::string emit_smtlib(const Query& q);

/// Evaluate the predicate under a witness (derived bits recomputed).
bool replay_witness(const Query& q, const Witness& w);

/// Exhaustive enumeration backend; deterministic first witness.
SatResult solve_exhaustive(const Query& q);

/// External solver backend: emits SMT-LIB2 over the process's stdin and
/// parses sat/unsat/unknown plus an optional model. SAT witnesses are
/// replayed before being accepted.
SatResult solve_smt(const Query& q, const BackendConfig& cfg);

/// Backend dispatch: exhaustive when the query fits the bit budget
/// (authoritative), otherwise the external solver, otherwise RESOURCE_OUT.
/// With cfg.cross_check and a configured solver, in-budget queries run on
/// both backends and any disagreement aborts with a diagnostic dump.
SatResult solve(const Query& q, const BackendConfig& cfg, BackendStats* stats = nullptr);

struct BackendAgreement {
  SatResult primary;   // exhaustive
  SatResult secondary; // external solver
  bool agree = false;
};

/// Runs both backends (pre: query within budget and solver configured);
/// witnesses are replayed through the evaluator before comparison.
BackendAgreement cross_validate(const Query& q, const BackendConfig& cfg);

// ---- Query construction over wire functions ----

struct VarCatalog; // internal naming/role map

Query build_d_query(int share_group, const WireFunction& wf, const LabelConfig& cfg,
                    const WireFunctionBuilder& b, const std::string& wire_tag);
Query build_fm_query(const WireFunction& wf, std::uint32_t r_index, const LabelConfig& cfg,
                     const WireFunctionBuilder& b, const std::string& wire_tag);
Query build_bsadc_query(const WireFunction& wf, const LabelConfig& cfg,
                        const WireFunctionBuilder& b, const std::string& wire_tag);
Query build_asadc_query(const WireFunction& wf, const LabelConfig& cfg,
                        const WireFunctionBuilder& b, const ArithGroup& group,
                        const std::string& wire_tag);

// ---- Spec-level checks ----

struct StructuralVerdict {
  enum class Kind : std::uint8_t { Secure, PotentiallyInsecure, Unknown } kind = Kind::Unknown;
  SatResult d0;
  std::optional<SatResult> d1; // absent when short-circuited by d0 = UNSAT
};

/// D0: does any assignment vary the wire by varying the s0 group alone?
SatResult check_d0(const WireFunction& wf, const LabelConfig& cfg, const WireFunctionBuilder& b,
                   const BackendConfig& be, BackendStats* stats = nullptr,
                   const std::string& wire_tag = "wire");
SatResult check_d1(const WireFunction& wf, const LabelConfig& cfg, const WireFunctionBuilder& b,
                   const BackendConfig& be, BackendStats* stats = nullptr,
                   const std::string& wire_tag = "wire");

/// SECURE iff D0 or D1 is UNSAT (D1 skipped if D0 already UNSAT);
/// POTENTIALLY_INSECURE iff both SAT; UNKNOWN absorbs resource-outs.
StructuralVerdict classify_structural(const WireFunction& wf, const LabelConfig& cfg,
                                      const WireFunctionBuilder& b, const BackendConfig& be,
                                      BackendStats* stats = nullptr,
                                      const std::string& wire_tag = "wire");

/// True iff randomness bit r (role-local index) acts as a bijection on the
/// wire: the negation "exists inputs with w(r=0) == w(r=1)" is UNSAT.
/// RESOURCE_OUT counts as not promoted.
bool check_fm(const WireFunction& wf, std::uint32_t r_index, const LabelConfig& cfg,
              const WireFunctionBuilder& b, const BackendConfig& be,
              BackendStats* stats = nullptr, const std::string& wire_tag = "wire");

struct SadcVerdict {
  enum class Kind : std::uint8_t { Secure, Insecure, InsecureConservative, Indeterminate } kind =
      Kind::Indeterminate;
  std::optional<Witness> witness;
  std::string reason;
};

/// Boolean SADC: substitute s0[i] := x[i] xor s1[i] for every paired index
/// in the cone; unpaired share bits stay independent uniform free bits.
SadcVerdict check_boolean_sadc(const WireFunction& wf, const LabelConfig& cfg,
                               const WireFunctionBuilder& b, const BackendConfig& be,
                               BackendStats* stats = nullptr,
                               const std::string& wire_tag = "wire");

/// Arithmetic SADC over one share group: s0 bits become bit views of
/// (X - S1) mod q with X, X', S1 < q. SAT is reported conservatively.
SadcVerdict check_arith_sadc(const WireFunction& wf, const LabelConfig& cfg,
                             const WireFunctionBuilder& b, const ArithGroup& group,
                             const BackendConfig& be, BackendStats* stats = nullptr,
                             const std::string& wire_tag = "wire");

} // namespace maskcheck
