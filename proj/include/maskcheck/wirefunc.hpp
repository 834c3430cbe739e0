#pragma once

#include "maskcheck/labels.hpp"
#include "maskcheck/netlist.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace maskcheck {

enum class NodeKind : std::uint8_t { Var, Const0, Const1, Not, And, Or, Xor, Mux };

struct ExprNode {
  NodeKind kind = NodeKind::Const0;
  std::uint32_t a = 0, b = 0, c = 0; // children (c only for Mux: select=a, then b/c)
  std::uint32_t var = 0;             // Var only
};

using NodeId = std::uint32_t;

/// Hash-consed expression arena. Structurally equal subtrees share one
/// node; commutative operands are order-normalized; constants fold only
/// when every operand is constant (cones must keep their syntactic
/// support, see support()). Node ids are topologically ordered: children
/// always precede parents.
class ExprDag {
public:
  NodeId var(std::uint32_t var_id);
  NodeId const0();
  NodeId const1();
  NodeId mk_not(NodeId a);
  NodeId mk_and(NodeId a, NodeId b);
  NodeId mk_or(NodeId a, NodeId b);
  NodeId mk_xor(NodeId a, NodeId b);
  /// mux(s, a, b) == s ? a : b
  NodeId mk_mux(NodeId s, NodeId a, NodeId b);

  const ExprNode& node(NodeId id) const { return nodes_[id]; }
  std::size_t size() const { return nodes_.size(); }

private:
  NodeId intern(ExprNode n);
  std::vector<ExprNode> nodes_;
  std::unordered_map<std::uint64_t, std::vector<NodeId>> buckets_;
};

/// Symbolic Boolean function of one net bit over primary-input bits and
/// DFF free variables. The arena is shared by every wire of one netlist.
struct WireFunction {
  std::shared_ptr<ExprDag> dag;
  NodeId root = 0;
};

/// Free-variable identities used by wire functions:
///   - primary-input bits and DFF Q bits are identified by net id;
///   - each const-x occurrence becomes a fresh public variable above
///     x_var_base().
struct VarInfo {
  enum class Kind { InputBit, DffQ, ConstX } kind = Kind::InputBit;
  std::uint32_t net = 0;  // InputBit/DffQ
  std::uint32_t x_id = 0; // ConstX
};

class WireFunctionBuilder {
public:
  explicit WireFunctionBuilder(const Netlist& n);

  /// Expression for the combinational cone of `bit`, cut at DFF Q pins.
  WireFunction build(BitRef bit);

  std::uint32_t x_var_base() const { return x_base_; }
  VarInfo var_info(std::uint32_t var_id) const;
  std::string var_name(std::uint32_t var_id) const;
  const Netlist& netlist() const { return n_; }

private:
  NodeId build_net(std::uint32_t net);
  NodeId build_bit(BitRef bit);

  const Netlist& n_;
  std::shared_ptr<ExprDag> dag_;
  std::uint32_t x_base_;
  std::vector<std::int64_t> memo_; // net -> node id or -1
};

/// Syntactic support of a wire function, partitioned by role. Share and
/// randomness entries are role-local bit indices (LabelConfig numbering);
/// c_dff holds Q net ids; const-x variables count as public.
struct Support {
  std::set<std::uint32_t> c_s0, c_s1, c_r, c_p;
  std::set<std::uint32_t> c_dff;
  std::set<std::uint32_t> paired;      // pair ids with both members in the cone
  std::set<std::uint32_t> unpaired_s0; // role-local s0 indices without a matched partner
  std::set<std::uint32_t> unpaired_s1;
  std::vector<std::uint32_t> vars;     // raw var ids, ascending
};

Support support(const WireFunction& wf, const LabelConfig& cfg, const WireFunctionBuilder& b);

/// Raw variable ids appearing in the cone, ascending.
std::vector<std::uint32_t> cone_vars(const WireFunction& wf);

/// Standard Boolean semantics; Mux(s,a,b) = s ? a : b.
/// Throws MissingAssignment if a cone variable is absent.
int evaluate(const WireFunction& wf, const std::map<std::uint32_t, int>& assignment);

/// Simultaneous substitution var -> expression; untouched variables are
/// copied through, the result is freshly deduplicated.
WireFunction substitute(const WireFunction& wf, const std::map<std::uint32_t, WireFunction>& map);

/// Copy the cone of `root` from `src` into `dst`, rewriting every Var
/// through `var_map` (vars absent from the map are copied verbatim).
NodeId import_expr(const ExprDag& src, NodeId root, ExprDag& dst,
                   const std::map<std::uint32_t, NodeId>& var_map);

/// Deterministic S-expression dump (tree expansion) for golden-file tests.
std::string to_sexpr(const WireFunction& wf, const WireFunctionBuilder& b);
std::string to_sexpr_raw(const WireFunction& wf);

/// Count of distinct DAG nodes in the cone of `wf`.
std::size_t cone_node_count(const WireFunction& wf);

/// Linearized single-output cone for repeated evaluation. Variables are
/// remapped onto dense slots; eval64 evaluates 64 assignments at once
/// (one lane per bit).
class CompiledCone {
public:
  CompiledCone() = default;
  explicit CompiledCone(const WireFunction& wf);

  std::size_t slot_count() const { return slot_vars_.size(); }
  const std::vector<std::uint32_t>& slot_vars() const { return slot_vars_; }

  std::uint64_t eval64(std::span<const std::uint64_t> slot_lanes) const;
  int eval1(std::span<const std::uint8_t> slot_values) const;

private:
  struct Op {
    NodeKind kind;
    std::uint32_t a, b, c;
  };
  std::vector<Op> ops_;           // topo order; Var ops carry slot in `a`
  std::vector<std::uint32_t> slot_vars_;
  mutable std::vector<std::uint64_t> scratch_;
};

/// Single source of truth for gate semantics (shared by the netlist
/// simulator and pinned against build_wire_function by the golden
/// truth-table test).
bool eval_cell(CellKind kind, std::span<const int> inputs);

/// Direct gate-by-gate netlist simulation: values for every net given
/// primary-input, DFF-Q, and const-x assignments. Independent of the
/// WireFunction path; used as its test oracle.
struct SimInput {
  std::map<std::uint32_t, int> nets; // PI and DFF Q values by net id
  std::map<std::uint32_t, int> xs;   // const-x occurrence values
};
std::vector<std::int8_t> simulate(const Netlist& n, const SimInput& in);

namespace testing {
/// Corrupts XOR evaluation inside the expression evaluators; the
/// self-check suite must detect this (negative control for the
/// known-answer gate).
void set_eval_corruption(bool on);
bool eval_corruption();
} // namespace testing

} // namespace maskcheck
