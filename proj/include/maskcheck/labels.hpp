#pragma once

#include "maskcheck/netlist.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace maskcheck {

/// Join-semilattice {BOT, S0, S1, BOTH}; join is bitwise or, height 3.
enum class Label : std::uint8_t { Bot = 0, S0 = 1, S1 = 2, Both = 3 };

constexpr Label join(Label a, Label b) {
  return static_cast<Label>(static_cast<std::uint8_t>(a) | static_cast<std::uint8_t>(b));
}
constexpr bool label_leq(Label a, Label b) { return join(a, b) == b; }
const char* label_name(Label l);

enum class Role : std::uint8_t { S0, S1, R, P };
const char* role_name(Role r);

struct BoolPair {
  std::string secret;
  std::uint32_t bit = 0; // bit index within the paired ports
  std::uint32_t s0_net = 0;
  std::uint32_t s1_net = 0;
};

struct ArithGroup {
  std::string secret;
  std::uint64_t q = 0;
  std::uint32_t width = 0;
  std::vector<std::uint32_t> s0_nets; // bit i of the s0 bus
  std::vector<std::uint32_t> s1_nets;
};

/// Port-role map plus share-pairing metadata, parsed from the labels JSON:
///   {"ports": {name: {"role": "s0|s1|r|p"}},
///    "boolean_pairs": [{"s0": port, "s1": port, "secret": name}],
///    "arith_groups": [{"s0": port, "s1": port, "q": int, "width": int, "secret": name}]}
/// Roles partition the input port bits; validation errors carry the JSON
/// path of the offending entry.
class LabelConfig {
public:
  static LabelConfig parse(const std::string& json_text, const Netlist& n);
  /// In-code construction for generators and tests.
  static LabelConfig from_roles(const Netlist& n,
                                const std::vector<std::pair<std::string, Role>>& port_roles,
                                std::vector<BoolPair> pairs, std::vector<ArithGroup> groups);

  std::optional<Role> role_of_net(std::uint32_t net) const;
  /// Position of the net within its role group (deterministic: ports by
  /// name, bits in order).
  std::uint32_t role_index(std::uint32_t net) const;
  std::uint32_t role_count(Role r) const;
  /// Inverse of role_index.
  std::uint32_t net_of_role(Role r, std::uint32_t index) const;

  const std::vector<BoolPair>& boolean_pairs() const { return pairs_; }
  const std::vector<ArithGroup>& arith_groups() const { return groups_; }
  /// Pair id for a share net, if that net belongs to a boolean pair.
  std::optional<std::uint32_t> pair_of_net(std::uint32_t net) const;

  const std::string& source_digest() const { return digest_; }

private:
  struct NetInfo {
    Role role;
    std::uint32_t index;
    std::int32_t pair = -1;
  };
  std::vector<std::optional<NetInfo>> nets_;
  std::array<std::uint32_t, 4> role_counts_{0, 0, 0, 0};
  std::array<std::vector<std::uint32_t>, 4> role_nets_;
  std::vector<BoolPair> pairs_;
  std::vector<ArithGroup> groups_;
  std::string digest_;

  friend class LabelConfigBuilder;
};

/// Per-net labels (DFF Q labels are the labels of the Q nets).
struct LabelMap {
  std::vector<Label> net;

  Label of(BitRef b) const {
    if (!b.is_net()) return Label::Bot; // constants and x carry no share
    return b.net_id() < net.size() ? net[b.net_id()] : Label::Bot;
  }
  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

/// One topological pass: every combinational cell output gets the join of
/// all its data inputs (MUX select included). `labels` must already carry
/// assignments for primary inputs and DFF Q bits.
void propagate_combinational(const Netlist& n, LabelMap& labels);

/// Single-cycle structural pass: DFF Q bits start at BOT; wires labeled
/// BOTH are the SC-D1 structurally flagged set.
LabelMap run_sc_d1_labels(const Netlist& n, const LabelConfig& cfg);

struct McResult {
  LabelMap labels;
  std::uint32_t iterations_used = 0;
  std::uint32_t bound_d = 0;
  bool converged = false;
};

/// Multi-cycle fixed point: Jacobi snapshot of DFF D-labels, atomic
/// per-iteration Q updates, re-propagation; stops on a no-change pass or
/// after bound_d+1 passes (the default bound). `trace`, when given,
/// receives the LabelMap after every pass (test instrumentation).
McResult run_mc_d1(const Netlist& n, const LabelConfig& cfg,
                   std::optional<std::uint32_t> max_iter_override = std::nullopt,
                   std::vector<LabelMap>* trace = nullptr);

/// One additional Jacobi pass on an existing map; returns true if any DFF
/// label changed.
bool mc_step(const Netlist& n, LabelMap& labels);

struct RootCauseReport {
  std::vector<std::uint32_t> true_convergence; // comb cell indices
  std::vector<std::uint32_t> amplification;
  std::vector<std::uint32_t> downstream;
  std::vector<std::uint32_t> dff_both; // dff cell indices

  std::size_t total() const {
    return true_convergence.size() + amplification.size() + downstream.size() + dff_both.size();
  }
};

/// Partition of every BOTH-labeled element: true convergence (no single
/// input BOTH), downstream (all inputs BOTH), amplification (mixed), and
/// BOTH-labeled DFF outputs.
RootCauseReport decompose_root_causes(const Netlist& n, const McResult& mc, const LabelMap& sc);

/// True iff every BOTH wire is reachable (combinationally or through DFFs)
/// from some true-convergence cell.
bool check_convergence_coverage(const Netlist& n, const RootCauseReport& rc, const McResult& mc);

/// Number of nets labeled BOTH.
std::size_t count_both(const Netlist& n, const LabelMap& labels);

} // namespace maskcheck
