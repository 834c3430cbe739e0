#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace maskcheck {

/// One bit position in the netlist: either a net id (as found in the
/// synthesis JSON "bits" arrays) or a constant "0"/"1"/"x". Each "x"
/// occurrence carries its own id so it can later become a fresh public
/// free variable.
class BitRef {
public:
  constexpr BitRef() : v_(kUndef) {}
  static constexpr BitRef net(std::uint32_t id) { return BitRef(static_cast<std::int64_t>(id)); }
  static constexpr BitRef zero() { return BitRef(kZero); }
  static constexpr BitRef one() { return BitRef(kOne); }
  static constexpr BitRef x(std::uint32_t occurrence) {
    return BitRef(kXBase - static_cast<std::int64_t>(occurrence));
  }

  constexpr bool is_undef() const { return v_ == kUndef; }
  constexpr bool is_net() const { return v_ >= 0; }
  constexpr bool is_const0() const { return v_ == kZero; }
  constexpr bool is_const1() const { return v_ == kOne; }
  constexpr bool is_x() const { return v_ <= kXBase; }
  constexpr bool is_const() const { return !is_net() && !is_undef(); }

  constexpr std::uint32_t net_id() const { return static_cast<std::uint32_t>(v_); }
  constexpr std::uint32_t x_id() const { return static_cast<std::uint32_t>(kXBase - v_); }

  friend constexpr bool operator==(BitRef a, BitRef b) = default;
  friend constexpr auto operator<=>(BitRef a, BitRef b) = default;

private:
  static constexpr std::int64_t kUndef = -1;
  static constexpr std::int64_t kZero = -2;
  static constexpr std::int64_t kOne = -3;
  static constexpr std::int64_t kXBase = -4;
  constexpr explicit BitRef(std::int64_t v) : v_(v) {}
  std::int64_t v_;
};

enum class CellKind : std::uint8_t {
  And, Or, Xor, Xnor, Nand, Nor, AndNot, OrNot, Not, Mux,
  // Primitive DFFs: plain and async-set/reset variants.
  DffP, DffN,
  DffPP0, DffPP1, DffPN0, DffPN1, DffNP0, DffNP1, DffNN0, DffNN1,
  // Synchronous-reset DFFs (no enable). The reset pin is data-relevant.
  SdffPP0, SdffPP1, SdffPN0, SdffPN1, SdffNP0, SdffNP1, SdffNN0, SdffNN1,
};

bool is_dff(CellKind k);
bool is_sdff(CellKind k);
bool is_comb(CellKind k);
std::size_t comb_arity(CellKind k);
const char* yosys_cell_name(CellKind k);
std::optional<CellKind> cell_kind_from_yosys(std::string_view type);

struct Cell {
  std::string name;
  CellKind kind = CellKind::And;
  /// Data inputs. Combinational cells: operands in Yosys pin order
  /// (A[,B[,S]]). DFFs: {D} — or {D, R} for synchronous-reset kinds, whose
  /// reset participates in the next-state function.
  std::vector<BitRef> inputs;
  BitRef output; // Y or Q
  BitRef clock;  // DFF only; recorded, never treated as data
  BitRef async_sr; // async set/reset pin of $_DFF_xxx_ variants; recorded only
};

struct PortDecl {
  enum class Dir { In, Out };
  Dir dir = Dir::In;
  std::vector<BitRef> bits;
};

/// Validated bit-level gate graph for one flattened module.
///
/// Invariants established at construction: every net bit has at most one
/// driver (cell output or input-port bit), all port bits resolve, and cell
/// arities match their kinds. Immutable after construction and safe to
/// share across threads.
struct Netlist {
  std::string module_name;
  std::string source_hash; // sha256 of the input JSON text
  std::uint32_t net_count = 0;
  std::uint32_t max_net_id = 0;
  std::vector<Cell> cells; // sorted by name
  std::map<std::string, PortDecl> ports;

  // Indexes (derived, deterministic).
  std::vector<std::int32_t> driver; // net id -> cell index, or -1
  std::vector<std::uint8_t> primary_input; // net id -> is an input-port bit
  std::vector<std::uint32_t> comb_cells;  // cell indices, ascending
  std::vector<std::uint32_t> dff_cells;   // cell indices, ascending

  bool is_primary_input(std::uint32_t net) const {
    return net < primary_input.size() && primary_input[net] != 0;
  }
  std::int32_t driver_of(std::uint32_t net) const {
    return net < driver.size() ? driver[net] : -1;
  }
  bool net_known(std::uint32_t net) const;

  /// Deterministic display name for a net bit: "port[i]" for port bits,
  /// otherwise "<cell>.Y" / "<cell>.Q" for driven nets, else "net<k>".
  std::string wire_name(std::uint32_t net) const;
};

/// Field-by-field structural equality, excluding source_hash (round-trip
/// tests re-serialize, so the text digest necessarily differs).
bool structurally_equal(const Netlist& a, const Netlist& b);

/// Parse a synthesis-tool JSON module dump (single flattened module).
Netlist parse_netlist(const std::string& json_text);

/// Sort cells by name, build the driver/primary-input indexes, and enforce
/// the construction invariants (unique names, arities, single driver,
/// resolving port bits). parse_netlist and NetlistBuilder share this.
void finalize_netlist(Netlist& n);

/// Canonical JSON writer (sorted keys, stable layout); re-parsing the
/// output yields a structurally identical netlist.
std::string to_canonical_json(const Netlist& n);

/// Topological order over combinational cells (DFFs excluded; their Q
/// outputs and primary inputs are sources). Ties broken by ascending cell
/// name. Throws CombinationalCycle with a cycle trace.
std::vector<std::uint32_t> topo_order(const Netlist& n);

/// Register-level dependency graph: edge (u,v) iff a combinational path
/// runs from Q of dff u to a data-relevant D pin of dff v.
struct DffGraph {
  std::uint32_t node_count = 0;              // == dff_cells.size()
  std::vector<std::uint32_t> dff_cell;       // node -> cell index
  std::vector<std::vector<std::uint32_t>> adj; // node -> successor nodes, ascending
};

DffGraph build_dff_graph(const Netlist& n);

/// D = longest path (in edges) of the SCC-condensed graph.
std::uint32_t scc_longest_path(const DffGraph& g);

/// Tarjan SCC; returns component id per node, components numbered in
/// reverse topological order of the condensation.
std::vector<std::uint32_t> tarjan_scc(const DffGraph& g, std::uint32_t* component_count = nullptr);

} // namespace maskcheck
