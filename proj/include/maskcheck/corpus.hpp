#pragma once

#include "maskcheck/labels.hpp"
#include "maskcheck/netlist.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace maskcheck {

/// In-code netlist construction for generators, self-checks, and tests.
/// finish() routes through the same validation as parse_netlist.
class NetlistBuilder {
public:
  NetlistBuilder();

  std::vector<BitRef> input(const std::string& name, std::uint32_t width = 1);
  BitRef input1(const std::string& name) { return input(name, 1)[0]; }
  void output(const std::string& name, std::vector<BitRef> bits);
  void output1(const std::string& name, BitRef bit) { output(name, {bit}); }

  /// Combinational cell; returns its output net.
  BitRef gate(CellKind kind, const std::string& name, const std::vector<BitRef>& ins);
  BitRef g_and(const std::string& n, BitRef a, BitRef b) { return gate(CellKind::And, n, {a, b}); }
  BitRef g_or(const std::string& n, BitRef a, BitRef b) { return gate(CellKind::Or, n, {a, b}); }
  BitRef g_xor(const std::string& n, BitRef a, BitRef b) { return gate(CellKind::Xor, n, {a, b}); }
  BitRef g_not(const std::string& n, BitRef a) { return gate(CellKind::Not, n, {a}); }
  /// Yosys pin order: Y = s ? b_if_1 : a_if_0.
  BitRef g_mux(const std::string& n, BitRef a_if_0, BitRef b_if_1, BitRef s) {
    return gate(CellKind::Mux, n, {a_if_0, b_if_1, s});
  }
  /// Plain positive-edge DFF on the implicit clock.
  BitRef dff(const std::string& name, BitRef d);

  Netlist finish(const std::string& module_name);
  /// finish() then serialize.
  std::string finish_json(const std::string& module_name);

private:
  BitRef fresh();
  std::uint32_t next_net_ = 2;
  std::optional<BitRef> clock_;
  std::vector<Cell> cells_;
  std::map<std::string, PortDecl> ports_;
};

enum class GadgetKind {
  DomAndSecure,
  DomAndBroken,
  IswAndSecure,
  IswAndBroken,
  CrossRegister,
  ToyBarrett,
  ShareIsolated,
  PublicMux,
  ConstOut,
  XorMaskedProduct,
};

const char* gadget_kind_name(GadgetKind k);
std::optional<GadgetKind> gadget_kind_from_name(const std::string& name);

struct GadgetSpec {
  GadgetKind kind = GadgetKind::DomAndSecure;
  std::uint64_t q = 17;     // ToyBarrett
  std::uint32_t width = 0;  // ToyBarrett share width; lane count elsewhere (0: default)
};

struct GadgetOutput {
  std::string netlist_json;
  std::string labels_json;
  std::string expected_json;
};

/// Deterministic reference gadget with its label config and expected
/// pipeline outcome (byte-identical across runs).
GadgetOutput generate(const GadgetSpec& spec);

/// Parsed convenience form.
struct GadgetInstance {
  Netlist netlist;
  LabelConfig config;
  std::string expected_json;
};
GadgetInstance generate_instance(const GadgetSpec& spec);

/// Random layered pipeline (acyclic, depth-bounded) for fixed-point
/// property tests. Deterministic in `seed`.
GadgetInstance gen_random_pipeline(std::uint64_t seed, std::uint32_t max_depth,
                                   std::uint32_t width);

/// Large pipelined netlist for the scale smoke tests: `stages` DFF ranks
/// whose chain depth is stages-1, sized to roughly `target_cells`
/// combinational cells.
GadgetInstance gen_scale_netlist(std::uint32_t target_cells, std::uint32_t stages);

} // namespace maskcheck
