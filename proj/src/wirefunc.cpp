#include "maskcheck/wirefunc.hpp"

#include "maskcheck/errors.hpp"

#include <algorithm>
#include <atomic>

namespace maskcheck {

namespace testing {
namespace {
std::atomic<bool> g_corrupt{false};
}
void set_eval_corruption(bool on) { g_corrupt.store(on); }
bool eval_corruption() { return g_corrupt.load(std::memory_order_relaxed); }
} // namespace testing

namespace {

std::uint64_t node_key(const ExprNode& n) {
  std::uint64_t h = static_cast<std::uint64_t>(n.kind);
  h = h * 0x9e3779b97f4a7c15ull + n.a;
  h = h * 0x9e3779b97f4a7c15ull + n.b;
  h = h * 0x9e3779b97f4a7c15ull + n.c;
  h = h * 0x9e3779b97f4a7c15ull + n.var;
  return h;
}

bool node_eq(const ExprNode& x, const ExprNode& y) {
  return x.kind == y.kind && x.a == y.a && x.b == y.b && x.c == y.c && x.var == y.var;
}

bool is_const_node(const ExprNode& n) {
  return n.kind == NodeKind::Const0 || n.kind == NodeKind::Const1;
}

} // namespace

NodeId ExprDag::intern(ExprNode n) {
  std::uint64_t key = node_key(n);
  auto& bucket = buckets_[key];
  for (NodeId id : bucket)
    if (node_eq(nodes_[id], n)) return id;
  NodeId id = static_cast<NodeId>(nodes_.size());
  nodes_.push_back(n);
  bucket.push_back(id);
  return id;
}

NodeId ExprDag::var(std::uint32_t var_id) { return intern({NodeKind::Var, 0, 0, 0, var_id}); }
NodeId ExprDag::const0() { return intern({NodeKind::Const0, 0, 0, 0, 0}); }
NodeId ExprDag::const1() { return intern({NodeKind::Const1, 0, 0, 0, 0}); }

NodeId ExprDag::mk_not(NodeId a) {
  if (is_const_node(nodes_[a]))
    return nodes_[a].kind == NodeKind::Const0 ? const1() : const0();
  return intern({NodeKind::Not, a, 0, 0, 0});
}

NodeId ExprDag::mk_and(NodeId a, NodeId b) {
  if (is_const_node(nodes_[a]) && is_const_node(nodes_[b])) {
    bool va = nodes_[a].kind == NodeKind::Const1;
    bool vb = nodes_[b].kind == NodeKind::Const1;
    return (va && vb) ? const1() : const0();
  }
  return intern({NodeKind::And, a, b, 0, 0});
}

NodeId ExprDag::mk_or(NodeId a, NodeId b) {
  if (is_const_node(nodes_[a]) && is_const_node(nodes_[b])) {
    bool va = nodes_[a].kind == NodeKind::Const1;
    bool vb = nodes_[b].kind == NodeKind::Const1;
    return (va || vb) ? const1() : const0();
  }
  return intern({NodeKind::Or, a, b, 0, 0});
}

NodeId ExprDag::mk_xor(NodeId a, NodeId b) {
  if (is_const_node(nodes_[a]) && is_const_node(nodes_[b])) {
    bool va = nodes_[a].kind == NodeKind::Const1;
    bool vb = nodes_[b].kind == NodeKind::Const1;
    return (va != vb) ? const1() : const0();
  }
  return intern({NodeKind::Xor, a, b, 0, 0});
}

NodeId ExprDag::mk_mux(NodeId s, NodeId a, NodeId b) {
  if (is_const_node(nodes_[s]) && is_const_node(nodes_[a]) && is_const_node(nodes_[b])) {
    bool vs = nodes_[s].kind == NodeKind::Const1;
    NodeId sel = vs ? a : b;
    return nodes_[sel].kind == NodeKind::Const1 ? const1() : const0();
  }
  return intern({NodeKind::Mux, s, a, b, 0});
}

WireFunctionBuilder::WireFunctionBuilder(const Netlist& n)
    : n_(n), dag_(std::make_shared<ExprDag>()), x_base_(n.max_net_id + 1) {
  memo_.assign(n.max_net_id + 1, -1);
}

VarInfo WireFunctionBuilder::var_info(std::uint32_t var_id) const {
  if (var_id >= x_base_) return {VarInfo::Kind::ConstX, 0, var_id - x_base_};
  std::int32_t d = n_.driver_of(var_id);
  if (d >= 0 && is_dff(n_.cells[static_cast<std::size_t>(d)].kind))
    return {VarInfo::Kind::DffQ, var_id, 0};
  return {VarInfo::Kind::InputBit, var_id, 0};
}

std::string WireFunctionBuilder::var_name(std::uint32_t var_id) const {
  VarInfo info = var_info(var_id);
  if (info.kind == VarInfo::Kind::ConstX) return "x" + std::to_string(info.x_id);
  return n_.wire_name(info.net);
}

NodeId WireFunctionBuilder::build_bit(BitRef bit) {
  if (bit.is_const0()) return dag_->const0();
  if (bit.is_const1()) return dag_->const1();
  if (bit.is_x()) return dag_->var(x_base_ + bit.x_id());
  return build_net(bit.net_id());
}

NodeId WireFunctionBuilder::build_net(std::uint32_t net) {
  if (net < memo_.size() && memo_[net] >= 0) return static_cast<NodeId>(memo_[net]);
  std::int32_t d = n_.driver_of(net);
  NodeId out;
  if (d < 0) {
    if (!n_.is_primary_input(net))
      throw Error(Errc::undriven_net, "net " + std::to_string(net) + " has no driver");
    out = dag_->var(net);
  } else {
    const Cell& c = n_.cells[static_cast<std::size_t>(d)];
    if (is_dff(c.kind)) {
      // DFF Q pins are combinational cut points: free variables.
      out = dag_->var(net);
    } else if (c.kind == CellKind::Not) {
      out = dag_->mk_not(build_bit(c.inputs[0]));
    } else if (c.kind == CellKind::Mux) {
      // Yosys $_MUX_: Y = S ? B : A. Children built pin-first so node ids
      // (and everything derived from them) are construction-ordered.
      NodeId a = build_bit(c.inputs[0]);
      NodeId b = build_bit(c.inputs[1]);
      NodeId s = build_bit(c.inputs[2]);
      out = dag_->mk_mux(s, b, a);
    } else {
      NodeId a = build_bit(c.inputs[0]);
      NodeId b = build_bit(c.inputs[1]);
      switch (c.kind) {
      case CellKind::And: out = dag_->mk_and(a, b); break;
      case CellKind::Or: out = dag_->mk_or(a, b); break;
      case CellKind::Xor: out = dag_->mk_xor(a, b); break;
      case CellKind::Xnor: out = dag_->mk_not(dag_->mk_xor(a, b)); break;
      case CellKind::Nand: out = dag_->mk_not(dag_->mk_and(a, b)); break;
      case CellKind::Nor: out = dag_->mk_not(dag_->mk_or(a, b)); break;
      case CellKind::AndNot: out = dag_->mk_and(a, dag_->mk_not(b)); break;
      case CellKind::OrNot: out = dag_->mk_or(a, dag_->mk_not(b)); break;
      default:
        throw Error(Errc::malformed_json, "unexpected cell kind");
      }
    }
  }
  if (net < memo_.size()) memo_[net] = static_cast<std::int64_t>(out);
  return out;
}

WireFunction WireFunctionBuilder::build(BitRef bit) {
  if (bit.is_undef()) throw Error(Errc::undriven_net, "undefined bit reference");
  return {dag_, build_bit(bit)};
}

namespace {

template <typename F>
void walk_cone(const WireFunction& wf, F&& on_node) {
  // Children have smaller ids; one downward sweep with a reachability mask.
  const ExprDag& dag = *wf.dag;
  std::vector<std::uint8_t> mark(wf.root + 1, 0);
  mark[wf.root] = 1;
  for (NodeId id = wf.root + 1; id-- > 0;) {
    if (!mark[id]) continue;
    const ExprNode& n = dag.node(id);
    if (n.kind != NodeKind::Var && n.kind != NodeKind::Const0 && n.kind != NodeKind::Const1) {
      mark[n.a] = 1;
      if (n.kind != NodeKind::Not) mark[n.b] = 1;
      if (n.kind == NodeKind::Mux) mark[n.c] = 1;
    }
    on_node(id, n);
  }
}

} // namespace

std::vector<std::uint32_t> cone_vars(const WireFunction& wf) {
  std::set<std::uint32_t> vars;
  walk_cone(wf, [&](NodeId, const ExprNode& n) {
    if (n.kind == NodeKind::Var) vars.insert(n.var);
  });
  return {vars.begin(), vars.end()};
}

std::size_t cone_node_count(const WireFunction& wf) {
  std::size_t count = 0;
  walk_cone(wf, [&](NodeId, const ExprNode&) { ++count; });
  return count;
}

Support support(const WireFunction& wf, const LabelConfig& cfg, const WireFunctionBuilder& b) {
  Support s;
  s.vars = cone_vars(wf);
  std::set<std::uint32_t> s0_nets, s1_nets;
  for (std::uint32_t v : s.vars) {
    VarInfo info = b.var_info(v);
    if (info.kind == VarInfo::Kind::ConstX) {
      s.c_p.insert(cfg.role_count(Role::P) + info.x_id);
      continue;
    }
    if (info.kind == VarInfo::Kind::DffQ) {
      s.c_dff.insert(info.net);
      continue;
    }
    auto role = cfg.role_of_net(info.net);
    if (!role) { // unlabeled input (not a port bit under this config): public
      s.c_p.insert(cfg.role_count(Role::P) + info.net);
      continue;
    }
    std::uint32_t idx = cfg.role_index(info.net);
    switch (*role) {
    case Role::S0: s.c_s0.insert(idx); s0_nets.insert(info.net); break;
    case Role::S1: s.c_s1.insert(idx); s1_nets.insert(info.net); break;
    case Role::R: s.c_r.insert(idx); break;
    case Role::P: s.c_p.insert(idx); break;
    }
  }
  const auto& pairs = cfg.boolean_pairs();
  std::set<std::uint32_t> matched_s0, matched_s1;
  for (std::uint32_t pid = 0; pid < pairs.size(); ++pid) {
    bool has0 = s0_nets.count(pairs[pid].s0_net) != 0;
    bool has1 = s1_nets.count(pairs[pid].s1_net) != 0;
    if (has0 && has1) {
      s.paired.insert(pid);
      matched_s0.insert(pairs[pid].s0_net);
      matched_s1.insert(pairs[pid].s1_net);
    }
  }
  for (std::uint32_t net : s0_nets)
    if (!matched_s0.count(net)) s.unpaired_s0.insert(cfg.role_index(net));
  for (std::uint32_t net : s1_nets)
    if (!matched_s1.count(net)) s.unpaired_s1.insert(cfg.role_index(net));
  return s;
}

int evaluate(const WireFunction& wf, const std::map<std::uint32_t, int>& assignment) {
  const ExprDag& dag = *wf.dag;
  std::vector<std::int8_t> val(wf.root + 1, -1);
  std::vector<std::uint8_t> need(wf.root + 1, 0);
  need[wf.root] = 1;
  for (NodeId id = wf.root + 1; id-- > 0;) {
    if (!need[id]) continue;
    const ExprNode& n = dag.node(id);
    switch (n.kind) {
    case NodeKind::Var: case NodeKind::Const0: case NodeKind::Const1: break;
    case NodeKind::Not: need[n.a] = 1; break;
    case NodeKind::Mux: need[n.a] = 1; need[n.b] = 1; need[n.c] = 1; break;
    default: need[n.a] = 1; need[n.b] = 1; break;
    }
  }
  const bool corrupt = testing::eval_corruption();
  for (NodeId id = 0; id <= wf.root; ++id) {
    if (!need[id]) continue;
    const ExprNode& n = dag.node(id);
    switch (n.kind) {
    case NodeKind::Const0: val[id] = 0; break;
    case NodeKind::Const1: val[id] = 1; break;
    case NodeKind::Var: {
      auto it = assignment.find(n.var);
      if (it == assignment.end())
        throw Error(Errc::missing_assignment, "var " + std::to_string(n.var));
      val[id] = it->second ? 1 : 0;
      break;
    }
    case NodeKind::Not: val[id] = val[n.a] ? 0 : 1; break;
    case NodeKind::And: val[id] = (val[n.a] & val[n.b]); break;
    case NodeKind::Or: val[id] = (val[n.a] | val[n.b]); break;
    case NodeKind::Xor:
      val[id] = corrupt ? (val[n.a] | val[n.b]) : (val[n.a] ^ val[n.b]);
      break;
    case NodeKind::Mux: val[id] = val[n.a] ? val[n.b] : val[n.c]; break;
    }
  }
  return val[wf.root];
}

namespace {

NodeId copy_subst(const ExprDag& src, NodeId root, ExprDag& dst,
                  const std::map<std::uint32_t, NodeId>& var_map,
                  std::map<NodeId, NodeId>& memo) {
  auto it = memo.find(root);
  if (it != memo.end()) return it->second;
  const ExprNode& n = src.node(root);
  NodeId out;
  switch (n.kind) {
  case NodeKind::Const0: out = dst.const0(); break;
  case NodeKind::Const1: out = dst.const1(); break;
  case NodeKind::Var: {
    auto vit = var_map.find(n.var);
    out = (vit == var_map.end()) ? dst.var(n.var) : vit->second;
    break;
  }
  case NodeKind::Not:
    out = dst.mk_not(copy_subst(src, n.a, dst, var_map, memo));
    break;
  case NodeKind::And:
  case NodeKind::Or:
  case NodeKind::Xor: {
    NodeId a = copy_subst(src, n.a, dst, var_map, memo);
    NodeId b = copy_subst(src, n.b, dst, var_map, memo);
    out = n.kind == NodeKind::And ? dst.mk_and(a, b)
          : n.kind == NodeKind::Or ? dst.mk_or(a, b)
                                   : dst.mk_xor(a, b);
    break;
  }
  case NodeKind::Mux: {
    NodeId s = copy_subst(src, n.a, dst, var_map, memo);
    NodeId a = copy_subst(src, n.b, dst, var_map, memo);
    NodeId b = copy_subst(src, n.c, dst, var_map, memo);
    out = dst.mk_mux(s, a, b);
    break;
  }
  default:
    out = dst.const0();
  }
  memo.emplace(root, out);
  return out;
}

} // namespace

WireFunction substitute(const WireFunction& wf,
                        const std::map<std::uint32_t, WireFunction>& map) {
  auto dst = std::make_shared<ExprDag>();
  std::map<std::uint32_t, NodeId> var_map;
  for (const auto& [var, repl] : map) {
    std::map<NodeId, NodeId> memo;
    var_map[var] = copy_subst(*repl.dag, repl.root, *dst, {}, memo);
  }
  std::map<NodeId, NodeId> memo;
  NodeId root = copy_subst(*wf.dag, wf.root, *dst, var_map, memo);
  return {dst, root};
}

NodeId import_expr(const ExprDag& src, NodeId root, ExprDag& dst,
                   const std::map<std::uint32_t, NodeId>& var_map) {
  std::map<NodeId, NodeId> memo;
  return copy_subst(src, root, dst, var_map, memo);
}

namespace {

void sexpr_rec(const ExprDag& dag, NodeId id, const WireFunctionBuilder* b, std::string& out) {
  const ExprNode& n = dag.node(id);
  switch (n.kind) {
  case NodeKind::Const0: out += "0"; return;
  case NodeKind::Const1: out += "1"; return;
  case NodeKind::Var:
    out += "(var ";
    out += b ? b->var_name(n.var) : "v" + std::to_string(n.var);
    out += ")";
    return;
  case NodeKind::Not:
    out += "(not ";
    sexpr_rec(dag, n.a, b, out);
    out += ")";
    return;
  case NodeKind::And: case NodeKind::Or: case NodeKind::Xor: {
    out += n.kind == NodeKind::And ? "(and " : n.kind == NodeKind::Or ? "(or " : "(xor ";
    sexpr_rec(dag, n.a, b, out);
    out += " ";
    sexpr_rec(dag, n.b, b, out);
    out += ")";
    return;
  }
  case NodeKind::Mux:
    out += "(mux ";
    sexpr_rec(dag, n.a, b, out);
    out += " ";
    sexpr_rec(dag, n.b, b, out);
    out += " ";
    sexpr_rec(dag, n.c, b, out);
    out += ")";
    return;
  }
}

} // namespace

std::string to_sexpr(const WireFunction& wf, const WireFunctionBuilder& b) {
  std::string out;
  sexpr_rec(*wf.dag, wf.root, &b, out);
  return out;
}

std::string to_sexpr_raw(const WireFunction& wf) {
  std::string out;
  sexpr_rec(*wf.dag, wf.root, nullptr, out);
  return out;
}

CompiledCone::CompiledCone(const WireFunction& wf) {
  const ExprDag& dag = *wf.dag;
  std::vector<std::uint8_t> need(wf.root + 1, 0);
  need[wf.root] = 1;
  for (NodeId id = wf.root + 1; id-- > 0;) {
    if (!need[id]) continue;
    const ExprNode& n = dag.node(id);
    switch (n.kind) {
    case NodeKind::Var: case NodeKind::Const0: case NodeKind::Const1: break;
    case NodeKind::Not: need[n.a] = 1; break;
    case NodeKind::Mux: need[n.a] = 1; need[n.b] = 1; need[n.c] = 1; break;
    default: need[n.a] = 1; need[n.b] = 1; break;
    }
  }
  std::vector<std::uint32_t> remap(wf.root + 1, 0);
  std::map<std::uint32_t, std::uint32_t> var_slot;
  for (NodeId id = 0; id <= wf.root; ++id) {
    if (!need[id]) continue;
    const ExprNode& n = dag.node(id);
    Op op{n.kind, 0, 0, 0};
    if (n.kind == NodeKind::Var) {
      auto [it, inserted] = var_slot.emplace(n.var, static_cast<std::uint32_t>(slot_vars_.size()));
      if (inserted) slot_vars_.push_back(n.var);
      op.a = it->second;
    } else if (n.kind != NodeKind::Const0 && n.kind != NodeKind::Const1) {
      op.a = remap[n.a];
      op.b = remap[n.b];
      op.c = remap[n.c];
    }
    remap[id] = static_cast<std::uint32_t>(ops_.size());
    ops_.push_back(op);
  }
}

std::uint64_t CompiledCone::eval64(std::span<const std::uint64_t> slot_lanes) const {
  scratch_.resize(ops_.size());
  std::uint64_t* v = scratch_.data();
  const bool corrupt = testing::eval_corruption();
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    const Op& op = ops_[i];
    switch (op.kind) {
    case NodeKind::Const0: v[i] = 0; break;
    case NodeKind::Const1: v[i] = ~0ull; break;
    case NodeKind::Var: v[i] = slot_lanes[op.a]; break;
    case NodeKind::Not: v[i] = ~v[op.a]; break;
    case NodeKind::And: v[i] = v[op.a] & v[op.b]; break;
    case NodeKind::Or: v[i] = v[op.a] | v[op.b]; break;
    case NodeKind::Xor: v[i] = corrupt ? (v[op.a] | v[op.b]) : (v[op.a] ^ v[op.b]); break;
    case NodeKind::Mux: v[i] = (v[op.a] & v[op.b]) | (~v[op.a] & v[op.c]); break;
    }
  }
  return ops_.empty() ? 0 : v[ops_.size() - 1];
}

int CompiledCone::eval1(std::span<const std::uint8_t> slot_values) const {
  std::vector<std::uint64_t> lanes(slot_values.size());
  for (std::size_t i = 0; i < slot_values.size(); ++i)
    lanes[i] = slot_values[i] ? ~0ull : 0;
  return static_cast<int>(eval64(lanes) & 1);
}

bool eval_cell(CellKind kind, std::span<const int> in) {
  switch (kind) {
  case CellKind::And: return in[0] && in[1];
  case CellKind::Or: return in[0] || in[1];
  case CellKind::Xor: return (in[0] ^ in[1]) != 0;
  case CellKind::Xnor: return (in[0] ^ in[1]) == 0;
  case CellKind::Nand: return !(in[0] && in[1]);
  case CellKind::Nor: return !(in[0] || in[1]);
  case CellKind::AndNot: return in[0] && !in[1];
  case CellKind::OrNot: return in[0] || !in[1];
  case CellKind::Not: return !in[0];
  case CellKind::Mux: return in[2] ? in[1] != 0 : in[0] != 0; // Y = S ? B : A
  default: return false;
  }
}

std::vector<std::int8_t> simulate(const Netlist& n, const SimInput& in) {
  std::vector<std::int8_t> val(n.max_net_id + 1, -1);
  auto bit_value = [&](BitRef b) -> int {
    if (b.is_const0()) return 0;
    if (b.is_const1()) return 1;
    if (b.is_x()) {
      auto it = in.xs.find(b.x_id());
      if (it == in.xs.end())
        throw Error(Errc::missing_assignment, "x" + std::to_string(b.x_id()));
      return it->second;
    }
    std::int8_t v = val[b.net_id()];
    if (v < 0)
      throw Error(Errc::missing_assignment, "net " + std::to_string(b.net_id()));
    return v;
  };
  for (const auto& [net, v] : in.nets)
    if (net < val.size()) val[net] = static_cast<std::int8_t>(v ? 1 : 0);

  for (std::uint32_t ci : topo_order(n)) {
    const Cell& c = n.cells[ci];
    std::vector<int> ins;
    ins.reserve(c.inputs.size());
    for (BitRef b : c.inputs) ins.push_back(bit_value(b));
    val[c.output.net_id()] = eval_cell(c.kind, ins) ? 1 : 0;
  }
  return val;
}

} // namespace maskcheck
