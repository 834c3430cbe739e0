#include "maskcheck/queries.hpp"

#include "maskcheck/errors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

namespace maskcheck {

std::string Witness::hex() const {
  std::string out;
  std::uint8_t acc = 0;
  int nb = 0;
  static const char* digits = "0123456789abcdef";
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i].second) acc |= static_cast<std::uint8_t>(1 << nb);
    if (++nb == 4) {
      out.push_back(digits[acc]);
      acc = 0;
      nb = 0;
    }
  }
  if (nb > 0) out.push_back(digits[acc]);
  if (out.empty()) out = "0";
  return out;
}

namespace {

std::uint32_t domain_bits(const QueryGroupVar& g) {
  if (g.less_than == 0) return g.width;
  return static_cast<std::uint32_t>(std::bit_width(g.less_than - 1));
}

std::uint64_t group_domain(const QueryGroupVar& g) {
  return g.less_than ? g.less_than : (1ull << g.width);
}

std::uint64_t derived_value(std::uint64_t x, std::uint64_t s1, std::uint64_t q) {
  return (x + q - s1) % q;
}

} // namespace

std::uint32_t enumeration_bits(const Query& q) {
  std::uint64_t bits = 0;
  for (const QueryGroupVar& g : q.groups) bits += domain_bits(g);
  for (const QueryLeaf& l : q.leaves)
    if (l.bind == QueryLeaf::Bind::Free) bits += 1;
  return bits > 4096 ? 4096 : static_cast<std::uint32_t>(bits);
}

// ---------------------------------------------------------------------------
// Query builder plumbing shared by the four check families.

namespace {

class QB {
public:
  explicit QB(std::string name) {
    q_.name = std::move(name);
    q_.dag = std::make_shared<ExprDag>();
  }

  std::uint32_t add_group(const std::string& name, std::uint32_t width, std::uint64_t less_than) {
    q_.groups.push_back({name, width, less_than});
    return static_cast<std::uint32_t>(q_.groups.size() - 1);
  }

  NodeId free_bit(const std::string& name) {
    QueryLeaf l;
    l.name = name;
    l.bind = QueryLeaf::Bind::Free;
    return leaf(l);
  }
  NodeId group_bit(std::uint32_t group, std::uint32_t bit) {
    QueryLeaf l;
    l.name = q_.groups[group].name + "_" + std::to_string(bit);
    l.bind = QueryLeaf::Bind::GroupBit;
    l.group = group;
    l.bit = bit;
    return leaf(l);
  }
  NodeId derived_bit(std::uint32_t minuend, std::uint32_t subtrahend, std::uint32_t bit,
                     const std::string& name) {
    QueryLeaf l;
    l.name = name;
    l.bind = QueryLeaf::Bind::DerivedSubBit;
    l.minuend = minuend;
    l.subtrahend = subtrahend;
    l.bit = bit;
    return leaf(l);
  }

  ExprDag& dag() { return *q_.dag; }

  Query finish(NodeId predicate) {
    q_.predicate = predicate;
    return std::move(q_);
  }

  Query& query() { return q_; }

private:
  NodeId leaf(const QueryLeaf& l) {
    auto it = by_name_.find(l.name);
    if (it != by_name_.end()) return q_.dag->var(it->second);
    std::uint32_t idx = static_cast<std::uint32_t>(q_.leaves.size());
    by_name_.emplace(l.name, idx);
    q_.leaves.push_back(l);
    return q_.dag->var(idx);
  }

  Query q_;
  std::map<std::string, std::uint32_t> by_name_;
};

std::string base_leaf_name(const LabelConfig& cfg, const WireFunctionBuilder& b,
                           std::uint32_t var) {
  VarInfo vi = b.var_info(var);
  if (vi.kind == VarInfo::Kind::ConstX) return "px_" + std::to_string(vi.x_id);
  if (vi.kind == VarInfo::Kind::DffQ) return "dff_" + std::to_string(vi.net);
  auto role = cfg.role_of_net(vi.net);
  if (!role) return "u_" + std::to_string(vi.net);
  return std::string(role_name(*role)) + "_" + std::to_string(cfg.role_index(vi.net));
}

NodeId or_all(ExprDag& dag, const std::vector<NodeId>& xs) {
  if (xs.empty()) return dag.const0();
  NodeId acc = xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i) acc = dag.mk_or(acc, xs[i]);
  return acc;
}

} // namespace

Query build_d_query(int share_group, const WireFunction& wf, const LabelConfig& cfg,
                    const WireFunctionBuilder& b, const std::string& wire_tag) {
  const Role varied = share_group == 0 ? Role::S0 : Role::S1;
  QB qb(wire_tag + "/d0d1/d" + std::to_string(share_group));
  std::map<std::uint32_t, NodeId> map1, map2;
  std::vector<NodeId> diffs;
  for (std::uint32_t v : cone_vars(wf)) {
    VarInfo vi = b.var_info(v);
    auto role = vi.kind == VarInfo::Kind::InputBit ? cfg.role_of_net(vi.net) : std::nullopt;
    if (role && *role == varied) {
      std::string base = std::string(role_name(varied)) + "_" +
                         std::to_string(cfg.role_index(vi.net));
      std::string primed = std::string(role_name(varied)) + "p_" +
                           std::to_string(cfg.role_index(vi.net));
      NodeId l1 = qb.free_bit(base);
      NodeId l2 = qb.free_bit(primed);
      map1[v] = l1;
      map2[v] = l2;
      diffs.push_back(qb.dag().mk_xor(l1, l2));
    } else {
      NodeId l = qb.free_bit(base_leaf_name(cfg, b, v));
      map1[v] = l;
      map2[v] = l;
    }
  }
  NodeId w1 = import_expr(*wf.dag, wf.root, qb.dag(), map1);
  NodeId w2 = import_expr(*wf.dag, wf.root, qb.dag(), map2);
  NodeId out_diff = qb.dag().mk_xor(w1, w2);
  NodeId share_diff = or_all(qb.dag(), diffs);
  return qb.finish(qb.dag().mk_and(out_diff, share_diff));
}

Query build_fm_query(const WireFunction& wf, std::uint32_t r_index, const LabelConfig& cfg,
                     const WireFunctionBuilder& b, const std::string& wire_tag) {
  const std::uint32_t r_net = cfg.net_of_role(Role::R, r_index);
  QB qb(wire_tag + "/fm/r" + std::to_string(r_index));
  std::map<std::uint32_t, NodeId> map0, map1;
  for (std::uint32_t v : cone_vars(wf)) {
    if (v == r_net) {
      map0[v] = qb.dag().const0();
      map1[v] = qb.dag().const1();
    } else {
      NodeId l = qb.free_bit(base_leaf_name(cfg, b, v));
      map0[v] = l;
      map1[v] = l;
    }
  }
  NodeId w0 = import_expr(*wf.dag, wf.root, qb.dag(), map0);
  NodeId w1 = import_expr(*wf.dag, wf.root, qb.dag(), map1);
  // Negation of the bijection property: some assignment leaves w unchanged.
  return qb.finish(qb.dag().mk_not(qb.dag().mk_xor(w0, w1)));
}

Query build_bsadc_query(const WireFunction& wf, const LabelConfig& cfg,
                        const WireFunctionBuilder& b, const std::string& wire_tag) {
  QB qb(wire_tag + "/bsadc/q");
  Support sup = support(wf, cfg, b);
  const auto& pairs = cfg.boolean_pairs();

  std::map<std::uint32_t, NodeId> mapx, mapxp;
  std::vector<NodeId> diffs;
  // Reparametrize paired s0 bits; everything else is shared.
  for (std::uint32_t pid : sup.paired) {
    const BoolPair& p = pairs[pid];
    NodeId x = qb.free_bit("x_" + std::to_string(pid));
    NodeId xp = qb.free_bit("xp_" + std::to_string(pid));
    NodeId s1 = qb.free_bit(base_leaf_name(cfg, b, p.s1_net));
    mapx[p.s0_net] = qb.dag().mk_xor(x, s1);
    mapxp[p.s0_net] = qb.dag().mk_xor(xp, s1);
    mapx[p.s1_net] = s1;
    mapxp[p.s1_net] = s1;
    diffs.push_back(qb.dag().mk_xor(x, xp));
  }
  for (std::uint32_t v : cone_vars(wf)) {
    if (mapx.count(v)) continue;
    NodeId l = qb.free_bit(base_leaf_name(cfg, b, v));
    mapx[v] = l;
    mapxp[v] = l;
  }
  NodeId wx = import_expr(*wf.dag, wf.root, qb.dag(), mapx);
  NodeId wxp = import_expr(*wf.dag, wf.root, qb.dag(), mapxp);
  NodeId out_diff = qb.dag().mk_xor(wx, wxp);
  return qb.finish(qb.dag().mk_and(out_diff, or_all(qb.dag(), diffs)));
}

Query build_asadc_query(const WireFunction& wf, const LabelConfig& cfg,
                        const WireFunctionBuilder& b, const ArithGroup& group,
                        const std::string& wire_tag) {
  if (!((2 * group.q) < (1ull << group.width)))
    throw Error(Errc::overflow_precondition,
                "need 2q < 2^w, got q=" + std::to_string(group.q) +
                    " w=" + std::to_string(group.width));
  QB qb(wire_tag + "/asadc/" + group.secret);
  const std::uint32_t gX = qb.add_group("X", group.width, group.q);
  const std::uint32_t gXp = qb.add_group("Xp", group.width, group.q);
  const std::uint32_t gS1 = qb.add_group("S1", group.width, group.q);
  qb.query().distinct_groups = std::make_pair(gX, gXp);

  std::map<std::uint32_t, std::uint32_t> s0_bit, s1_bit;
  for (std::uint32_t i = 0; i < group.width; ++i) {
    s0_bit[group.s0_nets[i]] = i;
    s1_bit[group.s1_nets[i]] = i;
  }

  std::map<std::uint32_t, NodeId> mapx, mapxp;
  for (std::uint32_t v : cone_vars(wf)) {
    auto it0 = s0_bit.find(v);
    if (it0 != s0_bit.end()) {
      mapx[v] = qb.derived_bit(gX, gS1, it0->second, "S0_" + std::to_string(it0->second));
      mapxp[v] = qb.derived_bit(gXp, gS1, it0->second, "S0p_" + std::to_string(it0->second));
      continue;
    }
    auto it1 = s1_bit.find(v);
    if (it1 != s1_bit.end()) {
      NodeId l = qb.group_bit(gS1, it1->second);
      mapx[v] = l;
      mapxp[v] = l;
      continue;
    }
    NodeId l = qb.free_bit(base_leaf_name(cfg, b, v));
    mapx[v] = l;
    mapxp[v] = l;
  }
  NodeId wx = import_expr(*wf.dag, wf.root, qb.dag(), mapx);
  NodeId wxp = import_expr(*wf.dag, wf.root, qb.dag(), mapxp);
  return qb.finish(qb.dag().mk_xor(wx, wxp));
}

// ---------------------------------------------------------------------------
// SMT-LIB2 emission.

namespace {

std::string bv_const(std::uint64_t value, std::uint32_t width) {
  std::string s = "#b";
  for (std::uint32_t i = width; i-- > 0;) s.push_back((value >> i) & 1 ? '1' : '0');
  return s;
}

std::string derived_symbol(const Query& q, const QueryLeaf& l) {
  return "drv_" + q.groups[l.minuend].name + "_" + q.groups[l.subtrahend].name;
}

} // namespace

std::string emit_smtlib(const Query& q) {
  std::ostringstream os;
  os << "(set-logic QF_BV)\n";
  os << "(set-info :source |maskcheck " << q.name << "|)\n";
  for (const QueryGroupVar& g : q.groups) {
    os << "(declare-fun " << g.name << " () (_ BitVec " << g.width << "))\n";
    if (g.less_than != 0 && g.less_than < (1ull << g.width))
      os << "(assert (bvult " << g.name << " " << bv_const(g.less_than, g.width) << "))\n";
  }
  // Modular-subtraction reparametrizations used by DerivedSubBit leaves.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> derived;
  for (const QueryLeaf& l : q.leaves) {
    if (l.bind != QueryLeaf::Bind::DerivedSubBit) continue;
    auto key = std::make_pair(l.minuend, l.subtrahend);
    if (std::find(derived.begin(), derived.end(), key) == derived.end()) derived.push_back(key);
  }
  std::sort(derived.begin(), derived.end());
  for (auto [m, s] : derived) {
    const QueryGroupVar& gm = q.groups[m];
    const QueryGroupVar& gs = q.groups[s];
    std::string qc = bv_const(gm.less_than, gm.width);
    os << "(define-fun drv_" << gm.name << "_" << gs.name << " () (_ BitVec " << gm.width
       << ") (bvurem (bvadd (bvsub " << gm.name << " " << gs.name << ") " << qc << ") " << qc
       << "))\n";
  }
  for (const QueryLeaf& l : q.leaves)
    if (l.bind == QueryLeaf::Bind::Free)
      os << "(declare-fun " << l.name << " () Bool)\n";

  // Needed-node chain, children first (ids ascend).
  const ExprDag& dag = *q.dag;
  std::vector<std::uint8_t> need(q.predicate + 1, 0);
  need[q.predicate] = 1;
  for (NodeId id = q.predicate + 1; id-- > 0;) {
    if (!need[id]) continue;
    const ExprNode& n = dag.node(id);
    switch (n.kind) {
    case NodeKind::Var: case NodeKind::Const0: case NodeKind::Const1: break;
    case NodeKind::Not: need[n.a] = 1; break;
    case NodeKind::Mux: need[n.a] = 1; need[n.b] = 1; need[n.c] = 1; break;
    default: need[n.a] = 1; need[n.b] = 1; break;
    }
  }
  for (NodeId id = 0; id <= q.predicate; ++id) {
    if (!need[id]) continue;
    const ExprNode& n = dag.node(id);
    os << "(define-fun n" << id << " () Bool ";
    switch (n.kind) {
    case NodeKind::Const0: os << "false"; break;
    case NodeKind::Const1: os << "true"; break;
    case NodeKind::Var: {
      const QueryLeaf& l = q.leaves[n.var];
      if (l.bind == QueryLeaf::Bind::Free) {
        os << l.name;
      } else {
        std::string word = l.bind == QueryLeaf::Bind::GroupBit ? q.groups[l.group].name
                                                               : derived_symbol(q, l);
        os << "(= ((_ extract " << l.bit << " " << l.bit << ") " << word << ") #b1)";
      }
      break;
    }
    case NodeKind::Not: os << "(not n" << n.a << ")"; break;
    case NodeKind::And: os << "(and n" << n.a << " n" << n.b << ")"; break;
    case NodeKind::Or: os << "(or n" << n.a << " n" << n.b << ")"; break;
    case NodeKind::Xor: os << "(xor n" << n.a << " n" << n.b << ")"; break;
    case NodeKind::Mux: os << "(ite n" << n.a << " n" << n.b << " n" << n.c << ")"; break;
    }
    os << ")\n";
  }
  if (q.distinct_groups)
    os << "(assert (distinct " << q.groups[q.distinct_groups->first].name << " "
       << q.groups[q.distinct_groups->second].name << "))\n";
  os << "(assert n" << q.predicate << ")\n";
  os << "(check-sat)\n";
  os << "(get-model)\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Witness replay.

bool replay_witness(const Query& q, const Witness& w) {
  std::map<std::string, bool> bit_by_name(w.bits.begin(), w.bits.end());
  std::map<std::string, std::uint64_t> group_by_name(w.groups.begin(), w.groups.end());
  std::vector<std::uint64_t> group_vals(q.groups.size(), 0);
  for (std::size_t i = 0; i < q.groups.size(); ++i) {
    auto it = group_by_name.find(q.groups[i].name);
    if (it != group_by_name.end()) group_vals[i] = it->second;
  }
  CompiledCone cone(WireFunction{q.dag, q.predicate});
  std::vector<std::uint8_t> slots(cone.slot_count(), 0);
  for (std::size_t s = 0; s < cone.slot_count(); ++s) {
    const QueryLeaf& l = q.leaves[cone.slot_vars()[s]];
    switch (l.bind) {
    case QueryLeaf::Bind::Free: {
      auto it = bit_by_name.find(l.name);
      slots[s] = (it != bit_by_name.end() && it->second) ? 1 : 0;
      break;
    }
    case QueryLeaf::Bind::GroupBit:
      slots[s] = static_cast<std::uint8_t>((group_vals[l.group] >> l.bit) & 1);
      break;
    case QueryLeaf::Bind::DerivedSubBit: {
      std::uint64_t v = derived_value(group_vals[l.minuend], group_vals[l.subtrahend],
                                      q.groups[l.minuend].less_than);
      slots[s] = static_cast<std::uint8_t>((v >> l.bit) & 1);
      break;
    }
    }
  }
  return cone.eval1(slots) != 0;
}

// ---------------------------------------------------------------------------
// Exhaustive backend.

SatResult solve_exhaustive(const Query& q) {
  CompiledCone cone(WireFunction{q.dag, q.predicate});

  // Free slots get counter lanes; group-bound slots broadcast per tuple.
  static constexpr std::array<std::uint64_t, 6> kLanePatterns = {
      0xAAAAAAAAAAAAAAAAull, 0xCCCCCCCCCCCCCCCCull, 0xF0F0F0F0F0F0F0F0ull,
      0xFF00FF00FF00FF00ull, 0xFFFF0000FFFF0000ull, 0xFFFFFFFF00000000ull};

  std::vector<std::size_t> free_slots;
  for (std::size_t s = 0; s < cone.slot_count(); ++s)
    if (q.leaves[cone.slot_vars()[s]].bind == QueryLeaf::Bind::Free) free_slots.push_back(s);
  const std::size_t nfree = free_slots.size();
  const std::uint64_t blocks = nfree > 6 ? (1ull << (nfree - 6)) : 1;
  const std::uint64_t valid_mask =
      nfree >= 6 ? ~0ull : ((1ull << (1ull << nfree)) - 1);

  std::vector<std::uint64_t> lanes(cone.slot_count(), 0);
  std::vector<std::uint64_t> tuple(q.groups.size(), 0);

  auto fill_group_slots = [&]() {
    for (std::size_t s = 0; s < cone.slot_count(); ++s) {
      const QueryLeaf& l = q.leaves[cone.slot_vars()[s]];
      if (l.bind == QueryLeaf::Bind::GroupBit) {
        lanes[s] = ((tuple[l.group] >> l.bit) & 1) ? ~0ull : 0ull;
      } else if (l.bind == QueryLeaf::Bind::DerivedSubBit) {
        std::uint64_t v =
            derived_value(tuple[l.minuend], tuple[l.subtrahend], q.groups[l.minuend].less_than);
        lanes[s] = ((v >> l.bit) & 1) ? ~0ull : 0ull;
      }
    }
  };

  auto make_witness = [&](std::uint64_t block, unsigned lane) {
    Witness w;
    std::map<std::uint32_t, bool> free_leaf_value; // leaf index -> value
    for (std::size_t j = 0; j < nfree; ++j) {
      bool v = j < 6 ? ((lane >> j) & 1) != 0 : ((block >> (j - 6)) & 1) != 0;
      free_leaf_value[cone.slot_vars()[free_slots[j]]] = v;
    }
    for (std::uint32_t li = 0; li < q.leaves.size(); ++li) {
      if (q.leaves[li].bind != QueryLeaf::Bind::Free) continue;
      auto it = free_leaf_value.find(li);
      w.bits.emplace_back(q.leaves[li].name, it != free_leaf_value.end() && it->second);
    }
    for (std::size_t g = 0; g < q.groups.size(); ++g)
      w.groups.emplace_back(q.groups[g].name, tuple[g]);
    return w;
  };

  while (true) {
    bool skip = q.distinct_groups &&
                tuple[q.distinct_groups->first] == tuple[q.distinct_groups->second];
    if (!skip) {
      fill_group_slots();
      for (std::uint64_t block = 0; block < blocks; ++block) {
        for (std::size_t j = 0; j < nfree; ++j) {
          std::uint64_t lane_val = j < 6 ? kLanePatterns[j]
                                         : (((block >> (j - 6)) & 1) ? ~0ull : 0ull);
          lanes[free_slots[j]] = lane_val;
        }
        std::uint64_t hit = cone.eval64(lanes) & valid_mask;
        if (hit) {
          unsigned lane = static_cast<unsigned>(std::countr_zero(hit));
          Witness w = make_witness(block, lane);
          SatResult res{SatKind::Sat, std::move(w)};
          if (!replay_witness(q, *res.witness))
            throw Error(Errc::solver_process_failure,
                        "internal: exhaustive witness failed replay on " + q.name);
          return res;
        }
      }
    }
    // Odometer over group values, last group fastest.
    std::size_t g = q.groups.size();
    while (g > 0) {
      --g;
      if (++tuple[g] < group_domain(q.groups[g])) break;
      tuple[g] = 0;
      if (g == 0) return {SatKind::Unsat, std::nullopt};
    }
    if (q.groups.empty()) return {SatKind::Unsat, std::nullopt};
  }
}

// ---------------------------------------------------------------------------
// External solver backend.

namespace {

struct SExpr {
  std::string atom;
  std::vector<SExpr> list;
  bool is_atom = false;
};

class STokenizer {
public:
  explicit STokenizer(const std::string& text) : text_(text) {}
  std::optional<std::string> next() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') { // comment to end of line
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) { ++pos_; continue; }
      if (c == '(' || c == ')') { ++pos_; return std::string(1, c); }
      if (c == '|') {
        std::size_t end = text_.find('|', pos_ + 1);
        if (end == std::string::npos) end = text_.size();
        std::string tok = text_.substr(pos_, end - pos_ + 1);
        pos_ = end + 1;
        return tok;
      }
      if (c == '"') {
        std::size_t end = text_.find('"', pos_ + 1);
        if (end == std::string::npos) end = text_.size();
        std::string tok = text_.substr(pos_, end - pos_ + 1);
        pos_ = end + 1;
        return tok;
      }
      std::size_t start = pos_;
      while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
             text_[pos_] != '(' && text_[pos_] != ')')
        ++pos_;
      return text_.substr(start, pos_ - start);
    }
    return std::nullopt;
  }

private:
  const std::string& text_;
  std::size_t pos_ = 0;
};

bool parse_list_body(STokenizer& tok, SExpr& out) {
  while (true) {
    auto nx = tok.next();
    if (!nx) return false;
    if (*nx == ")") return true;
    SExpr sub;
    if (*nx == "(") {
      sub.is_atom = false;
      if (!parse_list_body(tok, sub)) return false;
    } else {
      sub.is_atom = true;
      sub.atom = *nx;
    }
    out.list.push_back(std::move(sub));
  }
}

std::optional<std::uint64_t> parse_bv_value(const SExpr& v) {
  if (v.is_atom) {
    const std::string& a = v.atom;
    if (a == "true") return 1;
    if (a == "false") return 0;
    if (a.rfind("#b", 0) == 0) {
      std::uint64_t val = 0;
      for (std::size_t i = 2; i < a.size(); ++i) val = (val << 1) | (a[i] == '1' ? 1 : 0);
      return val;
    }
    if (a.rfind("#x", 0) == 0) {
      std::uint64_t val = 0;
      for (std::size_t i = 2; i < a.size(); ++i) {
        char c = static_cast<char>(std::tolower(static_cast<unsigned char>(a[i])));
        std::uint64_t d = (c >= '0' && c <= '9') ? static_cast<std::uint64_t>(c - '0')
                                                 : static_cast<std::uint64_t>(c - 'a' + 10);
        val = (val << 4) | d;
      }
      return val;
    }
    return std::nullopt;
  }
  // (_ bvN w)
  if (v.list.size() == 3 && v.list[0].is_atom && v.list[0].atom == "_" && v.list[1].is_atom &&
      v.list[1].atom.rfind("bv", 0) == 0)
    return std::strtoull(v.list[1].atom.c_str() + 2, nullptr, 10);
  return std::nullopt;
}

void collect_model(const SExpr& e, std::map<std::string, std::uint64_t>& model) {
  if (e.is_atom) return;
  if (e.list.size() >= 5 && e.list[0].is_atom && e.list[0].atom == "define-fun" &&
      e.list[1].is_atom) {
    auto val = parse_bv_value(e.list.back());
    if (val) model[e.list[1].atom] = *val;
    return;
  }
  for (const SExpr& sub : e.list) collect_model(sub, model);
}

std::string sanitize_path_component(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '/' ||
        c == '.')
      out.push_back(c);
    else
      out.push_back('_');
  }
  return out;
}

std::string write_script(const Query& q, const std::string& script, const BackendConfig& cfg,
                         bool keep) {
  namespace fs = std::filesystem;
  fs::path path;
  if (!cfg.dump_dir.empty()) {
    path = fs::path(cfg.dump_dir) / (sanitize_path_component(q.name) + ".smt2");
    fs::create_directories(path.parent_path());
  } else {
    path = fs::temp_directory_path() /
           ("maskcheck_" + std::to_string(::getpid()) + "_" +
            sanitize_path_component(q.name) + ".smt2");
    fs::create_directories(path.parent_path());
  }
  (void)keep;
  FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw Error(Errc::solver_process_failure, "cannot write " + path.string());
  std::fwrite(script.data(), 1, script.size(), f);
  std::fclose(f);
  return path.string();
}

std::string substitute_placeholder(std::string cmd, const std::string& key,
                                   const std::string& value) {
  std::size_t pos;
  while ((pos = cmd.find(key)) != std::string::npos) cmd.replace(pos, key.size(), value);
  return cmd;
}

} // namespace

SatResult solve_smt(const Query& q, const BackendConfig& cfg) {
  if (cfg.solver_cmd.empty())
    throw Error(Errc::solver_process_failure, "no external solver configured");
  const std::string script = emit_smtlib(q);
  const std::string path = write_script(q, script, cfg, !cfg.dump_dir.empty());

  std::string cmd = substitute_placeholder(cfg.solver_cmd, "{rlimit}",
                                           std::to_string(cfg.limits.smt_resource_limit));
  std::string full;
  if (cfg.limits.wall_timeout_s > 0)
    full = "timeout " + std::to_string(cfg.limits.wall_timeout_s) + " ";
  full += cmd + " < '" + path + "' 2>/dev/null";

  FILE* pipe = popen(full.c_str(), "r");
  if (!pipe) throw Error(Errc::solver_process_failure, "cannot spawn: " + full);
  std::string out;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
  int status = pclose(pipe);
  const bool timed_out = WIFEXITED(status) && WEXITSTATUS(status) == 124;

  auto cleanup = [&]() {
    if (cfg.dump_dir.empty()) std::filesystem::remove(path);
  };

  // First meaningful token decides the verdict.
  STokenizer tok(out);
  std::optional<std::string> first;
  while ((first = tok.next())) {
    if (*first == "sat" || *first == "unsat" || *first == "unknown") break;
    if (*first != "(" && *first != ")") continue;
  }
  if (!first) {
    if (timed_out) {
      cleanup();
      return {SatKind::ResourceOut, std::nullopt};
    }
    throw Error(Errc::solver_process_failure,
                "no sat/unsat/unknown in solver output for " + q.name + " (script: " + path + ")");
  }
  if (*first == "unknown") {
    cleanup();
    return {SatKind::ResourceOut, std::nullopt};
  }
  if (*first == "unsat") {
    cleanup();
    return {SatKind::Unsat, std::nullopt};
  }

  // sat: parse the model that follows.
  SExpr model_tree;
  model_tree.is_atom = false;
  while (true) {
    auto nx = tok.next();
    if (!nx) break;
    if (*nx == "(") {
      SExpr sub;
      sub.is_atom = false;
      if (!parse_list_body(tok, sub)) break;
      model_tree.list.push_back(std::move(sub));
    }
  }
  std::map<std::string, std::uint64_t> model;
  collect_model(model_tree, model);

  Witness w;
  for (const QueryLeaf& l : q.leaves) {
    if (l.bind != QueryLeaf::Bind::Free) continue;
    auto it = model.find(l.name);
    w.bits.emplace_back(l.name, it != model.end() && it->second != 0);
  }
  for (const QueryGroupVar& g : q.groups) {
    auto it = model.find(g.name);
    w.groups.emplace_back(g.name, it != model.end() ? it->second : 0);
  }
  if (!replay_witness(q, w))
    throw Error(Errc::solver_process_failure,
                "witness replay failed for " + q.name + " (script: " + path + ")");
  cleanup();
  return {SatKind::Sat, std::move(w)};
}

BackendAgreement cross_validate(const Query& q, const BackendConfig& cfg) {
  BackendAgreement ba;
  ba.primary = solve_exhaustive(q);
  ba.secondary = solve_smt(q, cfg);
  ba.agree = ba.primary.kind == ba.secondary.kind;
  const bool decided = (ba.secondary.kind != SatKind::ResourceOut);
  if (decided && !ba.agree) {
    BackendConfig dump_cfg = cfg;
    if (dump_cfg.dump_dir.empty())
      dump_cfg.dump_dir =
          (std::filesystem::temp_directory_path() / "maskcheck_disagreements").string();
    std::string path = write_script(q, emit_smtlib(q), dump_cfg, true);
    throw Error(Errc::backend_disagreement,
                q.name + ": exhaustive=" + (ba.primary.kind == SatKind::Sat ? "sat" : "unsat") +
                    " solver=" + (ba.secondary.kind == SatKind::Sat ? "sat" : "unsat") +
                    "; script dumped to " + path);
  }
  return ba;
}

SatResult solve(const Query& q, const BackendConfig& cfg, BackendStats* stats) {
  BackendStats local;
  BackendStats& st = stats ? *stats : local;
  st.queries++;
  if (enumeration_bits(q) <= cfg.limits.exhaustive_bit_budget) {
    if (cfg.cross_check && !cfg.solver_cmd.empty()) {
      BackendAgreement ba = cross_validate(q, cfg);
      st.exhaustive++;
      if (ba.secondary.kind != SatKind::ResourceOut) st.cross_checked++;
      if (!ba.agree && ba.secondary.kind != SatKind::ResourceOut) st.disagreements++;
      return ba.primary;
    }
    st.exhaustive++;
    return solve_exhaustive(q);
  }
  if (!cfg.solver_cmd.empty()) {
    st.smt++;
    return solve_smt(q, cfg);
  }
  return {SatKind::ResourceOut, std::nullopt};
}

// ---------------------------------------------------------------------------
// Spec-level checks.

SatResult check_d0(const WireFunction& wf, const LabelConfig& cfg, const WireFunctionBuilder& b,
                   const BackendConfig& be, BackendStats* stats, const std::string& wire_tag) {
  return solve(build_d_query(0, wf, cfg, b, wire_tag), be, stats);
}

SatResult check_d1(const WireFunction& wf, const LabelConfig& cfg, const WireFunctionBuilder& b,
                   const BackendConfig& be, BackendStats* stats, const std::string& wire_tag) {
  return solve(build_d_query(1, wf, cfg, b, wire_tag), be, stats);
}

StructuralVerdict classify_structural(const WireFunction& wf, const LabelConfig& cfg,
                                      const WireFunctionBuilder& b, const BackendConfig& be,
                                      BackendStats* stats, const std::string& wire_tag) {
  StructuralVerdict v;
  v.d0 = check_d0(wf, cfg, b, be, stats, wire_tag);
  if (v.d0.kind == SatKind::Unsat) {
    v.kind = StructuralVerdict::Kind::Secure; // d1 skipped
    return v;
  }
  v.d1 = check_d1(wf, cfg, b, be, stats, wire_tag);
  if (v.d1->kind == SatKind::Unsat) {
    v.kind = StructuralVerdict::Kind::Secure;
    return v;
  }
  if (v.d0.kind == SatKind::Sat && v.d1->kind == SatKind::Sat)
    v.kind = StructuralVerdict::Kind::PotentiallyInsecure;
  else
    v.kind = StructuralVerdict::Kind::Unknown;
  return v;
}

bool check_fm(const WireFunction& wf, std::uint32_t r_index, const LabelConfig& cfg,
              const WireFunctionBuilder& b, const BackendConfig& be, BackendStats* stats,
              const std::string& wire_tag) {
  SatResult r = solve(build_fm_query(wf, r_index, cfg, b, wire_tag), be, stats);
  return r.kind == SatKind::Unsat; // RESOURCE_OUT stays unpromoted
}

SadcVerdict check_boolean_sadc(const WireFunction& wf, const LabelConfig& cfg,
                               const WireFunctionBuilder& b, const BackendConfig& be,
                               BackendStats* stats, const std::string& wire_tag) {
  SatResult r = solve(build_bsadc_query(wf, cfg, b, wire_tag), be, stats);
  SadcVerdict v;
  switch (r.kind) {
  case SatKind::Unsat: v.kind = SadcVerdict::Kind::Secure; break;
  case SatKind::Sat:
    v.kind = SadcVerdict::Kind::Insecure;
    v.witness = std::move(r.witness);
    break;
  case SatKind::ResourceOut:
    v.kind = SadcVerdict::Kind::Indeterminate;
    v.reason = "resource limit exhausted";
    break;
  }
  return v;
}

SadcVerdict check_arith_sadc(const WireFunction& wf, const LabelConfig& cfg,
                             const WireFunctionBuilder& b, const ArithGroup& group,
                             const BackendConfig& be, BackendStats* stats,
                             const std::string& wire_tag) {
  SatResult r = solve(build_asadc_query(wf, cfg, b, group, wire_tag), be, stats);
  SadcVerdict v;
  switch (r.kind) {
  case SatKind::Unsat: v.kind = SadcVerdict::Kind::Secure; break;
  case SatKind::Sat:
    v.kind = SadcVerdict::Kind::InsecureConservative;
    v.witness = std::move(r.witness);
    break;
  case SatKind::ResourceOut:
    v.kind = SadcVerdict::Kind::Indeterminate;
    v.reason = "resource limit exhausted";
    break;
  }
  return v;
}

} // namespace maskcheck
