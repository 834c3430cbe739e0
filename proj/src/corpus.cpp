#include "maskcheck/corpus.hpp"

#include "maskcheck/digest.hpp"
#include "maskcheck/errors.hpp"

#include <nlohmann/json.hpp>
#include <random>

using nlohmann::json;

namespace maskcheck {

NetlistBuilder::NetlistBuilder() = default;

BitRef NetlistBuilder::fresh() { return BitRef::net(next_net_++); }

std::vector<BitRef> NetlistBuilder::input(const std::string& name, std::uint32_t width) {
  PortDecl p;
  p.dir = PortDecl::Dir::In;
  for (std::uint32_t i = 0; i < width; ++i) p.bits.push_back(fresh());
  auto [it, inserted] = ports_.emplace(name, std::move(p));
  if (!inserted) throw Error(Errc::usage, "duplicate port " + name);
  return it->second.bits;
}

void NetlistBuilder::output(const std::string& name, std::vector<BitRef> bits) {
  PortDecl p;
  p.dir = PortDecl::Dir::Out;
  p.bits = std::move(bits);
  if (!ports_.emplace(name, std::move(p)).second)
    throw Error(Errc::usage, "duplicate port " + name);
}

BitRef NetlistBuilder::gate(CellKind kind, const std::string& name,
                            const std::vector<BitRef>& ins) {
  Cell c;
  c.name = name;
  c.kind = kind;
  c.inputs = ins;
  c.output = fresh();
  cells_.push_back(std::move(c));
  return cells_.back().output;
}

BitRef NetlistBuilder::dff(const std::string& name, BitRef d) {
  if (!clock_) clock_ = input("clk", 1)[0];
  Cell c;
  c.name = name;
  c.kind = CellKind::DffP;
  c.inputs = {d};
  c.clock = *clock_;
  c.output = fresh();
  cells_.push_back(std::move(c));
  return cells_.back().output;
}

Netlist NetlistBuilder::finish(const std::string& module_name) {
  Netlist n;
  n.module_name = module_name;
  n.cells = cells_;
  n.ports = ports_;
  finalize_netlist(n);
  n.source_hash = sha256_hex(to_canonical_json(n));
  return n;
}

std::string NetlistBuilder::finish_json(const std::string& module_name) {
  return to_canonical_json(finish(module_name));
}

const char* gadget_kind_name(GadgetKind k) {
  switch (k) {
  case GadgetKind::DomAndSecure: return "dom_and_secure";
  case GadgetKind::DomAndBroken: return "dom_and_broken";
  case GadgetKind::IswAndSecure: return "isw_and_secure";
  case GadgetKind::IswAndBroken: return "isw_and_broken";
  case GadgetKind::CrossRegister: return "cross_register";
  case GadgetKind::ToyBarrett: return "toy_barrett";
  case GadgetKind::ShareIsolated: return "share_isolated";
  case GadgetKind::PublicMux: return "public_mux";
  case GadgetKind::ConstOut: return "const_out";
  case GadgetKind::XorMaskedProduct: return "xor_masked_product";
  }
  return "?";
}

std::optional<GadgetKind> gadget_kind_from_name(const std::string& name) {
  for (int k = 0; k <= static_cast<int>(GadgetKind::XorMaskedProduct); ++k)
    if (name == gadget_kind_name(static_cast<GadgetKind>(k)))
      return static_cast<GadgetKind>(k);
  return std::nullopt;
}

namespace {

std::string two(std::uint32_t i) {
  std::string s = std::to_string(i);
  return s.size() < 2 ? "0" + s : s;
}

json labels_ports(std::initializer_list<std::pair<const char*, const char*>> roles) {
  json ports = json::object();
  for (const auto& [name, role] : roles) ports[name] = {{"role", role}};
  return ports;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

struct Expect {
  std::string stages = "d1,mc,fm,bsadc";
  std::string classification = "CLEAN";
  int exit_code = 0;
  json counts = json::object();     // exact
  json min_counts = json::object(); // lower bounds
};

std::string expected_json(GadgetKind kind, const Expect& e) {
  json out = {{"kind", gadget_kind_name(kind)},
              {"stages", e.stages},
              {"classification", e.classification},
              {"exit_code", e.exit_code},
              {"counts", e.counts}};
  if (!e.min_counts.empty()) out["min_counts"] = e.min_counts;
  return dump(out);
}

GadgetOutput gen_dom_and(bool secure) {
  NetlistBuilder b;
  BitRef a0 = b.input1("a0"), a1 = b.input1("a1");
  BitRef b0 = b.input1("b0"), b1 = b.input1("b1");
  BitRef p00 = b.g_and("and_p00", a0, b0);
  BitRef p01 = b.g_and("and_p01", a0, b1);
  BitRef p10 = b.g_and("and_p10", a1, b0);
  BitRef p11 = b.g_and("and_p11", a1, b1);
  GadgetOutput out;
  json ports;
  Expect e;
  if (secure) {
    BitRef z = b.input1("z");
    BitRef t01 = b.g_xor("xor_t01", p01, z);
    BitRef t10 = b.g_xor("xor_t10", p10, z);
    BitRef q00 = b.dff("reg_q00", p00);
    BitRef q01 = b.dff("reg_q01", t01);
    BitRef q10 = b.dff("reg_q10", t10);
    BitRef q11 = b.dff("reg_q11", p11);
    b.output1("y00", q00);
    b.output1("y01", q01);
    b.output1("y10", q10);
    b.output1("y11", q11);
    out.netlist_json = b.finish_json("gen_dom_and");
    ports = labels_ports({{"a0", "s0"}, {"a1", "s1"}, {"b0", "s0"}, {"b1", "s1"},
                          {"z", "r"}, {"clk", "p"}});
    e.counts = {{"structural_candidates", 6}, {"sc_flagged", 4},   {"d0d1_promoted", 0},
                {"flagged", 6},               {"fm_promoted", 2},  {"bsadc_secure", 4},
                {"bsadc_insecure", 0},        {"residual", 0},     {"indeterminate", 0}};
    e.min_counts = {{"true_convergence", 2}};
  } else {
    // Fresh mask removed; combinational recombination present.
    BitRef u0 = b.g_xor("xor_u0", p00, p01);
    BitRef u1 = b.g_xor("xor_u1", p10, p11);
    b.output1("y0", u0);
    b.output1("y1", u1);
    out.netlist_json = b.finish_json("gen_dom_and_broken");
    ports = labels_ports({{"a0", "s0"}, {"a1", "s1"}, {"b0", "s0"}, {"b1", "s1"}});
    e.classification = "INSECURE";
    e.exit_code = 1;
    e.counts = {{"structural_candidates", 4}, {"sc_flagged", 4},  {"flagged", 4},
                {"fm_promoted", 0},           {"bsadc_secure", 2}, {"bsadc_insecure", 2},
                {"residual", 2},              {"indeterminate", 0}};
  }
  json labels = {{"ports", ports},
                 {"boolean_pairs", json::array({{{"s0", "a0"}, {"s1", "a1"}, {"secret", "a"}},
                                                {{"s0", "b0"}, {"s1", "b1"}, {"secret", "b"}}})}};
  out.labels_json = dump(labels);
  out.expected_json =
      expected_json(secure ? GadgetKind::DomAndSecure : GadgetKind::DomAndBroken, e);
  return out;
}

GadgetOutput gen_isw_and(bool secure) {
  NetlistBuilder b;
  BitRef a0 = b.input1("a0"), a1 = b.input1("a1");
  BitRef b0 = b.input1("b0"), b1 = b.input1("b1");
  BitRef p00 = b.g_and("and_p00", a0, b0);
  BitRef p01 = b.g_and("and_p01", a0, b1);
  BitRef p10 = b.g_and("and_p10", a1, b0);
  BitRef p11 = b.g_and("and_p11", a1, b1);
  GadgetOutput out;
  json ports;
  Expect e;
  if (secure) {
    BitRef r = b.input1("r");
    BitRef t1 = b.g_xor("xor_t1", r, p01);
    BitRef t2 = b.g_xor("xor_t2", t1, p10);
    BitRef c1 = b.g_xor("xor_c1", p11, t2);
    BitRef c0 = b.g_xor("xor_c0", p00, r);
    b.output1("y0", c0);
    b.output1("y1", c1);
    out.netlist_json = b.finish_json("gen_isw_and");
    ports = labels_ports({{"a0", "s0"}, {"a1", "s1"}, {"b0", "s0"}, {"b1", "s1"}, {"r", "r"}});
    e.counts = {{"structural_candidates", 5}, {"sc_flagged", 5},   {"flagged", 5},
                {"fm_promoted", 3},           {"bsadc_secure", 2}, {"bsadc_insecure", 0},
                {"residual", 0},              {"indeterminate", 0}};
  } else {
    // One refresh randomness term omitted.
    BitRef t1 = b.g_xor("xor_t1", p01, p10);
    BitRef c1 = b.g_xor("xor_c1", p11, t1);
    b.output1("y0", p00);
    b.output1("y1", c1);
    out.netlist_json = b.finish_json("gen_isw_and_broken");
    ports = labels_ports({{"a0", "s0"}, {"a1", "s1"}, {"b0", "s0"}, {"b1", "s1"}});
    e.classification = "INSECURE";
    e.exit_code = 1;
    e.counts = {{"structural_candidates", 4}, {"sc_flagged", 4},   {"flagged", 4},
                {"fm_promoted", 0},           {"bsadc_secure", 2}, {"bsadc_insecure", 2},
                {"residual", 2},              {"indeterminate", 0}};
  }
  json labels = {{"ports", ports},
                 {"boolean_pairs", json::array({{{"s0", "a0"}, {"s1", "a1"}, {"secret", "a"}},
                                                {{"s0", "b0"}, {"s1", "b1"}, {"secret", "b"}}})}};
  out.labels_json = dump(labels);
  out.expected_json =
      expected_json(secure ? GadgetKind::IswAndSecure : GadgetKind::IswAndBroken, e);
  return out;
}

GadgetOutput gen_cross_register(std::uint32_t lanes) {
  if (lanes == 0) lanes = 1;
  NetlistBuilder b;
  auto s0 = b.input("s0", lanes);
  auto s1 = b.input("s1", lanes);
  std::vector<BitRef> outs;
  for (std::uint32_t i = 0; i < lanes; ++i) {
    // s0 registered once, s1 staggered by one extra cycle; shares meet only
    // after the register boundary.
    BitRef qa = b.dff("reg_a" + two(i), s0[i]);
    BitRef qb1 = b.dff("reg_b" + two(i) + "_0", s1[i]);
    BitRef qb2 = b.dff("reg_b" + two(i) + "_1", qb1);
    BitRef w = b.g_and("and_meet" + two(i), qa, qb2);
    BitRef f = b.g_not("not_fan" + two(i), w);
    outs.push_back(f);
  }
  b.output("y", outs);
  GadgetOutput out;
  out.netlist_json = b.finish_json("gen_cross_register");
  json labels = {{"ports", labels_ports({{"s0", "s0"}, {"s1", "s1"}, {"clk", "p"}})},
                 {"boolean_pairs", json::array({{{"s0", "s0"}, {"s1", "s1"}, {"secret", "x"}}})}};
  out.labels_json = dump(labels);
  Expect e;
  e.stages = "d1,mc";
  e.classification = "INSECURE";
  e.exit_code = 1;
  e.counts = {{"sc_flagged", 0},
              {"structural_candidates", 2 * lanes},
              {"flagged", 2 * lanes},
              {"residual", 2 * lanes},
              {"indeterminate", 0}};
  e.min_counts = {{"true_convergence", lanes}};
  out.expected_json = expected_json(GadgetKind::CrossRegister, e);
  return out;
}

GadgetOutput gen_share_isolated(std::uint32_t lanes) {
  if (lanes == 0) lanes = 2;
  NetlistBuilder b;
  auto s0 = b.input("s0", lanes);
  auto s1 = b.input("s1", lanes);
  BitRef p = b.input1("p");
  std::vector<BitRef> out0, out1;
  for (std::uint32_t i = 0; i < lanes; ++i) {
    BitRef d0 = b.dff("reg_a" + two(i), s0[i]);
    BitRef m0 = b.g_xor("xor_a" + two(i), d0, p);
    BitRef d0b = b.dff("reg_a" + two(i) + "_1", m0);
    out0.push_back(d0b);
    BitRef d1 = b.dff("reg_b" + two(i), s1[i]);
    BitRef m1 = b.g_and("and_b" + two(i), d1, p);
    out1.push_back(m1);
  }
  b.output("y0", out0);
  b.output("y1", out1);
  GadgetOutput out;
  out.netlist_json = b.finish_json("gen_share_isolated");
  json labels = {{"ports", labels_ports({{"s0", "s0"}, {"s1", "s1"}, {"p", "p"}, {"clk", "p"}})},
                 {"boolean_pairs", json::array({{{"s0", "s0"}, {"s1", "s1"}, {"secret", "x"}}})}};
  out.labels_json = dump(labels);
  Expect e;
  e.counts = {{"structural_candidates", 0}, {"sc_flagged", 0}, {"flagged", 0},
              {"residual", 0},              {"indeterminate", 0}};
  out.expected_json = expected_json(GadgetKind::ShareIsolated, e);
  return out;
}

GadgetOutput gen_public_mux(std::uint32_t lanes) {
  if (lanes == 0) lanes = 1;
  NetlistBuilder b;
  auto s0 = b.input("s0", lanes);
  auto s1 = b.input("s1", lanes);
  BitRef p = b.input1("p");
  std::vector<BitRef> outs;
  for (std::uint32_t i = 0; i < lanes; ++i) {
    // Y = p ? s0 : s1.
    BitRef m = b.g_mux("mux_sel" + two(i), s1[i], s0[i], p);
    BitRef f = b.g_not("not_fan" + two(i), m);
    outs.push_back(f);
  }
  b.output("y", outs);
  GadgetOutput out;
  out.netlist_json = b.finish_json("gen_public_mux");
  json labels = {{"ports", labels_ports({{"s0", "s0"}, {"s1", "s1"}, {"p", "p"}})},
                 {"boolean_pairs", json::array({{{"s0", "s0"}, {"s1", "s1"}, {"secret", "x"}}})}};
  out.labels_json = dump(labels);
  Expect e;
  e.classification = "INSECURE";
  e.exit_code = 1;
  e.counts = {{"structural_candidates", 2 * lanes}, {"flagged", 2 * lanes},
              {"fm_promoted", 0},                   {"bsadc_secure", 0},
              {"bsadc_insecure", 2 * lanes},        {"residual", 2 * lanes},
              {"indeterminate", 0}};
  out.expected_json = expected_json(GadgetKind::PublicMux, e);
  return out;
}

GadgetOutput gen_const_out() {
  NetlistBuilder b;
  BitRef s0 = b.input1("s0");
  BitRef s1 = b.input1("s1");
  BitRef w1 = b.g_xor("xor_aa", s0, s0);
  BitRef w2 = b.g_and("and_zero", s1, BitRef::zero());
  BitRef y = b.g_or("or_out", w1, w2);
  b.output1("y", y);
  GadgetOutput out;
  out.netlist_json = b.finish_json("gen_const_out");
  json labels = {{"ports", labels_ports({{"s0", "s0"}, {"s1", "s1"}})},
                 {"boolean_pairs", json::array({{{"s0", "s0"}, {"s1", "s1"}, {"secret", "x"}}})}};
  out.labels_json = dump(labels);
  Expect e;
  e.counts = {{"structural_candidates", 1}, {"d0d1_promoted", 1}, {"flagged", 0},
              {"residual", 0},              {"indeterminate", 0}};
  out.expected_json = expected_json(GadgetKind::ConstOut, e);
  return out;
}

GadgetOutput gen_xor_masked_product(std::uint32_t lanes) {
  if (lanes == 0) lanes = 1;
  NetlistBuilder b;
  auto s0 = b.input("s0", lanes);
  auto s1 = b.input("s1", lanes);
  auto z = b.input("z", lanes);
  std::vector<BitRef> outs;
  for (std::uint32_t i = 0; i < lanes; ++i) {
    BitRef pp = b.g_and("and_pp" + two(i), s0[i], s1[i]);
    BitRef w = b.g_xor("xor_w" + two(i), pp, z[i]);
    outs.push_back(w);
  }
  b.output("y", outs);
  GadgetOutput out;
  out.netlist_json = b.finish_json("gen_xor_masked_product");
  json labels = {{"ports", labels_ports({{"s0", "s0"}, {"s1", "s1"}, {"z", "r"}})},
                 {"boolean_pairs", json::array({{{"s0", "s0"}, {"s1", "s1"}, {"secret", "x"}}})}};
  out.labels_json = dump(labels);
  Expect e;
  e.classification = "INSECURE";
  e.exit_code = 1;
  e.counts = {{"structural_candidates", 2 * lanes}, {"flagged", 2 * lanes},
              {"fm_promoted", lanes},               {"bsadc_secure", 0},
              {"bsadc_insecure", lanes},            {"residual", lanes},
              {"indeterminate", 0}};
  out.expected_json = expected_json(GadgetKind::XorMaskedProduct, e);
  return out;
}

// Masked modular reduction at desk scale: add the two arithmetic shares
// with a ripple chain, conditionally subtract q, then run a second
// (vacuous under the range constraints) correction stage. The second stage
// and the high-bit probes give value-independent wires; the sums,
// carries, and recombined outputs are genuinely secret-valued. `rebal` is
// the classic rebalanced wire: not value-independent, constant marginal.
GadgetOutput gen_toy_barrett(std::uint64_t q, std::uint32_t w) {
  if (w == 0 || w > 16 || q < 2)
    throw Error(Errc::usage, "toy_barrett: need 2 <= q and 1 <= width <= 16");
  if (!((2 * q) < (1ull << w)))
    throw Error(Errc::overflow_precondition,
                "toy_barrett: need 2q < 2^width, got q=" + std::to_string(q) +
                    " width=" + std::to_string(w));
  NetlistBuilder b;
  auto a0 = b.input("a0", w);
  auto a1 = b.input("a1", w);

  // Stage 1: s = a0 + a1, w+1 bits.
  std::vector<BitRef> s(w + 1);
  BitRef carry;
  for (std::uint32_t i = 0; i < w; ++i) {
    std::string t = two(i);
    BitRef x = b.g_xor("add" + t + "_x", a0[i], a1[i]);
    BitRef m1 = b.g_and("add" + t + "_g", a0[i], a1[i]);
    if (i == 0) {
      s[0] = x;
      carry = m1;
    } else {
      s[i] = b.g_xor("add" + t + "_s", x, carry);
      BitRef m2 = b.g_and("add" + t + "_p", carry, x);
      carry = b.g_or("add" + t + "_c", m1, m2);
    }
  }
  s[w] = carry;

  // Conditional subtraction stages share this chain.
  auto sub_stage = [&](const std::string& prefix, const std::vector<BitRef>& in,
                       std::uint32_t bits) {
    std::vector<BitRef> diff(bits);
    BitRef borrow = BitRef::zero();
    for (std::uint32_t i = 0; i < bits; ++i) {
      std::string t = prefix + two(i);
      BitRef qc = ((q >> i) & 1) ? BitRef::one() : BitRef::zero();
      BitRef dx = b.g_xor(t + "_dx", in[i], qc);
      diff[i] = b.g_xor(t + "_d", dx, borrow);
      BitRef ns = b.g_not(t + "_ns", in[i]);
      BitRef t1 = b.g_and(t + "_b1", ns, qc);
      BitRef nx = b.g_not(t + "_nx", dx);
      BitRef t2 = b.g_and(t + "_b2", borrow, nx);
      borrow = b.g_or(t + "_bo", t1, t2);
    }
    BitRef ge = b.g_not(prefix + "_ge", borrow); // in >= q
    return std::make_pair(diff, ge);
  };

  auto [t1, sel1] = sub_stage("sub1_", s, w + 1);
  std::vector<BitRef> r1(w);
  for (std::uint32_t i = 0; i < w; ++i)
    r1[i] = b.g_mux("red1_" + two(i), s[i], t1[i], sel1); // sel ? t1 : s

  // Stage 2: vacuous under a0, a1 < q (r1 = x < q already).
  std::vector<BitRef> r1x = r1;
  r1x.push_back(BitRef::zero());
  auto [t2, sel2] = sub_stage("sub2_", r1x, w + 1);
  std::vector<BitRef> r2(w);
  for (std::uint32_t i = 0; i < w; ++i)
    r2[i] = b.g_mux("red2_" + two(i), r1[i], t2[i], sel2);

  // Probe wires: dead-high-bit product (value-independent) and the
  // rebalanced low bit (not value-independent, constant marginal).
  BitRef vp = b.g_and("probe_vp", a0[w - 1], a1[0]);
  BitRef dead = b.g_and("probe_rb_dead", a1[0], a1[w - 1]);
  BitRef rb = b.g_xor("probe_rb", a0[0], dead);

  b.output("y", r2);
  b.output1("ysel1", sel1);
  b.output1("ysel2", sel2);
  b.output1("yvp", vp);
  b.output1("yrb", rb);

  GadgetOutput out;
  out.netlist_json = b.finish_json("gen_toy_barrett_q" + std::to_string(q));
  json labels = {{"ports", labels_ports({{"a0", "s0"}, {"a1", "s1"}})},
                 {"arith_groups", json::array({{{"s0", "a0"},
                                                {"s1", "a1"},
                                                {"secret", "x"},
                                                {"q", q},
                                                {"width", w}}})}};
  out.labels_json = dump(labels);
  Expect e;
  e.stages = "d1,mc,fm,asadc";
  e.classification = "INSECURE";
  e.exit_code = 1;
  e.counts = {{"asadc_indeterminate", 0}, {"indeterminate", 0}, {"bsadc_insecure", 0}};
  e.min_counts = {{"asadc_secure", 1}, {"asadc_candidate", 1}};
  out.expected_json = expected_json(GadgetKind::ToyBarrett, e);
  return out;
}

} // namespace

GadgetOutput generate(const GadgetSpec& spec) {
  switch (spec.kind) {
  case GadgetKind::DomAndSecure: return gen_dom_and(true);
  case GadgetKind::DomAndBroken: return gen_dom_and(false);
  case GadgetKind::IswAndSecure: return gen_isw_and(true);
  case GadgetKind::IswAndBroken: return gen_isw_and(false);
  case GadgetKind::CrossRegister: return gen_cross_register(spec.width);
  case GadgetKind::ToyBarrett:
    return gen_toy_barrett(spec.q, spec.width == 0 ? 6 : spec.width);
  case GadgetKind::ShareIsolated: return gen_share_isolated(spec.width);
  case GadgetKind::PublicMux: return gen_public_mux(spec.width);
  case GadgetKind::ConstOut: return gen_const_out();
  case GadgetKind::XorMaskedProduct: return gen_xor_masked_product(spec.width);
  }
  throw Error(Errc::usage, "unknown gadget kind");
}

GadgetInstance generate_instance(const GadgetSpec& spec) {
  GadgetOutput out = generate(spec);
  GadgetInstance inst{parse_netlist(out.netlist_json), LabelConfig{}, out.expected_json};
  inst.config = LabelConfig::parse(out.labels_json, inst.netlist);
  return inst;
}

GadgetInstance gen_random_pipeline(std::uint64_t seed, std::uint32_t max_depth,
                                   std::uint32_t width) {
  if (width < 2) width = 2;
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + 1);
  const std::uint32_t ranks = 1 + static_cast<std::uint32_t>(rng() % std::max(1u, max_depth));

  NetlistBuilder b;
  auto s0 = b.input("s0", width);
  auto s1 = b.input("s1", width);
  BitRef r = b.input1("r");
  BitRef p = b.input1("p");

  std::vector<BitRef> pool;
  pool.insert(pool.end(), s0.begin(), s0.end());
  pool.insert(pool.end(), s1.begin(), s1.end());
  pool.push_back(r);
  pool.push_back(p);

  static constexpr CellKind kBinKinds[] = {CellKind::And,   CellKind::Or,  CellKind::Xor,
                                           CellKind::Xnor,  CellKind::Nand, CellKind::Nor,
                                           CellKind::AndNot, CellKind::OrNot};
  std::uint32_t gate_id = 0;
  for (std::uint32_t rank = 0; rank < ranks; ++rank) {
    const std::uint32_t gates = 2 + static_cast<std::uint32_t>(rng() % (2 * width));
    std::vector<BitRef> created;
    for (std::uint32_t gi = 0; gi < gates; ++gi) {
      auto pick = [&]() { return pool[rng() % pool.size()]; };
      std::string name = "g" + std::to_string(gate_id++);
      BitRef out;
      switch (rng() % 10) {
      case 0: out = b.g_not(name, pick()); break;
      case 1: out = b.g_mux(name, pick(), pick(), pick()); break;
      default:
        out = b.gate(kBinKinds[rng() % 8], name, {pick(), pick()});
        break;
      }
      created.push_back(out);
      pool.push_back(out);
    }
    // Register a slice of this rank; the registered nets seed the next one.
    std::vector<BitRef> next;
    for (std::size_t i = 0; i < created.size(); ++i) {
      if (i == 0 || rng() % 2) {
        next.push_back(b.dff("q" + std::to_string(rank) + "_" + std::to_string(i), created[i]));
      }
    }
    next.push_back(p);
    next.push_back(r);
    if (rng() % 2) next.push_back(s0[rng() % width]);
    if (rng() % 2) next.push_back(s1[rng() % width]);
    pool = std::move(next);
  }
  b.output1("y", pool[0]);
  GadgetInstance inst;
  inst.netlist = b.finish("gen_random_pipeline");
  inst.config = LabelConfig::from_roles(
      inst.netlist,
      {{"s0", Role::S0}, {"s1", Role::S1}, {"r", Role::R}, {"p", Role::P}, {"clk", Role::P}},
      {}, {});
  return inst;
}

GadgetInstance gen_scale_netlist(std::uint32_t target_cells, std::uint32_t stages) {
  const std::uint32_t lanes = 64;
  if (stages == 0) stages = 1;
  std::uint32_t chain = std::max<std::uint32_t>(1, target_cells / (stages * lanes));

  NetlistBuilder b;
  auto s0 = b.input("s0", lanes / 2);
  auto s1 = b.input("s1", lanes / 2);
  std::vector<BitRef> cur;
  cur.insert(cur.end(), s0.begin(), s0.end());
  cur.insert(cur.end(), s1.begin(), s1.end());

  for (std::uint32_t st = 0; st < stages; ++st) {
    std::vector<BitRef> nxt(lanes);
    for (std::uint32_t ln = 0; ln < lanes; ++ln) {
      BitRef v = cur[ln];
      for (std::uint32_t k = 0; k < chain; ++k) {
        BitRef other = cur[(ln + k + 1) % lanes];
        std::string name = "s" + std::to_string(st) + "_l" + std::to_string(ln) + "_g" +
                           std::to_string(k);
        v = (k % 2 == 0) ? b.g_xor(name, v, other) : b.g_and(name, v, other);
      }
      nxt[ln] = b.dff("q" + std::to_string(st) + "_" + std::to_string(ln), v);
    }
    cur = std::move(nxt);
  }
  b.output("y", cur);
  GadgetInstance inst;
  inst.netlist = b.finish("gen_scale");
  inst.config = LabelConfig::from_roles(
      inst.netlist, {{"s0", Role::S0}, {"s1", Role::S1}, {"clk", Role::P}}, {}, {});
  return inst;
}

} // namespace maskcheck
