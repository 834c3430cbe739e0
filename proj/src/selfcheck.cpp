#include "maskcheck/selfcheck.hpp"

#include "maskcheck/corpus.hpp"
#include "maskcheck/errors.hpp"
#include "maskcheck/queries.hpp"

#include <atomic>
#include <functional>
#include <mutex>

namespace maskcheck {

namespace {

struct CheckDef {
  std::string name;
  StructuralVerdict::Kind expected;
  Netlist netlist;
  LabelConfig config;
  BitRef wire;
};

const char* verdict_name(StructuralVerdict::Kind k) {
  switch (k) {
  case StructuralVerdict::Kind::Secure: return "SECURE";
  case StructuralVerdict::Kind::PotentiallyInsecure: return "INSECURE";
  case StructuralVerdict::Kind::Unknown: return "UNKNOWN";
  }
  return "?";
}

CheckDef boolean_check(const std::string& name, StructuralVerdict::Kind expected,
                       const std::function<BitRef(NetlistBuilder&, BitRef s0, BitRef s1,
                                                  BitRef r, BitRef p)>& body) {
  NetlistBuilder b;
  BitRef s0 = b.input1("s0");
  BitRef s1 = b.input1("s1");
  BitRef r = b.input1("r");
  BitRef p = b.input1("p");
  BitRef w = body(b, s0, s1, r, p);
  b.output1("y", w);
  CheckDef def;
  def.name = name;
  def.expected = expected;
  def.netlist = b.finish("selfcheck_" + name);
  def.config = LabelConfig::from_roles(
      def.netlist, {{"s0", Role::S0}, {"s1", Role::S1}, {"r", Role::R}, {"p", Role::P}}, {}, {});
  def.wire = w;
  return def;
}

CheckDef arith_check(const std::string& name, StructuralVerdict::Kind expected,
                     const std::function<BitRef(NetlistBuilder&, const std::vector<BitRef>&,
                                                const std::vector<BitRef>&, BitRef p)>& body) {
  NetlistBuilder b;
  auto a0 = b.input("a0", 4);
  auto a1 = b.input("a1", 4);
  BitRef p = b.input1("p");
  BitRef w = body(b, a0, a1, p);
  b.output1("y", w);
  CheckDef def;
  def.name = name;
  def.expected = expected;
  def.netlist = b.finish("selfcheck_" + name);
  ArithGroup g;
  g.secret = "x";
  g.q = 5;
  g.width = 4;
  for (BitRef bit : def.netlist.ports.at("a0").bits) g.s0_nets.push_back(bit.net_id());
  for (BitRef bit : def.netlist.ports.at("a1").bits) g.s1_nets.push_back(bit.net_id());
  def.config = LabelConfig::from_roles(
      def.netlist, {{"a0", Role::S0}, {"a1", Role::S1}, {"p", Role::P}}, {}, {g});
  def.wire = w;
  return def;
}

std::vector<CheckDef> make_checks() {
  using K = StructuralVerdict::Kind;
  std::vector<CheckDef> defs;

  // 7 masked Boolean circuits.
  defs.push_back(boolean_check("mb1_isolated_share_and", K::Secure,
                               [](NetlistBuilder& b, BitRef s0, BitRef, BitRef r, BitRef) {
                                 return b.g_and("g", s0, r);
                               }));
  defs.push_back(boolean_check("mb2_isolated_share_xor_public", K::Secure,
                               [](NetlistBuilder& b, BitRef, BitRef s1, BitRef, BitRef p) {
                                 return b.g_xor("g", s1, p);
                               }));
  defs.push_back(boolean_check("mb3_combined_shares_xor", K::PotentiallyInsecure,
                               [](NetlistBuilder& b, BitRef s0, BitRef s1, BitRef, BitRef) {
                                 return b.g_xor("g", s0, s1);
                               }));
  defs.push_back(boolean_check("mb4_combined_shares_and", K::PotentiallyInsecure,
                               [](NetlistBuilder& b, BitRef s0, BitRef s1, BitRef, BitRef) {
                                 return b.g_and("g", s0, s1);
                               }));
  defs.push_back(boolean_check("mb5_xor_masked_product", K::PotentiallyInsecure,
                               [](NetlistBuilder& b, BitRef s0, BitRef s1, BitRef r, BitRef) {
                                 return b.g_xor("g2", b.g_and("g1", s0, s1), r);
                               }));
  defs.push_back(boolean_check("mb6_public_controlled_mux", K::PotentiallyInsecure,
                               [](NetlistBuilder& b, BitRef s0, BitRef s1, BitRef, BitRef p) {
                                 return b.g_mux("g", s1, s0, p);
                               }));
  // Both share groups present with full semantic cancellation: any
  // mis-encoded gate semantics surfaces here (the original motivation for
  // the known-answer gate).
  defs.push_back(boolean_check("mb7_constant_output", K::Secure,
                               [](NetlistBuilder& b, BitRef s0, BitRef s1, BitRef, BitRef) {
                                 BitRef u = b.g_xor("g1", s0, s1);
                                 BitRef v = b.g_xor("g2", s0, s1);
                                 return b.g_xor("g3", u, v);
                               }));

  // 4 unmasked circuits.
  defs.push_back(boolean_check("um1_secret_passthrough", K::PotentiallyInsecure,
                               [](NetlistBuilder& b, BitRef s0, BitRef s1, BitRef, BitRef) {
                                 return b.g_xor("g", s0, s1);
                               }));
  defs.push_back(boolean_check("um2_secret_gate", K::PotentiallyInsecure,
                               [](NetlistBuilder& b, BitRef s0, BitRef s1, BitRef, BitRef) {
                                 return b.gate(CellKind::AndNot, "g", {s0, s1});
                               }));
  defs.push_back(boolean_check("um3_public_only", K::Secure,
                               [](NetlistBuilder& b, BitRef, BitRef, BitRef r, BitRef p) {
                                 return b.g_xor("g", p, r);
                               }));
  defs.push_back(boolean_check("um4_public_constant", K::Secure,
                               [](NetlistBuilder& b, BitRef, BitRef, BitRef, BitRef p) {
                                 return b.g_and("g", p, BitRef::zero());
                               }));

  // 6 arithmetic-mode circuits (q=5, 4-bit buses).
  defs.push_back(arith_check("ar1_modular_reduction_low_bit", K::PotentiallyInsecure,
                             [](NetlistBuilder& b, const std::vector<BitRef>& a0,
                                const std::vector<BitRef>& a1, BitRef) {
                               return b.g_xor("g", a0[0], a1[0]);
                             }));
  defs.push_back(arith_check("ar2_carry_chain", K::PotentiallyInsecure,
                             [](NetlistBuilder& b, const std::vector<BitRef>& a0,
                                const std::vector<BitRef>& a1, BitRef) {
                               BitRef c1 = b.g_and("c1", a0[0], a1[0]);
                               BitRef x1 = b.g_xor("x1", a0[1], a1[1]);
                               BitRef g1 = b.g_and("g1", a0[1], a1[1]);
                               BitRef pr = b.g_and("pr", c1, x1);
                               return b.g_or("c2", g1, pr);
                             }));
  defs.push_back(arith_check("ar3_barrett_select", K::PotentiallyInsecure,
                             [](NetlistBuilder& b, const std::vector<BitRef>& a0,
                                const std::vector<BitRef>& a1, BitRef) {
                               BitRef ns = b.g_not("ns", a0[0]);
                               BitRef bo = b.g_and("bo", ns, a1[0]);
                               return b.g_not("ge", bo);
                             }));
  defs.push_back(arith_check("ar4_dead_high_bit_product", K::PotentiallyInsecure,
                             [](NetlistBuilder& b, const std::vector<BitRef>& a0,
                                const std::vector<BitRef>& a1, BitRef) {
                               return b.g_and("g", a0[3], a1[0]);
                             }));
  defs.push_back(arith_check("ar5_single_bus_only", K::Secure,
                             [](NetlistBuilder& b, const std::vector<BitRef>&,
                                const std::vector<BitRef>& a1, BitRef) {
                               return b.g_and("g", a1[0], a1[1]);
                             }));
  defs.push_back(arith_check("ar6_share_public_mix", K::Secure,
                             [](NetlistBuilder& b, const std::vector<BitRef>&,
                                const std::vector<BitRef>& a1, BitRef p) {
                               return b.g_xor("g", a1[0], p);
                             }));
  return defs;
}

std::atomic<int> g_gate{0}; // 0 = not run, 1 = passed, 2 = failed
std::mutex g_gate_mutex;

} // namespace

std::vector<SelfCheckResult> run_selfchecks() {
  std::vector<SelfCheckResult> results;
  BackendConfig be; // exhaustive backend; all checks fit the default budget
  for (const CheckDef& def : make_checks()) {
    WireFunctionBuilder wb(def.netlist);
    WireFunction wf = wb.build(def.wire);
    StructuralVerdict v =
        classify_structural(wf, def.config, wb, be, nullptr, "selfcheck/" + def.name);
    SelfCheckResult r;
    r.name = def.name;
    r.expected = verdict_name(def.expected);
    r.got = verdict_name(v.kind);
    r.pass = v.kind == def.expected;
    results.push_back(std::move(r));
  }
  return results;
}

void ensure_selfchecks() {
  if (g_gate.load() == 1) return;
  std::lock_guard<std::mutex> lock(g_gate_mutex);
  if (g_gate.load() == 1) return;
  auto results = run_selfchecks();
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i].pass) {
      g_gate.store(2);
      throw Error(Errc::selfcheck_failure,
                  "check " + std::to_string(i + 1) + " (" + results[i].name + "): expected " +
                      results[i].expected + ", got " + results[i].got +
                      "; halting before any target analysis");
    }
  }
  g_gate.store(1);
}

bool selfchecks_passed_this_process() { return g_gate.load() == 1; }

namespace testing {
void reset_selfcheck_gate() { g_gate.store(0); }
} // namespace testing

} // namespace maskcheck
