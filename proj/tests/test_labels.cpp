#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "maskcheck/corpus.hpp"
#include "maskcheck/errors.hpp"
#include "maskcheck/labels.hpp"

#include <chrono>

using namespace maskcheck;

namespace {

struct Built {
  Netlist netlist;
  LabelConfig config;
};

Built single_gate(CellKind kind, std::vector<std::string> in_roles) {
  // in_roles entries: "s0", "s1", "r", "p", or "const0".
  NetlistBuilder b;
  std::vector<BitRef> ins;
  std::vector<std::pair<std::string, Role>> roles;
  int idx = 0;
  for (const std::string& role : in_roles) {
    if (role == "const0") {
      ins.push_back(BitRef::zero());
      continue;
    }
    std::string port = "i" + std::to_string(idx++);
    ins.push_back(b.input1(port));
    Role r = role == "s0" ? Role::S0 : role == "s1" ? Role::S1 : role == "r" ? Role::R : Role::P;
    roles.emplace_back(port, r);
  }
  BitRef y = b.gate(kind, "g", ins);
  b.output1("y", y);
  Built out{b.finish("single"), LabelConfig{}};
  out.config = LabelConfig::from_roles(out.netlist, roles, {}, {});
  return out;
}

Label output_label(const Built& bu, const LabelMap& m) {
  return m.of(bu.netlist.ports.at("y").bits[0]);
}

} // namespace

TEST_CASE("join is the least upper bound of the 4-point lattice") {
  CHECK(join(Label::Bot, Label::S0) == Label::S0);
  CHECK(join(Label::S0, Label::S1) == Label::Both);
  CHECK(join(Label::Both, Label::Bot) == Label::Both);
  CHECK(join(Label::Both, Label::S1) == Label::Both);
  CHECK(label_leq(Label::Bot, Label::S0));
  CHECK(label_leq(Label::S0, Label::Both));
  CHECK(!label_leq(Label::S0, Label::S1));
}

TEST_CASE("combinational propagation joins all data inputs") {
  {
    Built bu = single_gate(CellKind::And, {"s0", "r"});
    LabelMap m = run_sc_d1_labels(bu.netlist, bu.config);
    CHECK(output_label(bu, m) == Label::S0);
  }
  {
    // MUX select and both data inputs join: public-controlled mux is BOTH.
    Built bu = single_gate(CellKind::Mux, {"s0", "s1", "p"});
    LabelMap m = run_sc_d1_labels(bu.netlist, bu.config);
    CHECK(output_label(bu, m) == Label::Both);
  }
  {
    Built bu = single_gate(CellKind::Xor, {"const0", "p"});
    LabelMap m = run_sc_d1_labels(bu.netlist, bu.config);
    CHECK(output_label(bu, m) == Label::Bot);
  }
}

TEST_CASE("sc-d1: disjoint share paths stay clean, combination flags") {
  {
    GadgetInstance inst = generate_instance({GadgetKind::ShareIsolated});
    LabelMap m = run_sc_d1_labels(inst.netlist, inst.config);
    CHECK(count_both(inst.netlist, m) == 0);
  }
  {
    Built bu = single_gate(CellKind::Xor, {"s0", "s1"});
    LabelMap m = run_sc_d1_labels(bu.netlist, bu.config);
    CHECK(output_label(bu, m) == Label::Both);
  }
  {
    // Shares meeting only after a register are invisible to SC-D1.
    GadgetInstance inst = generate_instance({GadgetKind::CrossRegister});
    LabelMap m = run_sc_d1_labels(inst.netlist, inst.config);
    CHECK(count_both(inst.netlist, m) == 0);
  }
}

TEST_CASE("mc-d1 flags the cross-register convergence sc missed") {
  GadgetInstance inst = generate_instance({GadgetKind::CrossRegister});
  McResult mc = run_mc_d1(inst.netlist, inst.config);
  CHECK(mc.converged);
  CHECK(mc.iterations_used <= mc.bound_d + 1);
  CHECK(count_both(inst.netlist, mc.labels) == 2); // the AND and its fanout
}

TEST_CASE("mc-d1 on a purely combinational netlist = one pass of sc-d1") {
  Built bu = single_gate(CellKind::Xor, {"s0", "s1"});
  McResult mc = run_mc_d1(bu.netlist, bu.config);
  CHECK(mc.bound_d == 0);
  CHECK(mc.iterations_used == 1);
  CHECK(mc.converged);
  CHECK(mc.labels == run_sc_d1_labels(bu.netlist, bu.config));
}

TEST_CASE("3-deep pipeline: bound holds and bounded == unbounded") {
  NetlistBuilder b;
  BitRef s0 = b.input1("s0");
  BitRef s1 = b.input1("s1");
  BitRef q1 = b.dff("ra", s0);
  BitRef q2 = b.dff("rb", q1);
  BitRef q3 = b.dff("rc", q2);
  BitRef w = b.g_and("meet", q3, s1);
  b.output1("y", w);
  Netlist n = b.finish("pipe3");
  LabelConfig cfg = LabelConfig::from_roles(
      n, {{"s0", Role::S0}, {"s1", Role::S1}, {"clk", Role::P}}, {}, {});
  McResult bounded = run_mc_d1(n, cfg);
  CHECK(bounded.bound_d == 2);
  CHECK(bounded.converged);
  CHECK(bounded.iterations_used <= bounded.bound_d + 1);
  McResult unbounded = run_mc_d1(n, cfg, 100000);
  CHECK(unbounded.labels == bounded.labels);
}

TEST_CASE("jacobi snapshot semantics: direct q->d chain takes one rank per pass") {
  // dff2.D is dff1.Q with no logic in between; Gauss-Seidel in cell order
  // would converge a pass earlier.
  NetlistBuilder b;
  BitRef s0 = b.input1("s0");
  BitRef q1 = b.dff("r1", s0);
  BitRef q2 = b.dff("r2", q1);
  b.output1("y", q2);
  Netlist n = b.finish("gs_vs_jacobi");
  LabelConfig cfg =
      LabelConfig::from_roles(n, {{"s0", Role::S0}, {"clk", Role::P}}, {}, {});
  std::vector<LabelMap> trace;
  McResult mc = run_mc_d1(n, cfg, std::nullopt, &trace);
  CHECK(mc.bound_d == 1);
  CHECK(mc.iterations_used == 2);
  // After pass 1 only r1 carries S0; r2 still BOT (it read the snapshot).
  const LabelMap& after1 = trace[1];
  CHECK(after1.of(BitRef::net(q1.net_id())) == Label::S0);
  CHECK(after1.of(BitRef::net(q2.net_id())) == Label::Bot);
  // Unbounded mode needs the extra detection pass.
  McResult unbounded = run_mc_d1(n, cfg, 100000);
  CHECK(unbounded.iterations_used == 3);
  CHECK(unbounded.labels == mc.labels);
}

TEST_CASE("max_iter_override below the bound reports converged=false") {
  NetlistBuilder b;
  BitRef s0 = b.input1("s0");
  BitRef cur = s0;
  for (int i = 0; i < 5; ++i) cur = b.dff("r" + std::to_string(i), cur);
  b.output1("y", cur);
  Netlist n = b.finish("cut_short");
  LabelConfig cfg =
      LabelConfig::from_roles(n, {{"s0", Role::S0}, {"clk", Role::P}}, {}, {});
  McResult cut = run_mc_d1(n, cfg, 2);
  CHECK(!cut.converged);
  CHECK(cut.iterations_used == 2);
}

TEST_CASE("monotonicity: labels never shrink and change at most 3 times") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GadgetInstance inst = gen_random_pipeline(seed, 12, 4);
    std::vector<LabelMap> trace;
    McResult mc = run_mc_d1(inst.netlist, inst.config, std::nullopt, &trace);
    CHECK(mc.converged);
    for (std::size_t net = 0; net <= inst.netlist.max_net_id; ++net) {
      int changes = 0;
      for (std::size_t k = 1; k < trace.size(); ++k) {
        CHECK(label_leq(trace[k - 1].net[net], trace[k].net[net]));
        if (trace[k - 1].net[net] != trace[k].net[net]) ++changes;
      }
      CHECK(changes <= 3);
    }
  }
}

TEST_CASE("sc flags are a subset of mc flags") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GadgetInstance inst = gen_random_pipeline(seed, 10, 4);
    LabelMap sc = run_sc_d1_labels(inst.netlist, inst.config);
    McResult mc = run_mc_d1(inst.netlist, inst.config);
    for (std::size_t net = 0; net < sc.net.size(); ++net)
      CHECK(label_leq(sc.net[net], mc.labels.net[net]));
  }
}

TEST_CASE("idempotence: one more jacobi pass on a converged map changes nothing") {
  GadgetInstance inst = generate_instance({GadgetKind::DomAndSecure});
  McResult mc = run_mc_d1(inst.netlist, inst.config);
  LabelMap again = mc.labels;
  CHECK(!mc_step(inst.netlist, again));
  CHECK(again == mc.labels);
}

TEST_CASE("root causes partition the BOTH set exactly") {
  {
    GadgetInstance inst = generate_instance({GadgetKind::DomAndSecure});
    McResult mc = run_mc_d1(inst.netlist, inst.config);
    LabelMap sc = run_sc_d1_labels(inst.netlist, inst.config);
    RootCauseReport rc = decompose_root_causes(inst.netlist, mc, sc);
    CHECK(rc.true_convergence.size() == 2); // the cross-domain products
    CHECK(rc.amplification.size() == 2);    // refresh xors
    CHECK(rc.downstream.size() == 0);
    CHECK(rc.dff_both.size() == 2);
    CHECK(rc.total() == count_both(inst.netlist, mc.labels));
    CHECK(check_convergence_coverage(inst.netlist, rc, mc));

    // TC cell: AND over one S0 and one S1 input, no single input BOTH.
    for (std::uint32_t ci : rc.true_convergence) {
      for (BitRef in : inst.netlist.cells[ci].inputs)
        CHECK(mc.labels.of(in) != Label::Both);
    }
    // Amplification: mixed inputs with at least one BOTH.
    for (std::uint32_t ci : rc.amplification) {
      bool any_both = false, all_both = true;
      for (BitRef in : inst.netlist.cells[ci].inputs) {
        any_both |= mc.labels.of(in) == Label::Both;
        all_both &= mc.labels.of(in) == Label::Both;
      }
      CHECK(any_both);
      CHECK(!all_both);
    }
  }
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GadgetInstance inst = gen_random_pipeline(seed, 10, 4);
    McResult mc = run_mc_d1(inst.netlist, inst.config);
    LabelMap sc = run_sc_d1_labels(inst.netlist, inst.config);
    RootCauseReport rc = decompose_root_causes(inst.netlist, mc, sc);
    CHECK(rc.total() == count_both(inst.netlist, mc.labels));
    CHECK(check_convergence_coverage(inst.netlist, rc, mc));
  }
}

TEST_CASE("downstream category: all-BOTH inputs even inside a TC fanout") {
  GadgetInstance inst = generate_instance({GadgetKind::CrossRegister});
  McResult mc = run_mc_d1(inst.netlist, inst.config);
  RootCauseReport rc =
      decompose_root_causes(inst.netlist, mc, run_sc_d1_labels(inst.netlist, inst.config));
  CHECK(rc.true_convergence.size() == 1);
  CHECK(rc.downstream.size() == 1); // the NOT after the AND
  CHECK(rc.amplification.empty());
  CHECK(rc.dff_both.empty());
}

TEST_CASE("decompose requires convergence") {
  NetlistBuilder b;
  BitRef s0 = b.input1("s0");
  BitRef s1 = b.input1("s1");
  BitRef q1 = b.dff("r1", s0);
  BitRef q2 = b.dff("r2", q1);
  BitRef w = b.g_and("meet", q2, s1);
  b.output1("y", w);
  Netlist n = b.finish("nc");
  LabelConfig cfg = LabelConfig::from_roles(
      n, {{"s0", Role::S0}, {"s1", Role::S1}, {"clk", Role::P}}, {}, {});
  McResult cut = run_mc_d1(n, cfg, 1);
  REQUIRE(!cut.converged);
  CHECK_THROWS_AS(decompose_root_causes(n, cut, run_sc_d1_labels(n, cfg)), Error);
}

TEST_CASE("coverage drops when a true convergence point is removed") {
  GadgetInstance inst = generate_instance({GadgetKind::CrossRegister});
  McResult mc = run_mc_d1(inst.netlist, inst.config);
  RootCauseReport rc =
      decompose_root_causes(inst.netlist, mc, run_sc_d1_labels(inst.netlist, inst.config));
  REQUIRE(check_convergence_coverage(inst.netlist, rc, mc));
  RootCauseReport mutated = rc;
  mutated.true_convergence.clear();
  CHECK(!check_convergence_coverage(inst.netlist, mutated, mc));
}

TEST_CASE("hand netlist: a both-input gate is its own convergence point") {
  Built bu = single_gate(CellKind::And, {"s0", "s1"});
  McResult mc = run_mc_d1(bu.netlist, bu.config);
  RootCauseReport rc =
      decompose_root_causes(bu.netlist, mc, run_sc_d1_labels(bu.netlist, bu.config));
  CHECK(rc.true_convergence.size() == 1);
  CHECK(check_convergence_coverage(bu.netlist, rc, mc));
}

TEST_CASE("label config validation errors carry json paths") {
  GadgetOutput out = generate({GadgetKind::DomAndSecure});
  Netlist n = parse_netlist(out.netlist_json);
  try {
    LabelConfig::parse(R"({"ports": {"nope": {"role": "s0"}}})", n);
    FAIL("expected BadLabelConfig");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::bad_label_config);
    CHECK(std::string(e.what()).find("/ports/nope") != std::string::npos);
  }
  try {
    LabelConfig::parse(R"({"ports": {"a0": {"role": "owl"}}})", n);
    FAIL("expected BadLabelConfig");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("/ports/a0/role") != std::string::npos);
  }
  // Roles must partition all input port bits.
  CHECK_THROWS_AS(LabelConfig::parse(R"({"ports": {"a0": {"role": "s0"}}})", n), Error);
}

TEST_CASE("arith group overflow precondition is enforced at config parse") {
  GadgetOutput out = generate({GadgetKind::ToyBarrett, 5, 4});
  Netlist n = parse_netlist(out.netlist_json);
  try {
    LabelConfig::parse(
        R"({"ports": {"a0": {"role": "s0"}, "a1": {"role": "s1"}},
            "arith_groups": [{"s0": "a0", "s1": "a1", "q": 9, "width": 4}]})",
        n);
    FAIL("expected OverflowPrecondition");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::overflow_precondition);
  }
}

TEST_CASE("scale smoke: sc propagation on ~100k cells in seconds") {
  GadgetInstance inst = gen_scale_netlist(100000, 8);
  CHECK(inst.netlist.cells.size() >= 90000);
  auto t0 = std::chrono::steady_clock::now();
  LabelMap sc = run_sc_d1_labels(inst.netlist, inst.config);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 5.0);
  CHECK(count_both(inst.netlist, sc) > 0);
}
