#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "maskcheck/corpus.hpp"
#include "maskcheck/errors.hpp"
#include "maskcheck/wirefunc.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

using namespace maskcheck;

namespace {

std::string read_golden(const std::string& name) {
  std::ifstream in(std::string(MASKCHECK_SOURCE_DIR) + "/tests/golden/" + name);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

TEST_CASE("build: xor of two primaries") {
  NetlistBuilder b;
  BitRef a = b.input1("a");
  BitRef c = b.input1("b");
  BitRef y = b.g_xor("g", a, c);
  b.output1("y", y);
  Netlist n = b.finish("m");
  WireFunctionBuilder wb(n);
  WireFunction wf = wb.build(y);
  CHECK(to_sexpr(wf, wb) == "(xor (var a[0]) (var b[0]))");
}

TEST_CASE("build cuts at dff q pins") {
  NetlistBuilder b;
  BitRef a = b.input1("a");
  BitRef c = b.input1("b");
  BitRef inner = b.g_and("g_in", a, c);
  BitRef q = b.dff("reg", inner);
  BitRef y = b.g_not("g_out", q);
  b.output1("y", y);
  Netlist n = b.finish("m");
  WireFunctionBuilder wb(n);
  WireFunction wf = wb.build(y);
  // The upstream AND is invisible; the expression is over the free var.
  CHECK(to_sexpr(wf, wb) == "(not (var reg.Q))");
}

TEST_CASE("reconverging fanout shares one dag node") {
  NetlistBuilder b;
  BitRef a = b.input1("a");
  BitRef c = b.input1("b");
  BitRef shared = b.g_xor("g0_shared", a, c);
  BitRef l = b.g_and("g1", shared, a);
  BitRef r = b.g_and("g2", shared, c);
  BitRef y = b.g_or("g3", l, r);
  b.output1("y", y);
  Netlist n = b.finish("m");
  WireFunctionBuilder wb(n);
  WireFunction wf = wb.build(y);
  // Tree expansion would count the shared xor twice.
  std::size_t dag_nodes = cone_node_count(wf);
  CHECK(dag_nodes == 6); // a, b, xor, and, and, or
}

TEST_CASE("undriven net raises UndrivenNet") {
  nlohmann::json root = {
      {"modules",
       {{"m",
         {{"ports", {{"y", {{"direction", "output"}, {"bits", {4}}}}}},
          {"cells",
           {{"g", {{"type", "$_NOT_"}, {"connections", {{"A", {9}}, {"Y", {4}}}}}}}}}}}}};
  Netlist n = parse_netlist(root.dump());
  WireFunctionBuilder wb(n);
  CHECK_THROWS_AS(wb.build(BitRef::net(4)), Error);
}

TEST_CASE("support: role-partitioned syntactic cone") {
  NetlistBuilder b;
  auto s0 = b.input("s0", 4);
  auto s1 = b.input("s1", 4);
  auto r = b.input("r", 2);
  BitRef w1 = b.g_and("g1", s0[3], r[1]);
  BitRef w2 = b.g_xor("g2", s0[2], s1[2]);
  BitRef w3 = b.g_and("g3", s0[1], BitRef::zero());
  b.output("y", {w1, w2, w3});
  Netlist n = b.finish("m");
  LabelConfig cfg = LabelConfig::from_roles(
      n, {{"s0", Role::S0}, {"s1", Role::S1}, {"r", Role::R}},
      {BoolPair{"x", 0, s0[0].net_id(), s1[0].net_id()},
       BoolPair{"x", 1, s0[1].net_id(), s1[1].net_id()},
       BoolPair{"x", 2, s0[2].net_id(), s1[2].net_id()},
       BoolPair{"x", 3, s0[3].net_id(), s1[3].net_id()}},
      {});
  WireFunctionBuilder wb(n);

  Support sup1 = support(wb.build(w1), cfg, wb);
  CHECK(sup1.c_s0 == std::set<std::uint32_t>{3});
  CHECK(sup1.c_r == std::set<std::uint32_t>{1});
  CHECK(sup1.paired.empty());
  CHECK(sup1.unpaired_s0 == std::set<std::uint32_t>{3});

  Support sup2 = support(wb.build(w2), cfg, wb);
  CHECK(sup2.paired == std::set<std::uint32_t>{2});
  CHECK(sup2.unpaired_s0.empty());
  CHECK(sup2.unpaired_s1.empty());

  // Syntactic support keeps the share bit even though the AND is
  // semantically constant.
  Support sup3 = support(wb.build(w3), cfg, wb);
  CHECK(sup3.c_s0 == std::set<std::uint32_t>{1});
}

TEST_CASE("evaluate: basic semantics and MissingAssignment") {
  auto dag = std::make_shared<ExprDag>();
  NodeId a = dag->var(0), b = dag->var(1);
  WireFunction wx{dag, dag->mk_xor(a, b)};
  CHECK(evaluate(wx, {{0, 1}, {1, 1}}) == 0);
  WireFunction wc{dag, dag->const1()};
  CHECK(evaluate(wc, {}) == 1);
  // mux(s, a, b): select=1 picks the first data operand.
  WireFunction wm{dag, dag->mk_mux(dag->const1(), dag->const0(), dag->const1())};
  CHECK(evaluate(wm, {}) == 0);
  CHECK_THROWS_AS(evaluate(wx, {{0, 1}}), Error);
}

TEST_CASE("cell semantics match the pinned golden truth table on all three routes") {
  std::istringstream golden(read_golden("cell_truth.txt"));
  std::string line;
  while (std::getline(golden, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string type_s, in_s, y_s;
    ls >> type_s >> in_s >> y_s;
    std::string bits = in_s.substr(3);
    int want = y_s[2] - '0';
    auto kind = cell_kind_from_yosys(type_s);
    REQUIRE(kind.has_value());

    std::vector<int> ins;
    for (char c : bits) ins.push_back(c - '0');

    // Route 1: the shared cell-semantics table.
    CHECK(eval_cell(*kind, ins) == (want != 0));

    // Route 2: wire function built from a single-cell netlist.
    NetlistBuilder b;
    std::vector<BitRef> pins;
    for (std::size_t i = 0; i < ins.size(); ++i) pins.push_back(b.input1("i" + std::to_string(i)));
    BitRef y = b.gate(*kind, "g", pins);
    b.output1("y", y);
    Netlist n = b.finish("m");
    WireFunctionBuilder wb(n);
    std::map<std::uint32_t, int> assign;
    for (std::size_t i = 0; i < ins.size(); ++i) assign[pins[i].net_id()] = ins[i];
    CHECK(evaluate(wb.build(y), assign) == want);

    // Route 3: the gate-by-gate netlist simulator.
    SimInput sim;
    for (std::size_t i = 0; i < ins.size(); ++i) sim.nets[pins[i].net_id()] = ins[i];
    CHECK(simulate(n, sim)[y.net_id()] == want);
  }
}

TEST_CASE("sexpr dump matches the golden file for a corpus cone") {
  GadgetInstance dom = generate_instance({GadgetKind::DomAndSecure});
  WireFunctionBuilder wb(dom.netlist);
  for (const Cell& c : dom.netlist.cells) {
    if (c.name != "xor_t01") continue;
    std::string got = to_sexpr(wb.build(c.output), wb) + "\n";
    CHECK(got == read_golden("dom_c1_cone.sexpr"));
  }
}

TEST_CASE("substitute: boolean reparametrization round-trip") {
  auto dag = std::make_shared<ExprDag>();
  NodeId a = dag->var(10), s1 = dag->var(11);
  WireFunction outer{dag, dag->mk_xor(a, s1)};

  auto rdag = std::make_shared<ExprDag>();
  WireFunction repl{rdag, rdag->mk_xor(rdag->var(20), rdag->var(11))}; // x ^ s1
  WireFunction rt = substitute(outer, {{10u, repl}});
  // (x ^ s1) ^ s1 evaluates to x everywhere.
  for (int x = 0; x < 2; ++x)
    for (int s = 0; s < 2; ++s)
      CHECK(evaluate(rt, {{20, x}, {11, s}}) == x);
}

TEST_CASE("substitute: empty map yields an identical dag") {
  NetlistBuilder b;
  BitRef a = b.input1("a");
  BitRef c = b.input1("b");
  BitRef y = b.g_or("g", b.g_xor("g0", a, c), a);
  b.output1("y", y);
  Netlist n = b.finish("m");
  WireFunctionBuilder wb(n);
  WireFunction wf = wb.build(y);
  WireFunction same = substitute(wf, {});
  CHECK(to_sexpr_raw(same) == to_sexpr_raw(wf));
  CHECK(cone_node_count(same) == cone_node_count(wf));
}

TEST_CASE("substitute: two copies with distinct secrets share sub-dags") {
  auto dag = std::make_shared<ExprDag>();
  NodeId s0 = dag->var(0), s1 = dag->var(1), r = dag->var(2);
  WireFunction wf{dag, dag->mk_xor(dag->mk_and(s0, s1), r)};

  auto xdag = std::make_shared<ExprDag>();
  WireFunction xa{xdag, xdag->var(100)};
  WireFunction xb{xdag, xdag->var(101)};
  WireFunction copy_a = substitute(wf, {{0u, xa}});
  WireFunction copy_b = substitute(wf, {{0u, xb}});
  // Rebuild both into one arena: shared s1/r leaves dedupe.
  auto joint = std::make_shared<ExprDag>();
  NodeId ra = import_expr(*copy_a.dag, copy_a.root, *joint, {});
  NodeId rb = import_expr(*copy_b.dag, copy_b.root, *joint, {});
  WireFunction wa{joint, ra}, wb2{joint, rb};
  std::size_t total = joint->size();
  CHECK(total < cone_node_count(wa) + cone_node_count(wb2));
}

TEST_CASE("substitution correctness under random maps") {
  std::mt19937_64 rng(42);
  for (int iter = 0; iter < 50; ++iter) {
    auto dag = std::make_shared<ExprDag>();
    std::vector<NodeId> pool;
    for (std::uint32_t v = 0; v < 4; ++v) pool.push_back(dag->var(v));
    for (int g = 0; g < 12; ++g) {
      NodeId a = pool[rng() % pool.size()], b = pool[rng() % pool.size()];
      switch (rng() % 3) {
      case 0: pool.push_back(dag->mk_and(a, b)); break;
      case 1: pool.push_back(dag->mk_xor(a, b)); break;
      default: pool.push_back(dag->mk_not(a)); break;
      }
    }
    WireFunction wf{dag, pool.back()};
    // Replace var 0 by an expression over vars 5, 6.
    auto rdag = std::make_shared<ExprDag>();
    WireFunction repl{rdag, rdag->mk_xor(rdag->var(5), rdag->var(6))};
    WireFunction sub = substitute(wf, {{0u, repl}});
    for (int trial = 0; trial < 16; ++trial) {
      std::map<std::uint32_t, int> env;
      for (std::uint32_t v : {1u, 2u, 3u, 5u, 6u}) env[v] = static_cast<int>(rng() % 2);
      std::map<std::uint32_t, int> env_orig = env;
      env_orig[0] = env[5] ^ env[6];
      CHECK(evaluate(sub, env) == evaluate(wf, env_orig));
    }
  }
}

TEST_CASE("simulation equivalence: wire functions match gate-level simulation") {
  for (GadgetSpec spec : {GadgetSpec{GadgetKind::DomAndSecure}, GadgetSpec{GadgetKind::IswAndSecure},
                          GadgetSpec{GadgetKind::IswAndBroken},
                          GadgetSpec{GadgetKind::ToyBarrett, 5, 4}}) {
    GadgetInstance inst = generate_instance(spec);
    const Netlist& n = inst.netlist;
    WireFunctionBuilder wb(n);

    // Free variables: primary inputs plus DFF Q nets.
    std::vector<std::uint32_t> free_nets;
    for (std::uint32_t net = 0; net <= n.max_net_id; ++net) {
      if (n.is_primary_input(net)) free_nets.push_back(net);
      else if (n.driver_of(net) >= 0 && is_dff(n.cells[n.driver_of(net)].kind))
        free_nets.push_back(net);
    }
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 1000; ++trial) {
      SimInput sim;
      std::map<std::uint32_t, int> assign;
      for (std::uint32_t net : free_nets) {
        int v = static_cast<int>(rng() % 2);
        sim.nets[net] = v;
        assign[net] = v;
      }
      std::vector<std::int8_t> vals = simulate(n, sim);
      for (const Cell& c : n.cells) {
        if (is_dff(c.kind)) continue;
        std::uint32_t net = c.output.net_id();
        CHECK(evaluate(wb.build(BitRef::net(net)), assign) == vals[net]);
      }
    }
  }
}

TEST_CASE("support soundness: non-support inputs never change the wire") {
  GadgetInstance inst = generate_instance({GadgetKind::IswAndSecure});
  const Netlist& n = inst.netlist;
  WireFunctionBuilder wb(n);
  std::vector<std::uint32_t> inputs;
  for (std::uint32_t net = 0; net <= n.max_net_id; ++net)
    if (n.is_primary_input(net)) inputs.push_back(net);
  REQUIRE(inputs.size() <= 16);

  for (const Cell& c : n.cells) {
    if (is_dff(c.kind)) continue;
    WireFunction wf = wb.build(c.output);
    std::vector<std::uint32_t> cone = cone_vars(wf);
    for (std::uint32_t flip : inputs) {
      if (std::find(cone.begin(), cone.end(), flip) != cone.end()) continue;
      // Exhaust all assignments of the full input set; flipping `flip`
      // must never change the simulated wire value.
      for (std::uint32_t v = 0; v < (1u << inputs.size()); ++v) {
        SimInput a, bflip;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
          int bit = (v >> i) & 1;
          a.nets[inputs[i]] = bit;
          bflip.nets[inputs[i]] = inputs[i] == flip ? 1 - bit : bit;
        }
        CHECK(simulate(n, a)[c.output.net_id()] == simulate(n, bflip)[c.output.net_id()]);
      }
    }
  }
}
