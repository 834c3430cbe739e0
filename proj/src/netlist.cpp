#include "maskcheck/netlist.hpp"

#include "maskcheck/digest.hpp"
#include "maskcheck/errors.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <queue>
#include <set>
#include <sstream>

using nlohmann::json;

namespace maskcheck {

namespace {

struct KindEntry {
  const char* yosys;
  CellKind kind;
};

// Supported cell table. Enable-bearing flip-flops are deliberately absent:
// the synthesis recipe (dffunmap) decomposes them before analysis.
constexpr KindEntry kKinds[] = {
    {"$_AND_", CellKind::And},       {"$_OR_", CellKind::Or},
    {"$_XOR_", CellKind::Xor},       {"$_XNOR_", CellKind::Xnor},
    {"$_NAND_", CellKind::Nand},     {"$_NOR_", CellKind::Nor},
    {"$_ANDNOT_", CellKind::AndNot}, {"$_ORNOT_", CellKind::OrNot},
    {"$_NOT_", CellKind::Not},       {"$_MUX_", CellKind::Mux},
    {"$_DFF_P_", CellKind::DffP},    {"$_DFF_N_", CellKind::DffN},
    {"$_DFF_PP0_", CellKind::DffPP0}, {"$_DFF_PP1_", CellKind::DffPP1},
    {"$_DFF_PN0_", CellKind::DffPN0}, {"$_DFF_PN1_", CellKind::DffPN1},
    {"$_DFF_NP0_", CellKind::DffNP0}, {"$_DFF_NP1_", CellKind::DffNP1},
    {"$_DFF_NN0_", CellKind::DffNN0}, {"$_DFF_NN1_", CellKind::DffNN1},
    {"$_SDFF_PP0_", CellKind::SdffPP0}, {"$_SDFF_PP1_", CellKind::SdffPP1},
    {"$_SDFF_PN0_", CellKind::SdffPN0}, {"$_SDFF_PN1_", CellKind::SdffPN1},
    {"$_SDFF_NP0_", CellKind::SdffNP0}, {"$_SDFF_NP1_", CellKind::SdffNP1},
    {"$_SDFF_NN0_", CellKind::SdffNN0}, {"$_SDFF_NN1_", CellKind::SdffNN1},
};

bool has_async_sr(CellKind k) {
  switch (k) {
  case CellKind::DffPP0: case CellKind::DffPP1: case CellKind::DffPN0:
  case CellKind::DffPN1: case CellKind::DffNP0: case CellKind::DffNP1:
  case CellKind::DffNN0: case CellKind::DffNN1:
    return true;
  default:
    return false;
  }
}

} // namespace

bool is_dff(CellKind k) { return k >= CellKind::DffP; }
bool is_sdff(CellKind k) { return k >= CellKind::SdffPP0; }
bool is_comb(CellKind k) { return !is_dff(k); }

std::size_t comb_arity(CellKind k) {
  switch (k) {
  case CellKind::Not: return 1;
  case CellKind::Mux: return 3;
  default: return 2;
  }
}

const char* yosys_cell_name(CellKind k) {
  for (const auto& e : kKinds)
    if (e.kind == k) return e.yosys;
  return "?";
}

std::optional<CellKind> cell_kind_from_yosys(std::string_view type) {
  for (const auto& e : kKinds)
    if (type == e.yosys) return e.kind;
  return std::nullopt;
}

bool Netlist::net_known(std::uint32_t net) const {
  return net < driver.size() && (driver[net] >= 0 || primary_input[net] != 0);
}

std::string Netlist::wire_name(std::uint32_t net) const {
  std::int32_t d = driver_of(net);
  if (d >= 0) {
    const Cell& c = cells[static_cast<std::size_t>(d)];
    return c.name + (is_dff(c.kind) ? ".Q" : ".Y");
  }
  for (const auto& [pname, port] : ports) {
    for (std::size_t i = 0; i < port.bits.size(); ++i)
      if (port.bits[i].is_net() && port.bits[i].net_id() == net)
        return pname + "[" + std::to_string(i) + "]";
  }
  return "net" + std::to_string(net);
}

namespace {

bool cell_eq(const Cell& a, const Cell& b) {
  return a.name == b.name && a.kind == b.kind && a.inputs == b.inputs &&
         a.output == b.output && a.clock == b.clock && a.async_sr == b.async_sr;
}

} // namespace

bool structurally_equal(const Netlist& a, const Netlist& b) {
  if (a.module_name != b.module_name || a.net_count != b.net_count ||
      a.max_net_id != b.max_net_id || a.cells.size() != b.cells.size())
    return false;
  for (std::size_t i = 0; i < a.cells.size(); ++i)
    if (!cell_eq(a.cells[i], b.cells[i])) return false;
  if (a.ports.size() != b.ports.size()) return false;
  for (auto ita = a.ports.begin(), itb = b.ports.begin(); ita != a.ports.end(); ++ita, ++itb) {
    if (ita->first != itb->first || ita->second.dir != itb->second.dir ||
        ita->second.bits != itb->second.bits)
      return false;
  }
  return true;
}

namespace {

class Parser {
public:
  explicit Parser(const std::string& text) : text_(text) {}

  Netlist run() {
    json root;
    try {
      root = json::parse(text_);
    } catch (const json::exception& e) {
      throw Error(Errc::malformed_json, e.what());
    }
    if (!root.is_object() || !root.contains("modules") || !root["modules"].is_object())
      throw Error(Errc::malformed_json, "expected a top-level \"modules\" object");
    const json& modules = root["modules"];
    if (modules.size() != 1)
      throw Error(Errc::malformed_json,
                  "expected a single flattened module, found " +
                      std::to_string(modules.size()) +
                      "; flatten the design (yosys: synth -flatten) and re-export");

    Netlist n;
    n.source_hash = sha256_hex(text_);
    auto mod_it = modules.begin();
    n.module_name = mod_it.key();
    const json& mod = mod_it.value();

    // json objects iterate in sorted key order, so cells arrive sorted by
    // name and const-x occurrence ids are canonical.
    if (mod.contains("cells")) {
      if (!mod["cells"].is_object())
        throw Error(Errc::malformed_json, "/cells: expected object");
      for (auto it = mod["cells"].begin(); it != mod["cells"].end(); ++it)
        read_cell(n, it.key(), it.value());
    }
    if (!unknown_kinds_.empty()) {
      std::string list;
      for (const auto& k : unknown_kinds_) {
        if (!list.empty()) list += ", ";
        list += k;
      }
      throw Error(Errc::unknown_cell_kind,
                  list + " (supported: combinational $_AND_/$_OR_/$_XOR_/$_XNOR_/$_NAND_/"
                         "$_NOR_/$_ANDNOT_/$_ORNOT_/$_NOT_/$_MUX_ and enable-free DFF/SDFF "
                         "primitives; run dffunmap before export)");
    }
    if (mod.contains("ports")) {
      if (!mod["ports"].is_object())
        throw Error(Errc::malformed_json, "/ports: expected object");
      for (auto it = mod["ports"].begin(); it != mod["ports"].end(); ++it)
        read_port(n, it.key(), it.value());
    }

    finalize_netlist(n);
    return n;
  }

private:
  BitRef read_bit(const json& b, const std::string& where, bool allow_const) {
    if (b.is_number_unsigned() || b.is_number_integer()) {
      auto v = b.get<std::int64_t>();
      if (v < 0) throw Error(Errc::malformed_json, where + ": negative net id");
      return BitRef::net(static_cast<std::uint32_t>(v));
    }
    if (b.is_string()) {
      const std::string s = b.get<std::string>();
      if (!allow_const)
        throw Error(Errc::malformed_json, where + ": constant bit cannot drive this pin");
      if (s == "0") return BitRef::zero();
      if (s == "1") return BitRef::one();
      if (s == "x") return BitRef::x(next_x_++);
      throw Error(Errc::malformed_json, where + ": unknown constant bit \"" + s + "\"");
    }
    throw Error(Errc::malformed_json, where + ": bit must be a net id or \"0\"/\"1\"/\"x\"");
  }

  BitRef read_pin(const json& conns, const std::string& cell, const char* pin, bool allow_const) {
    const std::string where = "/cells/" + cell + "/connections/" + pin;
    if (!conns.contains(pin))
      throw Error(Errc::malformed_json, where + ": missing pin");
    const json& arr = conns[pin];
    if (!arr.is_array() || arr.size() != 1)
      throw Error(Errc::malformed_json, where + ": expected a single-bit connection");
    return read_bit(arr[0], where, allow_const);
  }

  void read_cell(Netlist& n, const std::string& name, const json& jc) {
    const std::string where = "/cells/" + name;
    if (!jc.is_object() || !jc.contains("type") || !jc["type"].is_string())
      throw Error(Errc::malformed_json, where + ": expected an object with a \"type\" string");
    const std::string type = jc["type"].get<std::string>();
    auto kind = cell_kind_from_yosys(type);
    if (!kind) {
      if (unknown_kinds_.empty() || unknown_kinds_.back() != type) {
        if (std::find(unknown_kinds_.begin(), unknown_kinds_.end(), type) ==
            unknown_kinds_.end())
          unknown_kinds_.push_back(type);
      }
      return;
    }
    if (!jc.contains("connections") || !jc["connections"].is_object())
      throw Error(Errc::malformed_json, where + ": missing \"connections\"");
    const json& conns = jc["connections"];

    Cell c;
    c.name = name;
    c.kind = *kind;
    if (is_comb(c.kind)) {
      c.inputs.push_back(read_pin(conns, name, "A", true));
      if (comb_arity(c.kind) >= 2) c.inputs.push_back(read_pin(conns, name, "B", true));
      if (c.kind == CellKind::Mux) c.inputs.push_back(read_pin(conns, name, "S", true));
      c.output = read_pin(conns, name, "Y", false);
    } else {
      c.clock = read_pin(conns, name, "C", true);
      c.inputs.push_back(read_pin(conns, name, "D", true));
      if (is_sdff(c.kind)) {
        // Synchronous reset participates in the next-state function.
        c.inputs.push_back(read_pin(conns, name, "R", true));
      } else if (has_async_sr(c.kind)) {
        c.async_sr = read_pin(conns, name, "R", true);
      }
      c.output = read_pin(conns, name, "Q", false);
    }
    n.cells.push_back(std::move(c));
  }

  void read_port(Netlist& n, const std::string& name, const json& jp) {
    const std::string where = "/ports/" + name;
    if (!jp.is_object() || !jp.contains("direction") || !jp.contains("bits"))
      throw Error(Errc::malformed_json, where + ": expected {direction, bits}");
    const std::string dir = jp["direction"].get<std::string>();
    PortDecl p;
    if (dir == "input") p.dir = PortDecl::Dir::In;
    else if (dir == "output") p.dir = PortDecl::Dir::Out;
    else
      throw Error(Errc::malformed_json, where + ": unsupported direction \"" + dir + "\"");
    if (!jp["bits"].is_array())
      throw Error(Errc::malformed_json, where + "/bits: expected array");
    for (const json& b : jp["bits"])
      p.bits.push_back(read_bit(b, where + "/bits", true));
    n.ports.emplace(name, std::move(p));
  }

  const std::string& text_;
  std::uint32_t next_x_ = 0;
  std::vector<std::string> unknown_kinds_;
};

json bit_to_json(BitRef b) {
  if (b.is_const0()) return json("0");
  if (b.is_const1()) return json("1");
  if (b.is_x()) return json("x");
  return json(b.net_id());
}

} // namespace

Netlist parse_netlist(const std::string& json_text) { return Parser(json_text).run(); }

void finalize_netlist(Netlist& n) {
  std::sort(n.cells.begin(), n.cells.end(),
            [](const Cell& a, const Cell& b) { return a.name < b.name; });
  for (std::size_t i = 1; i < n.cells.size(); ++i)
    if (n.cells[i].name == n.cells[i - 1].name)
      throw Error(Errc::malformed_json, "duplicate cell name " + n.cells[i].name);
  for (const Cell& c : n.cells) {
    std::size_t want = is_comb(c.kind) ? comb_arity(c.kind) : (is_sdff(c.kind) ? 2 : 1);
    if (c.inputs.size() != want)
      throw Error(Errc::malformed_json, "/cells/" + c.name + ": arity mismatch");
  }

  std::uint32_t max_id = 0;
  std::set<std::uint32_t> nets;
  auto note = [&](BitRef b) {
    if (b.is_net()) {
      nets.insert(b.net_id());
      max_id = std::max(max_id, b.net_id());
    }
  };
  for (const Cell& c : n.cells) {
    for (BitRef b : c.inputs) note(b);
    note(c.output);
    note(c.clock);
    note(c.async_sr);
  }
  for (const auto& [name, p] : n.ports)
    for (BitRef b : p.bits) note(b);
  n.max_net_id = max_id;
  n.net_count = static_cast<std::uint32_t>(nets.size());

  n.driver.assign(n.max_net_id + 1, -1);
  n.primary_input.assign(n.max_net_id + 1, 0);
  n.comb_cells.clear();
  n.dff_cells.clear();

  for (const auto& [name, p] : n.ports) {
    if (p.dir != PortDecl::Dir::In) continue;
    for (BitRef b : p.bits) {
      if (!b.is_net()) continue;
      if (n.primary_input[b.net_id()])
        throw Error(Errc::multiple_drivers,
                    "net " + std::to_string(b.net_id()) + " appears in more than one input port");
      n.primary_input[b.net_id()] = 1;
    }
  }
  for (std::size_t i = 0; i < n.cells.size(); ++i) {
    BitRef out = n.cells[i].output;
    if (!out.is_net())
      throw Error(Errc::malformed_json, "/cells/" + n.cells[i].name + ": output must be a net");
    std::uint32_t id = out.net_id();
    if (n.driver[id] >= 0 || n.primary_input[id])
      throw Error(Errc::multiple_drivers,
                  "net " + std::to_string(id) + " (" + n.cells[i].name + ") has multiple drivers");
    n.driver[id] = static_cast<std::int32_t>(i);
    if (is_comb(n.cells[i].kind)) n.comb_cells.push_back(static_cast<std::uint32_t>(i));
    else n.dff_cells.push_back(static_cast<std::uint32_t>(i));
  }
  for (const auto& [name, p] : n.ports) {
    if (p.dir != PortDecl::Dir::Out) continue;
    for (std::size_t i = 0; i < p.bits.size(); ++i) {
      BitRef b = p.bits[i];
      if (b.is_net() && !n.net_known(b.net_id()))
        throw Error(Errc::malformed_json, "/ports/" + name + "/bits[" + std::to_string(i) +
                                              "]: output port bit does not resolve to a driver");
    }
  }
}

std::string to_canonical_json(const Netlist& n) {
  json cells = json::object();
  for (const Cell& c : n.cells) {
    json conns = json::object();
    if (is_comb(c.kind)) {
      conns["A"] = json::array({bit_to_json(c.inputs[0])});
      if (c.inputs.size() >= 2 && c.kind != CellKind::Mux)
        conns["B"] = json::array({bit_to_json(c.inputs[1])});
      if (c.kind == CellKind::Mux) {
        conns["B"] = json::array({bit_to_json(c.inputs[1])});
        conns["S"] = json::array({bit_to_json(c.inputs[2])});
      }
      conns["Y"] = json::array({bit_to_json(c.output)});
    } else {
      conns["C"] = json::array({bit_to_json(c.clock)});
      conns["D"] = json::array({bit_to_json(c.inputs[0])});
      if (is_sdff(c.kind)) conns["R"] = json::array({bit_to_json(c.inputs[1])});
      else if (!c.async_sr.is_undef()) conns["R"] = json::array({bit_to_json(c.async_sr)});
      conns["Q"] = json::array({bit_to_json(c.output)});
    }
    cells[c.name] = {{"type", yosys_cell_name(c.kind)}, {"connections", conns}};
  }
  json ports = json::object();
  for (const auto& [name, p] : n.ports) {
    json bits = json::array();
    for (BitRef b : p.bits) bits.push_back(bit_to_json(b));
    ports[name] = {{"direction", p.dir == PortDecl::Dir::In ? "input" : "output"},
                   {"bits", bits}};
  }
  json mod = {{"ports", ports}, {"cells", cells}};
  json root = {{"creator", "maskcheck"}, {"modules", {{n.module_name, mod}}}};
  return root.dump(2) + "\n";
}

std::vector<std::uint32_t> topo_order(const Netlist& n) {
  const std::size_t ncells = n.cells.size();
  std::vector<std::uint32_t> indeg(ncells, 0);
  // consumers[d] = comb cells that read comb cell d's output
  std::vector<std::vector<std::uint32_t>> consumers(ncells);
  for (std::uint32_t ci : n.comb_cells) {
    for (BitRef in : n.cells[ci].inputs) {
      if (!in.is_net()) continue;
      std::int32_t d = n.driver_of(in.net_id());
      if (d >= 0 && is_comb(n.cells[static_cast<std::size_t>(d)].kind)) {
        indeg[ci]++;
        consumers[static_cast<std::size_t>(d)].push_back(ci);
      }
    }
  }
  std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, std::greater<>> ready;
  for (std::uint32_t ci : n.comb_cells)
    if (indeg[ci] == 0) ready.push(ci);

  std::vector<std::uint32_t> order;
  order.reserve(n.comb_cells.size());
  while (!ready.empty()) {
    std::uint32_t c = ready.top();
    ready.pop();
    order.push_back(c);
    for (std::uint32_t nxt : consumers[c])
      if (--indeg[nxt] == 0) ready.push(nxt);
  }
  if (order.size() == n.comb_cells.size()) return order;

  // Extract one cycle for the diagnostic: walk unresolved cells backward
  // until a repeat.
  std::vector<std::uint8_t> unresolved(ncells, 0);
  for (std::uint32_t ci : n.comb_cells)
    if (indeg[ci] > 0) unresolved[ci] = 1;
  std::uint32_t start = 0;
  for (std::uint32_t ci : n.comb_cells)
    if (unresolved[ci]) { start = ci; break; }
  std::vector<std::uint32_t> trail;
  std::vector<std::int32_t> seen_at(ncells, -1);
  std::uint32_t cur = start;
  while (seen_at[cur] < 0) {
    seen_at[cur] = static_cast<std::int32_t>(trail.size());
    trail.push_back(cur);
    for (BitRef in : n.cells[cur].inputs) {
      if (!in.is_net()) continue;
      std::int32_t d = n.driver_of(in.net_id());
      if (d >= 0 && unresolved[static_cast<std::size_t>(d)]) {
        cur = static_cast<std::uint32_t>(d);
        break;
      }
    }
  }
  std::string msg = "combinational loop:";
  for (std::size_t i = static_cast<std::size_t>(seen_at[cur]); i < trail.size(); ++i)
    msg += " " + n.cells[trail[i]].name;
  msg += " -> " + n.cells[cur].name;
  throw Error(Errc::combinational_cycle, msg);
}

DffGraph build_dff_graph(const Netlist& n) {
  DffGraph g;
  g.node_count = static_cast<std::uint32_t>(n.dff_cells.size());
  g.dff_cell = n.dff_cells;
  g.adj.assign(g.node_count, {});
  if (g.node_count == 0) return g;

  std::vector<std::int32_t> node_of_cell(n.cells.size(), -1);
  for (std::uint32_t i = 0; i < g.node_count; ++i)
    node_of_cell[g.dff_cell[i]] = static_cast<std::int32_t>(i);

  // net -> consuming cells through data pins
  std::vector<std::vector<std::uint32_t>> consumers(n.max_net_id + 1);
  for (std::size_t ci = 0; ci < n.cells.size(); ++ci)
    for (BitRef in : n.cells[ci].inputs)
      if (in.is_net()) consumers[in.net_id()].push_back(static_cast<std::uint32_t>(ci));

  std::vector<std::uint32_t> stamp(n.max_net_id + 1, 0);
  std::uint32_t epoch = 0;
  std::vector<std::uint32_t> work;
  for (std::uint32_t u = 0; u < g.node_count; ++u) {
    ++epoch;
    std::set<std::uint32_t> succ;
    BitRef q = n.cells[g.dff_cell[u]].output;
    work.clear();
    work.push_back(q.net_id());
    stamp[q.net_id()] = epoch;
    while (!work.empty()) {
      std::uint32_t net = work.back();
      work.pop_back();
      for (std::uint32_t ci : consumers[net]) {
        const Cell& c = n.cells[ci];
        if (is_dff(c.kind)) {
          succ.insert(static_cast<std::uint32_t>(node_of_cell[ci]));
        } else {
          std::uint32_t out = c.output.net_id();
          if (stamp[out] != epoch) {
            stamp[out] = epoch;
            work.push_back(out);
          }
        }
      }
    }
    g.adj[u].assign(succ.begin(), succ.end());
  }
  return g;
}

std::vector<std::uint32_t> tarjan_scc(const DffGraph& g, std::uint32_t* component_count) {
  const std::uint32_t nn = g.node_count;
  std::vector<std::uint32_t> comp(nn, UINT32_MAX), low(nn, 0), num(nn, UINT32_MAX);
  std::vector<std::uint32_t> stack;
  std::vector<std::uint8_t> on_stack(nn, 0);
  std::uint32_t counter = 0, comps = 0;

  struct Frame {
    std::uint32_t v;
    std::size_t child;
  };
  std::vector<Frame> frames;
  for (std::uint32_t root = 0; root < nn; ++root) {
    if (num[root] != UINT32_MAX) continue;
    frames.push_back({root, 0});
    while (!frames.empty()) {
      Frame& f = frames.back();
      std::uint32_t v = f.v;
      if (f.child == 0) {
        num[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = 1;
      }
      bool descended = false;
      while (f.child < g.adj[v].size()) {
        std::uint32_t w = g.adj[v][f.child++];
        if (num[w] == UINT32_MAX) {
          frames.push_back({w, 0});
          descended = true;
          break;
        }
        if (on_stack[w]) low[v] = std::min(low[v], num[w]);
      }
      if (descended) continue;
      if (low[v] == num[v]) {
        while (true) {
          std::uint32_t w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = comps;
          if (w == v) break;
        }
        ++comps;
      }
      frames.pop_back();
      if (!frames.empty()) {
        std::uint32_t parent = frames.back().v;
        low[parent] = std::min(low[parent], low[v]);
      }
    }
  }
  if (component_count) *component_count = comps;
  return comp;
}

std::uint32_t scc_longest_path(const DffGraph& g) {
  if (g.node_count == 0) return 0;
  std::uint32_t comps = 0;
  std::vector<std::uint32_t> comp = tarjan_scc(g, &comps);

  std::vector<std::set<std::uint32_t>> cadj(comps);
  for (std::uint32_t u = 0; u < g.node_count; ++u)
    for (std::uint32_t v : g.adj[u])
      if (comp[u] != comp[v]) cadj[comp[u]].insert(comp[v]);

  // Tarjan numbers components in reverse topological order: successors get
  // lower ids. Walking ids downward is a topological sweep.
  std::vector<std::uint32_t> dist(comps, 0);
  std::uint32_t best = 0;
  for (std::uint32_t c = comps; c-- > 0;) {
    for (std::uint32_t d : cadj[c]) {
      if (dist[d] < dist[c] + 1) dist[d] = dist[c] + 1;
      best = std::max(best, dist[d]);
    }
  }
  return best;
}

} // namespace maskcheck
