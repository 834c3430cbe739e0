#include "maskcheck/labels.hpp"

#include "maskcheck/digest.hpp"
#include "maskcheck/errors.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <set>

using nlohmann::json;

namespace maskcheck {

const char* label_name(Label l) {
  switch (l) {
  case Label::Bot: return "BOT";
  case Label::S0: return "S0";
  case Label::S1: return "S1";
  case Label::Both: return "BOTH";
  }
  return "?";
}

const char* role_name(Role r) {
  switch (r) {
  case Role::S0: return "s0";
  case Role::S1: return "s1";
  case Role::R: return "r";
  case Role::P: return "p";
  }
  return "?";
}

namespace {

std::optional<Role> role_from_string(const std::string& s) {
  if (s == "s0") return Role::S0;
  if (s == "s1") return Role::S1;
  if (s == "r") return Role::R;
  if (s == "p") return Role::P;
  return std::nullopt;
}

Label role_label(Role r) {
  switch (r) {
  case Role::S0: return Label::S0;
  case Role::S1: return Label::S1;
  default: return Label::Bot; // fresh randomness and public both map to BOT
  }
}

const PortDecl* find_input_port(const Netlist& n, const std::string& name,
                                const std::string& where) {
  auto it = n.ports.find(name);
  if (it == n.ports.end())
    throw Error(Errc::bad_label_config, where + ": port \"" + name + "\" not in netlist");
  if (it->second.dir != PortDecl::Dir::In)
    throw Error(Errc::bad_label_config, where + ": port \"" + name + "\" is not an input");
  return &it->second;
}

} // namespace

class LabelConfigBuilder {
public:
  LabelConfigBuilder(const Netlist& n) : n_(n) {
    cfg_.nets_.assign(n.max_net_id + 1, std::nullopt);
  }

  void assign_role(const std::string& port_name, Role role, const std::string& where) {
    const PortDecl* p = find_input_port(n_, port_name, where);
    for (BitRef b : p->bits) {
      if (!b.is_net())
        throw Error(Errc::bad_label_config, where + ": constant bit in labeled port");
      auto& slot = cfg_.nets_[b.net_id()];
      if (slot)
        throw Error(Errc::bad_label_config,
                    where + ": net " + std::to_string(b.net_id()) + " labeled twice");
      slot = LabelConfig::NetInfo{role, cfg_.role_counts_[static_cast<int>(role)]++, -1};
      cfg_.role_nets_[static_cast<int>(role)].push_back(b.net_id());
    }
    roles_by_port_[port_name] = role;
  }

  void add_pair(const std::string& s0_port, const std::string& s1_port,
                const std::string& secret, const std::string& where) {
    const PortDecl* p0 = find_input_port(n_, s0_port, where);
    const PortDecl* p1 = find_input_port(n_, s1_port, where);
    if (p0->bits.size() != p1->bits.size())
      throw Error(Errc::bad_label_config, where + ": paired ports have different widths");
    require_role(s0_port, Role::S0, where);
    require_role(s1_port, Role::S1, where);
    for (std::size_t i = 0; i < p0->bits.size(); ++i) {
      BoolPair pr;
      pr.secret = secret;
      pr.bit = static_cast<std::uint32_t>(i);
      pr.s0_net = p0->bits[i].net_id();
      pr.s1_net = p1->bits[i].net_id();
      std::int32_t id = static_cast<std::int32_t>(cfg_.pairs_.size());
      link_pair(pr.s0_net, id, where);
      link_pair(pr.s1_net, id, where);
      cfg_.pairs_.push_back(std::move(pr));
    }
  }

  void add_group(const std::string& s0_port, const std::string& s1_port,
                 const std::string& secret, std::uint64_t q, std::uint32_t width,
                 const std::string& where) {
    const PortDecl* p0 = find_input_port(n_, s0_port, where);
    const PortDecl* p1 = find_input_port(n_, s1_port, where);
    if (q < 2) throw Error(Errc::bad_label_config, where + ": modulus q must be >= 2");
    if (width == 0 || width > 63)
      throw Error(Errc::bad_label_config, where + ": width must be in [1, 63]");
    if (p0->bits.size() != width || p1->bits.size() != width)
      throw Error(Errc::bad_label_config, where + ": bus width does not match \"width\"");
    if (!((2 * q) < (1ull << width)))
      throw Error(Errc::overflow_precondition,
                  where + ": need 2q < 2^width, got q=" + std::to_string(q) +
                      " width=" + std::to_string(width));
    require_role(s0_port, Role::S0, where);
    require_role(s1_port, Role::S1, where);
    ArithGroup g;
    g.secret = secret;
    g.q = q;
    g.width = width;
    for (std::size_t i = 0; i < width; ++i) {
      g.s0_nets.push_back(p0->bits[i].net_id());
      g.s1_nets.push_back(p1->bits[i].net_id());
    }
    cfg_.groups_.push_back(std::move(g));
  }

  LabelConfig finish(const std::string& digest) {
    // Roles must partition the input port bits.
    for (const auto& [name, p] : n_.ports) {
      if (p.dir != PortDecl::Dir::In) continue;
      for (std::size_t i = 0; i < p.bits.size(); ++i)
        if (p.bits[i].is_net() && !cfg_.nets_[p.bits[i].net_id()])
          throw Error(Errc::bad_label_config,
                      "/ports: input port bit " + name + "[" + std::to_string(i) +
                          "] has no role; roles must partition the input port bits");
    }
    cfg_.digest_ = digest;
    return std::move(cfg_);
  }

private:
  void require_role(const std::string& port, Role r, const std::string& where) {
    auto it = roles_by_port_.find(port);
    if (it == roles_by_port_.end() || it->second != r)
      throw Error(Errc::bad_label_config,
                  where + ": port \"" + port + "\" must carry role " + role_name(r));
  }

  void link_pair(std::uint32_t net, std::int32_t pair_id, const std::string& where) {
    auto& slot = cfg_.nets_[net];
    if (!slot) throw Error(Errc::bad_label_config, where + ": paired net has no role");
    if (slot->pair >= 0)
      throw Error(Errc::bad_label_config,
                  where + ": net " + std::to_string(net) + " appears in two pairs");
    slot->pair = pair_id;
  }

  const Netlist& n_;
  LabelConfig cfg_;
  std::map<std::string, Role> roles_by_port_;
};

LabelConfig LabelConfig::parse(const std::string& json_text, const Netlist& n) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(Errc::bad_label_config, e.what());
  }
  if (!root.is_object() || !root.contains("ports") || !root["ports"].is_object())
    throw Error(Errc::bad_label_config, "expected a top-level \"ports\" object");

  LabelConfigBuilder b(n);
  for (auto it = root["ports"].begin(); it != root["ports"].end(); ++it) {
    const std::string where = "/ports/" + it.key();
    if (!it.value().is_object() || !it.value().contains("role") ||
        !it.value()["role"].is_string())
      throw Error(Errc::bad_label_config, where + ": expected {\"role\": \"s0|s1|r|p\"}");
    auto role = role_from_string(it.value()["role"].get<std::string>());
    if (!role)
      throw Error(Errc::bad_label_config,
                  where + "/role: unknown role \"" + it.value()["role"].get<std::string>() + "\"");
    b.assign_role(it.key(), *role, where);
  }
  if (root.contains("boolean_pairs")) {
    if (!root["boolean_pairs"].is_array())
      throw Error(Errc::bad_label_config, "/boolean_pairs: expected array");
    std::size_t i = 0;
    for (const json& e : root["boolean_pairs"]) {
      const std::string where = "/boolean_pairs/" + std::to_string(i++);
      if (!e.is_object() || !e.contains("s0") || !e.contains("s1"))
        throw Error(Errc::bad_label_config, where + ": expected {s0, s1[, secret]}");
      std::string secret = e.contains("secret") ? e["secret"].get<std::string>()
                                                : e["s0"].get<std::string>();
      b.add_pair(e["s0"].get<std::string>(), e["s1"].get<std::string>(), secret, where);
    }
  }
  if (root.contains("arith_groups")) {
    if (!root["arith_groups"].is_array())
      throw Error(Errc::bad_label_config, "/arith_groups: expected array");
    std::size_t i = 0;
    for (const json& e : root["arith_groups"]) {
      const std::string where = "/arith_groups/" + std::to_string(i++);
      if (!e.is_object() || !e.contains("s0") || !e.contains("s1") || !e.contains("q") ||
          !e.contains("width"))
        throw Error(Errc::bad_label_config, where + ": expected {s0, s1, q, width[, secret]}");
      std::string secret = e.contains("secret") ? e["secret"].get<std::string>()
                                                : e["s0"].get<std::string>();
      b.add_group(e["s0"].get<std::string>(), e["s1"].get<std::string>(), secret,
                  e["q"].get<std::uint64_t>(), e["width"].get<std::uint32_t>(), where);
    }
  }
  return b.finish(sha256_hex(json_text));
}

LabelConfig LabelConfig::from_roles(const Netlist& n,
                                    const std::vector<std::pair<std::string, Role>>& port_roles,
                                    std::vector<BoolPair> pairs, std::vector<ArithGroup> groups) {
  // Build the equivalent JSON and share the parse path so validation and
  // digests behave identically.
  json jports = json::object();
  for (const auto& [name, role] : port_roles) jports[name] = {{"role", role_name(role)}};
  json root = {{"ports", jports}};

  // Recover port-level pairs/groups from the bit-level inputs.
  auto port_of_net = [&](std::uint32_t net) -> std::string {
    for (const auto& [name, p] : n.ports)
      for (BitRef b : p.bits)
        if (b.is_net() && b.net_id() == net) return name;
    throw Error(Errc::bad_label_config, "net not found in ports");
  };
  json jpairs = json::array();
  std::set<std::pair<std::string, std::string>> seen;
  for (const BoolPair& p : pairs) {
    auto key = std::make_pair(port_of_net(p.s0_net), port_of_net(p.s1_net));
    if (seen.insert(key).second)
      jpairs.push_back({{"s0", key.first}, {"s1", key.second}, {"secret", p.secret}});
  }
  if (!jpairs.empty()) root["boolean_pairs"] = jpairs;
  json jgroups = json::array();
  for (const ArithGroup& g : groups) {
    jgroups.push_back({{"s0", port_of_net(g.s0_nets[0])},
                       {"s1", port_of_net(g.s1_nets[0])},
                       {"secret", g.secret},
                       {"q", g.q},
                       {"width", g.width}});
  }
  if (!jgroups.empty()) root["arith_groups"] = jgroups;
  return parse(root.dump(2) + "\n", n);
}

std::optional<Role> LabelConfig::role_of_net(std::uint32_t net) const {
  if (net >= nets_.size() || !nets_[net]) return std::nullopt;
  return nets_[net]->role;
}

std::uint32_t LabelConfig::role_index(std::uint32_t net) const {
  return nets_[net] ? nets_[net]->index : 0;
}

std::uint32_t LabelConfig::role_count(Role r) const {
  return role_counts_[static_cast<int>(r)];
}

std::uint32_t LabelConfig::net_of_role(Role r, std::uint32_t index) const {
  const auto& nets = role_nets_[static_cast<int>(r)];
  if (index >= nets.size())
    throw Error(Errc::bad_label_config, "role index out of range");
  return nets[index];
}

std::optional<std::uint32_t> LabelConfig::pair_of_net(std::uint32_t net) const {
  if (net >= nets_.size() || !nets_[net] || nets_[net]->pair < 0) return std::nullopt;
  return static_cast<std::uint32_t>(nets_[net]->pair);
}

namespace {

void propagate_with_order(const Netlist& n, const std::vector<std::uint32_t>& order,
                          LabelMap& labels) {
  for (std::uint32_t ci : order) {
    const Cell& c = n.cells[ci];
    Label out = Label::Bot;
    for (BitRef in : c.inputs) out = join(out, labels.of(in));
    labels.net[c.output.net_id()] = out;
  }
}

bool mc_step_with_order(const Netlist& n, const std::vector<std::uint32_t>& order,
                        LabelMap& labels) {
  // Jacobi: all Q updates read the pre-pass snapshot of D labels.
  std::vector<Label> snapshot;
  snapshot.reserve(n.dff_cells.size());
  for (std::uint32_t di : n.dff_cells) {
    const Cell& c = n.cells[di];
    Label d = Label::Bot;
    for (BitRef in : c.inputs) d = join(d, labels.of(in));
    snapshot.push_back(d);
  }
  bool changed = false;
  for (std::size_t i = 0; i < n.dff_cells.size(); ++i) {
    const Cell& c = n.cells[n.dff_cells[i]];
    Label& q = labels.net[c.output.net_id()];
    Label next = join(q, snapshot[i]);
    if (next != q) {
      q = next;
      changed = true;
    }
  }
  if (changed) propagate_with_order(n, order, labels);
  return changed;
}

} // namespace

void propagate_combinational(const Netlist& n, LabelMap& labels) {
  propagate_with_order(n, topo_order(n), labels);
}

namespace {

LabelMap initial_labels(const Netlist& n, const LabelConfig& cfg) {
  LabelMap m;
  m.net.assign(n.max_net_id + 1, Label::Bot);
  for (const auto& [name, p] : n.ports) {
    if (p.dir != PortDecl::Dir::In) continue;
    for (BitRef b : p.bits) {
      if (!b.is_net()) continue;
      auto role = cfg.role_of_net(b.net_id());
      if (role) m.net[b.net_id()] = role_label(*role);
    }
  }
  return m;
}

} // namespace

LabelMap run_sc_d1_labels(const Netlist& n, const LabelConfig& cfg) {
  LabelMap m = initial_labels(n, cfg);
  propagate_combinational(n, m);
  return m;
}

bool mc_step(const Netlist& n, LabelMap& labels) {
  return mc_step_with_order(n, topo_order(n), labels);
}

McResult run_mc_d1(const Netlist& n, const LabelConfig& cfg,
                   std::optional<std::uint32_t> max_iter_override,
                   std::vector<LabelMap>* trace) {
  McResult res;
  res.bound_d = scc_longest_path(build_dff_graph(n));
  const std::uint32_t max_iter = max_iter_override.value_or(res.bound_d + 1);
  const std::vector<std::uint32_t> order = topo_order(n);

  res.labels = initial_labels(n, cfg);
  propagate_with_order(n, order, res.labels);
  if (trace) trace->push_back(res.labels);

  res.converged = false;
  res.iterations_used = 0;
  for (std::uint32_t k = 1; k <= max_iter; ++k) {
    bool changed = mc_step_with_order(n, order, res.labels);
    res.iterations_used = k;
    if (trace) trace->push_back(res.labels);
    if (!changed) {
      res.converged = true;
      return res;
    }
  }
  // Budget exhausted while still changing. With the default bound the
  // fixed point is guaranteed after D+1 passes (bounded == unbounded is an
  // acceptance property); a shorter override cut the run short.
  res.converged = max_iter >= res.bound_d + 1;
  return res;
}

std::size_t count_both(const Netlist& n, const LabelMap& labels) {
  std::size_t count = 0;
  for (const Cell& c : n.cells)
    if (labels.of(c.output) == Label::Both) ++count;
  return count;
}

RootCauseReport decompose_root_causes(const Netlist& n, const McResult& mc, const LabelMap& sc) {
  (void)sc;
  if (!mc.converged)
    throw Error(Errc::not_converged, "root-cause decomposition requires a converged MC-D1 result");
  RootCauseReport rc;
  for (std::size_t ci = 0; ci < n.cells.size(); ++ci) {
    const Cell& c = n.cells[ci];
    if (mc.labels.of(c.output) != Label::Both) continue;
    if (is_dff(c.kind)) {
      rc.dff_both.push_back(static_cast<std::uint32_t>(ci));
      continue;
    }
    std::size_t both_inputs = 0;
    for (BitRef in : c.inputs)
      if (mc.labels.of(in) == Label::Both) ++both_inputs;
    if (both_inputs == 0)
      rc.true_convergence.push_back(static_cast<std::uint32_t>(ci));
    else if (both_inputs == c.inputs.size())
      rc.downstream.push_back(static_cast<std::uint32_t>(ci));
    else
      rc.amplification.push_back(static_cast<std::uint32_t>(ci));
  }
  return rc;
}

bool check_convergence_coverage(const Netlist& n, const RootCauseReport& rc, const McResult& mc) {
  // Forward reachability from true-convergence outputs, through
  // combinational cells and across DFF boundaries.
  std::vector<std::vector<std::uint32_t>> consumers(n.max_net_id + 1);
  for (std::size_t ci = 0; ci < n.cells.size(); ++ci)
    for (BitRef in : n.cells[ci].inputs)
      if (in.is_net()) consumers[in.net_id()].push_back(static_cast<std::uint32_t>(ci));

  std::vector<std::uint8_t> reached(n.max_net_id + 1, 0);
  std::vector<std::uint32_t> work;
  for (std::uint32_t ci : rc.true_convergence) {
    std::uint32_t net = n.cells[ci].output.net_id();
    if (!reached[net]) {
      reached[net] = 1;
      work.push_back(net);
    }
  }
  while (!work.empty()) {
    std::uint32_t net = work.back();
    work.pop_back();
    for (std::uint32_t ci : consumers[net]) {
      std::uint32_t out = n.cells[ci].output.net_id();
      if (!reached[out]) {
        reached[out] = 1;
        work.push_back(out);
      }
    }
  }
  for (const Cell& c : n.cells)
    if (mc.labels.of(c.output) == Label::Both && !reached[c.output.net_id()])
      return false;
  return true;
}

} // namespace maskcheck
