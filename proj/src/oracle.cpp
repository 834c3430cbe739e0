#include "maskcheck/oracle.hpp"

#include "maskcheck/errors.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace maskcheck {

namespace {

struct SecretVar { // one enumerated secret dimension
  std::string label;
  std::uint64_t domain; // 2 for a pair bit, q for a group
};

} // namespace

OracleResult oracle(const WireFunction& wf, const LabelConfig& cfg,
                    const WireFunctionBuilder& b, std::uint64_t space_cap) {
  CompiledCone cone(wf);
  const auto& slots = cone.slot_vars();

  // Classify every cone variable into the enumeration model.
  const auto& pairs = cfg.boolean_pairs();
  const auto& groups = cfg.arith_groups();

  std::set<std::uint32_t> touched_pairs;
  std::set<std::uint32_t> touched_groups;
  std::vector<std::uint32_t> slice_vars; // p, dff, const-x
  std::vector<std::uint32_t> mask_vars;  // r + unpaired/ungrouped share bits

  std::map<std::uint32_t, std::pair<std::uint32_t, std::uint32_t>> group_s0, group_s1;
  for (std::uint32_t gi = 0; gi < groups.size(); ++gi)
    for (std::uint32_t i = 0; i < groups[gi].width; ++i) {
      group_s0[groups[gi].s0_nets[i]] = {gi, i};
      group_s1[groups[gi].s1_nets[i]] = {gi, i};
    }
  std::map<std::uint32_t, std::uint32_t> pair_of_s0, pair_of_s1;
  for (std::uint32_t pid = 0; pid < pairs.size(); ++pid) {
    pair_of_s0[pairs[pid].s0_net] = pid;
    pair_of_s1[pairs[pid].s1_net] = pid;
  }

  // Pair reparametrization applies only when both members sit in the cone
  // (the single-sided case is an independent uniform mask, mirroring the
  // SADC unpaired treatment). Arithmetic groups reparametrize whenever any
  // bus bit is present: S0 derives from (X, S1) as a whole.
  std::set<std::uint32_t> cone_nets;
  for (std::uint32_t v : slots) {
    VarInfo vi = b.var_info(v);
    if (vi.kind == VarInfo::Kind::InputBit) cone_nets.insert(vi.net);
  }
  for (std::uint32_t pid = 0; pid < pairs.size(); ++pid)
    if (cone_nets.count(pairs[pid].s0_net) && cone_nets.count(pairs[pid].s1_net))
      touched_pairs.insert(pid);

  for (std::uint32_t v : slots) {
    VarInfo vi = b.var_info(v);
    if (vi.kind == VarInfo::Kind::ConstX || vi.kind == VarInfo::Kind::DffQ) {
      slice_vars.push_back(v);
      continue;
    }
    auto role = cfg.role_of_net(vi.net);
    if (!role) { slice_vars.push_back(v); continue; }
    switch (*role) {
    case Role::P: slice_vars.push_back(v); break;
    case Role::R: mask_vars.push_back(v); break;
    case Role::S0:
      if (auto it = group_s0.find(vi.net); it != group_s0.end()) touched_groups.insert(it->second.first);
      else if (auto ip = pair_of_s0.find(vi.net);
               ip != pair_of_s0.end() && touched_pairs.count(ip->second)) {
        // bound below via PairS0
      } else {
        mask_vars.push_back(v); // unpaired share bit: independent uniform
      }
      break;
    case Role::S1:
      if (auto it = group_s1.find(vi.net); it != group_s1.end()) touched_groups.insert(it->second.first);
      else if (auto ip = pair_of_s1.find(vi.net);
               ip != pair_of_s1.end() && touched_pairs.count(ip->second)) {
        // bound below via PairS1
      } else {
        mask_vars.push_back(v);
      }
      break;
    }
  }

  // Mask dimensions: one bit per touched pair (the s1-side mask) plus each
  // free mask var; one Z_q value per touched group (S1).
  std::vector<std::uint32_t> pair_list(touched_pairs.begin(), touched_pairs.end());
  std::vector<std::uint32_t> group_list(touched_groups.begin(), touched_groups.end());

  OracleResult res;
  std::uint64_t mask_space = 1;
  for (std::size_t i = 0; i < pair_list.size() + mask_vars.size(); ++i) {
    mask_space *= 2;
    if (mask_space > space_cap) throw Error(Errc::space_too_large, "mask space exceeds cap");
  }
  for (std::uint32_t gi : group_list) {
    mask_space *= groups[gi].q;
    if (mask_space > space_cap) throw Error(Errc::space_too_large, "mask space exceeds cap");
  }
  std::uint64_t secret_count = 1;
  for (std::size_t i = 0; i < pair_list.size(); ++i) secret_count *= 2;
  for (std::uint32_t gi : group_list) secret_count *= groups[gi].q;
  std::uint64_t slice_space = 1;
  for (std::size_t i = 0; i < slice_vars.size(); ++i) {
    slice_space *= 2;
    if (slice_space > space_cap) throw Error(Errc::space_too_large, "slice space exceeds cap");
  }
  if (secret_count == 0 ||
      mask_space > space_cap / std::max<std::uint64_t>(1, secret_count) ||
      mask_space * secret_count > space_cap / std::max<std::uint64_t>(1, slice_space))
    throw Error(Errc::space_too_large,
                "enumeration space (secrets x masks x slices) exceeds cap");

  res.mask_space = mask_space;
  res.slice_count = slice_space;
  res.secret_count = secret_count;

  // Slot bindings.
  enum class Bind { Slice, MaskBit, PairS0, PairS1, GroupS0, GroupS1 };
  struct SlotBind {
    Bind bind;
    std::uint32_t index = 0; // slice bit index / mask bit index / pair pos / group pos
    std::uint32_t bit = 0;   // group bus bit
  };
  std::map<std::uint32_t, std::uint32_t> slice_index, mask_index, pair_pos, group_pos;
  for (std::uint32_t i = 0; i < slice_vars.size(); ++i) slice_index[slice_vars[i]] = i;
  for (std::uint32_t i = 0; i < mask_vars.size(); ++i) mask_index[mask_vars[i]] = i;
  for (std::uint32_t i = 0; i < pair_list.size(); ++i) pair_pos[pair_list[i]] = i;
  for (std::uint32_t i = 0; i < group_list.size(); ++i) group_pos[group_list[i]] = i;

  std::vector<SlotBind> binds(slots.size());
  for (std::size_t s = 0; s < slots.size(); ++s) {
    std::uint32_t v = slots[s];
    if (auto it = slice_index.find(v); it != slice_index.end()) {
      binds[s] = {Bind::Slice, it->second, 0};
      continue;
    }
    if (auto it = mask_index.find(v); it != mask_index.end()) {
      binds[s] = {Bind::MaskBit, it->second, 0};
      continue;
    }
    VarInfo vi = b.var_info(v);
    if (auto it = group_s0.find(vi.net); it != group_s0.end() && group_pos.count(it->second.first)) {
      binds[s] = {Bind::GroupS0, group_pos[it->second.first], it->second.second};
      continue;
    }
    if (auto it = group_s1.find(vi.net); it != group_s1.end() && group_pos.count(it->second.first)) {
      binds[s] = {Bind::GroupS1, group_pos[it->second.first], it->second.second};
      continue;
    }
    if (auto it = pair_of_s0.find(vi.net); it != pair_of_s0.end() && pair_pos.count(it->second)) {
      binds[s] = {Bind::PairS0, pair_pos[it->second], 0};
      continue;
    }
    if (auto it = pair_of_s1.find(vi.net); it != pair_of_s1.end() && pair_pos.count(it->second)) {
      binds[s] = {Bind::PairS1, pair_pos[it->second], 0};
      continue;
    }
    throw Error(Errc::bad_label_config, "oracle: unbound cone variable");
  }

  // Secret labels, lexicographic in (pair bits, group values).
  const std::size_t npairs = pair_list.size();
  auto secret_label = [&](std::uint64_t sidx) {
    std::string out;
    std::uint64_t rest = sidx;
    for (std::size_t i = 0; i < npairs; ++i) {
      if (!out.empty()) out += ",";
      out += pairs[pair_list[i]].secret + "[" + std::to_string(pairs[pair_list[i]].bit) +
             "]=" + std::to_string(rest & 1);
      rest >>= 1;
    }
    for (std::uint32_t gp : group_list) {
      std::uint64_t q = groups[gp].q;
      if (!out.empty()) out += ",";
      out += groups[gp].secret + "=" + std::to_string(rest % q);
      rest /= q;
    }
    if (out.empty()) out = "-";
    return out;
  };

  std::vector<std::array<std::uint64_t, 2>> hist(secret_count, {0, 0});
  std::vector<std::array<std::uint64_t, 2>> kept_hist;
  bool kept_is_distinguishing = false;

  std::vector<std::uint64_t> lanes(slots.size(), 0);
  auto set_lane = [&](std::size_t s, std::uint64_t bit) { lanes[s] = bit ? ~0ull : 0ull; };

  const std::uint64_t nmask_bits = npairs + mask_vars.size();

  for (std::uint64_t slice = 0; slice < slice_space; ++slice) {
    for (auto& h : hist) h = {0, 0};
    for (std::size_t s = 0; s < slots.size(); ++s)
      if (binds[s].bind == Bind::Slice) set_lane(s, (slice >> binds[s].index) & 1);

    for (std::uint64_t mask = 0; mask < mask_space; ++mask) {
      // Decode mask: low npairs bits = pair masks; next mask_vars bits;
      // then group S1 values.
      std::uint64_t mrest = mask >> nmask_bits;
      std::vector<std::uint64_t> s1_vals(group_list.size(), 0);
      for (std::size_t gp = 0; gp < group_list.size(); ++gp) {
        std::uint64_t q = groups[group_list[gp]].q;
        s1_vals[gp] = mrest % q;
        mrest /= q;
      }
      for (std::size_t s = 0; s < slots.size(); ++s) {
        const SlotBind& sb = binds[s];
        switch (sb.bind) {
        case Bind::MaskBit: set_lane(s, (mask >> (npairs + sb.index)) & 1); break;
        case Bind::PairS1: set_lane(s, (mask >> sb.index) & 1); break;
        case Bind::GroupS1: set_lane(s, (s1_vals[sb.index] >> sb.bit) & 1); break;
        default: break;
        }
      }
      int first_w = -1;
      for (std::uint64_t sidx = 0; sidx < secret_count; ++sidx) {
        std::uint64_t rest = sidx;
        std::uint64_t pair_secret_bits = rest & ((npairs < 64) ? ((1ull << npairs) - 1) : ~0ull);
        rest >>= npairs;
        std::vector<std::uint64_t> x_vals(group_list.size(), 0);
        for (std::size_t gp = 0; gp < group_list.size(); ++gp) {
          std::uint64_t q = groups[group_list[gp]].q;
          x_vals[gp] = rest % q;
          rest /= q;
        }
        for (std::size_t s = 0; s < slots.size(); ++s) {
          const SlotBind& sb = binds[s];
          if (sb.bind == Bind::PairS0) {
            std::uint64_t x = (pair_secret_bits >> sb.index) & 1;
            std::uint64_t m = (mask >> sb.index) & 1;
            set_lane(s, x ^ m);
          } else if (sb.bind == Bind::GroupS0) {
            std::uint64_t q = groups[group_list[sb.index]].q;
            std::uint64_t s0 = (x_vals[sb.index] + q - s1_vals[sb.index]) % q;
            set_lane(s, (s0 >> sb.bit) & 1);
          }
        }
        int w = static_cast<int>(cone.eval64(lanes) & 1);
        hist[sidx][w]++;
        if (sidx == 0) first_w = w;
        else if (w != first_w) res.value_independent = false;
      }
    }
    bool slice_uniform = true;
    for (std::uint64_t sidx = 1; sidx < secret_count; ++sidx)
      if (hist[sidx] != hist[0]) { slice_uniform = false; break; }
    if (!slice_uniform) res.dist_independent = false;
    if (slice == 0 || (!slice_uniform && !kept_is_distinguishing)) {
      kept_hist = hist;
      kept_is_distinguishing = !slice_uniform;
    }
  }

  for (std::uint64_t sidx = 0; sidx < secret_count; ++sidx)
    res.histograms.emplace_back(secret_label(sidx), kept_hist[sidx]);
  return res;
}

OracleResult oracle(const Netlist& n, const LabelConfig& cfg, BitRef wire,
                    std::uint64_t space_cap) {
  WireFunctionBuilder b(n);
  WireFunction wf = b.build(wire);
  return oracle(wf, cfg, b, space_cap);
}

} // namespace maskcheck
