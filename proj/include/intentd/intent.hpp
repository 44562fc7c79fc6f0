#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "intentd/error.hpp"
#include "intentd/fabric.hpp"
#include "intentd/net_model.hpp"

namespace intentd {

struct PointToPoint {
  ConnectPoint ingress;
  ConnectPoint egress;
  bool operator==(const PointToPoint&) const = default;
};

struct SingleToMultiPoint {
  ConnectPoint ingress;
  std::vector<ConnectPoint> egresses;
  bool operator==(const SingleToMultiPoint&) const = default;
};

struct MultiToSinglePoint {
  std::vector<ConnectPoint> ingresses;
  ConnectPoint egress;
  bool operator==(const MultiToSinglePoint&) const = default;
};

struct HostToHost {
  std::string one;
  std::string two;
  bool operator==(const HostToHost&) const = default;
};

using IntentEndpoints = std::variant<PointToPoint, SingleToMultiPoint, MultiToSinglePoint, HostToHost>;

enum class IntentType { PointToPoint, SingleToMultiPoint, MultiToSinglePoint, HostToHost };

constexpr std::string_view to_string(IntentType t) {
  switch (t) {
    case IntentType::PointToPoint: return "PointToPoint";
    case IntentType::SingleToMultiPoint: return "SingleToMultiPoint";
    case IntentType::MultiToSinglePoint: return "MultiToSinglePoint";
    case IntentType::HostToHost: return "HostToHost";
  }
  return "";
}

inline std::optional<IntentType> parse_intent_type(std::string_view s) {
  for (auto t : {IntentType::PointToPoint, IntentType::SingleToMultiPoint, IntentType::MultiToSinglePoint,
                 IntentType::HostToHost}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

inline IntentType type_of(const IntentEndpoints& e) { return static_cast<IntentType>(e.index()); }

enum class IntentState { Submitted, Compiling, Installing, Installed, Failed, Withdrawn };

constexpr std::string_view to_string(IntentState s) {
  switch (s) {
    case IntentState::Submitted: return "SUBMITTED";
    case IntentState::Compiling: return "COMPILING";
    case IntentState::Installing: return "INSTALLING";
    case IntentState::Installed: return "INSTALLED";
    case IntentState::Failed: return "FAILED";
    case IntentState::Withdrawn: return "WITHDRAWN";
  }
  return "";
}

constexpr bool is_terminal(IntentState s) { return s == IntentState::Failed || s == IntentState::Withdrawn; }

constexpr bool is_legal_transition(IntentState from, IntentState to) {
  using S = IntentState;
  switch (from) {
    case S::Submitted: return to == S::Compiling;
    case S::Compiling: return to == S::Installing || to == S::Failed;
    case S::Installing: return to == S::Installed || to == S::Failed;
    case S::Installed: return to == S::Withdrawn;
    case S::Failed:
    case S::Withdrawn: return false;
  }
  return false;
}

struct IntentRequest {
  IntentEndpoints endpoints;
  TrafficSelector selector;
  int priority = FlowRule::kDefaultPriority;

  IntentType type() const { return type_of(endpoints); }
  bool operator==(const IntentRequest&) const = default;
};

struct Intent {
  IntentId id{};
  IntentRequest request;
  IntentState state = IntentState::Submitted;
  std::string reason;
  std::size_t rule_count = 0;
  // HostToHost parents list their two point-to-point children.
  std::vector<IntentId> children;
  std::optional<IntentId> parent;

  IntentType type() const { return request.type(); }
};

struct InstallableIntent {
  IntentId owner{};
  std::vector<FlowRule> rules;
};

class RuleIdAllocator {
 public:
  RuleId next() { return RuleId{next_.fetch_add(1, std::memory_order_relaxed)}; }

 private:
  std::atomic<std::uint64_t> next_{1};
};

namespace detail {

inline void require_edge_port(const Topology& topo, const ConnectPoint& cp, std::string_view role) {
  if (!topo.has_device(cp.device)) {
    throw Error(ErrorCode::Validation, std::string(role) + " " + cp.to_string() + ": unknown device");
  }
  if (!topo.has_port(cp)) {
    throw Error(ErrorCode::Validation, std::string(role) + " " + cp.to_string() + ": unknown port");
  }
  if (!topo.is_edge_port(cp)) {
    throw Error(ErrorCode::Validation, std::string(role) + " " + cp.to_string() + " is an infrastructure port");
  }
}

inline void require_distinct(const std::vector<ConnectPoint>& points, std::string_view role) {
  if (points.empty()) throw Error(ErrorCode::Validation, std::string(role) + " set is empty");
  std::set<ConnectPoint> seen;
  for (const auto& cp : points) {
    if (!seen.insert(cp).second) {
      throw Error(ErrorCode::Validation, std::string(role) + " set lists " + cp.to_string() + " twice");
    }
  }
}

}  // namespace detail

/// Checks a request against the topology. Throws Validation or UnknownHost.
inline void validate(const Topology& topo, const IntentRequest& req) {
  if (req.selector.in_port) {
    throw Error(ErrorCode::Validation, "selector must not constrain in_port; compilers set it");
  }
  if (req.selector.vlan && *req.selector.vlan > kMaxVlan) {
    throw Error(ErrorCode::Validation, "vlan id out of range");
  }
  std::visit(
      [&topo](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, PointToPoint>) {
          detail::require_edge_port(topo, e.ingress, "ingress");
          detail::require_edge_port(topo, e.egress, "egress");
          if (e.ingress == e.egress) throw Error(ErrorCode::Validation, "ingress equals egress");
        } else if constexpr (std::is_same_v<T, SingleToMultiPoint>) {
          detail::require_edge_port(topo, e.ingress, "ingress");
          detail::require_distinct(e.egresses, "egress");
          for (const auto& cp : e.egresses) {
            detail::require_edge_port(topo, cp, "egress");
            if (cp == e.ingress) throw Error(ErrorCode::Validation, "ingress is also an egress");
          }
        } else if constexpr (std::is_same_v<T, MultiToSinglePoint>) {
          detail::require_edge_port(topo, e.egress, "egress");
          detail::require_distinct(e.ingresses, "ingress");
          for (const auto& cp : e.ingresses) {
            detail::require_edge_port(topo, cp, "ingress");
            if (cp == e.egress) throw Error(ErrorCode::Validation, "egress is also an ingress");
          }
        } else {
          for (const auto& h : {e.one, e.two}) {
            if (!topo.host(h)) throw Error(ErrorCode::UnknownHost, "unknown host " + h);
          }
          if (e.one == e.two) throw Error(ErrorCode::Validation, "host-to-host needs two distinct hosts");
        }
      },
      req.endpoints);
}

namespace detail {

inline FlowRule make_rule(const Intent& intent, RuleIdAllocator& ids, const DeviceId& device, PortNumber in_port,
                          std::vector<PortNumber> outputs) {
  FlowRule r;
  r.id = ids.next();
  r.device = device;
  r.priority = intent.request.priority;
  r.selector = intent.request.selector;
  r.selector.in_port = in_port;
  r.treatment.outputs = std::move(outputs);
  r.owner = intent.id;
  return r;
}

}  // namespace detail

/// One rule per device on the shortest path; the selector gains the arrival port.
inline std::vector<FlowRule> compile_p2p(const Topology& topo, const Intent& intent, RuleIdAllocator& ids) {
  const auto& e = std::get<PointToPoint>(intent.request.endpoints);
  const Path path = shortest_path(topo, e.ingress.device, e.egress.device);

  std::vector<FlowRule> rules;
  PortNumber in_port = e.ingress.port;
  for (const auto& link : path.links) {
    rules.push_back(detail::make_rule(intent, ids, link.src.device, in_port, {link.src.port}));
    in_port = link.dst.port;
  }
  rules.push_back(detail::make_rule(intent, ids, e.egress.device, in_port, {e.egress.port}));
  return rules;
}

/// Union of per-ingress shortest paths toward the egress. Rules are keyed by
/// (device, arrival port), so converging branches share downstream rules.
inline std::vector<FlowRule> compile_m2s(const Topology& topo, const Intent& intent, RuleIdAllocator& ids) {
  const auto& e = std::get<MultiToSinglePoint>(intent.request.endpoints);
  std::map<std::pair<DeviceId, PortNumber>, PortNumber> hops;

  auto add_hop = [&hops](const DeviceId& dev, PortNumber in, PortNumber out) {
    auto [it, fresh] = hops.try_emplace({dev, in}, out);
    if (!fresh && it->second != out) {
      throw Error(ErrorCode::Validation, "conflicting next hop on " + dev.str() + " port " + std::to_string(in));
    }
  };

  // Compute every path before emitting anything: one missing path fails the intent.
  std::vector<Path> paths;
  paths.reserve(e.ingresses.size());
  for (const auto& ingress : e.ingresses) paths.push_back(shortest_path(topo, ingress.device, e.egress.device));

  for (std::size_t i = 0; i < paths.size(); ++i) {
    PortNumber in_port = e.ingresses[i].port;
    for (const auto& link : paths[i].links) {
      add_hop(link.src.device, in_port, link.src.port);
      in_port = link.dst.port;
    }
    add_hop(e.egress.device, in_port, e.egress.port);
  }

  std::vector<FlowRule> rules;
  rules.reserve(hops.size());
  for (const auto& [key, out] : hops) rules.push_back(detail::make_rule(intent, ids, key.first, key.second, {out}));
  return rules;
}

/// Distribution tree from the union of shortest paths out of the ingress
/// device. Each tree device gets one rule listing its child ports and any
/// local egress ports, ascending.
inline std::vector<FlowRule> compile_s2m(const Topology& topo, const Intent& intent, RuleIdAllocator& ids) {
  const auto& e = std::get<SingleToMultiPoint>(intent.request.endpoints);
  struct Node {
    PortNumber in_port;
    std::set<PortNumber> outputs;
  };
  std::map<DeviceId, Node> tree;

  auto node_at = [&tree](const DeviceId& dev, PortNumber in) -> Node& {
    auto [it, fresh] = tree.try_emplace(dev, Node{in, {}});
    if (!fresh && it->second.in_port != in) {
      throw Error(ErrorCode::Validation, "distribution tree reaches " + dev.str() + " on two ports");
    }
    return it->second;
  };

  std::vector<Path> paths;
  paths.reserve(e.egresses.size());
  for (const auto& egress : e.egresses) paths.push_back(shortest_path(topo, e.ingress.device, egress.device));

  for (std::size_t i = 0; i < paths.size(); ++i) {
    PortNumber in_port = e.ingress.port;
    for (const auto& link : paths[i].links) {
      node_at(link.src.device, in_port).outputs.insert(link.src.port);
      in_port = link.dst.port;
    }
    node_at(e.egresses[i].device, in_port).outputs.insert(e.egresses[i].port);
  }

  std::vector<FlowRule> rules;
  rules.reserve(tree.size());
  for (const auto& [dev, node] : tree) {
    rules.push_back(detail::make_rule(intent, ids, dev, node.in_port, {node.outputs.begin(), node.outputs.end()}));
  }
  return rules;
}

/// The two directed point-to-point requests a host-to-host intent expands
/// into, each pinned to the hosts' MAC pair.
inline std::pair<IntentRequest, IntentRequest> expand_host_to_host(const Topology& topo, const IntentRequest& req) {
  const auto& h = std::get<HostToHost>(req.endpoints);
  const Host* a = topo.find_host(h.one);
  const Host* b = topo.find_host(h.two);
  if (a == nullptr) throw Error(ErrorCode::UnknownHost, "unknown host " + h.one);
  if (b == nullptr) throw Error(ErrorCode::UnknownHost, "unknown host " + h.two);

  IntentRequest forward{PointToPoint{a->attach, b->attach}, req.selector, req.priority};
  forward.selector.eth_src = a->effective_mac();
  forward.selector.eth_dst = b->effective_mac();
  IntentRequest reverse{PointToPoint{b->attach, a->attach}, req.selector, req.priority};
  reverse.selector.eth_src = b->effective_mac();
  reverse.selector.eth_dst = a->effective_mac();
  return {forward, reverse};
}

}  // namespace intentd
