#pragma once

#include <atomic>
#include <compare>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "intentd/error.hpp"
#include "intentd/net_model.hpp"

namespace intentd {

enum class IntentId : std::uint64_t {};
enum class RuleId : std::uint64_t {};

inline std::string to_string(IntentId id) { return std::to_string(static_cast<std::uint64_t>(id)); }

using VlanId = std::uint16_t;
constexpr VlanId kMaxVlan = 4095;

struct TrafficSelector {
  std::optional<PortNumber> in_port;
  std::optional<MacAddress> eth_src;
  std::optional<MacAddress> eth_dst;
  std::optional<VlanId> vlan;

  bool empty() const { return !in_port && !eth_src && !eth_dst && !vlan; }
  auto operator<=>(const TrafficSelector&) const = default;
};

struct VlanAction {
  enum class Kind { Push, Pop, Set };
  Kind kind = Kind::Set;
  VlanId id = 0;

  auto operator<=>(const VlanAction&) const = default;
};

/// An empty output list means drop.
struct TrafficTreatment {
  std::vector<PortNumber> outputs;
  std::optional<VlanAction> vlan_action;

  bool drop() const noexcept { return outputs.empty(); }
  bool operator==(const TrafficTreatment&) const = default;
};

struct FlowRule {
  static constexpr int kDefaultPriority = 100;

  RuleId id{};
  DeviceId device;
  int priority = kDefaultPriority;
  TrafficSelector selector;
  TrafficTreatment treatment;
  IntentId owner{};
  std::uint64_t packet_count = 0;
};

struct PacketHeader {
  MacAddress eth_src;
  MacAddress eth_dst;
  std::optional<VlanId> vlan;
};

struct Delivery {
  ConnectPoint point;
  std::uint32_t hops = 0;

  auto operator<=>(const Delivery&) const = default;
};

struct DeliveryReport {
  std::set<Delivery> delivered;
  std::set<DeviceId> dropped_at;
  std::set<DeviceId> misses;

  bool operator==(const DeliveryReport&) const = default;
};

inline bool matches(const TrafficSelector& sel, PortNumber in_port, const PacketHeader& h) {
  if (sel.in_port && *sel.in_port != in_port) return false;
  if (sel.eth_src && *sel.eth_src != h.eth_src) return false;
  if (sel.eth_dst && *sel.eth_dst != h.eth_dst) return false;
  if (sel.vlan && sel.vlan != h.vlan) return false;
  return true;
}

/// One device's rules, iterated by descending priority then ascending rule id.
class FlowTable {
 public:
  struct Order {
    bool operator()(const std::pair<int, RuleId>& a, const std::pair<int, RuleId>& b) const {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    }
  };
  using Key = std::pair<int, RuleId>;
  // Uniqueness is per owner so repeated identical intents coexist. Owner
  // comes first: ids only grow, so new keys land at the end of the set.
  using MatchKey = std::tuple<IntentId, int, TrafficSelector>;

  std::size_t size() const noexcept { return rules_.size(); }

  bool contains(const MatchKey& k) const { return match_keys_.contains(k); }

  void insert(FlowRule rule) {
    Key key{rule.priority, rule.id};
    match_keys_.emplace_hint(match_keys_.end(), rule.owner, rule.priority, rule.selector);
    auto it = rules_.try_emplace(rules_.end(), key);
    it->second.hits.store(rule.packet_count, std::memory_order_relaxed);
    it->second.rule = std::move(rule);
  }

  void erase(const Key& key) {
    auto it = rules_.find(key);
    if (it == rules_.end()) return;
    const auto& r = it->second.rule;
    match_keys_.erase(MatchKey{r.owner, r.priority, r.selector});
    rules_.erase(it);
  }

  /// Highest-precedence rule matching the packet, counting the hit.
  const FlowRule* lookup(PortNumber in_port, const PacketHeader& h) const {
    for (const auto& [key, entry] : rules_) {
      if (matches(entry.rule.selector, in_port, h)) {
        entry.hits.fetch_add(1, std::memory_order_relaxed);
        return &entry.rule;
      }
    }
    return nullptr;
  }

  std::vector<FlowRule> snapshot() const {
    std::vector<FlowRule> out;
    out.reserve(rules_.size());
    for (const auto& [key, entry] : rules_) {
      out.push_back(entry.rule);
      out.back().packet_count = entry.hits.load(std::memory_order_relaxed);
    }
    return out;
  }

  void clear() {
    rules_.clear();
    match_keys_.clear();
  }

 private:
  struct Entry {
    FlowRule rule;
    mutable std::atomic<std::uint64_t> hits{0};
  };
  std::map<Key, Entry, Order> rules_;
  std::set<MatchKey> match_keys_;
};

/// Simulated switch fabric over an immutable topology. Writers (install and
/// remove) are serialized; injections share a read lock and bump counters
/// atomically.
class Fabric {
 public:
  struct Limits {
    std::optional<std::size_t> per_device;
    std::optional<std::size_t> global;
  };

  explicit Fabric(std::shared_ptr<const Topology> topo, Limits limits = {})
      : topo_(std::move(topo)), limits_(limits), tables_(topo_->device_count()) {}

  const Topology& topology() const noexcept { return *topo_; }
  const Limits& limits() const noexcept { return limits_; }

  /// Installs the whole batch or nothing.
  std::size_t install_rules(std::vector<FlowRule> rules) {
    std::unique_lock lock(mutex_);
    if (limits_.global && total_ + rules.size() > *limits_.global) {
      throw Error(ErrorCode::Capacity, "global rule cap of " + std::to_string(*limits_.global) + " exceeded");
    }
    std::vector<std::size_t> device_index;
    device_index.reserve(rules.size());
    std::unordered_set<std::uint64_t> batch_ids;
    std::set<std::pair<std::size_t, FlowTable::MatchKey>> batch_keys;
    std::unordered_map<std::size_t, std::size_t> batch_per_device;

    for (const auto& r : rules) {
      if (!topo_->has_device(r.device)) {
        throw Error(ErrorCode::UnknownDevice, "rule targets unknown device " + r.device.str());
      }
      const auto di = topo_->index_of(r.device);
      const auto raw_id = static_cast<std::uint64_t>(r.id);
      if (rule_ids_.contains(raw_id) || !batch_ids.insert(raw_id).second) {
        throw Error(ErrorCode::Duplicate, "rule id " + std::to_string(raw_id) + " is not fresh");
      }
      FlowTable::MatchKey mk{r.owner, r.priority, r.selector};
      if (tables_[di].contains(mk) || !batch_keys.emplace(di, mk).second) {
        throw Error(ErrorCode::Duplicate, "duplicate (priority, selector) on " + r.device.str());
      }
      for (auto p : r.treatment.outputs) {
        if (!topo_->has_port(ConnectPoint{r.device, p})) {
          throw Error(ErrorCode::Validation,
                      "rule outputs to unknown port " + ConnectPoint{r.device, p}.to_string());
        }
      }
      const auto pending = ++batch_per_device[di];
      if (limits_.per_device && tables_[di].size() + pending > *limits_.per_device) {
        throw Error(ErrorCode::Capacity, "rule cap of " + std::to_string(*limits_.per_device) +
                                             " exceeded on " + r.device.str());
      }
      device_index.push_back(di);
    }

    for (std::size_t i = 0; i < rules.size(); ++i) {
      auto& r = rules[i];
      rule_ids_.insert(static_cast<std::uint64_t>(r.id));
      by_owner_[r.owner].emplace_back(device_index[i], FlowTable::Key{r.priority, r.id});
      tables_[device_index[i]].insert(std::move(r));
    }
    total_ += rules.size();
    return rules.size();
  }

  std::size_t remove_rules(IntentId owner) {
    std::unique_lock lock(mutex_);
    auto it = by_owner_.find(owner);
    if (it == by_owner_.end()) return 0;
    const auto removed = it->second.size();
    for (const auto& [di, key] : it->second) {
      tables_[di].erase(key);
      rule_ids_.erase(static_cast<std::uint64_t>(key.second));
    }
    by_owner_.erase(it);
    total_ -= removed;
    return removed;
  }

  void clear() {
    std::unique_lock lock(mutex_);
    for (auto& t : tables_) t.clear();
    by_owner_.clear();
    rule_ids_.clear();
    total_ = 0;
  }

  std::size_t rule_count() const {
    std::shared_lock lock(mutex_);
    return total_;
  }

  std::size_t rule_count(IntentId owner) const {
    std::shared_lock lock(mutex_);
    auto it = by_owner_.find(owner);
    return it == by_owner_.end() ? 0 : it->second.size();
  }

  std::vector<FlowRule> table(const DeviceId& device) const {
    std::shared_lock lock(mutex_);
    return tables_[topo_->index_of(device)].snapshot();
  }

  std::vector<FlowRule> rules_of(IntentId owner) const {
    std::vector<FlowRule> out;
    std::shared_lock lock(mutex_);
    auto it = by_owner_.find(owner);
    if (it == by_owner_.end()) return out;
    for (const auto& [di, key] : it->second) {
      for (auto& r : tables_[di].snapshot()) {
        if (r.id == key.second) out.push_back(std::move(r));
      }
    }
    return out;
  }

  /// Walks a packet through the installed rules. Each branch ends at an edge
  /// port, a drop, a table miss, or fails with LoopDetected once it has
  /// traversed more than |devices| + 1 devices.
  DeliveryReport inject_packet(const ConnectPoint& ingress, const PacketHeader& header) const {
    if (!topo_->has_port(ingress)) {
      throw Error(ErrorCode::Validation, "ingress " + ingress.to_string() + " is not in the topology");
    }
    const std::uint32_t ttl = static_cast<std::uint32_t>(topo_->device_count()) + 1;

    struct Branch {
      ConnectPoint at;
      PacketHeader header;
      std::uint32_t hops;
    };
    DeliveryReport report;
    std::deque<Branch> pending{{ingress, header, 1}};

    std::shared_lock lock(mutex_);
    while (!pending.empty()) {
      Branch b = std::move(pending.front());
      pending.pop_front();
      if (b.hops > ttl) {
        throw Error(ErrorCode::LoopDetected, "forwarding loop: packet exceeded TTL of " + std::to_string(ttl) +
                                                 " at " + b.at.to_string());
      }
      const auto& table = tables_[topo_->index_of(b.at.device)];
      const FlowRule* rule = table.lookup(b.at.port, b.header);
      if (rule == nullptr) {
        report.misses.insert(b.at.device);
        continue;
      }
      if (rule->treatment.drop()) {
        report.dropped_at.insert(b.at.device);
        continue;
      }
      PacketHeader out = b.header;
      if (const auto& va = rule->treatment.vlan_action) {
        if (va->kind == VlanAction::Kind::Pop) out.vlan.reset();
        else out.vlan = va->id;
      }
      for (auto port : rule->treatment.outputs) {
        const ConnectPoint egress{b.at.device, port};
        if (const Link* link = topo_->link_from(egress)) {
          pending.push_back(Branch{link->dst, out, b.hops + 1});
        } else {
          report.delivered.insert(Delivery{egress, b.hops});
        }
      }
    }
    return report;
  }

 private:
  std::shared_ptr<const Topology> topo_;
  Limits limits_;
  mutable std::shared_mutex mutex_;
  std::vector<FlowTable> tables_;
  std::unordered_map<IntentId, std::vector<std::pair<std::size_t, FlowTable::Key>>> by_owner_;
  std::unordered_set<std::uint64_t> rule_ids_;
  std::size_t total_ = 0;
};

}  // namespace intentd
