#pragma once

#include <functional>
#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "intentd/error.hpp"
#include "intentd/fabric.hpp"
#include "intentd/intent.hpp"
#include "intentd/net_model.hpp"

namespace intentd {

/// The controller core: intent store, lifecycle state machine, compilation
/// and installation onto the fabric.
///
/// submit() is synchronous. When it returns, the intent is INSTALLED or
/// FAILED. Validation and capacity errors are thrown and leave nothing in the
/// store; compilation and installation errors are recorded as FAILED with a
/// reason. Withdrawn and failed intents stay queryable but are not live, so
/// they do not count against the capacity.
///
/// A host-to-host intent is stored as a parent record plus two point-to-point
/// children, and occupies three live slots.
class IntentService {
 public:
  struct Options {
    std::optional<std::size_t> capacity;
    Fabric::Limits fabric_limits;
  };

  using TransitionObserver = std::function<void(IntentId, IntentState from, IntentState to)>;

  explicit IntentService(std::shared_ptr<const Topology> topo, Options options = {})
      : topo_(std::move(topo)), capacity_(options.capacity), fabric_(topo_, options.fabric_limits) {}

  IntentService(const IntentService&) = delete;
  IntentService& operator=(const IntentService&) = delete;

  const Topology& topology() const noexcept { return *topo_; }
  std::shared_ptr<const Topology> topology_ptr() const noexcept { return topo_; }
  Fabric& fabric() noexcept { return fabric_; }
  const Fabric& fabric() const noexcept { return fabric_; }

  /// Called under the store lock for every state change; must not re-enter the service.
  void set_transition_observer(TransitionObserver observer) {
    std::unique_lock lock(mutex_);
    observer_ = std::move(observer);
  }

  std::optional<std::size_t> capacity() const {
    std::shared_lock lock(mutex_);
    return capacity_;
  }

  void set_capacity(std::optional<std::size_t> capacity) {
    std::unique_lock lock(mutex_);
    capacity_ = capacity;
  }

  IntentId submit(const IntentRequest& request) {
    validate(*topo_, request);

    if (request.type() != IntentType::HostToHost) {
      const IntentId id = reserve({request}).front();
      run_pipeline(id);
      return id;
    }

    auto [forward, reverse] = expand_host_to_host(*topo_, request);
    validate(*topo_, forward);
    validate(*topo_, reverse);
    const auto ids = reserve({request, forward, reverse});
    const IntentId parent = ids[0];
    transition(parent, IntentState::Compiling);
    run_pipeline(ids[1]);
    run_pipeline(ids[2]);

    std::string failure;
    for (auto child : {ids[1], ids[2]}) {
      const Intent c = get(child);
      if (c.state != IntentState::Installed && failure.empty()) failure = c.reason;
    }
    if (!failure.empty()) {
      for (auto child : {ids[1], ids[2]}) {
        if (get(child).state == IntentState::Installed) withdraw_one(child);
      }
      transition(parent, IntentState::Failed, failure);
      return parent;
    }
    transition(parent, IntentState::Installing);
    {
      std::unique_lock lock(mutex_);
      auto& p = intents_.at(parent);
      p.rule_count = intents_.at(ids[1]).rule_count + intents_.at(ids[2]).rule_count;
    }
    transition(parent, IntentState::Installed);
    return parent;
  }

  /// Removes an INSTALLED intent's rules and marks it WITHDRAWN. A
  /// host-to-host parent withdraws both children; children cannot be
  /// withdrawn on their own.
  void withdraw(IntentId id) {
    std::vector<IntentId> children;
    {
      std::shared_lock lock(mutex_);
      const Intent& intent = find(id);
      if (intent.parent) {
        throw Error(ErrorCode::IllegalState,
                    "intent " + to_string(id) + " belongs to host-to-host intent " + to_string(*intent.parent));
      }
      children = intent.children;
    }
    if (children.empty()) {
      withdraw_one(id);
      return;
    }
    transition(id, IntentState::Withdrawn);
    for (auto child : children) withdraw_one(child);
  }

  Intent get(IntentId id) const {
    std::shared_lock lock(mutex_);
    return find(id);
  }

  std::vector<Intent> list() const {
    std::shared_lock lock(mutex_);
    std::vector<Intent> out;
    out.reserve(intents_.size());
    for (const auto& [id, intent] : intents_) out.push_back(intent);
    std::sort(out.begin(), out.end(), [](const Intent& a, const Intent& b) { return a.id < b.id; });
    return out;
  }

  InstallableIntent installable(IntentId id) const {
    get(id);
    return InstallableIntent{id, fabric_.rules_of(id)};
  }

  std::size_t live_count() const {
    std::shared_lock lock(mutex_);
    return live_;
  }

  std::size_t record_count() const {
    std::shared_lock lock(mutex_);
    return intents_.size();
  }

  std::map<IntentState, std::size_t> state_counts() const {
    std::shared_lock lock(mutex_);
    std::map<IntentState, std::size_t> counts;
    for (const auto& [id, intent] : intents_) ++counts[intent.state];
    return counts;
  }

  /// Withdraws every installed intent and drops all terminal records.
  /// Returns the number of top-level intents withdrawn.
  std::size_t reset() {
    std::vector<IntentId> installed;
    {
      std::shared_lock lock(mutex_);
      for (const auto& [id, intent] : intents_) {
        if (intent.state == IntentState::Installed && !intent.parent) installed.push_back(id);
      }
    }
    std::size_t withdrawn = 0;
    for (auto id : installed) {
      try {
        withdraw(id);
        ++withdrawn;
      } catch (const Error& e) {
        // Lost a race with a concurrent withdraw.
        if (e.code() != ErrorCode::IllegalState) throw;
      }
    }
    std::unique_lock lock(mutex_);
    std::erase_if(intents_, [](const auto& kv) { return is_terminal(kv.second.state); });
    return withdrawn;
  }

 private:
  const Intent& find(IntentId id) const {
    auto it = intents_.find(id);
    if (it == intents_.end()) throw Error(ErrorCode::NotFound, "unknown intent " + to_string(id));
    return it->second;
  }

  /// Stores the requests in SUBMITTED atomically against the capacity. The
  /// first request is the parent of the rest.
  std::vector<IntentId> reserve(const std::vector<IntentRequest>& requests) {
    std::unique_lock lock(mutex_);
    if (capacity_ && live_ + requests.size() > *capacity_) {
      throw Error(ErrorCode::Capacity, "intent store is full (" + std::to_string(*capacity_) + " live intents)");
    }
    std::vector<IntentId> ids;
    for (std::size_t i = 0; i < requests.size(); ++i) {
      Intent intent;
      intent.id = IntentId{next_id_++};
      intent.request = requests[i];
      if (i > 0) {
        intent.parent = ids.front();
        intents_.at(ids.front()).children.push_back(intent.id);
      }
      ids.push_back(intent.id);
      intents_.emplace(intent.id, std::move(intent));
    }
    live_ += requests.size();
    return ids;
  }

  void transition(IntentId id, IntentState to, std::string reason = {}) {
    std::unique_lock lock(mutex_);
    auto& intent = intents_.at(id);
    const IntentState from = intent.state;
    if (!is_legal_transition(from, to)) {
      throw Error(ErrorCode::IllegalState, "intent " + to_string(id) + " cannot go from " +
                                               std::string(intentd::to_string(from)) + " to " +
                                               std::string(intentd::to_string(to)));
    }
    intent.state = to;
    if (!reason.empty()) intent.reason = std::move(reason);
    if (is_terminal(to)) --live_;
    if (observer_) observer_(id, from, to);
  }

  void run_pipeline(IntentId id) {
    transition(id, IntentState::Compiling);
    const Intent intent = get(id);
    std::vector<FlowRule> rules;
    try {
      switch (intent.type()) {
        case IntentType::PointToPoint: rules = compile_p2p(*topo_, intent, rule_ids_); break;
        case IntentType::SingleToMultiPoint: rules = compile_s2m(*topo_, intent, rule_ids_); break;
        case IntentType::MultiToSinglePoint: rules = compile_m2s(*topo_, intent, rule_ids_); break;
        case IntentType::HostToHost:
          throw Error(ErrorCode::Validation, "host-to-host intents compile into point-to-point children");
      }
    } catch (const Error& e) {
      transition(id, IntentState::Failed, std::string(intentd::to_string(e.code())) + ": " + e.what());
      return;
    }

    transition(id, IntentState::Installing);
    const std::size_t count = rules.size();
    try {
      fabric_.install_rules(std::move(rules));
    } catch (const Error& e) {
      transition(id, IntentState::Failed, std::string(intentd::to_string(e.code())) + ": " + e.what());
      return;
    }
    {
      std::unique_lock lock(mutex_);
      intents_.at(id).rule_count = count;
    }
    transition(id, IntentState::Installed);
  }

  void withdraw_one(IntentId id) {
    {
      std::shared_lock lock(mutex_);
      const Intent& intent = find(id);
      if (intent.state != IntentState::Installed) {
        throw Error(ErrorCode::IllegalState, "intent " + to_string(id) + " is " +
                                                 std::string(intentd::to_string(intent.state)) + ", not INSTALLED");
      }
    }
    // The transition claims the intent, so a concurrent withdraw fails here.
    transition(id, IntentState::Withdrawn);
    fabric_.remove_rules(id);
  }

  std::shared_ptr<const Topology> topo_;
  mutable std::shared_mutex mutex_;
  std::optional<std::size_t> capacity_;
  Fabric fabric_;
  RuleIdAllocator rule_ids_;
  std::unordered_map<IntentId, Intent> intents_;
  std::size_t live_ = 0;
  std::uint64_t next_id_ = 1;
  TransitionObserver observer_;
};

}  // namespace intentd
