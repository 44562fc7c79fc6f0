#include <random>
#include <thread>
#include <tuple>

#include <gtest/gtest.h>

#include "intentd/intent.hpp"
#include "intentd/intent_service.hpp"
#include "test_support.hpp"

namespace intentd {
namespace {

using testing::cp;
using testing::dev;

// Rule content without the fresh rule id.
using RuleShape = std::tuple<DeviceId, int, TrafficSelector, std::vector<PortNumber>>;

std::vector<RuleShape> shapes(const std::vector<FlowRule>& rules) {
  std::vector<RuleShape> out;
  for (const auto& r : rules) out.emplace_back(r.device, r.priority, r.selector, r.treatment.outputs);
  std::sort(out.begin(), out.end());
  return out;
}

RuleShape shape(std::uint64_t device, PortNumber in, std::vector<PortNumber> out) {
  TrafficSelector s;
  s.in_port = in;
  return {dev(device), FlowRule::kDefaultPriority, s, std::move(out)};
}

Intent intent_for(IntentEndpoints e, std::uint64_t id = 1) {
  Intent i;
  i.id = IntentId{id};
  i.request.endpoints = std::move(e);
  return i;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an intentd::Error";
  return ErrorCode::Io;
}

TEST(StateMachine, LegalTransitionsOnly) {
  using S = IntentState;
  const std::set<std::pair<S, S>> legal{{S::Submitted, S::Compiling}, {S::Compiling, S::Installing},
                                        {S::Compiling, S::Failed},     {S::Installing, S::Installed},
                                        {S::Installing, S::Failed},    {S::Installed, S::Withdrawn}};
  const S all[] = {S::Submitted, S::Compiling, S::Installing, S::Installed, S::Failed, S::Withdrawn};
  for (auto a : all) {
    for (auto b : all) EXPECT_EQ(is_legal_transition(a, b), legal.contains({a, b}));
  }
}

TEST(CompileP2P, SameDeviceEmitsOneRule) {
  const auto t = load_topology(R"({"devices":[{"id":"of:0000000000000001","ports":[1,2]}]})");
  RuleIdAllocator ids;
  const auto rules = compile_p2p(t, intent_for(PointToPoint{cp(1, 1), cp(1, 2)}), ids);
  EXPECT_EQ(shapes(rules), (std::vector<RuleShape>{shape(1, 1, {2})}));
}

TEST(CompileP2P, ChainEmitsRulePerPathDevice) {
  const auto t = load_topology(testing::kChainTopology);
  RuleIdAllocator ids;
  const auto rules = compile_p2p(t, intent_for(PointToPoint{cp(1, 1), cp(3, 2)}, 42), ids);
  EXPECT_EQ(shapes(rules), (std::vector<RuleShape>{shape(1, 1, {2}), shape(2, 1, {2}), shape(3, 1, {2})}));
  for (const auto& r : rules) EXPECT_EQ(r.owner, IntentId{42});
}

TEST(CompileP2P, IdenticalEndpointsRejected) {
  const auto t = load_topology(testing::kChainTopology);
  EXPECT_EQ(code_of([&] { validate(t, IntentRequest{PointToPoint{cp(1, 1), cp(1, 1)}, {}}); }),
            ErrorCode::Validation);
  EXPECT_EQ(code_of([&] { validate(t, IntentRequest{PointToPoint{cp(1, 1), cp(1, 2)}, {}}); }),
            ErrorCode::Validation);  // d1/2 is an infrastructure port
  EXPECT_EQ(code_of([&] { validate(t, IntentRequest{PointToPoint{cp(1, 1), cp(8, 1)}, {}}); }),
            ErrorCode::Validation);
}

TEST(CompileM2S, StarSharesHubWithDistinctInPorts) {
  const auto t = load_topology(testing::kStarTopology);
  RuleIdAllocator ids;
  const auto rules = compile_m2s(t, intent_for(MultiToSinglePoint{{cp(1, 1), cp(2, 1)}, cp(3, 2)}), ids);
  EXPECT_EQ(shapes(rules), (std::vector<RuleShape>{shape(1, 1, {2}), shape(2, 1, {2}), shape(3, 1, {2}),
                                                   shape(4, 1, {3}), shape(4, 2, {3})}));
}

TEST(CompileM2S, SingleIngressMatchesP2P) {
  const auto t = load_topology(testing::kChainTopology);
  RuleIdAllocator ids;
  const auto m2s = compile_m2s(t, intent_for(MultiToSinglePoint{{cp(1, 1)}, cp(3, 2)}), ids);
  const auto p2p = compile_p2p(t, intent_for(PointToPoint{cp(1, 1), cp(3, 2)}), ids);
  EXPECT_EQ(shapes(m2s), shapes(p2p));
}

TEST(CompileM2S, AnyDisconnectedIngressFailsWhole) {
  const auto t = load_topology(R"({
    "devices":[{"id":"of:0000000000000001","ports":[1,2]},
               {"id":"of:0000000000000002","ports":[1,2]},
               {"id":"of:0000000000000003","ports":[1]}],
    "links":[{"src":"of:0000000000000001/2","dst":"of:0000000000000002/2"}]})");
  RuleIdAllocator ids;
  EXPECT_EQ(code_of([&] { compile_m2s(t, intent_for(MultiToSinglePoint{{cp(1, 1), cp(3, 1)}, cp(2, 1)}), ids); }),
            ErrorCode::NoPath);
}

TEST(CompileS2M, StarHubFansOut) {
  const auto t = load_topology(testing::kStarTopology);
  RuleIdAllocator ids;
  const auto rules = compile_s2m(t, intent_for(SingleToMultiPoint{cp(1, 1), {cp(2, 1), cp(3, 2)}}), ids);
  EXPECT_EQ(shapes(rules), (std::vector<RuleShape>{shape(1, 1, {2}), shape(2, 2, {1}), shape(3, 1, {2}),
                                                   shape(4, 1, {2, 3})}));
}

TEST(CompileS2M, SingleEgressMatchesP2P) {
  const auto t = load_topology(testing::kChainTopology);
  RuleIdAllocator ids;
  const auto s2m = compile_s2m(t, intent_for(SingleToMultiPoint{cp(1, 1), {cp(3, 2)}}), ids);
  const auto p2p = compile_p2p(t, intent_for(PointToPoint{cp(1, 1), cp(3, 2)}), ids);
  EXPECT_EQ(shapes(s2m), shapes(p2p));
}

TEST(CompileS2M, SharedPrefixMergesOutputs) {
  const auto t = load_topology(testing::kChainTopology);
  RuleIdAllocator ids;
  const auto rules = compile_s2m(t, intent_for(SingleToMultiPoint{cp(1, 1), {cp(3, 2), cp(2, 9)}}), ids);
  EXPECT_EQ(shapes(rules), (std::vector<RuleShape>{shape(1, 1, {2}), shape(2, 1, {2, 9}), shape(3, 1, {2})}));
}

TEST(Validate, MultipointSets) {
  const auto t = load_topology(testing::kStarTopology);
  auto s2m = [&](std::vector<ConnectPoint> egresses) {
    return code_of([&] { validate(t, IntentRequest{SingleToMultiPoint{cp(1, 1), egresses}, {}}); });
  };
  EXPECT_EQ(s2m({}), ErrorCode::Validation);
  EXPECT_EQ(s2m({cp(2, 1), cp(2, 1)}), ErrorCode::Validation);
  EXPECT_EQ(s2m({cp(1, 1)}), ErrorCode::Validation);
  EXPECT_EQ(code_of([&] { validate(t, IntentRequest{MultiToSinglePoint{{cp(3, 2)}, cp(3, 2)}, {}}); }),
            ErrorCode::Validation);
  IntentRequest pinned{PointToPoint{cp(1, 1), cp(2, 1)}, {}};
  pinned.selector.in_port = 3;
  EXPECT_EQ(code_of([&] { validate(t, pinned); }), ErrorCode::Validation);
}

class ServiceTest : public ::testing::Test {
 protected:
  IntentRequest chain_p2p() const { return IntentRequest{PointToPoint{cp(1, 1), cp(3, 2)}, {}}; }

  std::shared_ptr<const Topology> chain_ = testing::make_topology(testing::kChainTopology);
};

TEST_F(ServiceTest, SubmitInstallsSynchronously) {
  IntentService svc(chain_);
  const auto id = svc.submit(chain_p2p());
  const auto intent = svc.get(id);
  EXPECT_EQ(intent.state, IntentState::Installed);
  EXPECT_EQ(intent.rule_count, 3u);
  EXPECT_EQ(svc.fabric().rule_count(), 3u);
  EXPECT_EQ(svc.installable(id).rules.size(), 3u);
  EXPECT_EQ(svc.live_count(), 1u);
}

TEST_F(ServiceTest, DisconnectedEndpointsFail) {
  auto topo = testing::make_topology(R"({"devices":[{"id":"of:0000000000000001","ports":[1]},
                                                    {"id":"of:0000000000000002","ports":[1]}]})");
  IntentService svc(topo);
  const auto id = svc.submit(IntentRequest{PointToPoint{cp(1, 1), cp(2, 1)}, {}});
  const auto intent = svc.get(id);
  EXPECT_EQ(intent.state, IntentState::Failed);
  EXPECT_NE(intent.reason.find("no path"), std::string::npos);
  EXPECT_EQ(svc.live_count(), 0u);
  EXPECT_EQ(svc.fabric().rule_count(), 0u);
}

TEST_F(ServiceTest, CapacityRejectsWithoutStoring) {
  IntentService svc(chain_, {.capacity = 2});
  svc.submit(chain_p2p());
  svc.submit(chain_p2p());
  EXPECT_EQ(code_of([&] { svc.submit(chain_p2p()); }), ErrorCode::Capacity);
  EXPECT_EQ(svc.record_count(), 2u);
  EXPECT_EQ(svc.fabric().rule_count(), 6u);

  // Withdrawn intents free their slot.
  svc.withdraw(svc.list().front().id);
  EXPECT_NO_THROW(svc.submit(chain_p2p()));
}

TEST_F(ServiceTest, CapacityZeroRejectsEverything) {
  IntentService svc(chain_, {.capacity = 0});
  EXPECT_EQ(code_of([&] { svc.submit(chain_p2p()); }), ErrorCode::Capacity);
  EXPECT_TRUE(svc.list().empty());
}

TEST_F(ServiceTest, InstallationFailureIsRecorded) {
  IntentService svc(chain_, {.fabric_limits = {.global = 4}});
  EXPECT_EQ(svc.get(svc.submit(chain_p2p())).state, IntentState::Installed);
  const auto second = svc.get(svc.submit(chain_p2p()));
  EXPECT_EQ(second.state, IntentState::Failed);
  EXPECT_NE(second.reason.find("capacity"), std::string::npos);
  EXPECT_EQ(svc.fabric().rule_count(), 3u);
}

TEST_F(ServiceTest, HostToHostExpandsIntoTwoPointToPoint) {
  IntentService svc(chain_);
  const auto id = svc.submit(IntentRequest{HostToHost{"h1", "h2"}, {}});
  const auto parent = svc.get(id);
  EXPECT_EQ(parent.state, IntentState::Installed);
  ASSERT_EQ(parent.children.size(), 2u);
  EXPECT_EQ(parent.rule_count, 6u);

  const auto fwd = svc.get(parent.children[0]);
  const auto rev = svc.get(parent.children[1]);
  EXPECT_EQ(fwd.type(), IntentType::PointToPoint);
  EXPECT_EQ(std::get<PointToPoint>(fwd.request.endpoints), (PointToPoint{cp(1, 1), cp(3, 2)}));
  EXPECT_EQ(std::get<PointToPoint>(rev.request.endpoints), (PointToPoint{cp(3, 2), cp(1, 1)}));
  const auto mac1 = chain_->find_host("h1")->effective_mac();
  const auto mac2 = chain_->find_host("h2")->effective_mac();
  EXPECT_EQ(fwd.request.selector.eth_src, mac1);
  EXPECT_EQ(fwd.request.selector.eth_dst, mac2);
  EXPECT_EQ(rev.request.selector.eth_src, mac2);

  const auto there = svc.fabric().inject_packet(cp(1, 1), PacketHeader{mac1, mac2, {}});
  EXPECT_EQ(there.delivered, (std::set<Delivery>{{cp(3, 2), 3}}));
  const auto back = svc.fabric().inject_packet(cp(3, 2), PacketHeader{mac2, mac1, {}});
  EXPECT_EQ(back.delivered, (std::set<Delivery>{{cp(1, 1), 3}}));
  // Other MAC pairs are not carried.
  const auto stranger = svc.fabric().inject_packet(cp(1, 1), PacketHeader{MacAddress(1), mac2, {}});
  EXPECT_TRUE(stranger.delivered.empty());

  EXPECT_EQ(code_of([&] { svc.withdraw(parent.children[0]); }), ErrorCode::IllegalState);
  svc.withdraw(id);
  EXPECT_EQ(svc.fabric().rule_count(), 0u);
  EXPECT_EQ(svc.get(parent.children[1]).state, IntentState::Withdrawn);
  EXPECT_EQ(svc.live_count(), 0u);
}

TEST_F(ServiceTest, HostToHostErrors) {
  IntentService svc(chain_);
  EXPECT_EQ(code_of([&] { svc.submit(IntentRequest{HostToHost{"h1", "h1"}, {}}); }), ErrorCode::Validation);
  EXPECT_EQ(code_of([&] { svc.submit(IntentRequest{HostToHost{"h1", "nope"}, {}}); }), ErrorCode::UnknownHost);
  EXPECT_TRUE(svc.list().empty());
}

TEST_F(ServiceTest, HostToHostNeedsThreeSlots) {
  IntentService svc(chain_, {.capacity = 2});
  EXPECT_EQ(code_of([&] { svc.submit(IntentRequest{HostToHost{"h1", "h2"}, {}}); }), ErrorCode::Capacity);
  EXPECT_TRUE(svc.list().empty());
}

TEST_F(ServiceTest, WithdrawLifecycle) {
  IntentService svc(chain_);
  const auto id = svc.submit(chain_p2p());
  svc.withdraw(id);
  EXPECT_EQ(svc.get(id).state, IntentState::Withdrawn);
  EXPECT_EQ(svc.fabric().rule_count(), 0u);
  EXPECT_EQ(svc.live_count(), 0u);
  EXPECT_EQ(code_of([&] { svc.withdraw(id); }), ErrorCode::IllegalState);
  EXPECT_EQ(code_of([&] { svc.withdraw(IntentId{999}); }), ErrorCode::NotFound);
  EXPECT_EQ(code_of([&] { svc.get(IntentId{999}); }), ErrorCode::NotFound);
}

TEST_F(ServiceTest, WithdrawFailedIsIllegal) {
  auto topo = testing::make_topology(R"({"devices":[{"id":"of:0000000000000001","ports":[1]},
                                                    {"id":"of:0000000000000002","ports":[1]}]})");
  IntentService svc(topo);
  const auto id = svc.submit(IntentRequest{PointToPoint{cp(1, 1), cp(2, 1)}, {}});
  EXPECT_EQ(code_of([&] { svc.withdraw(id); }), ErrorCode::IllegalState);
}

TEST_F(ServiceTest, ListAndReset) {
  IntentService svc(chain_);
  EXPECT_TRUE(svc.list().empty());
  const auto a = svc.submit(chain_p2p());
  const auto b = svc.submit(IntentRequest{HostToHost{"h1", "h2"}, {}});
  EXPECT_EQ(svc.list().size(), 4u);
  EXPECT_LT(static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(b));
  EXPECT_EQ(svc.reset(), 2u);
  EXPECT_TRUE(svc.list().empty());
  EXPECT_EQ(svc.live_count(), 0u);
  EXPECT_EQ(svc.fabric().rule_count(), 0u);
  // Ids keep increasing after a reset.
  EXPECT_GT(static_cast<std::uint64_t>(svc.submit(chain_p2p())), static_cast<std::uint64_t>(b));
}

TEST_F(ServiceTest, RepeatedIdenticalIntentsCoexist) {
  IntentService svc(chain_);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(svc.get(svc.submit(chain_p2p())).state, IntentState::Installed);
  EXPECT_EQ(svc.fabric().rule_count(), 30u);
}

TEST_F(ServiceTest, ConcurrentSubmitAndWithdraw) {
  IntentService svc(chain_);
  constexpr int kThreads = 4;
  constexpr int kPerThread = 200;
  std::vector<std::thread> threads;
  std::vector<std::vector<IntentId>> ids(kThreads);
  for (int t = 0; t < kThreads; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < kPerThread; ++i) {
        ids[t].push_back(svc.submit(chain_p2p()));
        if (i % 2 == 0) svc.withdraw(ids[t].back());
      }
    });
  }
  for (auto& th : threads) th.join();
  std::set<IntentId> unique;
  for (const auto& v : ids) unique.insert(v.begin(), v.end());
  EXPECT_EQ(unique.size(), static_cast<std::size_t>(kThreads * kPerThread));
  EXPECT_EQ(svc.live_count(), static_cast<std::size_t>(kThreads * kPerThread / 2));
  EXPECT_EQ(svc.fabric().rule_count(), 3u * kThreads * kPerThread / 2);
}

// Properties over random instances.

TEST(IntentProperties, TransitionsAreLegalAndQuiescent) {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 40; ++round) {
    auto topo = std::make_shared<const Topology>(testing::random_topology(rng, {.allow_disconnected = true}));
    IntentService svc(topo);
    std::vector<std::tuple<IntentId, IntentState, IntentState>> seen;
    svc.set_transition_observer([&seen](IntentId id, IntentState a, IntentState b) { seen.emplace_back(id, a, b); });
    for (int k = 0; k < 6; ++k) {
      const auto type = static_cast<IntentType>(k % 3);
      auto req = testing::random_request(rng, *topo, type);
      if (!req) continue;
      const auto id = svc.submit(*req);
      if (k % 2 == 0 && svc.get(id).state == IntentState::Installed) svc.withdraw(id);
    }
    for (const auto& [id, a, b] : seen) EXPECT_TRUE(is_legal_transition(a, b));
    for (const auto& i : svc.list()) {
      EXPECT_TRUE(i.state == IntentState::Installed || is_terminal(i.state)) << to_string(i.state);
    }
  }
}

TEST(IntentProperties, InstalledIntentsDeliverExactlyToEgresses) {
  std::mt19937_64 rng(11);
  int checked = 0;
  for (int round = 0; round < 100; ++round) {
    auto topo = std::make_shared<const Topology>(testing::random_topology(rng));
    IntentService svc(topo);
    const auto type = static_cast<IntentType>(round % 3);
    auto req = testing::random_request(rng, *topo, type);
    if (!req) continue;
    const auto id = svc.submit(*req);
    ASSERT_EQ(svc.get(id).state, IntentState::Installed) << svc.get(id).reason;

    std::vector<ConnectPoint> ingresses;
    std::vector<ConnectPoint> egresses;
    std::visit(
        [&](const auto& e) {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, PointToPoint>) {
            ingresses = {e.ingress};
            egresses = {e.egress};
          } else if constexpr (std::is_same_v<T, SingleToMultiPoint>) {
            ingresses = {e.ingress};
            egresses = e.egresses;
          } else if constexpr (std::is_same_v<T, MultiToSinglePoint>) {
            ingresses = e.ingresses;
            egresses = {e.egress};
          }
        },
        req->endpoints);
    for (const auto& in : ingresses) {
      std::set<Delivery> expected;
      for (const auto& out : egresses) {
        expected.insert({out, testing::expected_hops(*topo, in.device, out.device)});
      }
      const auto report = svc.fabric().inject_packet(in, testing::any_header());
      EXPECT_EQ(report.delivered, expected) << "round " << round;
      EXPECT_TRUE(report.misses.empty());
      EXPECT_TRUE(report.dropped_at.empty());
    }
    ++checked;
  }
  EXPECT_GT(checked, 80);
}

TEST(IntentProperties, RuleAccountingAndWithdrawRestoresCount) {
  std::mt19937_64 rng(3);
  for (int round = 0; round < 50; ++round) {
    auto topo = std::make_shared<const Topology>(testing::random_topology(rng));
    IntentService svc(topo);
    auto base = testing::random_request(rng, *topo, IntentType::SingleToMultiPoint);
    if (!base) continue;
    svc.submit(*base);
    const auto before = svc.fabric().rule_count();
    auto req = testing::random_request(rng, *topo, IntentType::PointToPoint);
    const auto id = svc.submit(*req);
    const auto& p2p = std::get<PointToPoint>(req->endpoints);
    const auto path = testing::brute_force_shortest(*topo, p2p.ingress.device, p2p.egress.device);
    EXPECT_EQ(svc.fabric().rule_count(id), path->links.size() + 1);
    svc.withdraw(id);
    EXPECT_EQ(svc.fabric().rule_count(), before);
  }
}

TEST(IntentProperties, CompilationIsDeterministic) {
  std::mt19937_64 rng(17);
  for (int round = 0; round < 60; ++round) {
    const auto topo = testing::random_topology(rng);
    auto req = testing::random_request(rng, topo, static_cast<IntentType>(round % 3));
    if (!req) continue;
    Intent intent;
    intent.id = IntentId{1};
    intent.request = *req;
    RuleIdAllocator ids;
    auto compile = [&] {
      switch (req->type()) {
        case IntentType::PointToPoint: return compile_p2p(topo, intent, ids);
        case IntentType::SingleToMultiPoint: return compile_s2m(topo, intent, ids);
        default: return compile_m2s(topo, intent, ids);
      }
    };
    const auto a = compile();
    const auto b = compile();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].device, b[i].device);
      EXPECT_EQ(a[i].selector, b[i].selector);
      EXPECT_EQ(a[i].treatment, b[i].treatment);
      EXPECT_NE(a[i].id, b[i].id);
    }
  }
}

TEST(IntentProperties, HostToHostAlwaysTwoChildren) {
  std::mt19937_64 rng(23);
  int checked = 0;
  for (int round = 0; round < 60; ++round) {
    auto topo = std::make_shared<const Topology>(testing::random_topology(rng));
    if (topo->hosts().size() < 2) continue;
    IntentService svc(topo);
    const auto& a = topo->hosts().begin()->first;
    const auto& b = std::next(topo->hosts().begin())->first;
    const auto parent = svc.get(svc.submit(IntentRequest{HostToHost{a, b}, {}}));
    ASSERT_EQ(parent.children.size(), 2u);
    for (auto c : parent.children) EXPECT_EQ(svc.get(c).type(), IntentType::PointToPoint);
    ++checked;
  }
  EXPECT_GT(checked, 10);
}

}  // namespace
}  // namespace intentd
