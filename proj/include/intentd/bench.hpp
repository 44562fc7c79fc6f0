#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "intentd/cli.hpp"
#include "intentd/error.hpp"
#include "intentd/intent.hpp"
#include "intentd/intent_service.hpp"
#include "intentd/net_model.hpp"
#include "intentd/rest.hpp"
#include "intentd/stats.hpp"

namespace intentd::bench {

using nlohmann::json;

enum class Interface { Cli, Rest };

constexpr std::string_view to_string(Interface i) { return i == Interface::Cli ? "CLI" : "REST"; }

inline Interface parse_interface(std::string_view s) {
  if (s == "CLI" || s == "cli") return Interface::Cli;
  if (s == "REST" || s == "rest") return Interface::Rest;
  throw Error(ErrorCode::Parse, "unknown interface '" + std::string(s) + "' (expected CLI or REST)");
}

/// Short labels used in reports: P2P, S2M, M2S.
constexpr std::string_view short_name(IntentType t) {
  switch (t) {
    case IntentType::PointToPoint: return "P2P";
    case IntentType::SingleToMultiPoint: return "S2M";
    case IntentType::MultiToSinglePoint: return "M2S";
    case IntentType::HostToHost: return "H2H";
  }
  return "";
}

inline IntentType parse_bench_type(std::string_view s) {
  for (auto t : {IntentType::PointToPoint, IntentType::SingleToMultiPoint, IntentType::MultiToSinglePoint}) {
    if (s == short_name(t) || s == to_string(t)) return t;
  }
  throw Error(ErrorCode::Parse, "unknown benchmark intent type '" + std::string(s) + "' (expected P2P, S2M or M2S)");
}

enum class ResetMode { Purge, Restart };

constexpr std::string_view to_string(ResetMode m) { return m == ResetMode::Purge ? "purge" : "restart"; }

inline ResetMode parse_reset_mode(std::string_view s) {
  if (s == "purge") return ResetMode::Purge;
  if (s == "restart") return ResetMode::Restart;
  throw Error(ErrorCode::Parse, "--reset-mode must be purge or restart");
}

struct BenchmarkConfig {
  std::string profile = "desk";
  std::vector<IntentType> intent_types{IntentType::PointToPoint, IntentType::SingleToMultiPoint,
                                       IntentType::MultiToSinglePoint};
  std::vector<Interface> interfaces{Interface::Cli, Interface::Rest};
  std::vector<std::size_t> workloads{100, 250, 500, 1000, 1500, 2000};
  std::size_t iterations = 10;
  std::size_t saturation_iterations = 10;
  std::size_t capacity = 500000;
  std::optional<rest::Endpoint> rest_endpoint;  // embedded server when unset
  std::optional<std::string> topology;
  std::uint64_t seed = 1;
  std::string output_dir = "bench-out";
  ResetMode reset_mode = ResetMode::Purge;
  std::optional<double> plot_scale;

  static BenchmarkConfig desk() { return {}; }

  static BenchmarkConfig paper() {
    BenchmarkConfig c;
    c.profile = "paper";
    c.workloads = {1000, 2000, 3000, 4000, 5000, 10000, 15000, 20000};
    c.iterations = 50;
    c.saturation_iterations = 10;
    return c;
  }

  static BenchmarkConfig for_profile(std::string_view name) {
    if (name == "desk") return desk();
    if (name == "paper") return paper();
    throw Error(ErrorCode::Parse, "--profile must be desk or paper");
  }

  void validate() const {
    if (intent_types.empty()) throw Error(ErrorCode::Validation, "no intent types selected");
    if (interfaces.empty()) throw Error(ErrorCode::Validation, "no interfaces selected");
    if (workloads.empty()) throw Error(ErrorCode::Validation, "no workloads selected");
    for (std::size_t i = 0; i < workloads.size(); ++i) {
      if (workloads[i] == 0) throw Error(ErrorCode::Validation, "workloads must be positive");
      if (i > 0 && workloads[i] <= workloads[i - 1]) {
        throw Error(ErrorCode::Validation, "workloads must be strictly increasing");
      }
    }
    if (iterations < 2) throw Error(ErrorCode::Validation, "iterations must be at least 2");
    if (plot_scale && !(*plot_scale > 0)) throw Error(ErrorCode::Validation, "--plot-scale must be positive");
    if (reset_mode == ResetMode::Restart && rest_endpoint &&
        std::find(interfaces.begin(), interfaces.end(), Interface::Rest) != interfaces.end()) {
      throw Error(ErrorCode::Validation, "--reset-mode restart needs the embedded REST server");
    }
  }

  /// Applies the keys of a JSON config document on top of this config. Keys
  /// mirror the `bench` flags; "profile" is applied first.
  void apply_json(const json& doc) {
    if (!doc.is_object()) throw Error(ErrorCode::Parse, "benchmark config must be a JSON object");
    auto key = [&](std::string_view dashed) -> const json* {
      std::string under(dashed);
      std::replace(under.begin(), under.end(), '-', '_');
      if (auto it = doc.find(std::string(dashed)); it != doc.end()) return &*it;
      if (auto it = doc.find(under); it != doc.end()) return &*it;
      return nullptr;
    };
    try {
      if (auto v = key("profile")) *this = for_profile(v->get<std::string>());
      if (auto v = key("types")) {
        intent_types.clear();
        for (const auto& t : *v) intent_types.push_back(parse_bench_type(t.get<std::string>()));
      }
      if (auto v = key("interfaces")) {
        interfaces.clear();
        for (const auto& i : *v) interfaces.push_back(parse_interface(i.get<std::string>()));
      }
      if (auto v = key("workloads")) workloads = v->get<std::vector<std::size_t>>();
      if (auto v = key("iterations")) iterations = v->get<std::size_t>();
      if (auto v = key("saturation")) saturation_iterations = v->get<std::size_t>();
      if (auto v = key("capacity")) capacity = v->get<std::size_t>();
      if (auto v = key("rest-endpoint")) rest_endpoint = rest::Endpoint::parse(v->get<std::string>());
      if (auto v = key("topology")) topology = v->get<std::string>();
      if (auto v = key("seed")) seed = v->get<std::uint64_t>();
      if (auto v = key("out")) output_dir = v->get<std::string>();
      if (auto v = key("reset-mode")) reset_mode = parse_reset_mode(v->get<std::string>());
      if (auto v = key("plot-scale")) plot_scale = v->get<double>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Parse, std::string("benchmark config: ") + e.what());
    }
  }
};

struct BenchmarkSample {
  IntentType intent_type = IntentType::PointToPoint;
  Interface interface = Interface::Cli;
  std::size_t workload = 0;
  std::size_t iteration = 0;
  double elapsed_ms = 0.0;
  std::size_t installed = 0;
  std::size_t failed = 0;

  bool degraded() const { return failed > 0; }
};

struct CellSummary {
  IntentType intent_type;
  Interface interface;
  std::size_t workload;
  SummaryStats stats;
};

struct RatioRow {
  IntentType intent_type;
  std::size_t workload;
  double rest_mean_ms;
  double cli_mean_ms;
  double ratio;
};

struct FitRow {
  IntentType intent_type;
  Interface interface;
  LinearFit fit;
};

struct SaturationResult {
  std::size_t run_index = 0;
  std::size_t max_intents = 0;
  double elapsed_ms = 0.0;
};

struct SaturationSeries {
  IntentType intent_type;
  std::vector<SaturationResult> runs;

  double mean_max_intents() const {
    if (runs.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& r : runs) sum += static_cast<double>(r.max_intents);
    return sum / static_cast<double>(runs.size());
  }

  double mean_elapsed_ms() const {
    if (runs.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& r : runs) sum += r.elapsed_ms;
    return sum / static_cast<double>(runs.size());
  }
};

struct BenchmarkResults {
  std::vector<BenchmarkSample> samples;
  std::vector<CellSummary> summaries;
  std::vector<RatioRow> ratios;
  std::vector<FitRow> fits;
  std::vector<SaturationSeries> saturation;
  std::vector<std::string> violations;  // isolation or quiescence breaches
  std::string rest_target;

  /// Mean of the per-cell REST/CLI ratios, or nullopt when none exist.
  std::optional<double> mean_ratio() const {
    if (ratios.empty()) return std::nullopt;
    double sum = 0.0;
    for (const auto& r : ratios) sum += r.ratio;
    return sum / static_cast<double>(ratios.size());
  }
};

// ---------------------------------------------------------------------------
// Workload generation

/// Deterministic stream of random intents between the topology's edge ports.
/// Multipoint intents use 2 or 3 endpoints on the many side.
class WorkloadGenerator {
 public:
  WorkloadGenerator(const Topology& topo, IntentType type, std::uint64_t seed)
      : type_(type), edges_(topo.edge_ports()) {
    if (type == IntentType::HostToHost) throw Error(ErrorCode::Validation, "host-to-host is not benchmarked");
    if (edges_.size() < 2) throw Error(ErrorCode::Validation, "benchmark topology needs at least 2 edge ports");
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(type)};
    rng_.seed(seq);
  }

  /// Seed for one (type, workload) cell, shared by both interfaces.
  static std::uint64_t cell_seed(std::uint64_t seed, IntentType type, std::size_t workload) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(type), static_cast<std::uint32_t>(workload)};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  }

  IntentRequest next() {
    const std::size_t many = std::min<std::size_t>(edges_.size() - 1, 2 + coin_(rng_));
    auto picks = sample(type_ == IntentType::PointToPoint ? 2 : many + 1);
    IntentRequest req;
    switch (type_) {
      case IntentType::PointToPoint:
        req.endpoints = PointToPoint{picks[0], picks[1]};
        break;
      case IntentType::SingleToMultiPoint:
        req.endpoints = SingleToMultiPoint{picks[0], {picks.begin() + 1, picks.end()}};
        break;
      case IntentType::MultiToSinglePoint:
        req.endpoints = MultiToSinglePoint{{picks.begin() + 1, picks.end()}, picks[0]};
        break;
      case IntentType::HostToHost:
        break;
    }
    return req;
  }

  std::vector<IntentRequest> take(std::size_t n) {
    std::vector<IntentRequest> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(next());
    return out;
  }

 private:
  std::vector<ConnectPoint> sample(std::size_t k) {
    std::vector<ConnectPoint> out;
    std::sample(edges_.begin(), edges_.end(), std::back_inserter(out), k, rng_);
    std::shuffle(out.begin(), out.end(), rng_);
    return out;
  }

  IntentType type_;
  std::vector<ConnectPoint> edges_;
  std::mt19937_64 rng_;
  std::uniform_int_distribution<std::size_t> coin_{0, 1};
};

// ---------------------------------------------------------------------------
// Harness

/// Runs benchmark cells against one in-process core. The CLI path drives the
/// core directly; the REST path talks to `rest_endpoint`, or to an embedded
/// server on an ephemeral port hosting the same core.
class Harness {
 public:
  Harness(BenchmarkConfig config, std::shared_ptr<const Topology> topo)
      : config_(std::move(config)), topo_(std::move(topo)) {
    config_.validate();
    pin_allocator();
    make_core();
  }

  Harness(const Harness&) = delete;
  Harness& operator=(const Harness&) = delete;

  ~Harness() { stop_server(); }

  const BenchmarkConfig& config() const noexcept { return config_; }
  IntentService& core() noexcept { return *core_; }
  const std::vector<std::string>& violations() const noexcept { return violations_; }

  /// `host:port` of the REST target, starting the embedded server if needed.
  std::string rest_target() { return rest_client().endpoint().to_string(); }

  /// One timed iteration of `workload` intents over `iface`, starting from an
  /// empty store and fabric.
  BenchmarkSample run_workload(IntentType type, Interface iface, std::size_t workload, std::size_t iteration = 0) {
    if (workload > config_.capacity) {
      throw Error(ErrorCode::Validation, "workload " + std::to_string(workload) + " exceeds the store capacity");
    }
    WorkloadGenerator gen(*topo_, type, WorkloadGenerator::cell_seed(config_.seed, type, workload));
    auto requests = gen.take(workload);

    BenchmarkSample s{type, iface, workload, iteration};
    if (iface == Interface::Cli) {
      reset_core();
      check_isolation(core_->live_count(), core_->fabric().rule_count(), s);
      const auto r = cli::timed_add_loop(*core_, workload,
                                         [&](std::uint64_t i) -> const IntentRequest& { return requests[i]; });
      s.installed = r.installed;
      s.failed = workload - r.installed;
      s.elapsed_ms = r.elapsed_ms;
      check_quiescent_core(s);
    } else {
      std::vector<std::string> bodies;
      bodies.reserve(requests.size());
      for (const auto& req : requests) bodies.push_back(rest::request_json(req).dump());
      if (config_.reset_mode == ResetMode::Restart) reset_core();
      auto& client = rest_client();
      client.reset();
      const auto [live, rules] = client.health();
      check_isolation(live, rules, s);

      const auto start = std::chrono::steady_clock::now();
      for (const auto& body : bodies) {
        const auto reply = client.post_raw("/intents", body);
        if (reply.status == 201 && reply.body.is_object() && reply.body.value("state", "") == "INSTALLED") {
          ++s.installed;
        }
      }
      const std::chrono::duration<double, std::milli> elapsed = std::chrono::steady_clock::now() - start;
      s.elapsed_ms = elapsed.count();
      s.failed = workload - s.installed;
      check_quiescent_rest(s);
    }
    return s;
  }

  /// Submits intents until the first capacity or installation failure,
  /// `saturation_iterations` times, resetting the store between runs.
  SaturationSeries run_saturation(IntentType type) {
    SaturationSeries series{type, {}};
    for (std::size_t run = 0; run < config_.saturation_iterations; ++run) {
      reset_core();
      WorkloadGenerator gen(*topo_, type, WorkloadGenerator::cell_seed(config_.seed, type, run));
      SaturationResult r{run, 0, 0.0};
      const auto start = std::chrono::steady_clock::now();
      for (;;) {
        IntentId id;
        try {
          id = core_->submit(gen.next());
        } catch (const Error& e) {
          if (e.code() != ErrorCode::Capacity) throw;
          break;
        }
        if (core_->get(id).state != IntentState::Installed) break;
        ++r.max_intents;
      }
      const std::chrono::duration<double, std::milli> elapsed = std::chrono::steady_clock::now() - start;
      r.elapsed_ms = elapsed.count();
      series.runs.push_back(r);
    }
    reset_core();
    return series;
  }

  /// The full sweep, one intent type at a time. Iterations run in rounds:
  /// each round visits every (workload, interface) cell once, so slow drift
  /// on the host spreads over all cells instead of biasing whichever cell
  /// happened to be running.
  BenchmarkResults run_all(std::ostream* progress = nullptr) {
    BenchmarkResults results;
    if (std::find(config_.interfaces.begin(), config_.interfaces.end(), Interface::Rest) != config_.interfaces.end()) {
      results.rest_target = rest_target();
    }
    for (auto type : config_.intent_types) {
      std::map<std::pair<std::size_t, Interface>, double> sums;
      for (std::size_t it = 0; it < config_.iterations; ++it) {
        for (auto workload : config_.workloads) {
          for (auto iface : config_.interfaces) {
            results.samples.push_back(run_workload(type, iface, workload, it));
            sums[{workload, iface}] += results.samples.back().elapsed_ms;
          }
        }
      }
      if (progress) {
        for (const auto& [cell, sum] : sums) {
          *progress << short_name(type) << ' ' << to_string(cell.second) << ' ' << cell.first << ": mean "
                    << sum / static_cast<double>(config_.iterations) << " ms\n";
        }
      }
    }
    if (config_.saturation_iterations > 0) {
      for (auto type : config_.intent_types) {
        results.saturation.push_back(run_saturation(type));
        if (progress) {
          const auto& s = results.saturation.back();
          *progress << short_name(type) << " saturation: mean " << s.mean_max_intents() << " intents in "
                    << s.mean_elapsed_ms() << " ms\n";
        }
      }
    }
    reset_core();
    results.violations = violations_;
    analyze(results);
    return results;
  }

  static void analyze(BenchmarkResults& results);

 private:
  /// glibc adapts its trim and mmap thresholds as the heap grows and shrinks,
  /// so whether a purge hands memory back to the OS (and the next iteration
  /// page-faults it in again) changes partway through a sweep. Fixed
  /// thresholds keep every iteration on the same allocator path.
  static void pin_allocator() {
#if defined(__GLIBC__)
    mallopt(M_MMAP_THRESHOLD, 32 * 1024 * 1024);
    mallopt(M_TRIM_THRESHOLD, 1024 * 1024 * 1024);
#endif
  }

  void make_core() {
    IntentService::Options opts;
    opts.capacity = config_.capacity;
    core_ = std::make_unique<IntentService>(topo_, opts);
  }

  void reset_core() {
    if (config_.reset_mode == ResetMode::Purge) {
      core_->reset();
      return;
    }
    const bool had_server = server_ != nullptr;
    stop_server();
    make_core();
    if (had_server) rest_client();
  }

  void stop_server() {
    client_.reset();
    if (server_) server_->stop();
    server_.reset();
  }

  rest::RestClient& rest_client() {
    if (client_) return *client_;
    if (config_.rest_endpoint) {
      client_ = std::make_unique<rest::RestClient>(*config_.rest_endpoint);
    } else {
      server_ = std::make_unique<rest::RestServer>(*core_);
      const int port = server_->start(std::string(rest::kDefaultHost), 0);
      client_ = std::make_unique<rest::RestClient>(rest::Endpoint{std::string(rest::kDefaultHost), port});
    }
    client_->health();
    return *client_;
  }

  static std::string cell_label(const BenchmarkSample& s) {
    return std::string(short_name(s.intent_type)) + "/" + std::string(to_string(s.interface)) + "/" +
           std::to_string(s.workload) + "#" + std::to_string(s.iteration);
  }

  void check_isolation(std::size_t live, std::size_t rules, const BenchmarkSample& s) {
    if (live != 0 || rules != 0) {
      violations_.push_back(cell_label(s) + ": iteration started with " + std::to_string(live) + " live intents and " +
                            std::to_string(rules) + " rules");
    }
  }

  void check_quiescent_core(const BenchmarkSample& s) {
    for (const auto& [state, n] : core_->state_counts()) {
      if (!is_terminal(state) && state != IntentState::Installed && n > 0) {
        violations_.push_back(cell_label(s) + ": " + std::to_string(n) + " intents left in " +
                              std::string(to_string(state)));
      }
    }
  }

  void check_quiescent_rest(const BenchmarkSample& s) {
    const auto reply = client_->get("/intents");
    if (reply.status != 200 || !reply.body.is_array()) {
      violations_.push_back(cell_label(s) + ": intent listing returned " + std::to_string(reply.status));
      return;
    }
    for (const auto& doc : reply.body) {
      const auto state = rest::parse_state(doc.value("state", ""));
      if (!state || (!is_terminal(*state) && *state != IntentState::Installed)) {
        violations_.push_back(cell_label(s) + ": intent " + doc.value("id", "?") + " in state " +
                              doc.value("state", "?"));
      }
    }
  }

  BenchmarkConfig config_;
  std::shared_ptr<const Topology> topo_;
  std::unique_ptr<IntentService> core_;
  std::unique_ptr<rest::RestServer> server_;
  std::unique_ptr<rest::RestClient> client_;
  std::vector<std::string> violations_;
};

/// Fills summaries, ratios and fits from the raw samples. Fits need at least
/// 3 distinct workloads and are skipped otherwise.
inline void Harness::analyze(BenchmarkResults& results) {
  using Key = std::tuple<IntentType, Interface, std::size_t>;
  std::map<Key, std::vector<double>> cells;
  for (const auto& s : results.samples) cells[{s.intent_type, s.interface, s.workload}].push_back(s.elapsed_ms);

  results.summaries.clear();
  results.ratios.clear();
  results.fits.clear();
  std::map<std::pair<IntentType, Interface>, std::vector<std::pair<double, double>>> curves;
  std::map<Key, double> means;
  for (const auto& [key, xs] : cells) {
    const auto& [type, iface, workload] = key;
    if (xs.size() < 2) continue;
    const auto stats = summarize(xs);
    results.summaries.push_back({type, iface, workload, stats});
    curves[{type, iface}].emplace_back(static_cast<double>(workload), stats.mean_ms);
    means[key] = stats.mean_ms;
  }
  for (const auto& [key, rest_mean] : means) {
    const auto& [type, iface, workload] = key;
    if (iface != Interface::Rest) continue;
    auto cli = means.find({type, Interface::Cli, workload});
    if (cli == means.end()) continue;
    const double ratio = cli->second > 0 ? rest_mean / cli->second : 0.0;
    results.ratios.push_back({type, workload, rest_mean, cli->second, ratio});
  }
  for (const auto& [key, points] : curves) {
    if (points.size() < 3) continue;
    results.fits.push_back({key.first, key.second, fit_linear(points)});
  }
}

// ---------------------------------------------------------------------------
// Report

/// Shortest round-trip decimal form of a double.
inline std::string format_number(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

namespace detail {

inline std::ofstream open_report(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

inline void close_report(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw Error(ErrorCode::Io, "error writing " + path.string());
}

}  // namespace detail

inline constexpr std::string_view kSamplesHeader = "intent_type,interface,workload,iteration,elapsed_ms,installed,failed";
inline constexpr std::string_view kSummaryHeader = "intent_type,interface,workload,n,mean_ms,stddev_ms,ci95_ms,cov";
inline constexpr std::string_view kRatiosHeader = "intent_type,workload,rest_mean_ms,cli_mean_ms,ratio";
inline constexpr std::string_view kFitsHeader = "intent_type,interface,slope_ms_per_intent,intercept_ms,r_squared";
inline constexpr std::string_view kSaturationHeader = "intent_type,run_index,max_intents,elapsed_ms";
inline constexpr std::string_view kSaturationSummaryHeader = "intent_type,runs,mean_max_intents,mean_elapsed_ms";

/// Writes the CSV reports and metadata.json into `config.output_dir` and
/// returns the paths written.
inline std::vector<std::filesystem::path> emit_report(const BenchmarkResults& results, const BenchmarkConfig& config) {
  namespace fs = std::filesystem;
  if (results.samples.empty() && results.saturation.empty()) {
    throw Error(ErrorCode::InsufficientSamples, "nothing to report: no completed benchmark cell");
  }
  const fs::path dir(config.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorCode::Io, "cannot create output directory " + dir.string());

  std::vector<fs::path> written;
  auto write = [&](const char* name, auto&& body) {
    const auto path = dir / name;
    auto out = detail::open_report(path);
    body(out);
    detail::close_report(out, path);
    written.push_back(path);
  };

  write("samples.csv", [&](std::ostream& out) {
    out << kSamplesHeader << '\n';
    for (const auto& s : results.samples) {
      out << short_name(s.intent_type) << ',' << to_string(s.interface) << ',' << s.workload << ',' << s.iteration
          << ',' << format_number(s.elapsed_ms) << ',' << s.installed << ',' << s.failed << '\n';
    }
  });
  write("summary.csv", [&](std::ostream& out) {
    out << kSummaryHeader << (config.plot_scale ? ",ci_plot_scale" : "") << '\n';
    for (const auto& c : results.summaries) {
      out << short_name(c.intent_type) << ',' << to_string(c.interface) << ',' << c.workload << ',' << c.stats.n
          << ',' << format_number(c.stats.mean_ms) << ',' << format_number(c.stats.stddev_ms) << ','
          << format_number(c.stats.ci95_ms) << ',' << format_number(c.stats.cov);
      if (config.plot_scale) out << ',' << format_number(c.stats.ci95_ms * *config.plot_scale);
      out << '\n';
    }
  });
  write("ratios.csv", [&](std::ostream& out) {
    out << kRatiosHeader << '\n';
    for (const auto& r : results.ratios) {
      out << short_name(r.intent_type) << ',' << r.workload << ',' << format_number(r.rest_mean_ms) << ','
          << format_number(r.cli_mean_ms) << ',' << format_number(r.ratio) << '\n';
    }
  });
  write("fits.csv", [&](std::ostream& out) {
    out << kFitsHeader << '\n';
    for (const auto& f : results.fits) {
      out << short_name(f.intent_type) << ',' << to_string(f.interface) << ',' << format_number(f.fit.slope) << ','
          << format_number(f.fit.intercept) << ',' << format_number(f.fit.r_squared) << '\n';
    }
  });
  if (!results.saturation.empty()) {
    write("saturation.csv", [&](std::ostream& out) {
      out << kSaturationHeader << '\n';
      for (const auto& series : results.saturation) {
        for (const auto& r : series.runs) {
          out << short_name(series.intent_type) << ',' << r.run_index << ',' << r.max_intents << ','
              << format_number(r.elapsed_ms) << '\n';
        }
      }
    });
    write("saturation_summary.csv", [&](std::ostream& out) {
      out << kSaturationSummaryHeader << '\n';
      for (const auto& series : results.saturation) {
        out << short_name(series.intent_type) << ',' << series.runs.size() << ','
            << format_number(series.mean_max_intents()) << ',' << format_number(series.mean_elapsed_ms()) << '\n';
      }
    });
  }

  json meta{
      {"profile", config.profile},
      {"units", {{"elapsed_ms", "milliseconds"}, {"slope_ms_per_intent", "milliseconds per intent"}}},
      {"clock", "steady_clock (monotonic)"},
      {"ci_method", "Student-t, two-sided 95%, n-1 degrees of freedom; ci95_ms is the half-width"},
      {"cli_timing", "in-process, around the core submit loop only"},
      {"rest_timing", "client-side end to end, sequential POST /intents, one intent per request, keep-alive connection"},
      {"reset_mode", std::string(to_string(config.reset_mode))},
      {"seed", config.seed},
      {"iterations", config.iterations},
      {"workloads", config.workloads},
      {"saturation_iterations", config.saturation_iterations},
      {"capacity", config.capacity},
      {"samples", results.samples.size()},
      {"degraded_samples", std::count_if(results.samples.begin(), results.samples.end(),
                                         [](const BenchmarkSample& s) { return s.degraded(); })},
      {"violations", results.violations},
  };
  if (!results.rest_target.empty()) meta["rest_endpoint"] = results.rest_target;
  if (config.topology) meta["topology"] = *config.topology;
  if (auto r = results.mean_ratio()) meta["mean_rest_cli_ratio"] = *r;
  if (config.plot_scale) meta["ci_plot_scale"] = *config.plot_scale;
  write("metadata.json", [&](std::ostream& out) { out << meta.dump(2) << '\n'; });
  return written;
}

}  // namespace intentd::bench
