#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "intentd/bench.hpp"
#include "intentd/cli.hpp"
#include "intentd/default_topology.hpp"
#include "intentd/error.hpp"
#include "intentd/intent_service.hpp"
#include "intentd/net_model.hpp"
#include "intentd/rest.hpp"

namespace intentd::app {

inline constexpr const char* kTopologyEnv = "INTENTD_TOPOLOGY";

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// --topology, else $INTENTD_TOPOLOGY, else the built-in chain.
inline std::optional<std::string> resolve_topology_path(const std::optional<std::string>& flag) {
  if (flag) return flag;
  if (const char* env = std::getenv(kTopologyEnv); env && *env) return std::string(env);
  return std::nullopt;
}

inline std::shared_ptr<const Topology> load_topology_source(const std::optional<std::string>& path) {
  if (!path) return default_topology();
  return std::make_shared<const Topology>(load_topology(read_file(*path)));
}

/// Exit status for an error escaping a command.
inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse:
    case ErrorCode::Validation:
    case ErrorCode::UnknownHost:
    case ErrorCode::UnknownDevice:
      return cli::kExitUsage;
    default:
      return cli::kExitFailure;
  }
}

/// The `intentd` command set. One instance keeps one in-process core alive
/// across execute() calls, so a script of commands shares its intents.
class CommandLine {
 public:
  /// Blocks while `serve` is running; returns to shut the server down.
  using ServeWaiter = std::function<void(rest::RestServer&)>;

  explicit CommandLine(ServeWaiter wait_for_shutdown = {}) : wait_(std::move(wait_for_shutdown)) {}

  /// Runs one command line (without the program name). Returns the exit code.
  int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Intent-based controller over a simulated switch fabric.", "intentd"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Expand all help");

    cli::CliCommand cmd;
    std::int64_t count = 1;
    std::string output = "table";
    std::optional<std::string> topology;
    int priority = 0;

    std::vector<std::pair<CLI::App*, cli::Verb>> add_verbs;
    auto add_verb = [&](cli::Verb verb, const char* desc, const char* args_help) {
      auto* sub = app.add_subcommand(std::string(cli::to_string(verb)), desc);
      sub->add_option("endpoints", cmd.args, args_help)->required();
      sub->add_option("--count", count, "Number of copies to submit")->capture_default_str();
      sub->add_option("--topology", topology, "Topology JSON file");
      sub->add_option("--priority", priority, "Flow rule priority");
      sub->add_option("--output", output, "table, json or csv")->capture_default_str();
      add_verbs.emplace_back(sub, verb);
    };
    add_verb(cli::Verb::AddPointToPoint, "Connect one ingress to one egress", "<ingress> <egress>");
    add_verb(cli::Verb::AddSingleToMultiPoint, "Connect one ingress to several egresses", "<ingress> <egress>...");
    add_verb(cli::Verb::AddMultiToSinglePoint, "Connect several ingresses to one egress", "<ingress>... <egress>");
    add_verb(cli::Verb::AddHostToHost, "Bidirectional connectivity between two hosts", "<host> <host>");

    auto* intents = app.add_subcommand("intents", "List stored intents");
    intents->add_option("--output", output, "table, json or csv")->capture_default_str();
    intents->add_option("--topology", topology, "Topology JSON file");

    std::string withdraw_id;
    auto* withdraw = app.add_subcommand("withdraw", "Withdraw an installed intent");
    withdraw->add_option("id", withdraw_id, "Intent id")->required();
    withdraw->add_option("--topology", topology, "Topology JSON file");

    BenchFlags bf;
    auto* bench = app.add_subcommand("bench", "Run the installation benchmark");
    bench->add_option("--profile", bf.profile, "desk or paper");
    bench->add_option("--types", bf.types, "Intent types: P2P,S2M,M2S")->delimiter(',');
    bench->add_option("--interfaces", bf.interfaces, "Interfaces: CLI,REST")->delimiter(',');
    bench->add_option("--workloads", bf.workloads, "Strictly increasing workload sizes")->delimiter(',');
    bench->add_option("--iterations", bf.iterations, "Timed iterations per cell");
    bench->add_option("--saturation", bf.saturation, "Saturation runs per type (0 disables)");
    bench->add_option("--capacity", bf.capacity, "Intent store capacity");
    bench->add_option("--rest-endpoint", bf.rest_endpoint, "host:port of an external REST server");
    bench->add_option("--seed", bf.seed, "Workload generator seed");
    bench->add_option("--out", bf.out, "Report directory");
    bench->add_option("--plot-scale", bf.plot_scale, "Emit ci_plot_scale = ci95_ms * N");
    bench->add_option("--config", bf.config, "JSON config file; flags override it");
    bench->add_option("--reset-mode", bf.reset_mode, "purge or restart");
    bench->add_option("--topology", topology, "Topology JSON file");

    std::string listen = std::string(rest::kDefaultHost) + ":" + std::to_string(rest::kDefaultPort);
    std::optional<std::size_t> serve_capacity;
    auto* serve = app.add_subcommand("serve", "Serve the REST interface");
    serve->add_option("--listen", listen, "host:port (port 0 picks a free port)")->capture_default_str();
    serve->add_option("--capacity", serve_capacity, "Intent store capacity");
    serve->add_option("--topology", topology, "Topology JSON file");

    try {
      std::vector<std::string> reversed(args.rbegin(), args.rend());
      app.parse(reversed);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? cli::kExitOk : cli::kExitUsage;
    }

    try {
      for (const auto& [sub, verb] : add_verbs) {
        if (!sub->parsed()) continue;
        cmd.verb = verb;
        if (count < 1) throw Error(ErrorCode::Parse, "--count must be at least 1");
        cmd.count = static_cast<std::uint64_t>(count);
        cmd.output = cli::parse_output_format(output);
        if (sub->count("--priority") > 0) cmd.priority = priority;
        auto& core = core_for(topology);
        const auto result = cli::run_add_command(cmd, core);
        out << cli::format_timed_result(result, cmd.output);
        return cli::exit_code(result);
      }
      if (intents->parsed()) {
        cmd.verb = cli::Verb::Intents;
        cmd.output = cli::parse_output_format(output);
        out << cli::run_query_command(cmd, core_for(topology));
        return cli::kExitOk;
      }
      if (withdraw->parsed()) {
        const auto id = rest::parse_intent_id(withdraw_id);
        core_for(topology).withdraw(id);
        out << "withdrawn " << to_string(id) << '\n';
        return cli::kExitOk;
      }
      if (bench->parsed()) return run_bench(bf, topology, out);
      if (serve->parsed()) return run_serve(listen, serve_capacity, topology, out);
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return exit_code_for(e.code());
    }
    return cli::kExitUsage;
  }

  /// The session core, or nullptr before the first command that needs one.
  IntentService* core() noexcept { return core_.get(); }

 private:
  struct BenchFlags {
    std::optional<std::string> profile;
    std::vector<std::string> types;
    std::vector<std::string> interfaces;
    std::vector<std::size_t> workloads;
    std::optional<std::size_t> iterations;
    std::optional<std::size_t> saturation;
    std::optional<std::size_t> capacity;
    std::optional<std::string> rest_endpoint;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<double> plot_scale;
    std::optional<std::string> config;
    std::optional<std::string> reset_mode;
  };

  IntentService& core_for(const std::optional<std::string>& flag) {
    const auto path = resolve_topology_path(flag);
    const std::string key = path.value_or("");
    if (!core_ || key != core_source_) {
      core_ = std::make_unique<IntentService>(load_topology_source(path));
      core_source_ = key;
    }
    return *core_;
  }

  static bench::BenchmarkConfig bench_config(const BenchFlags& f, const std::optional<std::string>& topology) {
    nlohmann::json doc = nlohmann::json::object();
    if (f.config) {
      doc = nlohmann::json::parse(read_file(*f.config), nullptr, false);
      if (doc.is_discarded()) throw Error(ErrorCode::Parse, *f.config + " is not valid JSON");
    }
    bench::BenchmarkConfig c;
    if (f.profile) {
      c = bench::BenchmarkConfig::for_profile(*f.profile);
      if (doc.is_object()) doc.erase("profile");
    }
    c.apply_json(doc);
    if (!f.types.empty()) {
      c.intent_types.clear();
      for (const auto& t : f.types) c.intent_types.push_back(bench::parse_bench_type(t));
    }
    if (!f.interfaces.empty()) {
      c.interfaces.clear();
      for (const auto& i : f.interfaces) c.interfaces.push_back(bench::parse_interface(i));
    }
    if (!f.workloads.empty()) c.workloads = f.workloads;
    if (f.iterations) c.iterations = *f.iterations;
    if (f.saturation) c.saturation_iterations = *f.saturation;
    if (f.capacity) c.capacity = *f.capacity;
    if (f.rest_endpoint) c.rest_endpoint = rest::Endpoint::parse(*f.rest_endpoint);
    if (f.seed) c.seed = *f.seed;
    if (f.out) c.output_dir = *f.out;
    if (f.plot_scale) c.plot_scale = *f.plot_scale;
    if (f.reset_mode) c.reset_mode = bench::parse_reset_mode(*f.reset_mode);
    if (auto path = resolve_topology_path(topology.has_value() ? topology : c.topology)) c.topology = path;
    c.validate();
    return c;
  }

  int run_bench(const BenchFlags& flags, const std::optional<std::string>& topology, std::ostream& out) {
    const auto config = bench_config(flags, topology);
    bench::Harness harness(config, load_topology_source(config.topology));
    const auto results = harness.run_all(&out);
    const auto files = bench::emit_report(results, config);

    for (const auto& f : results.fits) {
      out << "fit " << bench::short_name(f.intent_type) << ' ' << bench::to_string(f.interface) << ": slope "
          << f.fit.slope << " ms/intent, r^2 " << f.fit.r_squared << '\n';
    }
    if (auto r = results.mean_ratio()) out << "mean REST/CLI ratio " << *r << '\n';
    for (const auto& p : files) out << "wrote " << p.string() << '\n';

    const auto degraded = std::count_if(results.samples.begin(), results.samples.end(),
                                        [](const bench::BenchmarkSample& s) { return s.degraded(); });
    if (degraded > 0) out << degraded << " degraded samples\n";
    for (const auto& v : results.violations) out << "violation: " << v << '\n';
    return (degraded > 0 || !results.violations.empty()) ? cli::kExitPartial : cli::kExitOk;
  }

  int run_serve(const std::string& listen, std::optional<std::size_t> capacity,
                const std::optional<std::string>& topology, std::ostream& out) {
    const auto endpoint = rest::Endpoint::parse(listen, true);
    auto& core = core_for(topology);
    core.set_capacity(capacity);
    rest::RestServer server(core);
    const int port = server.start(endpoint.host, endpoint.port);
    out << "listening on " << endpoint.host << ':' << port << std::endl;
    if (wait_) wait_(server);
    server.stop();
    return cli::kExitOk;
  }

  ServeWaiter wait_;
  std::unique_ptr<IntentService> core_;
  std::string core_source_;
};

}  // namespace intentd::app
