#pragma once

#include <chrono>
#include <cstdio>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "intentd/error.hpp"
#include "intentd/intent.hpp"
#include "intentd/intent_service.hpp"
#include "intentd/rest.hpp"

namespace intentd::cli {

enum class Verb {
  AddPointToPoint,
  AddSingleToMultiPoint,
  AddMultiToSinglePoint,
  AddHostToHost,
  Intents,
  Withdraw,
  Bench,
  Serve,
};

constexpr std::string_view to_string(Verb v) {
  switch (v) {
    case Verb::AddPointToPoint: return "add-point-to-point-intent";
    case Verb::AddSingleToMultiPoint: return "add-single-to-multi-point-intent";
    case Verb::AddMultiToSinglePoint: return "add-multi-to-single-point-intent";
    case Verb::AddHostToHost: return "add-host-to-host-intent";
    case Verb::Intents: return "intents";
    case Verb::Withdraw: return "withdraw";
    case Verb::Bench: return "bench";
    case Verb::Serve: return "serve";
  }
  return "";
}

constexpr bool is_add(Verb v) {
  return v == Verb::AddPointToPoint || v == Verb::AddSingleToMultiPoint || v == Verb::AddMultiToSinglePoint ||
         v == Verb::AddHostToHost;
}

enum class OutputFormat { Table, Json, Csv };

inline OutputFormat parse_output_format(std::string_view s) {
  if (s == "table") return OutputFormat::Table;
  if (s == "json") return OutputFormat::Json;
  if (s == "csv") return OutputFormat::Csv;
  throw Error(ErrorCode::Parse, "--output must be one of table, json, csv");
}

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitPartial = 3,
};

struct CliCommand {
  Verb verb = Verb::Intents;
  std::vector<std::string> args;
  std::uint64_t count = 1;
  std::optional<std::string> topology;
  std::optional<int> priority;
  OutputFormat output = OutputFormat::Table;
};

struct TimedResult {
  std::uint64_t submitted = 0;
  std::uint64_t installed = 0;
  std::uint64_t failed = 0;
  double elapsed_ms = 0.0;
  bool capacity_exhausted = false;
};

/// Builds the intent request an add command describes. Arity:
///   point-to-point        <ingress> <egress>
///   single-to-multi-point <ingress> <egress>...
///   multi-to-single-point <ingress>... <egress>
///   host-to-host          <host> <host>
inline IntentRequest build_request(const CliCommand& cmd) {
  const auto& a = cmd.args;
  auto usage = [&](const char* shape) {
    return Error(ErrorCode::Parse, std::string(to_string(cmd.verb)) + " expects " + shape);
  };
  IntentRequest req;
  switch (cmd.verb) {
    case Verb::AddPointToPoint:
      if (a.size() != 2) throw usage("<ingress> <egress>");
      req.endpoints = PointToPoint{ConnectPoint::parse(a[0]), ConnectPoint::parse(a[1])};
      break;
    case Verb::AddSingleToMultiPoint: {
      if (a.size() < 2) throw usage("<ingress> <egress>...");
      SingleToMultiPoint e{ConnectPoint::parse(a[0]), {}};
      for (std::size_t i = 1; i < a.size(); ++i) e.egresses.push_back(ConnectPoint::parse(a[i]));
      req.endpoints = std::move(e);
      break;
    }
    case Verb::AddMultiToSinglePoint: {
      if (a.size() < 2) throw usage("<ingress>... <egress>");
      MultiToSinglePoint e{{}, ConnectPoint::parse(a.back())};
      for (std::size_t i = 0; i + 1 < a.size(); ++i) e.ingresses.push_back(ConnectPoint::parse(a[i]));
      req.endpoints = std::move(e);
      break;
    }
    case Verb::AddHostToHost:
      if (a.size() != 2) throw usage("<host> <host>");
      req.endpoints = HostToHost{a[0], a[1]};
      break;
    default:
      throw Error(ErrorCode::Parse, std::string(to_string(cmd.verb)) + " is not an add command");
  }
  if (cmd.priority) {
    if (*cmd.priority < 0 || *cmd.priority > 65535) throw Error(ErrorCode::Parse, "--priority must be in [0, 65535]");
    req.priority = *cmd.priority;
  }
  return req;
}

/// The core add loop. Only the submissions are timed; the loop stops early
/// when the store reports it is full.
template <typename NextRequest>
TimedResult timed_add_loop(IntentService& core, std::uint64_t count, NextRequest&& next_request) {
  TimedResult r;
  const auto start = std::chrono::steady_clock::now();
  for (std::uint64_t i = 0; i < count; ++i) {
    IntentId id;
    try {
      id = core.submit(next_request(i));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Capacity) throw;
      r.capacity_exhausted = true;
      break;
    }
    ++r.submitted;
    if (core.get(id).state == IntentState::Installed) {
      ++r.installed;
    } else {
      ++r.failed;
    }
  }
  const std::chrono::duration<double, std::milli> elapsed = std::chrono::steady_clock::now() - start;
  r.elapsed_ms = elapsed.count();
  return r;
}

/// Submits `count` copies of the command's intent. Usage and validation
/// errors are thrown before the clock starts.
inline TimedResult run_add_command(const CliCommand& cmd, IntentService& core) {
  if (cmd.count < 1) throw Error(ErrorCode::Parse, "--count must be at least 1");
  const IntentRequest request = build_request(cmd);
  validate(core.topology(), request);
  return timed_add_loop(core, cmd.count, [&request](std::uint64_t) -> const IntentRequest& { return request; });
}

inline int exit_code(const TimedResult& r) {
  return (r.capacity_exhausted || r.failed > 0) ? kExitPartial : kExitOk;
}

inline std::string format_timed_result(const TimedResult& r, OutputFormat format) {
  std::ostringstream out;
  switch (format) {
    case OutputFormat::Json: {
      nlohmann::json j{{"submitted", r.submitted},
                       {"installed", r.installed},
                       {"failed", r.failed},
                       {"elapsed_ms", r.elapsed_ms}};
      if (r.capacity_exhausted) j["capacity_exhausted"] = true;
      out << j.dump() << '\n';
      break;
    }
    case OutputFormat::Csv:
      out << "submitted,installed,failed,elapsed_ms\n"
          << r.submitted << ',' << r.installed << ',' << r.failed << ',' << r.elapsed_ms << '\n';
      break;
    case OutputFormat::Table:
      out << "submitted " << r.submitted << "  installed " << r.installed << "  failed " << r.failed
          << "  elapsed " << r.elapsed_ms << " ms";
      if (r.capacity_exhausted) out << "  (intent store full)";
      out << '\n';
      break;
  }
  return out.str();
}

/// `intents`: id, type, state and rule count of every stored intent.
inline std::string run_query_command(const CliCommand& cmd, const IntentService& core) {
  const auto intents = core.list();
  std::ostringstream out;
  switch (cmd.output) {
    case OutputFormat::Json: {
      auto list = nlohmann::json::array();
      for (const auto& i : intents) list.push_back(rest::response_json(i));
      out << list.dump() << '\n';
      break;
    }
    case OutputFormat::Csv:
      out << "id,type,state,rule_count\n";
      for (const auto& i : intents) {
        out << to_string(i.id) << ',' << to_string(i.type()) << ',' << to_string(i.state) << ',' << i.rule_count
            << '\n';
      }
      break;
    case OutputFormat::Table: {
      char line[128];
      std::snprintf(line, sizeof line, "%-10s %-20s %-11s %s\n", "ID", "TYPE", "STATE", "RULES");
      out << line;
      for (const auto& i : intents) {
        std::snprintf(line, sizeof line, "%-10s %-20s %-11s %zu\n", to_string(i.id).c_str(),
                      std::string(to_string(i.type())).c_str(), std::string(to_string(i.state)).c_str(),
                      i.rule_count);
        out << line;
      }
      break;
    }
  }
  return out.str();
}

}  // namespace intentd::cli
