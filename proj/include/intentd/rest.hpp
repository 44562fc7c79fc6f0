#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "intentd/error.hpp"
#include "intentd/intent.hpp"
#include "intentd/intent_service.hpp"

namespace intentd::rest {

using nlohmann::json;

inline constexpr std::string_view kJson = "application/json";
inline constexpr std::string_view kDefaultHost = "127.0.0.1";
inline constexpr int kDefaultPort = 8181;

// ---------------------------------------------------------------------------
// Documents

namespace detail {

inline const json& field(const json& doc, const char* name) {
  auto it = doc.find(name);
  if (it == doc.end()) throw Error(ErrorCode::Parse, std::string("missing field '") + name + "'");
  return *it;
}

inline std::string string_field(const json& doc, const char* name) {
  const auto& v = field(doc, name);
  if (!v.is_string()) throw Error(ErrorCode::Parse, std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

inline ConnectPoint point_field(const json& doc, const char* name) {
  return ConnectPoint::parse(string_field(doc, name));
}

inline std::vector<ConnectPoint> point_list_field(const json& doc, const char* name) {
  const auto& v = field(doc, name);
  if (!v.is_array()) throw Error(ErrorCode::Parse, std::string("field '") + name + "' must be an array");
  std::vector<ConnectPoint> out;
  for (const auto& item : v) {
    if (!item.is_string()) throw Error(ErrorCode::Parse, std::string("field '") + name + "' must hold strings");
    out.push_back(ConnectPoint::parse(item.get<std::string>()));
  }
  return out;
}

inline std::set<std::string> endpoint_fields(IntentType t) {
  switch (t) {
    case IntentType::PointToPoint: return {"ingress", "egress"};
    case IntentType::SingleToMultiPoint: return {"ingress", "egresses"};
    case IntentType::MultiToSinglePoint: return {"ingresses", "egress"};
    case IntentType::HostToHost: return {"one", "two"};
  }
  return {};
}

inline TrafficSelector parse_selector(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::Parse, "'selector' must be an object");
  TrafficSelector s;
  for (const auto& [key, value] : doc.items()) {
    if (key == "eth_src" || key == "eth_dst") {
      if (!value.is_string()) throw Error(ErrorCode::Parse, "selector." + key + " must be a MAC string");
      (key == "eth_src" ? s.eth_src : s.eth_dst) = MacAddress::parse(value.get<std::string>());
    } else if (key == "vlan") {
      if (!value.is_number_integer() || value.get<std::int64_t>() < 0 || value.get<std::int64_t>() > kMaxVlan) {
        throw Error(ErrorCode::Parse, "selector.vlan must be an integer in [0, 4095]");
      }
      s.vlan = value.get<VlanId>();
    } else {
      throw Error(ErrorCode::Parse, "unknown selector field '" + key + "'");
    }
  }
  return s;
}

inline json selector_json(const TrafficSelector& s) {
  json j = json::object();
  if (s.eth_src) j["eth_src"] = s.eth_src->to_string();
  if (s.eth_dst) j["eth_dst"] = s.eth_dst->to_string();
  if (s.vlan) j["vlan"] = *s.vlan;
  return j;
}

inline IntentRequest parse_request_fields(const json& doc) {
  const auto type_name = string_field(doc, "type");
  const auto type = parse_intent_type(type_name);
  if (!type) throw Error(ErrorCode::Parse, "unknown intent type '" + type_name + "'");

  IntentRequest req;
  switch (*type) {
    case IntentType::PointToPoint:
      req.endpoints = PointToPoint{point_field(doc, "ingress"), point_field(doc, "egress")};
      break;
    case IntentType::SingleToMultiPoint:
      req.endpoints = SingleToMultiPoint{point_field(doc, "ingress"), point_list_field(doc, "egresses")};
      break;
    case IntentType::MultiToSinglePoint:
      req.endpoints = MultiToSinglePoint{point_list_field(doc, "ingresses"), point_field(doc, "egress")};
      break;
    case IntentType::HostToHost:
      req.endpoints = HostToHost{string_field(doc, "one"), string_field(doc, "two")};
      break;
  }
  if (auto it = doc.find("priority"); it != doc.end()) {
    if (!it->is_number_integer()) throw Error(ErrorCode::Parse, "'priority' must be an integer");
    const auto p = it->get<std::int64_t>();
    if (p < 0 || p > 65535) throw Error(ErrorCode::Parse, "'priority' must be in [0, 65535]");
    req.priority = static_cast<int>(p);
  }
  if (auto it = doc.find("selector"); it != doc.end()) req.selector = parse_selector(*it);
  return req;
}

}  // namespace detail

/// Parses an IntentRequestDocument. Only `type`, `priority`, `selector`, the
/// endpoint fields of that type and the names in `extra` are accepted.
inline IntentRequest parse_intent_request(const json& doc, const std::set<std::string>& extra = {}) {
  if (!doc.is_object()) throw Error(ErrorCode::Parse, "request body must be a JSON object");
  auto req = detail::parse_request_fields(doc);
  auto allowed = detail::endpoint_fields(req.type());
  allowed.insert({"type", "priority", "selector"});
  allowed.insert(extra.begin(), extra.end());
  for (const auto& [key, value] : doc.items()) {
    if (!allowed.contains(key)) {
      throw Error(ErrorCode::Parse, "unexpected field '" + key + "' for " + std::string(to_string(req.type())));
    }
  }
  return req;
}

inline json request_json(const IntentRequest& req) {
  json j;
  j["type"] = std::string(to_string(req.type()));
  std::visit(
      [&j](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        auto points = [](const std::vector<ConnectPoint>& v) {
          json a = json::array();
          for (const auto& cp : v) a.push_back(cp.to_string());
          return a;
        };
        if constexpr (std::is_same_v<T, PointToPoint>) {
          j["ingress"] = e.ingress.to_string();
          j["egress"] = e.egress.to_string();
        } else if constexpr (std::is_same_v<T, SingleToMultiPoint>) {
          j["ingress"] = e.ingress.to_string();
          j["egresses"] = points(e.egresses);
        } else if constexpr (std::is_same_v<T, MultiToSinglePoint>) {
          j["ingresses"] = points(e.ingresses);
          j["egress"] = e.egress.to_string();
        } else {
          j["one"] = e.one;
          j["two"] = e.two;
        }
      },
      req.endpoints);
  j["priority"] = req.priority;
  if (!req.selector.empty()) j["selector"] = detail::selector_json(req.selector);
  return j;
}

/// IntentResponseDocument: the request echoed plus id, state and rule_count.
inline json response_json(const Intent& intent) {
  json j = request_json(intent.request);
  j["id"] = to_string(intent.id);
  j["state"] = std::string(to_string(intent.state));
  j["rule_count"] = intent.rule_count;
  if (!intent.reason.empty()) j["reason"] = intent.reason;
  if (!intent.children.empty()) {
    j["children"] = json::array();
    for (auto c : intent.children) j["children"].push_back(to_string(c));
  }
  return j;
}

struct IntentResponse {
  IntentId id{};
  IntentState state = IntentState::Submitted;
  IntentRequest request;
  std::size_t rule_count = 0;
};

inline std::optional<IntentState> parse_state(std::string_view s) {
  using S = IntentState;
  for (auto st : {S::Submitted, S::Compiling, S::Installing, S::Installed, S::Failed, S::Withdrawn}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

inline IntentId parse_intent_id(std::string_view text) {
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || end != text.data() + text.size()) {
    throw Error(ErrorCode::Parse, "intent id must be a decimal integer, got '" + std::string(text) + "'");
  }
  return IntentId{v};
}

/// Validates an IntentResponseDocument and reads it back.
inline IntentResponse parse_intent_response(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::Parse, "response must be a JSON object");
  IntentResponse r;
  r.id = parse_intent_id(detail::string_field(doc, "id"));
  const auto state = parse_state(detail::string_field(doc, "state"));
  if (!state) throw Error(ErrorCode::Parse, "unknown state in response");
  r.state = *state;
  const auto& rc = detail::field(doc, "rule_count");
  if (!rc.is_number_unsigned() && !(rc.is_number_integer() && rc.get<std::int64_t>() >= 0)) {
    throw Error(ErrorCode::Parse, "rule_count must be a non-negative integer");
  }
  r.rule_count = rc.get<std::size_t>();
  if (r.state == IntentState::Installed && r.rule_count < 1) {
    throw Error(ErrorCode::Parse, "INSTALLED response with no rules");
  }
  r.request = parse_intent_request(doc, {"id", "state", "rule_count", "reason", "children"});
  return r;
}

/// HTTP status for a library error on the intent routes.
inline int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse: return 400;
    case ErrorCode::Validation:
    case ErrorCode::UnknownHost:
    case ErrorCode::UnknownDevice: return 422;
    case ErrorCode::Capacity:
    case ErrorCode::IllegalState: return 409;
    case ErrorCode::NotFound: return 404;
    default: return 500;
  }
}

inline json error_json(std::string_view reason) { return json{{"error", reason}}; }

// ---------------------------------------------------------------------------
// Server

/// Northbound REST service over an IntentService. Each POST submits one
/// intent synchronously and answers once it is INSTALLED or FAILED.
///
///   POST   /intents        201 | 400 | 409 | 422
///   POST   /intents/batch  201 | 400 | 409 | 422   (body adds "count")
///   GET    /intents        200
///   GET    /intents/{id}   200 | 404
///   DELETE /intents/{id}   204 | 404 | 409
///   GET    /health         200
///   POST   /reset          200   withdraw everything and purge the store
class RestServer {
 public:
  explicit RestServer(IntentService& service) : service_(service) {
    server_.set_tcp_nodelay(true);
    routes();
  }

  RestServer(const RestServer&) = delete;
  RestServer& operator=(const RestServer&) = delete;

  ~RestServer() { stop(); }

  /// Binds and serves on a background thread. Port 0 picks a free port.
  /// Returns the bound port.
  int start(const std::string& host = std::string(kDefaultHost), int port = kDefaultPort) {
    if (port == 0) {
      port_ = server_.bind_to_any_port(host);
    } else {
      port_ = server_.bind_to_port(host, port) ? port : -1;
    }
    if (port_ < 0) throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
    host_ = host;
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  /// Serves on the calling thread until stop() is called from elsewhere.
  void run(const std::string& host, int port) {
    host_ = host;
    port_ = port;
    if (!server_.listen(host, port)) throw Error(ErrorCode::Io, "cannot listen on " + host + ":" + std::to_string(port));
  }

  void stop() {
    if (server_.is_running()) server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const noexcept { return port_; }
  const std::string& host() const noexcept { return host_; }

 private:
  static void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), std::string(kJson));
  }

  static void reply_error(httplib::Response& res, int status, std::string_view reason) {
    reply(res, status, error_json(reason));
  }

  template <typename Fn>
  static void guarded(httplib::Response& res, Fn&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      reply_error(res, status_for(e.code()), e.what());
    } catch (const json::exception& e) {
      reply_error(res, 400, std::string("malformed JSON: ") + e.what());
    }
  }

  static json parse_body(const httplib::Request& req) {
    try {
      return json::parse(req.body);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::Parse, std::string("malformed JSON: ") + e.what());
    }
  }

  void routes() {
    server_.Post("/intents", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto request = parse_intent_request(parse_body(req));
        const auto id = service_.submit(request);
        reply(res, 201, response_json(service_.get(id)));
      });
    });

    server_.Post("/intents/batch", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto body = parse_body(req);
        const auto request = parse_intent_request(body, {"count"});
        const auto& count_field = detail::field(body, "count");
        if (!count_field.is_number_integer() || count_field.get<std::int64_t>() < 1) {
          throw Error(ErrorCode::Parse, "'count' must be a positive integer");
        }
        validate(service_.topology(), request);
        const auto count = count_field.get<std::uint64_t>();
        std::uint64_t installed = 0;
        std::uint64_t failed = 0;
        std::optional<IntentId> first;
        std::optional<IntentId> last;
        bool exhausted = false;
        const auto start = std::chrono::steady_clock::now();
        for (std::uint64_t i = 0; i < count; ++i) {
          IntentId id;
          try {
            id = service_.submit(request);
          } catch (const Error& e) {
            if (e.code() != ErrorCode::Capacity) throw;
            exhausted = true;
            break;
          }
          if (!first) first = id;
          last = id;
          (service_.get(id).state == IntentState::Installed ? installed : failed) += 1;
        }
        const std::chrono::duration<double, std::milli> elapsed = std::chrono::steady_clock::now() - start;
        json body_out{{"submitted", installed + failed},
                      {"installed", installed},
                      {"failed", failed},
                      {"elapsed_ms", elapsed.count()}};
        if (first) {
          body_out["first_id"] = to_string(*first);
          body_out["last_id"] = to_string(*last);
        }
        if (exhausted) body_out["error"] = "intent store capacity exhausted";
        reply(res, exhausted ? 409 : 201, body_out);
      });
    });

    server_.Get("/intents", [this](const httplib::Request&, httplib::Response& res) {
      json list = json::array();
      for (const auto& intent : service_.list()) list.push_back(response_json(intent));
      reply(res, 200, list);
    });

    server_.Get(R"(/intents/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto id = parse_id_or_404(req.matches[1]);
        reply(res, 200, response_json(service_.get(id)));
      });
    });

    server_.Delete(R"(/intents/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        service_.withdraw(parse_id_or_404(req.matches[1]));
        res.status = 204;
      });
    });

    server_.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      reply(res, 200,
            json{{"intents_live", service_.live_count()}, {"rules_installed", service_.fabric().rule_count()}});
    });

    server_.Post("/reset", [this](const httplib::Request&, httplib::Response& res) {
      const auto withdrawn = service_.reset();
      reply(res, 200, json{{"withdrawn", withdrawn}});
    });

    // Unmatched routes and ids that are not decimal.
    server_.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) reply_error(res, res.status, httplib::status_message(res.status));
    });
  }

  static IntentId parse_id_or_404(const std::string& text) {
    try {
      return parse_intent_id(text);
    } catch (const Error&) {
      throw Error(ErrorCode::NotFound, "unknown intent " + text);
    }
  }

  IntentService& service_;
  httplib::Server server_;
  std::thread thread_;
  std::string host_;
  int port_ = -1;
};

// ---------------------------------------------------------------------------
// Client

struct Endpoint {
  std::string host = std::string(kDefaultHost);
  int port = kDefaultPort;

  /// Parses `host:port`. Port 0 (any free port) is accepted only for
  /// listening addresses.
  static Endpoint parse(std::string_view text, bool listening = false) {
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos || colon == 0) {
      throw Error(ErrorCode::Parse, "endpoint must be host:port, got '" + std::string(text) + "'");
    }
    int port = 0;
    const auto p = text.substr(colon + 1);
    const auto [end, ec] = std::from_chars(p.data(), p.data() + p.size(), port);
    if (ec != std::errc{} || end != p.data() + p.size() || port < (listening ? 0 : 1) || port > 65535) {
      throw Error(ErrorCode::Parse, "invalid port in endpoint '" + std::string(text) + "'");
    }
    return Endpoint{std::string(text.substr(0, colon)), port};
  }

  std::string to_string() const { return host + ":" + std::to_string(port); }
};

struct HttpReply {
  int status = 0;
  json body;
};

/// Keep-alive JSON client used by the benchmark harness and tests. Connection
/// failures raise Error(Unreachable).
class RestClient {
 public:
  explicit RestClient(const Endpoint& endpoint) : endpoint_(endpoint), client_(endpoint.host, endpoint.port) {
    client_.set_keep_alive(true);
    client_.set_tcp_nodelay(true);
    client_.set_connection_timeout(std::chrono::seconds(2));
    client_.set_read_timeout(std::chrono::seconds(30));
  }

  const Endpoint& endpoint() const noexcept { return endpoint_; }

  HttpReply post(const std::string& path, const json& body) {
    return wrap(client_.Post(path, body.dump(), std::string(kJson)), "POST " + path);
  }

  HttpReply post_raw(const std::string& path, const std::string& body) {
    return wrap(client_.Post(path, body, std::string(kJson)), "POST " + path);
  }

  HttpReply get(const std::string& path) { return wrap(client_.Get(path), "GET " + path); }

  HttpReply del(const std::string& path) { return wrap(client_.Delete(path), "DELETE " + path); }

  /// GET /health; returns (intents_live, rules_installed).
  std::pair<std::size_t, std::size_t> health() {
    const auto r = get("/health");
    if (r.status != 200) throw Error(ErrorCode::Unreachable, "health check returned " + std::to_string(r.status));
    return {r.body.at("intents_live").get<std::size_t>(), r.body.at("rules_installed").get<std::size_t>()};
  }

  void reset() {
    const auto r = post("/reset", json::object());
    if (r.status != 200) throw Error(ErrorCode::Unreachable, "reset returned " + std::to_string(r.status));
  }

 private:
  HttpReply wrap(httplib::Result result, const std::string& what) {
    if (!result) {
      throw Error(ErrorCode::Unreachable, what + " to " + endpoint_.to_string() + " failed: " +
                                              httplib::to_string(result.error()));
    }
    HttpReply r{result->status, json()};
    if (!result->body.empty()) {
      r.body = json::parse(result->body, nullptr, false);
    }
    return r;
  }

  Endpoint endpoint_;
  httplib::Client client_;
};

}  // namespace intentd::rest
