#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "intentd/error.hpp"

namespace intentd {

using PortNumber = std::uint32_t;

/// Switch identity in the canonical `of:` + 16 lowercase hex digit form.
class DeviceId {
 public:
  DeviceId() = default;

  explicit DeviceId(std::string_view id) : id_(id) {
    if (!is_canonical(id)) {
      throw Error(ErrorCode::Parse, "invalid device id '" + std::string(id) +
                                        "': expected of:<16 lowercase hex digits>");
    }
  }

  static DeviceId from_number(std::uint64_t n) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string id = "of:0000000000000000";
    for (int i = 18; i >= 3; --i, n >>= 4) id[i] = kHex[n & 0xf];
    return DeviceId(id);
  }

  static bool is_canonical(std::string_view id) {
    if (id.size() != 19 || id.substr(0, 3) != "of:") return false;
    return std::all_of(id.begin() + 3, id.end(), [](char c) {
      return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
    });
  }

  const std::string& str() const noexcept { return id_; }

  // Fixed-width lowercase hex, so string order is numeric order.
  auto operator<=>(const DeviceId&) const = default;
  bool operator==(const DeviceId&) const = default;

 private:
  std::string id_;
};

struct ConnectPoint {
  DeviceId device;
  PortNumber port = 0;

  auto operator<=>(const ConnectPoint&) const = default;
  bool operator==(const ConnectPoint&) const = default;

  std::string to_string() const { return device.str() + "/" + std::to_string(port); }

  /// Parses `<deviceId>/<port>`.
  static ConnectPoint parse(std::string_view text) {
    const auto slash = text.rfind('/');
    if (slash == std::string_view::npos) {
      throw Error(ErrorCode::Parse,
                  "invalid connect point '" + std::string(text) + "': expected <deviceId>/<port>");
    }
    const auto port_text = text.substr(slash + 1);
    PortNumber port = 0;
    const auto [end, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc{} || end != port_text.data() + port_text.size() || port < 1) {
      throw Error(ErrorCode::Parse, "invalid port in connect point '" + std::string(text) + "'");
    }
    return ConnectPoint{DeviceId(text.substr(0, slash)), port};
  }
};

struct Link {
  ConnectPoint src;
  ConnectPoint dst;
  double weight = 1.0;

  Link reversed() const { return Link{dst, src, weight}; }

  bool operator==(const Link&) const = default;
};

struct Path {
  std::vector<Link> links;

  bool empty() const noexcept { return links.empty(); }

  double cost() const {
    double total = 0.0;
    for (const auto& l : links) total += l.weight;
    return total;
  }

  /// Devices visited in order; empty for the empty path.
  std::vector<DeviceId> devices() const {
    std::vector<DeviceId> out;
    if (links.empty()) return out;
    out.push_back(links.front().src.device);
    for (const auto& l : links) out.push_back(l.dst.device);
    return out;
  }

  bool operator==(const Path&) const = default;
};

class MacAddress {
 public:
  constexpr MacAddress() = default;
  constexpr explicit MacAddress(std::uint64_t value) : value_(value & 0xffffffffffffULL) {}

  static MacAddress parse(std::string_view text) {
    if (text.size() != 17) throw Error(ErrorCode::Parse, "invalid MAC '" + std::string(text) + "'");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < 17; ++i) {
      const char c = text[i];
      if (i % 3 == 2) {
        if (c != ':') throw Error(ErrorCode::Parse, "invalid MAC '" + std::string(text) + "'");
        continue;
      }
      int nibble;
      if (c >= '0' && c <= '9') nibble = c - '0';
      else if (c >= 'a' && c <= 'f') nibble = c - 'a' + 10;
      else if (c >= 'A' && c <= 'F') nibble = c - 'A' + 10;
      else throw Error(ErrorCode::Parse, "invalid MAC '" + std::string(text) + "'");
      v = (v << 4) | static_cast<std::uint64_t>(nibble);
    }
    return MacAddress(v);
  }

  std::string to_string() const {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out(17, ':');
    for (int byte = 0; byte < 6; ++byte) {
      const auto b = (value_ >> (8 * (5 - byte))) & 0xff;
      out[byte * 3] = kHex[b >> 4];
      out[byte * 3 + 1] = kHex[b & 0xf];
    }
    return out;
  }

  constexpr std::uint64_t value() const noexcept { return value_; }
  auto operator<=>(const MacAddress&) const = default;

 private:
  std::uint64_t value_ = 0;
};

/// Locally administered MAC used when a host entry carries none:
/// 02:<low 24 bits of device>:<16-bit port>.
inline MacAddress default_host_mac(const ConnectPoint& attach) {
  const auto dev = std::stoull(attach.device.str().substr(3), nullptr, 16);
  return MacAddress((0x02ULL << 40) | ((dev & 0xffffffULL) << 16) | (attach.port & 0xffffU));
}

struct Host {
  std::string id;
  ConnectPoint attach;
  std::optional<MacAddress> mac;

  MacAddress effective_mac() const { return mac.value_or(default_host_mac(attach)); }

  bool operator==(const Host&) const = default;
};

}  // namespace intentd

template <>
struct std::hash<intentd::DeviceId> {
  std::size_t operator()(const intentd::DeviceId& d) const noexcept {
    return std::hash<std::string>{}(d.str());
  }
};

namespace intentd {

/// Validated, immutable network graph. Links are held in both directions.
class Topology {
 public:
  struct DeclaredLink {
    ConnectPoint src;
    ConnectPoint dst;
    double weight = 1.0;
  };

  /// Validates and freezes a topology. Links are declared once and expanded
  /// to both directions here.
  static Topology create(std::map<DeviceId, std::set<PortNumber>> devices,
                         const std::vector<DeclaredLink>& links,
                         const std::vector<Host>& hosts) {
    Topology t;
    t.ports_ = std::move(devices);
    for (const auto& [dev, ports] : t.ports_) {
      for (auto p : ports) {
        if (p < 1) throw Error(ErrorCode::Validation, "device " + dev.str() + " declares port 0");
      }
      t.index_.emplace(dev, t.order_.size());
      t.order_.push_back(dev);
    }
    t.adjacency_.resize(t.order_.size());

    auto require_port = [&t](const ConnectPoint& cp, const std::string& what) {
      auto it = t.ports_.find(cp.device);
      if (it == t.ports_.end()) {
        throw Error(ErrorCode::Validation, what + " references unknown device " + cp.device.str());
      }
      if (!it->second.contains(cp.port)) {
        throw Error(ErrorCode::Validation, what + " references unknown port " + cp.to_string());
      }
    };

    for (const auto& d : links) {
      const std::string name = "link " + d.src.to_string() + "-" + d.dst.to_string();
      require_port(d.src, name);
      require_port(d.dst, name);
      if (d.src.device == d.dst.device) {
        throw Error(ErrorCode::Validation, name + " connects a device to itself");
      }
      if (!(d.weight > 0.0) || !std::isfinite(d.weight)) {
        throw Error(ErrorCode::Validation, name + " has non-positive weight");
      }
      for (const auto& cp : {d.src, d.dst}) {
        if (t.link_at_.contains(cp)) {
          throw Error(ErrorCode::Validation, name + " reuses port " + cp.to_string());
        }
        t.link_at_.emplace(cp, t.links_.size());  // placeholder, fixed below
      }
      t.declared_.push_back(Link{d.src, d.dst, d.weight});
    }

    for (const auto& l : t.declared_) {
      for (const auto& dir : {l, l.reversed()}) {
        t.link_at_[dir.src] = t.links_.size();
        t.links_.push_back(dir);
      }
    }
    for (std::size_t i = 0; i < t.links_.size(); ++i) {
      t.adjacency_[t.index_.at(t.links_[i].src.device)].push_back(i);
    }
    for (auto& out : t.adjacency_) {
      std::sort(out.begin(), out.end(), [&t](std::size_t a, std::size_t b) {
        const auto& la = t.links_[a];
        const auto& lb = t.links_[b];
        return std::tie(la.dst.device, la.src.port) < std::tie(lb.dst.device, lb.src.port);
      });
    }

    for (const auto& h : hosts) {
      if (h.id.empty()) throw Error(ErrorCode::Validation, "host with empty id");
      require_port(h.attach, "host " + h.id);
      if (t.link_at_.contains(h.attach)) {
        throw Error(ErrorCode::Validation,
                    "host " + h.id + " attaches to infrastructure port " + h.attach.to_string());
      }
      if (!t.hosts_.emplace(h.id, h).second) {
        throw Error(ErrorCode::Validation, "duplicate host id " + h.id);
      }
    }
    return t;
  }

  std::size_t device_count() const noexcept { return order_.size(); }
  const std::vector<DeviceId>& devices() const noexcept { return order_; }
  const std::map<DeviceId, std::set<PortNumber>>& ports() const noexcept { return ports_; }
  /// Every link, both directions.
  const std::vector<Link>& links() const noexcept { return links_; }
  /// Links as declared, one per physical cable.
  const std::vector<Link>& declared_links() const noexcept { return declared_; }
  const std::map<std::string, Host>& hosts() const noexcept { return hosts_; }

  bool has_device(const DeviceId& d) const { return ports_.contains(d); }

  bool has_port(const ConnectPoint& cp) const {
    auto it = ports_.find(cp.device);
    return it != ports_.end() && it->second.contains(cp.port);
  }

  bool is_edge_port(const ConnectPoint& cp) const { return has_port(cp) && !link_at_.contains(cp); }

  /// Outgoing link leaving from `cp`, if that port is an infrastructure port.
  const Link* link_from(const ConnectPoint& cp) const {
    auto it = link_at_.find(cp);
    return it == link_at_.end() ? nullptr : &links_[it->second];
  }

  std::vector<ConnectPoint> edge_ports() const {
    std::vector<ConnectPoint> out;
    for (const auto& [dev, ports] : ports_) {
      for (auto p : ports) {
        ConnectPoint cp{dev, p};
        if (!link_at_.contains(cp)) out.push_back(cp);
      }
    }
    return out;
  }

  const Host* find_host(const std::string& id) const {
    auto it = hosts_.find(id);
    return it == hosts_.end() ? nullptr : &it->second;
  }

  std::optional<ConnectPoint> host(const std::string& id) const {
    auto it = hosts_.find(id);
    if (it == hosts_.end()) return std::nullopt;
    return it->second.attach;
  }

  std::size_t index_of(const DeviceId& d) const {
    auto it = index_.find(d);
    if (it == index_.end()) throw Error(ErrorCode::UnknownDevice, "unknown device " + d.str());
    return it->second;
  }

  /// Outgoing link indices of a device, ordered by (next device, local port).
  const std::vector<std::size_t>& outgoing(std::size_t device_index) const {
    return adjacency_[device_index];
  }

  bool operator==(const Topology& o) const {
    return ports_ == o.ports_ && declared_ == o.declared_ && hosts_ == o.hosts_;
  }

 private:
  std::map<DeviceId, std::set<PortNumber>> ports_;
  std::vector<DeviceId> order_;
  std::unordered_map<DeviceId, std::size_t> index_;
  std::vector<Link> declared_;
  std::vector<Link> links_;
  std::map<ConnectPoint, std::size_t> link_at_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::map<std::string, Host> hosts_;
};

namespace detail {

inline ConnectPoint json_connect_point(const nlohmann::json& j, const std::string& where) {
  if (!j.is_string()) throw Error(ErrorCode::Parse, where + ": expected connect-point string");
  return ConnectPoint::parse(j.get<std::string>());
}

}  // namespace detail

/// Parses and validates a topology document:
/// `{"devices":[{"id","ports"}], "links":[{"src","dst","weight"?}], "hosts":[{"id","attach","mac"?}]}`.
inline Topology load_topology(std::string_view document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string("topology: malformed JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("devices") || !doc["devices"].is_array()) {
    throw Error(ErrorCode::Parse, "topology: missing 'devices' array");
  }

  std::map<DeviceId, std::set<PortNumber>> devices;
  for (const auto& d : doc["devices"]) {
    if (!d.is_object() || !d.contains("id") || !d["id"].is_string() || !d.contains("ports") ||
        !d["ports"].is_array()) {
      throw Error(ErrorCode::Parse, "topology: device entries need 'id' and 'ports'");
    }
    DeviceId id(d["id"].get<std::string>());
    std::set<PortNumber> ports;
    for (const auto& p : d["ports"]) {
      if (!p.is_number_integer() || p.get<std::int64_t>() < 1 ||
          p.get<std::int64_t>() > std::numeric_limits<PortNumber>::max()) {
        throw Error(ErrorCode::Validation, "topology: device " + id.str() + " has invalid port " + p.dump());
      }
      if (!ports.insert(p.get<PortNumber>()).second) {
        throw Error(ErrorCode::Validation, "topology: device " + id.str() + " lists port " + p.dump() + " twice");
      }
    }
    if (!devices.emplace(id, std::move(ports)).second) {
      throw Error(ErrorCode::Validation, "topology: duplicate device id " + id.str());
    }
  }

  std::vector<Topology::DeclaredLink> links;
  if (doc.contains("links")) {
    if (!doc["links"].is_array()) throw Error(ErrorCode::Parse, "topology: 'links' must be an array");
    for (const auto& l : doc["links"]) {
      if (!l.is_object() || !l.contains("src") || !l.contains("dst")) {
        throw Error(ErrorCode::Parse, "topology: link entries need 'src' and 'dst'");
      }
      Topology::DeclaredLink link{detail::json_connect_point(l["src"], "link src"),
                                  detail::json_connect_point(l["dst"], "link dst")};
      if (l.contains("weight")) {
        if (!l["weight"].is_number()) throw Error(ErrorCode::Parse, "topology: link weight must be a number");
        link.weight = l["weight"].get<double>();
      }
      links.push_back(link);
    }
  }

  std::vector<Host> hosts;
  if (doc.contains("hosts")) {
    if (!doc["hosts"].is_array()) throw Error(ErrorCode::Parse, "topology: 'hosts' must be an array");
    for (const auto& h : doc["hosts"]) {
      if (!h.is_object() || !h.contains("id") || !h["id"].is_string() || !h.contains("attach")) {
        throw Error(ErrorCode::Parse, "topology: host entries need 'id' and 'attach'");
      }
      Host host{h["id"].get<std::string>(), detail::json_connect_point(h["attach"], "host attach"), std::nullopt};
      if (h.contains("mac")) {
        if (!h["mac"].is_string()) throw Error(ErrorCode::Parse, "topology: host mac must be a string");
        host.mac = MacAddress::parse(h["mac"].get<std::string>());
      }
      hosts.push_back(std::move(host));
    }
  }
  return Topology::create(std::move(devices), links, hosts);
}

/// Canonical document form: devices sorted by id, ports ascending, links in
/// declaration order, hosts sorted by id. Weight is omitted when it is 1.
inline nlohmann::json to_json(const Topology& topo) {
  nlohmann::json doc;
  doc["devices"] = nlohmann::json::array();
  for (const auto& [dev, ports] : topo.ports()) {
    doc["devices"].push_back({{"id", dev.str()}, {"ports", std::vector<PortNumber>(ports.begin(), ports.end())}});
  }
  doc["links"] = nlohmann::json::array();
  for (const auto& l : topo.declared_links()) {
    nlohmann::json j{{"src", l.src.to_string()}, {"dst", l.dst.to_string()}};
    if (l.weight != 1.0) j["weight"] = l.weight;
    doc["links"].push_back(std::move(j));
  }
  doc["hosts"] = nlohmann::json::array();
  for (const auto& [id, h] : topo.hosts()) {
    nlohmann::json j{{"id", id}, {"attach", h.attach.to_string()}};
    if (h.mac) j["mac"] = h.mac->to_string();
    doc["hosts"].push_back(std::move(j));
  }
  return doc;
}

inline std::string serialize(const Topology& topo) { return to_json(topo).dump(2); }

/// Minimum-weight path from `src` to `dst`. Among equal-cost paths the one
/// whose sequence of next-device ids is lexicographically smallest wins;
/// parallel links to the same device are broken by the lower local port.
inline Path shortest_path(const Topology& topo, const DeviceId& src, const DeviceId& dst) {
  const std::size_t s = topo.index_of(src);
  const std::size_t t = topo.index_of(dst);
  if (s == t) return Path{};

  const auto& links = topo.links();
  const std::size_t n = topo.device_count();
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Links are symmetric, so distance-to-dst is a Dijkstra run rooted at dst.
  auto dijkstra = [&](std::size_t root) {
    std::vector<double> dist(n, kInf);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist[root] = 0.0;
    queue.emplace(0.0, root);
    while (!queue.empty()) {
      auto [d, u] = queue.top();
      queue.pop();
      if (d > dist[u]) continue;
      for (auto li : topo.outgoing(u)) {
        const auto v = topo.index_of(links[li].dst.device);
        const double nd = d + links[li].weight;
        if (nd < dist[v]) {
          dist[v] = nd;
          queue.emplace(nd, v);
        }
      }
    }
    return dist;
  };

  const auto to_dst = dijkstra(t);
  if (to_dst[s] == kInf) {
    throw Error(ErrorCode::NoPath, "no path from " + src.str() + " to " + dst.str());
  }

  // Walk greedily from src: every step must stay on some shortest path, and
  // outgoing() is already sorted by next-device id.
  const double total = to_dst[s];
  const double eps = 1e-9 * std::max(1.0, total);
  Path path;
  std::size_t u = s;
  double travelled = 0.0;
  while (u != t) {
    bool advanced = false;
    for (auto li : topo.outgoing(u)) {
      const auto& l = links[li];
      const auto v = topo.index_of(l.dst.device);
      if (std::abs(travelled + l.weight + to_dst[v] - total) <= eps) {
        path.links.push_back(l);
        travelled += l.weight;
        u = v;
        advanced = true;
        break;
      }
    }
    if (!advanced) {
      throw Error(ErrorCode::NoPath, "no path from " + src.str() + " to " + dst.str());
    }
  }
  return path;
}

}  // namespace intentd
