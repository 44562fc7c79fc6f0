#pragma once

#include <memory>

#include "intentd/net_model.hpp"

namespace intentd {

/// Five switches in a line, dN/4 <-> dN+1/3, with edge ports 1 and 2 on every
/// switch and hosts h1@d1/1, h2@d5/1. Mirrors topologies/chain5.json.
inline constexpr const char* kDefaultTopology = R"({
  "devices": [
    {
      "id": "of:0000000000000001",
      "ports": [
        1,
        2,
        4
      ]
    },
    {
      "id": "of:0000000000000002",
      "ports": [
        1,
        2,
        3,
        4
      ]
    },
    {
      "id": "of:0000000000000003",
      "ports": [
        1,
        2,
        3,
        4
      ]
    },
    {
      "id": "of:0000000000000004",
      "ports": [
        1,
        2,
        3,
        4
      ]
    },
    {
      "id": "of:0000000000000005",
      "ports": [
        1,
        2,
        3
      ]
    }
  ],
  "links": [
    {
      "src": "of:0000000000000001/4",
      "dst": "of:0000000000000002/3"
    },
    {
      "src": "of:0000000000000002/4",
      "dst": "of:0000000000000003/3"
    },
    {
      "src": "of:0000000000000003/4",
      "dst": "of:0000000000000004/3"
    },
    {
      "src": "of:0000000000000004/4",
      "dst": "of:0000000000000005/3"
    }
  ],
  "hosts": [
    {
      "id": "h1",
      "attach": "of:0000000000000001/1"
    },
    {
      "id": "h2",
      "attach": "of:0000000000000005/1"
    }
  ]
})";

inline std::shared_ptr<const Topology> default_topology() {
  return std::make_shared<const Topology>(load_topology(kDefaultTopology));
}

}  // namespace intentd
