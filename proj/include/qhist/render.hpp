// Copyright 2026 The qhist Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

/**
 * @file
 * Text output: numbers, branch trees as indented text or DOT, and a reader
 * for the DOT subset this file writes.
 */

#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "qhist/histories.hpp"

namespace qhist {

/// 12 significant digits, trailing zeros kept: 1 -> "1.00000000000".
inline std::string format_number(double x) {
  if (x == 0.0) x = 0.0;  // no "-0"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%#.12g", x);
  return buf;
}

using LabelMap = std::function<std::string(std::string_view)>;

inline std::string identity_label(std::string_view s) { return std::string(s); }

/// One node per line, two spaces of indentation per level.
inline std::string render_ascii(const BranchTree& tree, const LabelMap& label = identity_label) {
  std::string out;
  std::function<void(const BranchNode&, std::size_t)> walk = [&](const BranchNode& n, std::size_t depth) {
    out += std::string(2 * depth, ' ') + label(n.label) + "  p=" + format_number(n.conditional) +
           "  P=" + format_number(n.absolute) + "\n";
    for (const auto& c : n.children) walk(c, depth + 1);
  };
  walk(tree.root, 0);
  return out;
}

namespace detail {

inline std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

/**
 * A digraph whose node ids are the label paths from the root joined by "/".
 * Node labels carry the event label and the absolute probability; edges carry
 * the conditional probability of the child.
 */
inline std::string render_dot(const BranchTree& tree, std::string_view name = "tree",
                              const LabelMap& label = identity_label) {
  std::string nodes;
  std::string edges;
  std::function<void(const BranchNode&, const std::string&)> walk = [&](const BranchNode& n, const std::string& id) {
    nodes += "  " + detail::dot_quote(id) + " [label=" + detail::dot_quote(label(n.label) + "\nP=" + format_number(n.absolute)) +
             "];\n";
    for (const auto& c : n.children) {
      const std::string child = id + "/" + label(c.label);
      edges += "  " + detail::dot_quote(id) + " -> " + detail::dot_quote(child) +
               " [label=" + detail::dot_quote(format_number(c.conditional)) + "];\n";
      walk(c, child);
    }
  };
  walk(tree.root, label(tree.root.label));
  return "digraph " + detail::dot_quote(name) + " {\n  node [shape=box];\n" + nodes + edges + "}\n";
}

struct DotGraph {
  std::string name;
  std::vector<std::pair<std::string, std::string>> nodes;               // id, label
  std::vector<std::tuple<std::string, std::string, std::string>> edges;  // from, to, label
};

/// Reads back the output of render_dot (quoted ids, one statement per line).
inline DotGraph parse_dot(std::string_view text) {
  DotGraph g;
  std::size_t i = 0;
  auto fail = [&](const std::string& what) { throw std::runtime_error("dot: " + what + " at offset " + std::to_string(i)); };
  auto skip = [&] {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\n' || text[i] == '\t' || text[i] == '\r')) ++i;
  };
  auto quoted = [&]() -> std::string {
    skip();
    if (i >= text.size() || text[i] != '"') fail("expected a quoted string");
    ++i;
    std::string out;
    while (i < text.size() && text[i] != '"') {
      if (text[i] == '\\' && i + 1 < text.size()) {
        ++i;
        out += text[i] == 'n' ? '\n' : text[i];
      } else {
        out += text[i];
      }
      ++i;
    }
    if (i >= text.size()) fail("unterminated string");
    ++i;
    return out;
  };
  auto literal = [&](std::string_view s) {
    skip();
    if (text.substr(i, s.size()) != s) fail("expected '" + std::string(s) + "'");
    i += s.size();
  };
  auto attr_label = [&]() -> std::string {
    literal("[label=");
    std::string l = quoted();
    literal("];");
    return l;
  };

  literal("digraph");
  g.name = quoted();
  literal("{");
  literal("node [shape=box];");
  while (true) {
    skip();
    if (i < text.size() && text[i] == '}') break;
    const std::string id = quoted();
    skip();
    if (text.substr(i, 2) == "->") {
      i += 2;
      const std::string to = quoted();
      g.edges.emplace_back(id, to, attr_label());
    } else {
      g.nodes.emplace_back(id, attr_label());
    }
  }
  return g;
}

}  // namespace qhist
