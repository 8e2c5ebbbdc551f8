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

#include "qhist/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

namespace qhist::cli {
namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  Run r;
  r.code = dispatch(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string scenario_path(const char* name) { return std::string(QHIST_SOURCE_DIR) + "/scenarios/" + name; }

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

std::size_t count_leaves(const std::string& ascii) {
  // A line is a leaf when the next line is not indented deeper.
  std::vector<std::size_t> depth;
  std::istringstream in(ascii);
  for (std::string line; std::getline(in, line);) depth.push_back(line.find_first_not_of(' '));
  std::size_t leaves = 0;
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (i + 1 == depth.size() || depth[i + 1] <= depth[i]) ++leaves;
  }
  return leaves;
}

TEST(Cli, SrOnBuiltins) {
  auto r = run({"sr", "builtin:hardy-eq6"});
  EXPECT_EQ(r.code, kOk);
  EXPECT_EQ(r.out, "STRICT: X_b^+ with probability 1.00000000000\n");
  r = run({"sr", "builtin:hardy-eq7"});
  EXPECT_EQ(r.code, kOk);
  EXPECT_EQ(r.out, "WEAK: X_b^+ with probability 0.700000000000\n");
}

TEST(Cli, SrOnScenarioFilesAndNotation) {
  auto r = run({"sr", scenario_path("hardy_eq6.qh")});
  EXPECT_EQ(r.code, kOk);
  EXPECT_EQ(r.out, "STRICT: X_b^+ with probability 1.00000000000\n");
  r = run({"sr", scenario_path("hardy_eq7.qh"), "--notation", "hardy"});
  EXPECT_EQ(r.out, "WEAK: D_2=0 with probability 0.700000000000\n");
  r = run({"sr", "builtin:hardy-eq6", "--notation", "stapp"});
  EXPECT_EQ(r.out, "STRICT: R2+ with probability 1.00000000000\n");
}

TEST(Cli, CheckReportsViolatorsAndExitsOne) {
  const auto r = run({"check", "builtin:hardy-two-sided", "--a-final", "pointer-x"});
  EXPECT_EQ(r.code, kInconsistent);
  EXPECT_TRUE(contains(r.out, "INCONSISTENT: 4 violating pairs")) << r.out;
  EXPECT_TRUE(contains(r.out, "|D|=0.0833333333333")) << r.out;
  const auto ok = run({"check", "builtin:hardy-eq6"});
  EXPECT_EQ(ok.code, kOk);
  EXPECT_TRUE(contains(ok.out, "consistent\n"));
  const auto weak = run({"check", "builtin:hardy-eq7", "--mode", "weak"});
  EXPECT_EQ(weak.code, kOk);
  EXPECT_TRUE(contains(weak.out, "|Re D|"));
}

TEST(Cli, SrOnInconsistentFamilyIsUnderivable) {
  const auto r = run({"sr", "builtin:hardy-two-sided", "--a-final", "pointer-x", "--a-branch", "X"});
  EXPECT_EQ(r.code, kInconsistent);
  EXPECT_TRUE(contains(r.out, "UNDERIVABLE")) << r.out;
}

TEST(Cli, ProbsListsNonzeroHistoriesAndTotal) {
  const auto r = run({"probs", "builtin:hardy-eq6"});
  EXPECT_EQ(r.code, kOk);
  EXPECT_TRUE(contains(r.out, "total: 1.00000000000"));
  EXPECT_TRUE(contains(r.out, "0.0833333333333"));
  const auto all = run({"probs", "builtin:hardy-eq6", "--all"});
  EXPECT_GT(std::count(all.out.begin(), all.out.end(), '\n'), std::count(r.out.begin(), r.out.end(), '\n'));
}

TEST(Cli, TreeLeafCounts) {
  auto r = run({"tree", "builtin:hardy-eq6"});
  EXPECT_EQ(r.code, kOk);
  EXPECT_EQ(count_leaves(r.out), 6u) << r.out;
  r = run({"tree", "builtin:hardy-eq7"});
  EXPECT_EQ(count_leaves(r.out), 7u) << r.out;
  EXPECT_TRUE(contains(r.out, "X_b^+  p=0.900000000000  P=0.375000000000")) << r.out;
}

TEST(Cli, RootOnlyTreeIsOneLine) {
  const BranchTree t{BranchNode{std::string(kRootSlot), "Psi0", 1.0, 1.0, {}}};
  EXPECT_EQ(render_ascii(t), "Psi0  p=1.00000000000  P=1.00000000000\n");
  const auto g = parse_dot(render_dot(t));
  EXPECT_EQ(g.nodes.size(), 1u);
  EXPECT_TRUE(g.edges.empty());
}

TEST(Cli, DotOutputReparsesToTheSameGraph) {
  const auto path = std::filesystem::temp_directory_path() / "qhist_test_tree.dot";
  const auto r = run({"tree", "builtin:hardy-eq7", "--format", "dot", "--out", path.string()});
  ASSERT_EQ(r.code, kOk);
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(path);
  std::stringstream text;
  text << in.rdbuf();
  const auto g = parse_dot(text.str());
  std::filesystem::remove(path);

  const BranchTree tree = branch_tree(scenarios::family_eq7());
  std::set<std::string> want_nodes;
  std::set<std::pair<std::string, std::string>> want_edges;
  std::function<void(const BranchNode&, const std::string&)> walk = [&](const BranchNode& n, const std::string& id) {
    want_nodes.insert(id);
    for (const auto& c : n.children) {
      want_edges.insert({id, id + "/" + c.label});
      walk(c, id + "/" + c.label);
    }
  };
  walk(tree.root, tree.root.label);

  std::set<std::string> nodes;
  for (const auto& [id, label] : g.nodes) nodes.insert(id);
  std::set<std::pair<std::string, std::string>> edges;
  for (const auto& [from, to, label] : g.edges) edges.insert({from, to});
  EXPECT_EQ(nodes, want_nodes);
  EXPECT_EQ(edges, want_edges);
  EXPECT_EQ(nodes.size(), 1u + 2u + 4u + 7u);
}

TEST(Cli, CounterfactualCommand) {
  auto r = run({"cf", "builtin:hardy-eq6", "--actual", "t3=Z_b^-", "--pivot", "t1", "--swap", "t2=X_b"});
  EXPECT_EQ(r.code, kOk);
  EXPECT_TRUE(contains(r.out, "  [0]_a  1.00000000000")) << r.out;
  EXPECT_TRUE(contains(r.out, "STRICT: X_b^+ with probability 1.00000000000")) << r.out;
  r = run({"cf", scenario_path("hardy_eq7.qh"), "--query", "sr"});
  EXPECT_EQ(r.code, kOk);
  EXPECT_TRUE(contains(r.out, "WEAK: X_b^+ with probability 0.700000000000")) << r.out;
  r = run({"cf", "builtin:gun-beaker", "--actual", "aim=at-beaker", "--actual", "block=in-place", "--actual",
           "outcome=unbroken", "--pivot", "root", "--swap", "block=removed"});
  EXPECT_EQ(r.code, kOk);
  EXPECT_TRUE(contains(r.out, "WEAK: unbroken with probability 0.750000000000")) << r.out;
}

TEST(Cli, GunBeaker) {
  auto r = run({"gun-beaker", "--pivot", "before-aim"});
  EXPECT_EQ(r.code, kOk);
  EXPECT_TRUE(contains(r.out, "  shattered  0.250000000000")) << r.out;
  r = run({"gun-beaker", "--pivot", "after-aim"});
  EXPECT_TRUE(contains(r.out, "  shattered  1.00000000000")) << r.out;
  EXPECT_EQ(run({"gun-beaker", "--pivot", "sideways"}).code, kUsage);
  EXPECT_EQ(run({"gun-beaker"}).code, kUsage);
}

TEST(Cli, AuditLocality) {
  const auto r = run({"audit-locality"});
  EXPECT_EQ(r.code, kOk);
  EXPECT_TRUE(contains(r.out, "X_b X_b^+  0.416666666667  0.416666666667")) << r.out;
  EXPECT_TRUE(contains(r.out, "agree"));
}

TEST(Cli, SearchFrameworksCountsRows) {
  const auto r = run({"search-frameworks"});
  EXPECT_EQ(r.code, kOk);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1 + 36 + 2);
  EXPECT_FALSE(contains(r.out, "hybrid rows: 0\n"));
  EXPECT_FALSE(contains(r.out, "reversed rows: 0\n"));
}

TEST(Cli, UsageAndParseErrorsExitTwo) {
  EXPECT_EQ(run({}).code, kUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kUsage);
  EXPECT_EQ(run({"sr"}).code, kUsage);
  EXPECT_EQ(run({"sr", "builtin:nope"}).code, kUsage);
  EXPECT_EQ(run({"sr", "builtin:hardy-eq6", "--notation", "klingon"}).code, kUsage);
  EXPECT_EQ(run({"tree", "builtin:hardy-eq6", "--format", "svg"}).code, kUsage);
  EXPECT_EQ(run({"check", "builtin:hardy-eq6", "--mode", "strong"}).code, kUsage);
  EXPECT_EQ(run({"cf", "builtin:hardy-eq6", "--pivot", "t1"}).code, kUsage);
  EXPECT_EQ(run({"check", scenario_path("missing.qh")}).code, kUsage);

  const auto bad = std::filesystem::temp_directory_path() / "qhist_test_bad.qh";
  {
    std::ofstream f(bad);
    f << "system a: dim 2;\nstate s on (a) = |0,0>;\n";
  }
  const auto r = run({"check", bad.string()});
  std::filesystem::remove(bad);
  EXPECT_EQ(r.code, kUsage);
  EXPECT_TRUE(contains(r.err, ":2:18: dimension mismatch")) << r.err;
}

TEST(Cli, HelpExitsZero) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, kOk);
  EXPECT_TRUE(contains(r.out, "search-frameworks"));
}

}  // namespace
}  // namespace qhist::cli
