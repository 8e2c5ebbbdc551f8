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

#include "qhist/dsl.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "qhist/counterfactual.hpp"
#include "qhist/scenarios.hpp"

namespace qhist::dsl {
namespace {

std::string scenario_path(const char* name) { return std::string(QHIST_SOURCE_DIR) + "/scenarios/" + name; }

constexpr const char* kQubits = R"(
system a: dim 2;
system b: dim 2 labels 0 1;
)";

/// Runs `f` and returns the ParseError it throws.
template <class F>
ParseError parse_error(F&& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e;
  }
  ADD_FAILURE() << "no ParseError thrown";
  return ParseError({0, 0}, "");
}

ParseError parse_error_of(const std::string& text) {
  return parse_error([&] { parse_scenario(text); });
}

TEST(Dsl, EmptyDocument) {
  EXPECT_TRUE(parse_scenario("").empty());
  EXPECT_TRUE(parse_scenario("  # only a comment\n\n").empty());
  EXPECT_EQ(print_scenario(parse_scenario("")), "");
}

TEST(Dsl, HardyAmplitudes) {
  const auto doc = parse_scenario(std::string(kQubits) + "state h on (a, b) = (|0,0> + |0,1> + |1,0>) / sqrt(3);\n");
  const Ket& h = doc.find_state("h")->value;
  EXPECT_EQ(h.amplitude({"1", "1"}), Complex(0.0));
  EXPECT_EQ(h.amplitude({"0", "1"}), Complex(1.0 / std::sqrt(3.0)));
  EXPECT_EQ(h.layout(), scenarios::hardy_state().layout());
  EXPECT_EQ(h.amplitudes(), scenarios::hardy_state().amplitudes());
}

TEST(Dsl, ComplexAmplitudesAndTensor) {
  const auto doc = parse_scenario(std::string(kQubits) +
                                  "state p on (a) = (|0> + i * |1>) / sqrt(2);\n"
                                  "state q on (b) = |1>;\n"
                                  "state pq on (a, b) = tensor(p, q);\n");
  const Ket& pq = doc.find_state("pq")->value;
  EXPECT_NEAR(std::abs(pq.amplitude({"1", "1"}) - Complex(0.0, 1.0 / std::sqrt(2.0))), 0.0, 1e-16);
  EXPECT_EQ(pq.amplitude({"0", "0"}), Complex(0.0));
}

TEST(Dsl, DimensionMismatchPointsAtTheOffendingTerm) {
  // "state s on (a, b) = |0,0> + |0>;" : the second ket starts at column 29.
  const auto e = parse_error_of(std::string(kQubits) + "state s on (a, b) = |0,0> + |0>;\n");
  EXPECT_EQ(e.line(), 4u);
  EXPECT_EQ(e.column(), 29u);
  EXPECT_NE(e.message().find("dimension mismatch"), std::string::npos);
  EXPECT_EQ(std::string(e.what()).rfind("4:29: ", 0), 0u);
}

TEST(Dsl, SystemLabelCountMustMatchDim) {
  const auto e = parse_error_of("system a: dim 3 labels x y;");
  EXPECT_EQ(e.line(), 1u);
  EXPECT_NE(e.message().find("dimension mismatch"), std::string::npos);
}

TEST(Dsl, UnknownNames) {
  EXPECT_NE(parse_error_of("state s on (q) = |0>;").message().find("unknown subsystem 'q'"), std::string::npos);
  EXPECT_NE(parse_error_of(std::string(kQubits) + "state s on (a) = t;").message().find("unknown state 't'"),
            std::string::npos);
  EXPECT_NE(parse_error_of(std::string(kQubits) + "state s on (a) = cos(1) * |0>;").message().find("unknown function"),
            std::string::npos);
  EXPECT_NE(parse_error_of(std::string(kQubits) + "state s on (a) = |0>;\nfamily f: initial s; interval V; slot t { x = I; };")
                .message()
                .find("unknown unitary 'V'"),
            std::string::npos);
}

TEST(Dsl, SyntaxErrorsCarryPositions) {
  auto e = parse_error_of("system a dim 2;");
  EXPECT_EQ(e.line(), 1u);
  EXPECT_EQ(e.column(), 10u);
  e = parse_error_of("\n\n  frobnicate;");
  EXPECT_EQ(e.line(), 3u);
  EXPECT_EQ(e.column(), 3u);
  e = parse_error_of(std::string(kQubits) + "state s on (a) = |0;");
  EXPECT_EQ(e.line(), 4u);
  EXPECT_NE(e.message().find("unterminated"), std::string::npos);
  e = parse_error_of("system i: dim 2;");
  EXPECT_NE(e.message().find("reserved"), std::string::npos);
  e = parse_error_of("system a: dim 2;\nsystem a: dim 2;");
  EXPECT_EQ(e.line(), 2u);
}

TEST(Dsl, NonOrthonormalRulesAreRejectedAtTheDeclaration) {
  const auto e = parse_error_of(std::string(kQubits) + "\nunitary U on (a) {\n  |0> -> |0>;\n  |0> -> |1>;\n} complete;\n");
  EXPECT_EQ(e.line(), 5u);
  EXPECT_NE(e.message().find("unitary 'U'"), std::string::npos);
}

TEST(Dsl, BadDecompositionIsReported) {
  const auto e = parse_error_of(std::string(kQubits) +
                                "state s on (a) = |0>;\n"
                                "family f: initial s;\n"
                                "  slot t { x = [a: |0>]; y = [a: (|0> + |1>) / sqrt(2)]; }\n;");
  EXPECT_EQ(e.line(), 6u);
}

TEST(Dsl, ShippedFilesMatchBuildersBitForBit) {
  for (auto [file, family, builder] :
       {std::tuple{"hardy_eq6.qh", "f6", &scenarios::family_eq6}, std::tuple{"hardy_eq7.qh", "f7", &scenarios::family_eq7}}) {
    const auto doc = load_scenario(scenario_path(file));
    const auto from_file = probability_table(doc.family(family));
    const auto from_code = probability_table(builder());
    ASSERT_EQ(from_file.entries().size(), from_code.entries().size()) << file;
    for (std::size_t i = 0; i < from_file.entries().size(); ++i) {
      EXPECT_EQ(from_file.labels(from_file.entries()[i].first), from_code.labels(from_code.entries()[i].first));
      EXPECT_EQ(from_file.entries()[i].second, from_code.entries()[i].second) << file << " entry " << i;
    }
  }
}

TEST(Dsl, QueryMatchesTheLibraryQuery) {
  const auto doc = load_scenario(scenario_path("hardy_eq6.qh"));
  const QueryDecl* q = doc.find_query("sr");
  ASSERT_NE(q, nullptr);
  EXPECT_EQ(q->family, "f6");
  EXPECT_EQ(q->pivot, "t1");
  EXPECT_EQ(q->swap_slot, "t2");
  EXPECT_EQ(q->swap_event, "X_b");
  ASSERT_EQ(q->actual.size(), 1u);
  EXPECT_EQ(q->actual[0].second, "Z_b^-");

  const auto e = parse_error_of(print_scenario(doc) + "query bad: counterfactual family f6 actual t3=Z_b^- pivot t9 swap t2=X_b;\n");
  EXPECT_NE(e.message().find("no slot 't9'"), std::string::npos);
}

TEST(Dsl, PrintParseRoundTrip) {
  std::vector<std::string> texts;
  for (const char* f : {"hardy_eq6.qh", "hardy_eq7.qh"}) texts.push_back(print_scenario(load_scenario(scenario_path(f))));
  texts.push_back(std::string(kQubits) +
                  "state p on (a) = -(|0> - 2.5e-1 * i * |1>) / sqrt(1.0625);\n"
                  "state q on (b) = |1>;\n"
                  "state ab on (a, b) = tensor(p, q) * (1 - 0);\n");
  texts.push_back(std::string(kQubits) +
                  "state s on (a, b) = |0,0>;\n"
                  "unitary X on (a) { |0> -> |1>; |1> -> |0>; } complete;\n"
                  "unitary C on (a, b) { |1,0> -> |1,1>; } complete;\n"
                  "family g: initial s;\n"
                  "  interval X; slot t1 { up = [a: |0>]; }\n"
                  "  interval X, C; slot t2 { one = [b: |1>]; mixed = [a, b: |0,0>] + [a, b: |1,0>]; }\n;\n"
                  "query q: counterfactual family g actual one pivot root swap t1=REST outcome t2;\n");
  for (const auto& text : texts) {
    const auto first = parse_scenario(text);
    const std::string printed = print_scenario(first);
    const auto second = parse_scenario(printed);
    EXPECT_TRUE(equivalent(first, second)) << printed;
    EXPECT_EQ(print_scenario(second), printed);
  }
}

TEST(Dsl, EquivalenceNoticesChanges) {
  const auto a = parse_scenario(std::string(kQubits) + "state s on (a) = |0>;");
  const auto b = parse_scenario(std::string(kQubits) + "state s on (a) = |1>;");
  EXPECT_FALSE(equivalent(a, b));
  EXPECT_TRUE(equivalent(a, a));
}

TEST(Dsl, MissingFileIsAnError) {
  EXPECT_THROW(load_scenario(scenario_path("does_not_exist.qh")), std::runtime_error);
}

}  // namespace
}  // namespace qhist::dsl
