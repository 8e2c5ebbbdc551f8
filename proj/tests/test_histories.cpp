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

#include "qhist/histories.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

namespace qhist {
namespace {

const SystemLayout kQubit = SystemLayout::single("q", {"0", "1"});

Ket q0() { return Ket::basis(kQubit, {"0"}); }
Ket q1() { return Ket::basis(kQubit, {"1"}); }
Operator proj(const Ket& k) { return projector_from_kets({k}); }

TimeSlot z_slot(const std::string& label) { return TimeSlot(label, {Event{"0", proj(q0())}, Event{"1", proj(q1())}}); }
TimeSlot x_slot(const std::string& label) {
  return TimeSlot(label, {Event{"+", proj((q0() + q1()) / std::sqrt(2.0))}, Event{"-", proj((q0() - q1()) / std::sqrt(2.0))}});
}

HistoryFamily zx_family(const Ket& init) {
  const Operator id = Operator::identity(kQubit);
  return HistoryFamily(init, {id, id}, {z_slot("t1"), x_slot("t2")});
}

Operator random_unitary(std::size_t n, std::mt19937& rng) {
  std::normal_distribution<double> g;
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = Complex(g(rng), g(rng));
  }
  Eigen::HouseholderQR<Matrix> qr(m);
  return Operator(SystemLayout::single("s", [n] {
                    std::vector<std::string> l;
                    for (std::size_t i = 0; i < n; ++i) l.push_back(std::to_string(i));
                    return l;
                  }()),
                  qr.householderQ());
}

Ket random_state(const SystemLayout& l, std::mt19937& rng) {
  std::normal_distribution<double> g;
  Vector v(static_cast<Eigen::Index>(l.dim()));
  for (auto& x : v) x = Complex(g(rng), g(rng));
  return Ket(l, v).normalized();
}

/// Projectors onto groups of basis states, given as a label per basis index.
TimeSlot grouped_slot(const std::string& label, const SystemLayout& l, const std::vector<int>& group) {
  std::vector<Event> events;
  const int groups = *std::max_element(group.begin(), group.end()) + 1;
  for (int g = 0; g < groups; ++g) {
    Matrix p = Matrix::Zero(static_cast<Eigen::Index>(l.dim()), static_cast<Eigen::Index>(l.dim()));
    for (std::size_t i = 0; i < group.size(); ++i) {
      if (group[i] == g) p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    }
    if (p.isZero(0.0)) continue;
    events.push_back(Event{"g" + std::to_string(g), Operator(l, p)});
  }
  return TimeSlot(label, std::move(events));
}

TEST(TimeSlot, SynthesizesRest) {
  const TimeSlot s("t", {Event{"0", proj(q0())}});
  ASSERT_EQ(s.size(), 2u);
  EXPECT_TRUE(s.has_rest());
  EXPECT_EQ(s.events()[1].label, kRestLabel);
  EXPECT_TRUE(s.events()[1].synthetic);
  EXPECT_LT((s.events()[1].projector.matrix() - proj(q1()).matrix()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_FALSE(z_slot("t").has_rest());
}

TEST(TimeSlot, RejectsBadDecompositions) {
  EXPECT_THROW(TimeSlot("t", {Event{"0", proj(q0())}, Event{"+", proj((q0() + q1()) / std::sqrt(2.0))}}), HistoryError);
  EXPECT_THROW(TimeSlot("t", {Event{"0", proj(q0())}, Event{"0", proj(q1())}}), HistoryError);
  EXPECT_THROW(TimeSlot("t", {Event{"REST", proj(q0())}}), HistoryError);
  EXPECT_THROW(TimeSlot("t", {Event{"x", Operator(kQubit, Matrix::Identity(2, 2) * 2.0)}}), HistoryError);
  EXPECT_THROW(TimeSlot("t", {}), HistoryError);
}

TEST(HistoryFamily, Validation) {
  const Operator id = Operator::identity(kQubit);
  EXPECT_THROW(HistoryFamily(q0(), {id}, {z_slot("t1"), z_slot("t2")}), HistoryError);
  EXPECT_THROW(HistoryFamily(q0() * Complex(2.0), {id}, {z_slot("t1")}), HistoryError);
  EXPECT_THROW(HistoryFamily(q0(), {Operator(kQubit, Matrix::Identity(2, 2) * 2.0)}, {z_slot("t1")}), HistoryError);
  EXPECT_THROW(HistoryFamily(q0(), {id, id}, {z_slot("t1"), z_slot("t1")}), HistoryError);
  EXPECT_THROW(HistoryFamily(q0(), {id}, {z_slot("root")}), HistoryError);
}

TEST(HistoryFamily, HistoriesAreLexicographic) {
  const auto f = zx_family(q0());
  const auto hs = f.histories();
  ASSERT_EQ(hs.size(), 4u);
  EXPECT_EQ(hs[1], (History{0, 1}));
  EXPECT_EQ(hs[2], (History{1, 0}));
  EXPECT_EQ(format_history(f.labels(hs[3])), "(1, -)");
  EXPECT_EQ(f.history({"1", "+"}), (History{1, 0}));
}

TEST(Consistency, InterferingFamilyIsRejected) {
  const auto f = zx_family((q0() + q1()) / std::sqrt(2.0));
  const auto r = check_consistency(f);
  EXPECT_FALSE(r.consistent());
  EXPECT_NEAR(r.max_off_diagonal, 0.25, 1e-15);
  EXPECT_THROW(probability_table(f), InconsistentFamily);
  try {
    probability_table(f);
  } catch (const InconsistentFamily& e) {
    EXPECT_EQ(e.report().violations.size(), 2u);
  }
}

TEST(Consistency, WeakAcceptsPurelyImaginaryOverlaps) {
  const auto f = zx_family((q0() + Complex(0.0, 1.0) * q1()) / std::sqrt(2.0));
  EXPECT_FALSE(check_consistency(f, ConsistencyMode::medium).consistent());
  const auto weak = check_consistency(f, ConsistencyMode::weak);
  EXPECT_TRUE(weak.consistent());
  EXPECT_NEAR(std::abs(weak.d(0, 2)), 0.25, 1e-15);
  Tolerances t;
  t.mode = ConsistencyMode::weak;
  const auto table = probability_table(f, t);
  EXPECT_NEAR(table.total(), 1.0, 1e-15);
  for (const auto& [h, p] : table.entries()) EXPECT_NEAR(p, 0.25, 1e-15);
}

TEST(Consistency, DecoherenceMatrixIsHermitianAndSumsToOne) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Operator u1 = random_unitary(4, rng);
    const Operator u2 = random_unitary(4, rng);
    const auto& l = u1.layout();
    const Ket init = random_state(l, rng);
    const HistoryFamily f(init, {u1, u2}, {grouped_slot("t1", l, {0, 1, 1, 2}), grouped_slot("t2", l, {0, 0, 1, 1})});
    const auto r = check_consistency(f);
    EXPECT_EQ(r.d, r.d.adjoint());
    // The chain kets of all histories add up to the evolved state, so every
    // entry of D together sums to one whether or not the family is consistent.
    EXPECT_NEAR(std::abs(r.d.sum() - Complex(1.0)), 0.0, 1e-12);
  }
}

TEST(Consistency, ClassicalFamiliesAreExactlyConsistent) {
  // Permutations of the basis and basis-diagonal slots: the chain kets of
  // distinct histories have disjoint support, so D is exactly diagonal.
  std::mt19937 rng(9);
  const auto l = SystemLayout::single("s", {"0", "1", "2", "3", "4", "5"});
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Operator> us;
    std::vector<TimeSlot> slots;
    for (int k = 0; k < 3; ++k) {
      std::vector<int> perm(6);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      Matrix p = Matrix::Zero(6, 6);
      for (int i = 0; i < 6; ++i) p(perm[static_cast<std::size_t>(i)], i) = 1.0;
      us.emplace_back(l, p);
      std::vector<int> group(6);
      for (auto& g : group) g = static_cast<int>(rng() % 3);
      slots.push_back(grouped_slot("t" + std::to_string(k), l, group));
    }
    const HistoryFamily f(random_state(l, rng), us, slots);
    const auto r = check_consistency(f);
    EXPECT_EQ(r.max_off_diagonal, 0.0);
    EXPECT_NEAR(probability_table(f).total(), 1.0, 1e-12);
  }
}

TEST(Consistency, CoarseGrainingAddsProbabilities) {
  // The initial state lives inside one t1 block, so both families are
  // consistent; the coarse family merges the t2 events in pairs.
  std::mt19937 rng(13);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    const Operator u = random_unitary(4, rng);
    const auto& l = u.layout();
    Vector v = Vector::Zero(4);
    v(0) = Complex(g(rng), g(rng));
    v(1) = Complex(g(rng), g(rng));
    const Ket init = Ket(l, v).normalized();
    const Operator id = Operator::identity(l);
    const HistoryFamily fine(init, {id, u}, {grouped_slot("t1", l, {0, 0, 1, 1}), grouped_slot("t2", l, {0, 1, 2, 3})});
    const HistoryFamily coarse(init, {id, u}, {grouped_slot("t1", l, {0, 0, 1, 1}), grouped_slot("t2", l, {0, 0, 1, 1})});
    const auto tf = probability_table(fine);
    const auto tc = probability_table(coarse);
    for (int b = 0; b < 2; ++b) {
      const std::string fine0 = "g" + std::to_string(2 * b);
      const std::string fine1 = "g" + std::to_string(2 * b + 1);
      EXPECT_NEAR(tc.probability(EventAssignment{{"t2", "g" + std::to_string(b)}}),
                  tf.probability(EventAssignment{{"t2", fine0}}) + tf.probability(EventAssignment{{"t2", fine1}}),
                  1e-12);
    }
  }
}

TEST(Consistency, SingleSlotFamiliesAreAlwaysConsistent) {
  std::mt19937 rng(17);
  const auto l = SystemLayout::single("s", {"0", "1", "2"});
  for (int trial = 0; trial < 10; ++trial) {
    const Operator u = random_unitary(3, rng);
    const HistoryFamily f(Ket(u.layout(), random_state(l, rng).amplitudes()), {u},
                          {grouped_slot("t", u.layout(), {0, 1, 2})});
    EXPECT_LT(check_consistency(f).max_off_diagonal, 1e-15);
  }
}

TEST(Table, ConditionalAndZeroConditioning) {
  // |0> stays |0>: t1 = 0 with certainty.
  const Operator id = Operator::identity(kQubit);
  const HistoryFamily f(q0(), {id, id}, {z_slot("t1"), z_slot("t2")});
  const auto t = probability_table(f);
  EXPECT_EQ(t.probability(EventAssignment{{"t1", "0"}, {"t2", "0"}}), 1.0);
  const auto d = t.conditional({{"t2", "0"}}, "t1");
  EXPECT_EQ(d.at("0"), 1.0);
  EXPECT_EQ(d.at("1"), 0.0);
  EXPECT_THROW(t.conditional({{"t2", "1"}}, "t1"), ZeroConditionProbability);
  EXPECT_THROW(t.probability(EventAssignment{{"t9", "0"}}), HistoryError);
  EXPECT_THROW(t.probability(EventAssignment{{"t1", "7"}}), HistoryError);
  // An empty slot label means the last slot.
  EXPECT_EQ(t.probability(EventAssignment{{"", "0"}}), 1.0);
}

TEST(BranchTree, PrunesZeroBranchesAndKeepsRoot) {
  const Operator id = Operator::identity(kQubit);
  const HistoryFamily f(q0(), {id, id}, {z_slot("t1"), z_slot("t2")}, "init");
  const auto tree = branch_tree(f);
  EXPECT_EQ(tree.root.label, "init");
  EXPECT_EQ(tree.root.slot, kRootSlot);
  ASSERT_EQ(tree.leaf_count(), 1u);
  EXPECT_EQ(tree.leaf_paths()[0], (std::vector<std::string>{"0", "0"}));

  const auto g = zx_family((q0() + Complex(0.0, 1.0) * q1()) / std::sqrt(2.0));
  Tolerances weak;
  weak.mode = ConsistencyMode::weak;
  const auto t2 = branch_tree(g, weak);
  EXPECT_EQ(t2.leaf_count(), 4u);
  for (const auto* leaf : t2.leaves()) {
    EXPECT_NEAR(leaf->absolute, 0.25, 1e-15);
    EXPECT_NEAR(leaf->conditional, 0.5, 1e-15);
  }
}

}  // namespace
}  // namespace qhist
