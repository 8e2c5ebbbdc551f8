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
 * Pivot-based counterfactual inference over a probability table.
 *
 * The actual world is described by a set of facts (slot=event). Working
 * backwards, the pivot slot gets a posterior given those facts. The
 * counterfactual world agrees with the actual one up to the pivot, then one
 * later slot is forced to the swap event and the outcome slot's law is
 * propagated forward:
 *
 *     Pr'(o) = sum_p posterior(p) * Pr(o | p, swap)
 *
 * The same procedure runs on quantum families (via their probability table,
 * which requires consistency) and on classical stochastic trees.
 */

#include <algorithm>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qhist/histories.hpp"

namespace qhist {

class UnreachableBranch : public HistoryError {
 public:
  using HistoryError::HistoryError;
};

inline constexpr double kStrictThreshold = 1.0 - 1e-9;

struct CounterfactualQuery {
  EventAssignment actual;    // an empty slot label refers to the outcome slot
  std::string pivot_slot;    // "root" pivots on the initial state
  std::string swap_slot;
  std::string swap_event;
  std::string outcome_slot;  // empty: last slot
};

enum class Verdict { strict, weak, undefined };

struct Classification {
  Verdict verdict = Verdict::undefined;
  std::string event;
  double probability = 0.0;
};

struct CounterfactualResult {
  Distribution pivot_posterior;
  Distribution outcome_distribution;
  Classification classification;
};

inline Classification classify(const Distribution& d) {
  Classification c;
  if (d.labels.empty() || !(d.total() > 0.0)) return c;
  const std::size_t i = d.argmax();
  c.event = d.labels[i];
  c.probability = d.probabilities[i];
  c.verdict = c.probability >= kStrictThreshold ? Verdict::strict : Verdict::weak;
  return c;
}

inline Distribution pivot_posterior(const HistoryTable& table, const EventAssignment& actual,
                                    std::string_view pivot_slot, double zero_tol = 1e-12) {
  if (pivot_slot == kRootSlot) {
    const double p = table.probability(actual);
    if (!(p > zero_tol)) throw ZeroConditionProbability("actual facts have probability " + std::to_string(p));
    return Distribution{{table.root_label()}, {1.0}};
  }
  return table.conditional(actual, pivot_slot, zero_tol);
}

inline CounterfactualResult counterfactual_query(const HistoryTable& table, const CounterfactualQuery& q,
                                                 double zero_tol = 1e-12) {
  if (table.slot_labels().empty()) throw HistoryError("counterfactual query on a table without slots");
  const std::size_t last = table.slot_labels().size() - 1;
  const std::size_t outcome = q.outcome_slot.empty() ? last : table.slot_index(q.outcome_slot);
  const bool root_pivot = q.pivot_slot == kRootSlot;
  const std::size_t swap = table.slot_index(q.swap_slot);
  const std::size_t swap_event = table.event_index(swap, q.swap_event);
  if (!root_pivot && table.slot_index(q.pivot_slot) >= swap) {
    throw HistoryError("pivot slot must be strictly earlier than the swap slot");
  }
  if (swap > outcome) throw HistoryError("swap slot must not be later than the outcome slot");

  EventAssignment actual = q.actual;
  for (auto& [slot, event] : actual) {
    if (slot.empty()) slot = table.slot_labels()[outcome];
  }

  CounterfactualResult r;
  r.pivot_posterior = pivot_posterior(table, actual, q.pivot_slot, zero_tol);
  r.outcome_distribution.labels = table.event_labels()[outcome];
  r.outcome_distribution.probabilities.assign(r.outcome_distribution.labels.size(), 0.0);

  double reached = 0.0;
  for (std::size_t i = 0; i < r.pivot_posterior.labels.size(); ++i) {
    const double w = r.pivot_posterior.probabilities[i];
    if (!(w > zero_tol)) continue;
    std::vector<std::pair<std::size_t, std::size_t>> cond;
    if (!root_pivot) cond.emplace_back(table.slot_index(q.pivot_slot), i);
    cond.emplace_back(swap, swap_event);
    const double branch = table.probability_resolved(cond);
    if (!(branch > zero_tol)) continue;
    reached += w;
    for (const auto& [h, p] : table.entries()) {
      if (HistoryTable::matches(h, cond)) r.outcome_distribution.probabilities[h[outcome]] += w * p / branch;
    }
  }
  if (!(reached > zero_tol)) {
    throw UnreachableBranch("swapped branch '" + q.swap_slot + "=" + q.swap_event +
                            "' has zero probability from every supported pivot event");
  }
  for (double& p : r.outcome_distribution.probabilities) p /= reached;
  r.classification = classify(r.outcome_distribution);
  return r;
}

inline CounterfactualResult counterfactual_query(const HistoryFamily& family, const CounterfactualQuery& q,
                                                 const Tolerances& tol = {}) {
  return counterfactual_query(probability_table(family, tol), q, tol.zero);
}

inline Distribution pivot_posterior(const HistoryFamily& family, const EventAssignment& actual,
                                    std::string_view pivot_slot, const Tolerances& tol = {}) {
  return pivot_posterior(probability_table(family, tol), actual, pivot_slot, tol.zero);
}

// ---------------------------------------------------------------------------
// Stapp's counterfactual

/// Labels of the counterfactual "had the other quantity been measured".
struct SrSpec {
  EventAssignment actual{{"t3", "Z_b^-"}};
  std::string pivot_slot = "t1";
  std::string swap_slot = "t2";
  std::string swap_event = "X_b";
  std::string outcome_slot = "t3";
  std::string target = "X_b^+";
};

enum class SrKind { strict, weak, underivable };

inline std::string_view to_string(SrKind k) {
  switch (k) {
    case SrKind::strict:
      return "STRICT";
    case SrKind::weak:
      return "WEAK";
    case SrKind::underivable:
      return "UNDERIVABLE";
  }
  return "?";
}

struct SrStatus {
  SrKind kind = SrKind::underivable;
  std::string target;
  double probability = 0.0;  // Pr(target) in the counterfactual world, when derivable
  std::string reason;        // why it is underivable
};

/**
 * Classifies the counterfactual in one family: STRICT when the target has
 * probability at least 1 - 1e-9, WEAK otherwise, UNDERIVABLE when the query
 * itself fails (inconsistent family, impossible actual facts, unreachable
 * swapped branch). Labels that do not exist in the family throw.
 */
inline SrStatus sr_status(const HistoryFamily& family, const SrSpec& spec = {}, const Tolerances& tol = {}) {
  for (const auto& [slot, event] : spec.actual) family.slots()[family.slot_index(slot)].index_of(event);
  if (spec.pivot_slot != kRootSlot) family.slot_index(spec.pivot_slot);
  family.slots()[family.slot_index(spec.swap_slot)].index_of(spec.swap_event);
  family.slots()[family.slot_index(spec.outcome_slot)].index_of(spec.target);

  SrStatus s;
  s.target = spec.target;
  try {
    const auto r = counterfactual_query(
        family, CounterfactualQuery{spec.actual, spec.pivot_slot, spec.swap_slot, spec.swap_event, spec.outcome_slot},
        tol);
    s.probability = r.outcome_distribution.at(spec.target);
    s.kind = s.probability >= kStrictThreshold ? SrKind::strict : SrKind::weak;
  } catch (const InconsistentFamily& e) {
    s.reason = e.what();
  } catch (const ZeroConditionProbability& e) {
    s.reason = e.what();
  } catch (const UnreachableBranch& e) {
    s.reason = e.what();
  }
  return s;
}

/// Per-framework SR verdicts plus the "at least one framework" aggregate.
struct FrameworkSurvey {
  std::vector<std::pair<std::string, SrStatus>> frameworks;
  bool strict_in_some() const {
    for (const auto& f : frameworks) {
      if (f.second.kind == SrKind::strict) return true;
    }
    return false;
  }
  bool strict_in_all() const {
    for (const auto& f : frameworks) {
      if (f.second.kind != SrKind::strict) return false;
    }
    return !frameworks.empty();
  }
};

inline FrameworkSurvey survey_frameworks(const std::vector<std::pair<std::string, HistoryFamily>>& families,
                                         const SrSpec& spec = {}, const Tolerances& tol = {}) {
  FrameworkSurvey out;
  for (const auto& [name, f] : families) out.frameworks.emplace_back(name, sr_status(f, spec, tol));
  return out;
}

// ---------------------------------------------------------------------------
// Classical stochastic trees

/**
 * A branching tree given directly by conditional probabilities, one named
 * level per depth. Every leaf sits at the full depth.
 */
class ClassicalTree {
 public:
  ClassicalTree(std::vector<std::string> levels, BranchNode root, double tol = 1e-12)
      : levels_(std::move(levels)), tree_{std::move(root)} {
    tree_.root.slot = std::string(kRootSlot);
    tree_.root.conditional = 1.0;
    tree_.root.absolute = 1.0;
    fill(tree_.root, 0, tol);
  }

  const std::vector<std::string>& levels() const { return levels_; }
  const BranchTree& tree() const { return tree_; }

  /// Leaves as a sparse probability table. Event labels of a level are
  /// listed in order of first appearance.
  HistoryTable table() const {
    std::vector<std::vector<std::string>> events(levels_.size());
    std::vector<std::pair<History, double>> entries;
    History h;
    std::function<void(const BranchNode&, std::size_t)> walk = [&](const BranchNode& n, std::size_t depth) {
      if (depth == levels_.size()) {
        entries.emplace_back(h, n.absolute);
        return;
      }
      for (const auto& c : n.children) {
        auto& ev = events[depth];
        auto it = std::find(ev.begin(), ev.end(), c.label);
        const auto idx = static_cast<std::size_t>(it - ev.begin());
        if (it == ev.end()) ev.push_back(c.label);
        h.push_back(idx);
        walk(c, depth + 1);
        h.pop_back();
      }
    };
    walk(tree_.root, 0);
    return HistoryTable(tree_.root.label, levels_, std::move(events), std::move(entries));
  }

 private:
  void fill(BranchNode& n, std::size_t depth, double tol) {
    if (depth == levels_.size()) {
      if (!n.children.empty()) throw HistoryError("classical tree deeper than its level list");
      return;
    }
    if (n.children.empty()) throw HistoryError("classical tree leaf '" + n.label + "' above the last level");
    double sum = 0.0;
    for (auto& c : n.children) {
      if (c.conditional < 0.0) throw HistoryError("negative branching probability under '" + n.label + "'");
      c.slot = levels_[depth];
      c.absolute = n.absolute * c.conditional;
      sum += c.conditional;
      fill(c, depth + 1, tol);
    }
    if (std::abs(sum - 1.0) > tol) throw HistoryError("children of '" + n.label + "' do not sum to 1");
  }

  std::vector<std::string> levels_;
  BranchTree tree_;
};

/**
 * Counterfactual on a classical tree; the same propagation rule as the
 * quantum case with the posterior obtained by Bayes over the leaves.
 *
 * `pivot` is "root", a level name, or a node "level=event". A node pivot must
 * be an ancestor of the actual facts (nonzero posterior), and then the
 * posterior collapses onto it.
 */
inline Distribution classical_counterfactual(const ClassicalTree& tree, const EventAssignment& actual,
                                             const std::string& pivot, const std::string& swap_level,
                                             const std::string& swap_event, const std::string& outcome_level = {}) {
  const auto table = tree.table();
  EventAssignment facts = actual;
  std::string pivot_level = pivot;
  if (const auto eq = pivot.find('='); eq != std::string::npos) {
    pivot_level = pivot.substr(0, eq);
    const std::string node = pivot.substr(eq + 1);
    const auto posterior = pivot_posterior(table, actual, pivot_level);
    if (!(posterior.at(node) > 0.0)) {
      throw HistoryError("pivot '" + pivot + "' is not an ancestor of the actual leaf");
    }
    facts.emplace_back(pivot_level, node);
  }
  return counterfactual_query(table, CounterfactualQuery{facts, pivot_level, swap_level, swap_event, outcome_level})
      .outcome_distribution;
}

}  // namespace qhist
