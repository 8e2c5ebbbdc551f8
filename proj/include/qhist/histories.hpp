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
 * Families of histories, chain kets, the decoherence functional, and the
 * probability tables and branch trees built from consistent families.
 *
 * A family is an initial state, a sequence of time slots, and one unitary per
 * interval leading into each slot. Each slot is a decomposition: mutually
 * orthogonal projectors, completed to the identity by a synthetic "REST"
 * event when they do not already sum to it. A history picks one event per
 * slot, and its chain ket is
 *
 *     K(h) = P_n U_n ... P_1 U_1 |initial>.
 *
 * Probabilities are only defined for consistent families; asking for them on
 * an inconsistent one throws InconsistentFamily.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qhist/hilbert.hpp"

namespace qhist {

inline constexpr std::string_view kRestLabel = "REST";
inline constexpr std::string_view kRootSlot = "root";

class HistoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ZeroConditionProbability : public HistoryError {
 public:
  using HistoryError::HistoryError;
};

enum class ConsistencyMode { medium, weak };

inline std::string_view to_string(ConsistencyMode m) { return m == ConsistencyMode::medium ? "medium" : "weak"; }

struct Tolerances {
  ConsistencyMode mode = ConsistencyMode::medium;
  double consistency = 1e-10;
  double prune = 1e-12;
  // Probabilities at or below this are treated as zero when conditioning.
  double zero = 1e-12;
};

struct Event {
  std::string label;
  Operator projector;
  bool synthetic = false;
};

class TimeSlot {
 public:
  TimeSlot() = default;

  /// Validates the decomposition and appends a REST event if needed.
  TimeSlot(std::string label, std::vector<Event> events, double tol = 1e-12)
      : label_(std::move(label)), events_(std::move(events)) {
    if (label_.empty()) throw HistoryError("time slot with empty label");
    if (events_.empty()) throw HistoryError("time slot '" + label_ + "' has no events");
    const SystemLayout& layout = events_.front().projector.layout();
    Operator sum = Operator::zero(layout);
    for (std::size_t i = 0; i < events_.size(); ++i) {
      const auto& e = events_[i];
      if (e.label.empty()) throw HistoryError("slot '" + label_ + "': event with empty label");
      if (e.label == kRestLabel) throw HistoryError("slot '" + label_ + "': label REST is reserved");
      if (!(e.projector.layout() == layout)) throw HistoryError("slot '" + label_ + "': event layouts differ");
      const auto check = is_projector(e.projector, tol);
      if (!check) {
        throw HistoryError("slot '" + label_ + "': event '" + e.label + "' is not a projector (hermiticity " +
                           std::to_string(check.hermiticity_deviation) + ", idempotence " +
                           std::to_string(check.idempotence_deviation) + ")");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (events_[j].label == e.label) throw HistoryError("slot '" + label_ + "': duplicate event '" + e.label + "'");
      }
      sum = sum + e.projector;
    }
    // A sum of projectors is idempotent exactly when they are pairwise
    // orthogonal, so the pairwise search only runs to name the culprits.
    if (detail::product_max_abs(sum.matrix(), sum.matrix(), &sum.matrix()) > tol) {
      for (std::size_t i = 0; i < events_.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
          if (detail::product_max_abs(events_[j].projector.matrix(), events_[i].projector.matrix()) > tol) {
            throw HistoryError("slot '" + label_ + "': events '" + events_[j].label + "' and '" + events_[i].label +
                               "' are not orthogonal");
          }
        }
      }
      throw HistoryError("slot '" + label_ + "': events are not mutually orthogonal");
    }
    const Operator rest = Operator::identity(layout) - sum;
    if (rest.max_abs() > tol) events_.push_back(Event{std::string(kRestLabel), rest, true});
  }

  const std::string& label() const { return label_; }
  const std::vector<Event>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  bool has_rest() const { return !events_.empty() && events_.back().synthetic; }

  std::optional<std::size_t> find(std::string_view event) const {
    for (std::size_t i = 0; i < events_.size(); ++i) {
      if (events_[i].label == event) return i;
    }
    return std::nullopt;
  }

  std::size_t index_of(std::string_view event) const {
    auto i = find(event);
    if (!i) throw HistoryError("slot '" + label_ + "' has no event '" + std::string(event) + "'");
    return *i;
  }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    for (const auto& e : events_) out.push_back(e.label);
    return out;
  }

 private:
  std::string label_;
  std::vector<Event> events_;
};

/// One event index per slot.
using History = std::vector<std::size_t>;

/// (slot label, event label) pairs.
using EventAssignment = std::vector<std::pair<std::string, std::string>>;

class HistoryFamily {
 public:
  HistoryFamily(Ket initial, std::vector<Operator> unitaries, std::vector<TimeSlot> slots,
                std::string initial_label = "Psi0")
      : initial_(std::move(initial)),
        unitaries_(std::move(unitaries)),
        slots_(std::move(slots)),
        initial_label_(std::move(initial_label)) {
    if (slots_.empty()) throw HistoryError("a family needs at least one time slot");
    if (unitaries_.size() != slots_.size()) throw HistoryError("a family needs exactly one unitary per time slot");
    if (std::abs(initial_.norm() - 1.0) > 1e-12) throw HistoryError("initial state is not normalized");
    const auto& layout = initial_.layout();
    for (std::size_t i = 0; i < unitaries_.size(); ++i) {
      if (!(unitaries_[i].layout() == layout)) throw HistoryError("unitary layout differs from the initial state");
      if (!is_unitary(unitaries_[i], 1e-12)) {
        throw HistoryError("interval " + std::to_string(i + 1) + " operator is not unitary");
      }
    }
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      if (slots_[i].label() == kRootSlot) throw HistoryError("slot label 'root' is reserved");
      for (std::size_t j = 0; j < i; ++j) {
        if (slots_[j].label() == slots_[i].label()) throw HistoryError("duplicate slot '" + slots_[i].label() + "'");
      }
      if (!(slots_[i].events().front().projector.layout() == layout)) {
        throw HistoryError("slot '" + slots_[i].label() + "' layout differs from the initial state");
      }
    }
  }

  const SystemLayout& layout() const { return initial_.layout(); }
  const Ket& initial() const { return initial_; }
  const std::string& initial_label() const { return initial_label_; }
  const std::vector<Operator>& unitaries() const { return unitaries_; }
  const std::vector<TimeSlot>& slots() const { return slots_; }

  std::optional<std::size_t> find_slot(std::string_view label) const {
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      if (slots_[i].label() == label) return i;
    }
    return std::nullopt;
  }
  std::size_t slot_index(std::string_view label) const {
    auto i = find_slot(label);
    if (!i) throw HistoryError("family has no slot '" + std::string(label) + "'");
    return *i;
  }

  std::size_t history_count() const {
    std::size_t n = 1;
    for (const auto& s : slots_) n *= s.size();
    return n;
  }

  /// All histories, first slot most significant.
  std::vector<History> histories() const {
    std::vector<History> out;
    out.reserve(history_count());
    History h(slots_.size(), 0);
    for (;;) {
      out.push_back(h);
      std::size_t k = slots_.size();
      while (k-- > 0) {
        if (++h[k] < slots_[k].size()) break;
        h[k] = 0;
        if (k == 0) return out;
      }
    }
  }

  History history(std::span<const std::string> labels) const {
    if (labels.size() != slots_.size()) throw HistoryError("history needs one event label per slot");
    History h(labels.size());
    for (std::size_t k = 0; k < labels.size(); ++k) h[k] = slots_[k].index_of(labels[k]);
    return h;
  }
  History history(std::initializer_list<std::string> labels) const {
    std::vector<std::string> v(labels);
    return history(v);
  }

  std::vector<std::string> labels(const History& h) const {
    std::vector<std::string> out;
    for (std::size_t k = 0; k < h.size(); ++k) out.push_back(slots_.at(k).events().at(h[k]).label);
    return out;
  }

 private:
  Ket initial_;
  std::vector<Operator> unitaries_;
  std::vector<TimeSlot> slots_;
  std::string initial_label_;
};

inline std::string format_history(const std::vector<std::string>& labels) {
  std::string out = "(";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += ", ";
    out += labels[i];
  }
  return out + ")";
}

// ---------------------------------------------------------------------------
// Chain kets and the decoherence functional

inline Ket chain_ket(const HistoryFamily& family, const History& h) {
  if (h.size() != family.slots().size()) throw HistoryError("history length does not match the family");
  Ket k = family.initial();
  for (std::size_t s = 0; s < h.size(); ++s) {
    k = family.unitaries()[s].apply(k);
    k = family.slots()[s].events().at(h[s]).projector.apply(k);
  }
  return k;
}

namespace detail {

// Chain kets for every history, in family.histories() order, sharing prefixes.
inline std::vector<Vector> all_chain_kets(const HistoryFamily& family) {
  std::vector<Vector> out;
  out.reserve(family.history_count());
  const auto& slots = family.slots();
  std::vector<detail::SparseMatrix> us;
  std::vector<std::vector<detail::SparseMatrix>> ps;
  for (std::size_t k = 0; k < slots.size(); ++k) {
    us.push_back(detail::sparse(family.unitaries()[k].matrix()));
    ps.emplace_back();
    for (const auto& e : slots[k].events()) ps.back().push_back(detail::sparse(e.projector.matrix()));
  }
  std::function<void(std::size_t, const Vector&)> walk = [&](std::size_t depth, const Vector& v) {
    if (depth == slots.size()) {
      out.push_back(v);
      return;
    }
    const Vector evolved = us[depth] * v;
    for (const auto& p : ps[depth]) walk(depth + 1, p * evolved);
  };
  walk(0, family.initial().amplitudes());
  return out;
}

}  // namespace detail

struct Violation {
  std::size_t alpha = 0;
  std::size_t beta = 0;
  Complex value;
  double magnitude = 0.0;  // |D| (medium) or |Re D| (weak)
};

struct DecoherenceReport {
  ConsistencyMode mode = ConsistencyMode::medium;
  double tolerance = 0.0;
  std::vector<History> histories;
  Matrix d;  // d(alpha, beta) = <K(beta)|K(alpha)>
  std::vector<Violation> violations;  // alpha < beta, largest first
  double max_off_diagonal = 0.0;      // in the metric of `mode`

  bool consistent() const { return violations.empty(); }
};

inline DecoherenceReport check_consistency(const HistoryFamily& family, ConsistencyMode mode = ConsistencyMode::medium,
                                           double tol = 1e-10) {
  DecoherenceReport r;
  r.mode = mode;
  r.tolerance = tol;
  r.histories = family.histories();
  const auto kets = detail::all_chain_kets(family);
  const auto n = static_cast<Eigen::Index>(kets.size());
  r.d = Matrix::Zero(n, n);
  std::vector<bool> zero(kets.size());
  for (std::size_t a = 0; a < kets.size(); ++a) zero[a] = kets[a].squaredNorm() == 0.0;
  for (Eigen::Index a = 0; a < n; ++a) {
    r.d(a, a) = kets[a].squaredNorm();
    if (zero[static_cast<std::size_t>(a)]) continue;
    for (Eigen::Index b = a + 1; b < n; ++b) {
      if (zero[static_cast<std::size_t>(b)]) continue;
      const Complex v = kets[b].dot(kets[a]);
      r.d(a, b) = v;
      r.d(b, a) = std::conj(v);
      const double m = mode == ConsistencyMode::medium ? std::abs(v) : std::abs(v.real());
      r.max_off_diagonal = std::max(r.max_off_diagonal, m);
      if (m > tol) r.violations.push_back({static_cast<std::size_t>(a), static_cast<std::size_t>(b), v, m});
    }
  }
  std::stable_sort(r.violations.begin(), r.violations.end(),
                   [](const Violation& x, const Violation& y) { return x.magnitude > y.magnitude; });
  return r;
}

inline DecoherenceReport decoherence_matrix(const HistoryFamily& family) { return check_consistency(family); }

class InconsistentFamily : public HistoryError {
 public:
  explicit InconsistentFamily(DecoherenceReport report)
      : HistoryError("family is inconsistent: " + std::to_string(report.violations.size()) +
                     " off-diagonal decoherence entries exceed " + tolerance_text(report.tolerance)),
        report_(std::move(report)) {}
  const DecoherenceReport& report() const { return report_; }

 private:
  static std::string tolerance_text(double tol) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", tol);
    return buf;
  }

  DecoherenceReport report_;
};

// ---------------------------------------------------------------------------
// Probability tables

/// Distribution over the events of one slot, in slot order.
struct Distribution {
  std::vector<std::string> labels;
  std::vector<double> probabilities;

  double at(std::string_view label) const {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == label) return probabilities[i];
    }
    throw HistoryError("distribution has no label '" + std::string(label) + "'");
  }
  double total() const {
    double t = 0.0;
    for (double p : probabilities) t += p;
    return t;
  }
  /// Index of the most probable label (first on ties).
  std::size_t argmax() const {
    return static_cast<std::size_t>(std::max_element(probabilities.begin(), probabilities.end()) -
                                    probabilities.begin());
  }
};

/**
 * Probabilities of the histories of a consistent family (or of a classical
 * tree). Entries may be sparse: histories that are absent have probability 0.
 */
class HistoryTable {
 public:
  HistoryTable() = default;
  HistoryTable(std::string root_label, std::vector<std::string> slot_labels,
               std::vector<std::vector<std::string>> event_labels,
               std::vector<std::pair<History, double>> entries)
      : root_label_(std::move(root_label)),
        slot_labels_(std::move(slot_labels)),
        event_labels_(std::move(event_labels)),
        entries_(std::move(entries)) {
    if (slot_labels_.size() != event_labels_.size()) throw HistoryError("slot/event label counts differ");
    for (const auto& [h, p] : entries_) {
      if (h.size() != slot_labels_.size()) throw HistoryError("table entry has the wrong length");
      for (std::size_t k = 0; k < h.size(); ++k) {
        if (h[k] >= event_labels_[k].size()) throw HistoryError("table entry event index out of range");
      }
    }
  }

  const std::string& root_label() const { return root_label_; }
  const std::vector<std::string>& slot_labels() const { return slot_labels_; }
  const std::vector<std::vector<std::string>>& event_labels() const { return event_labels_; }
  const std::vector<std::pair<History, double>>& entries() const { return entries_; }

  std::optional<std::size_t> find_slot(std::string_view label) const {
    for (std::size_t i = 0; i < slot_labels_.size(); ++i) {
      if (slot_labels_[i] == label) return i;
    }
    return std::nullopt;
  }
  std::size_t slot_index(std::string_view label) const {
    auto i = find_slot(label);
    if (!i) throw HistoryError("no slot '" + std::string(label) + "'");
    return *i;
  }
  std::size_t event_index(std::size_t slot, std::string_view label) const {
    const auto& ev = event_labels_.at(slot);
    for (std::size_t i = 0; i < ev.size(); ++i) {
      if (ev[i] == label) return i;
    }
    throw HistoryError("slot '" + slot_labels_[slot] + "' has no event '" + std::string(label) + "'");
  }

  std::vector<std::string> labels(const History& h) const {
    std::vector<std::string> out;
    for (std::size_t k = 0; k < h.size(); ++k) out.push_back(event_labels_[k][h[k]]);
    return out;
  }

  /// Resolves (slot, event) labels; an empty slot label means the last slot.
  std::vector<std::pair<std::size_t, std::size_t>> resolve(const EventAssignment& a) const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto& [slot, event] : a) {
      const std::size_t s = slot.empty() ? slot_labels_.size() - 1 : slot_index(slot);
      out.emplace_back(s, event_index(s, event));
    }
    return out;
  }

  double probability(const EventAssignment& a) const { return probability_resolved(resolve(a)); }

  double probability(const History& h) const {
    for (const auto& [g, p] : entries_) {
      if (g == h) return p;
    }
    return 0.0;
  }

  double total() const {
    double t = 0.0;
    for (const auto& e : entries_) t += e.second;
    return t;
  }

  /// Pr(target-slot event | given), over every event of the target slot.
  Distribution conditional(const EventAssignment& given, std::string_view target_slot, double zero_tol = 1e-12) const {
    const auto g = resolve(given);
    const std::size_t t = target_slot.empty() ? slot_labels_.size() - 1 : slot_index(target_slot);
    const double pg = probability_resolved(g);
    if (!(pg > zero_tol)) {
      throw ZeroConditionProbability("conditioning event has probability " + std::to_string(pg));
    }
    Distribution d;
    d.labels = event_labels_[t];
    d.probabilities.assign(d.labels.size(), 0.0);
    for (const auto& [h, p] : entries_) {
      if (matches(h, g)) d.probabilities[h[t]] += p;
    }
    for (double& p : d.probabilities) p /= pg;
    return d;
  }

  double probability_resolved(const std::vector<std::pair<std::size_t, std::size_t>>& g) const {
    double total = 0.0;
    for (const auto& [h, p] : entries_) {
      if (matches(h, g)) total += p;
    }
    return total;
  }

  static bool matches(const History& h, const std::vector<std::pair<std::size_t, std::size_t>>& g) {
    for (const auto& [s, e] : g) {
      if (h[s] != e) return false;
    }
    return true;
  }

 private:
  std::string root_label_;
  std::vector<std::string> slot_labels_;
  std::vector<std::vector<std::string>> event_labels_;
  std::vector<std::pair<History, double>> entries_;
};

/// Probability table of a family; throws InconsistentFamily if it fails the
/// consistency check under `tol`.
inline HistoryTable probability_table(const HistoryFamily& family, const Tolerances& tol = {}) {
  DecoherenceReport r = check_consistency(family, tol.mode, tol.consistency);
  if (!r.consistent()) throw InconsistentFamily(std::move(r));
  std::vector<std::string> slots;
  std::vector<std::vector<std::string>> events;
  for (const auto& s : family.slots()) {
    slots.push_back(s.label());
    events.push_back(s.labels());
  }
  std::vector<std::pair<History, double>> entries;
  entries.reserve(r.histories.size());
  for (std::size_t i = 0; i < r.histories.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    entries.emplace_back(r.histories[i], r.d(ii, ii).real());
  }
  return HistoryTable(family.initial_label(), std::move(slots), std::move(events), std::move(entries));
}

inline double history_probability(const HistoryFamily& family, const History& h, const Tolerances& tol = {}) {
  DecoherenceReport r = check_consistency(family, tol.mode, tol.consistency);
  if (!r.consistent()) throw InconsistentFamily(std::move(r));
  return chain_ket(family, h).squared_norm();
}

inline Distribution conditional_distribution(const HistoryFamily& family, const EventAssignment& given,
                                             std::string_view target_slot, const Tolerances& tol = {}) {
  return probability_table(family, tol).conditional(given, target_slot, tol.zero);
}

// ---------------------------------------------------------------------------
// Branch trees

struct BranchNode {
  std::string slot;   // slot label; root uses "root"
  std::string label;  // event label; root uses the initial-state label
  double conditional = 1.0;
  double absolute = 1.0;
  std::vector<BranchNode> children;

  bool is_leaf() const { return children.empty(); }
};

struct BranchTree {
  BranchNode root;

  std::vector<const BranchNode*> leaves() const {
    std::vector<const BranchNode*> out;
    std::function<void(const BranchNode&)> walk = [&](const BranchNode& n) {
      if (n.is_leaf()) {
        out.push_back(&n);
        return;
      }
      for (const auto& c : n.children) walk(c);
    };
    walk(root);
    return out;
  }

  std::size_t leaf_count() const { return leaves().size(); }

  /// Label paths (excluding the root) of every leaf.
  std::vector<std::vector<std::string>> leaf_paths() const {
    std::vector<std::vector<std::string>> out;
    std::vector<std::string> path;
    std::function<void(const BranchNode&)> walk = [&](const BranchNode& n) {
      if (n.is_leaf()) {
        out.push_back(path);
        return;
      }
      for (const auto& c : n.children) {
        path.push_back(c.label);
        walk(c);
        path.pop_back();
      }
    };
    walk(root);
    return out;
  }
};

/// Prefix tree of `table`, omitting nodes whose prefix probability is at or
/// below `prune_tol`. The root is always present.
inline BranchTree branch_tree(const HistoryTable& table, double prune_tol = 1e-12) {
  BranchTree tree;
  tree.root.slot = std::string(kRootSlot);
  tree.root.label = table.root_label();
  tree.root.absolute = table.total();
  const std::size_t depth_max = table.slot_labels().size();
  std::vector<std::pair<std::size_t, std::size_t>> prefix;
  std::function<void(BranchNode&, std::size_t)> grow = [&](BranchNode& node, std::size_t depth) {
    if (depth == depth_max) return;
    for (std::size_t e = 0; e < table.event_labels()[depth].size(); ++e) {
      prefix.emplace_back(depth, e);
      const double p = table.probability_resolved(prefix);
      if (p > prune_tol) {
        BranchNode child;
        child.slot = table.slot_labels()[depth];
        child.label = table.event_labels()[depth][e];
        child.absolute = p;
        child.conditional = node.absolute > 0.0 ? p / node.absolute : 0.0;
        grow(child, depth + 1);
        node.children.push_back(std::move(child));
      }
      prefix.pop_back();
    }
  };
  if (tree.root.absolute > prune_tol) grow(tree.root, 0);
  return tree;
}

inline BranchTree branch_tree(const HistoryFamily& family, const Tolerances& tol = {}) {
  return branch_tree(probability_table(family, tol), tol.prune);
}

}  // namespace qhist
