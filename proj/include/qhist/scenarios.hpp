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
 * Built-in systems: the Hardy state with coin-selected spin measurements,
 * the one- and two-sided families of histories built on it, the MQS
 * alternative to pointer bases, the framework search, the locality audit
 * with a control particle c, the classical gun/beaker tree, and the label
 * translations between notations.
 *
 * Apparatus model: each side has a coin qubit (labels Zset/Xset) selecting
 * the measured spin component and a 3-level meter (rdy, p+, p-). The
 * measurement unitary is controlled on the coin:
 *
 *     Zset:  |0,rdy> -> |0,p+>   |1,rdy> -> |1,p->
 *     Xset:  |+,rdy> -> |+,p+>   |-,rdy> -> |-,p->
 *
 * completed canonically on the rest of the space. Outcome events are
 * projectors on coin and meter jointly, e.g. Z_b^- = [Zset]_coin_b [p-]_meter_b.
 */

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "qhist/counterfactual.hpp"
#include "qhist/hilbert.hpp"
#include "qhist/histories.hpp"

namespace qhist::scenarios {

// ---------------------------------------------------------------------------
// Subsystems and kets

inline SystemLayout qubit(const std::string& name) { return SystemLayout::single(name, {"0", "1"}); }
inline SystemLayout coin(const std::string& name) { return SystemLayout::single(name, {"Zset", "Xset"}); }
inline SystemLayout meter(const std::string& name) { return SystemLayout::single(name, {"rdy", "p+", "p-"}); }

inline Ket basis(const SystemLayout& layout, const std::string& label) { return Ket::basis(layout, {label}); }

inline Ket plus(const std::string& particle) {
  const auto l = qubit(particle);
  return (basis(l, "0") + basis(l, "1")) / std::sqrt(2.0);
}
inline Ket minus(const std::string& particle) {
  const auto l = qubit(particle);
  return (basis(l, "0") - basis(l, "1")) / std::sqrt(2.0);
}

/// (|00> + |01> + |10>) / sqrt(3) on (a, b).
inline Ket hardy_state() {
  const SystemLayout ab = qubit("a").concat(qubit("b"));
  return (Ket::basis(ab, {"0", "0"}) + Ket::basis(ab, {"0", "1"}) + Ket::basis(ab, {"1", "0"})) / std::sqrt(3.0);
}

/// Coin in equal superposition of its two settings.
inline Ket fair_coin(const std::string& name) {
  const auto l = coin(name);
  return (basis(l, "Zset") + basis(l, "Xset")) / std::sqrt(2.0);
}

inline Ket ready(const std::string& meter_name) { return basis(meter(meter_name), "rdy"); }

/// Coin-controlled spin measurement on (particle, coin, meter).
inline Operator measurement_unitary(const std::string& particle, const std::string& coin_name,
                                    const std::string& meter_name) {
  const auto p = qubit(particle);
  const auto c = coin(coin_name);
  const auto m = meter(meter_name);
  auto rule = [&](const Ket& state, const char* setting, const char* pointer) {
    return Rule{tensor({state, basis(c, setting), basis(m, "rdy")}), tensor({state, basis(c, setting), basis(m, pointer)})};
  };
  const std::vector<Rule> rules{
      rule(basis(p, "0"), "Zset", "p+"),
      rule(basis(p, "1"), "Zset", "p-"),
      rule(plus(particle), "Xset", "p+"),
      rule(minus(particle), "Xset", "p-"),
  };
  return complete_unitary(rules, p.concat(c).concat(m));
}

/// Projector onto one ket, embedded into `full`.
inline Operator embedded_projector(const Ket& k, const SystemLayout& full) {
  return embed(projector_from_kets({k}), full);
}

// ---------------------------------------------------------------------------
// MQS bases

/// (|p+> + |p->)/sqrt(2) and (|p+> - |p->)/sqrt(2).
inline std::pair<Ket, Ket> mqs_kets(const Ket& pointer_plus, const Ket& pointer_minus) {
  const std::array<Ket, 2> in{pointer_plus, pointer_minus};
  if (detail::max_orthonormality_defect(in) > 1e-10) throw HilbertError("mqs_basis: pointer states are not orthonormal");
  return {(pointer_plus + pointer_minus) / std::sqrt(2.0), (pointer_plus - pointer_minus) / std::sqrt(2.0)};
}

inline std::vector<Event> mqs_basis(const Ket& pointer_plus, const Ket& pointer_minus, std::string plus_label = "m+",
                                    std::string minus_label = "m-") {
  auto [mp, mm] = mqs_kets(pointer_plus, pointer_minus);
  return {Event{std::move(plus_label), projector_from_kets({mp})},
          Event{std::move(minus_label), projector_from_kets({mm})}};
}

// ---------------------------------------------------------------------------
// One-sided families

enum class Basis { z, x };

inline std::string_view to_string(Basis b) { return b == Basis::z ? "z" : "x"; }

inline TimeSlot particle_slot(const std::string& label, Basis basis_kind, const std::string& particle,
                              const SystemLayout& full) {
  const auto p = qubit(particle);
  if (basis_kind == Basis::z) {
    return TimeSlot(label, {Event{"[0]_" + particle, embedded_projector(basis(p, "0"), full)},
                            Event{"[1]_" + particle, embedded_projector(basis(p, "1"), full)}});
  }
  return TimeSlot(label, {Event{"[+]_" + particle, embedded_projector(plus(particle), full)},
                          Event{"[-]_" + particle, embedded_projector(minus(particle), full)}});
}

/// Setting/outcome events for one side, suffix "a" or "b": Z_s^+, Z_s^-, X_s^+, X_s^-.
inline std::vector<Event> pointer_events(const std::string& side, const SystemLayout& full) {
  const auto cm = coin("coin_" + side).concat(meter("meter_" + side));
  std::vector<Event> out;
  for (auto [setting, name] : {std::pair{"Zset", "Z_"}, std::pair{"Xset", "X_"}}) {
    for (auto [pointer, sign] : {std::pair{"p+", "^+"}, std::pair{"p-", "^-"}}) {
      out.push_back(Event{name + side + sign, embedded_projector(Ket::basis(cm, {setting, pointer}), full)});
    }
  }
  return out;
}

inline TimeSlot b_setting_slot(const std::string& label, const SystemLayout& full) {
  const auto c = coin("coin_b");
  return TimeSlot(label, {Event{"Z_b", embedded_projector(basis(c, "Zset"), full)},
                          Event{"X_b", embedded_projector(basis(c, "Xset"), full)}});
}

/// [Psi0] . {t1 decomposition of a} . {X_b, Z_b} . {X_b^+, X_b^-, Z_b^+, Z_b^-}
inline HistoryFamily one_sided_family(Basis t1) {
  const Ket init = tensor({hardy_state(), fair_coin("coin_b"), ready("meter_b")});
  const SystemLayout& full = init.layout();
  std::vector<TimeSlot> slots{particle_slot("t1", t1, "a", full), b_setting_slot("t2", full),
                              TimeSlot("t3", pointer_events("b", full))};
  std::vector<Operator> us{Operator::identity(full), Operator::identity(full),
                           embed(measurement_unitary("b", "coin_b", "meter_b"), full)};
  return HistoryFamily(init, std::move(us), std::move(slots), "Psi0");
}

/// Particle a in the z basis at t1.
inline HistoryFamily family_eq6() { return one_sided_family(Basis::z); }
/// Particle a in the x basis at t1.
inline HistoryFamily family_eq7() { return one_sided_family(Basis::x); }

// ---------------------------------------------------------------------------
// Two-sided families

enum class FinalBasis { none, pointer, mqs };
enum class ASetting { coin, z, x };
enum class Order { a_first, b_first };

inline std::string_view to_string(FinalBasis f) {
  switch (f) {
    case FinalBasis::none:
      return "none";
    case FinalBasis::pointer:
      return "pointer";
    case FinalBasis::mqs:
      return "MQS";
  }
  return "?";
}

struct TwoSidedOptions {
  Basis t1_z = Basis::z;  // t1 basis for particle a when a is set to Z_a
  Basis t1_x = Basis::z;  // ... and when set to X_a
  ASetting a_setting = ASetting::coin;
  FinalBasis final_z = FinalBasis::none;  // a-side final events when a is set to Z_a
  FinalBasis final_x = FinalBasis::none;  // ... and when set to X_a
  bool setting_slot = true;               // t2 = {Z_aZ_b, Z_aX_b, X_aZ_b, X_aX_b} rather than {Z_b, X_b}
  Order order = Order::a_first;
};

inline Ket a_coin_state(ASetting s) {
  switch (s) {
    case ASetting::coin:
      return fair_coin("coin_a");
    case ASetting::z:
      return basis(coin("coin_a"), "Zset");
    case ASetting::x:
      return basis(coin("coin_a"), "Xset");
  }
  throw HistoryError("bad a setting");
}

inline std::vector<Event> a_final_events(const TwoSidedOptions& o, const SystemLayout& full) {
  const auto c = coin("coin_a");
  const auto m = meter("meter_a");
  std::vector<Event> out;
  for (auto [setting, prefix, fb] : {std::tuple{"Zset", "Z_a", o.final_z}, std::tuple{"Xset", "X_a", o.final_x}}) {
    const Ket s = basis(c, setting);
    const std::string name = prefix;
    switch (fb) {
      case FinalBasis::none:
        out.push_back(Event{name, embedded_projector(s, full)});
        break;
      case FinalBasis::pointer:
        out.push_back(Event{name + "^+", embedded_projector(tensor(s, basis(m, "p+")), full)});
        out.push_back(Event{name + "^-", embedded_projector(tensor(s, basis(m, "p-")), full)});
        break;
      case FinalBasis::mqs: {
        auto [mp, mm] = mqs_kets(basis(m, "p+"), basis(m, "p-"));
        out.push_back(Event{name + "^m+", embedded_projector(tensor(s, mp), full)});
        out.push_back(Event{name + "^m-", embedded_projector(tensor(s, mm), full)});
        break;
      }
    }
  }
  return out;
}

/// t1 decomposition of particle a. When the two setting branches use different
/// bases the slot is {[Zset_a] x basis_z, [Xset_a] x basis_x}, labeled
/// "Z_a:[0]_a", "X_a:[+]_a" and so on.
inline TimeSlot a_t1_slot(const std::string& label, const TwoSidedOptions& o, const SystemLayout& full) {
  if (o.a_setting == ASetting::z) return particle_slot(label, o.t1_z, "a", full);
  if (o.a_setting == ASetting::x) return particle_slot(label, o.t1_x, "a", full);
  if (o.t1_z == o.t1_x) return particle_slot(label, o.t1_z, "a", full);
  const auto c = coin("coin_a");
  std::vector<Event> events;
  for (auto [setting, prefix, b] : {std::tuple{"Zset", "Z_a:", o.t1_z}, std::tuple{"Xset", "X_a:", o.t1_x}}) {
    const Ket s = basis(c, setting);
    const std::array<std::pair<std::string, Ket>, 2> kets =
        b == Basis::z ? std::array{std::pair{std::string("[0]_a"), basis(qubit("a"), "0")},
                                   std::pair{std::string("[1]_a"), basis(qubit("a"), "1")}}
                      : std::array{std::pair{std::string("[+]_a"), plus("a")}, std::pair{std::string("[-]_a"), minus("a")}};
    for (const auto& [name, k] : kets) {
      events.push_back(Event{prefix + name, embedded_projector(tensor(s, k), full)});
    }
  }
  return TimeSlot(label, std::move(events));
}

inline TimeSlot setting_slot(const std::string& label, const SystemLayout& full) {
  const auto cc = coin("coin_a").concat(coin("coin_b"));
  std::vector<Event> events;
  for (auto [sa, la] : {std::pair{"Zset", "Z_a"}, std::pair{"Xset", "X_a"}}) {
    for (auto [sb, lb] : {std::pair{"Zset", "Z_b"}, std::pair{"Xset", "X_b"}}) {
      events.push_back(Event{std::string(la) + lb, embedded_projector(Ket::basis(cc, {sa, sb}), full)});
    }
  }
  return TimeSlot(label, std::move(events));
}

/**
 * Hardy state with an apparatus on each side. Slots: t1 (particle a, in a
 * basis that may depend on the a setting), t2 (settings), then t3a (a-side finals, omitted when both
 * branches use `none`) and t3b (b-side finals) in the requested order.
 */
inline HistoryFamily two_sided_family(const TwoSidedOptions& o) {
  const Ket init = tensor({hardy_state(), a_coin_state(o.a_setting), ready("meter_a"), fair_coin("coin_b"), ready("meter_b")});
  const SystemLayout& full = init.layout();
  const Operator id = Operator::identity(full);
  const Operator ma = embed(measurement_unitary("a", "coin_a", "meter_a"), full);
  const Operator mb = embed(measurement_unitary("b", "coin_b", "meter_b"), full);

  std::vector<TimeSlot> slots{a_t1_slot("t1", o, full),
                              o.setting_slot ? setting_slot("t2", full) : b_setting_slot("t2", full)};
  std::vector<Operator> us{id, id};
  const bool a_finals = o.final_z != FinalBasis::none || o.final_x != FinalBasis::none;
  TimeSlot b_slot("t3b", pointer_events("b", full));
  if (!a_finals) {
    us.push_back(ma * mb);
    slots.push_back(std::move(b_slot));
  } else {
    TimeSlot a_slot("t3a", a_final_events(o, full));
    if (o.order == Order::a_first) {
      us.push_back(ma);
      slots.push_back(std::move(a_slot));
      us.push_back(mb);
      slots.push_back(std::move(b_slot));
    } else {
      us.push_back(mb);
      slots.push_back(std::move(b_slot));
      us.push_back(ma);
      slots.push_back(std::move(a_slot));
    }
  }
  return HistoryFamily(init, std::move(us), std::move(slots), "Psi0");
}

/// SR labels for the two-sided family, conditioned on the a setting `a`
/// ('Z' or 'X') when the setting slot is present.
inline SrSpec two_sided_sr_spec(const TwoSidedOptions& o, char a = 'Z') {
  SrSpec s;
  s.actual = {{"t3b", "Z_b^-"}};
  s.outcome_slot = "t3b";
  if (o.setting_slot) {
    const std::string prefix = a == 'Z' ? "Z_a" : "X_a";
    s.actual.emplace_back("t2", prefix + "Z_b");
    s.swap_event = prefix + "X_b";
  }
  return s;
}

// ---------------------------------------------------------------------------
// Framework search

struct BranchVerdict {
  char setting = 'Z';
  FinalBasis basis = FinalBasis::none;
  bool consistent = false;
  double max_violation = 0.0;
  SrStatus sr;
};

struct FrameworkRow {
  Basis t1_z = Basis::z;
  FinalBasis final_z = FinalBasis::none;
  Basis t1_x = Basis::z;
  FinalBasis final_x = FinalBasis::none;
  bool consistent = false;  // the coin-driven family with both branches
  BranchVerdict z;
  BranchVerdict x;

  /// A consistent row where SR is derivable with the a apparatus set to Z_a
  /// but not with X_a, both branches described in the pointer basis.
  bool is_hybrid() const {
    return consistent && final_z == FinalBasis::pointer && final_x == FinalBasis::pointer && z.sr.kind == SrKind::strict &&
           x.sr.kind != SrKind::strict;
  }
  /// The opposite pattern with both branches in MQS bases: not derivable
  /// under Z_a, derivable under X_a.
  bool is_reversed() const {
    return consistent && final_z == FinalBasis::mqs && final_x == FinalBasis::mqs && z.sr.kind != SrKind::strict &&
           x.sr.kind == SrKind::strict;
  }
};

inline BranchVerdict evaluate_branch(Basis t1, char setting, FinalBasis fb, const Tolerances& tol) {
  TwoSidedOptions o;
  o.t1_z = o.t1_x = t1;
  o.a_setting = setting == 'Z' ? ASetting::z : ASetting::x;
  (setting == 'Z' ? o.final_z : o.final_x) = fb;
  const HistoryFamily f = two_sided_family(o);
  const auto report = check_consistency(f, tol.mode, tol.consistency);
  BranchVerdict v{setting, fb, report.consistent(), report.max_off_diagonal, {}};
  v.sr = sr_status(f, two_sided_sr_spec(o, setting), tol);
  return v;
}

/// Every combination of (t1 basis, final basis) for the Z_a branch and for
/// the X_a branch: 36 rows.
inline std::vector<FrameworkRow> search_frameworks(const Tolerances& tol = {}) {
  const std::array<FinalBasis, 3> finals{FinalBasis::pointer, FinalBasis::mqs, FinalBasis::none};
  const std::array<Basis, 2> bases{Basis::z, Basis::x};
  std::array<std::array<BranchVerdict, 3>, 2> zs;
  std::array<std::array<BranchVerdict, 3>, 2> xs;
  for (std::size_t b = 0; b < bases.size(); ++b) {
    for (std::size_t i = 0; i < finals.size(); ++i) {
      zs[b][i] = evaluate_branch(bases[b], 'Z', finals[i], tol);
      xs[b][i] = evaluate_branch(bases[b], 'X', finals[i], tol);
    }
  }
  std::vector<FrameworkRow> rows;
  for (std::size_t bz = 0; bz < bases.size(); ++bz) {
    for (std::size_t i = 0; i < finals.size(); ++i) {
      for (std::size_t bx = 0; bx < bases.size(); ++bx) {
        for (std::size_t j = 0; j < finals.size(); ++j) {
          TwoSidedOptions o;
          o.t1_z = bases[bz];
          o.t1_x = bases[bx];
          o.final_z = finals[i];
          o.final_x = finals[j];
          FrameworkRow row{bases[bz], finals[i], bases[bx], finals[j], false, zs[bz][i], xs[bx][j]};
          row.consistent = check_consistency(two_sided_family(o), tol.mode, tol.consistency).consistent();
          rows.push_back(row);
        }
      }
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Locality audit

/// (c, coin_a): c = 0 leaves the a apparatus on Zset, c = 1 switches it to Xset.
inline Operator c_control_unitary() {
  const auto l = qubit("c").concat(coin("coin_a"));
  return complete_unitary({Rule{Ket::basis(l, {"0", "Zset"}), Ket::basis(l, {"0", "Zset"})},
                           Rule{Ket::basis(l, {"1", "Zset"}), Ket::basis(l, {"1", "Xset"})}},
                          l);
}

/**
 * Hardy state plus particle c, which interacts with the a apparatus after
 * preparation and fixes its setting. Slots: t2 (b setting), t3a (a pointer
 * outcomes), t3b (b outcomes).
 */
inline HistoryFamily locality_family(const Ket& c_state) {
  if (!(c_state.layout() == qubit("c"))) throw HistoryError("c state must live on the qubit 'c'");
  const Ket init = tensor({hardy_state(), c_state, basis(coin("coin_a"), "Zset"), ready("meter_a"), fair_coin("coin_b"),
                           ready("meter_b")});
  const SystemLayout& full = init.layout();
  std::vector<Operator> us{embed(c_control_unitary(), full), embed(measurement_unitary("a", "coin_a", "meter_a"), full),
                           embed(measurement_unitary("b", "coin_b", "meter_b"), full)};
  std::vector<TimeSlot> slots{b_setting_slot("t2", full), TimeSlot("t3a", pointer_events("a", full)),
                              TimeSlot("t3b", pointer_events("b", full))};
  return HistoryFamily(init, std::move(us), std::move(slots), "Psi0");
}

/// Marginal over b-side (setting, outcome) sequences.
struct BSideMarginal {
  std::vector<std::pair<std::pair<std::string, std::string>, double>> entries;

  double at(std::string_view setting, std::string_view outcome) const {
    for (const auto& [k, p] : entries) {
      if (k.first == setting && k.second == outcome) return p;
    }
    throw HistoryError("no b-side sequence (" + std::string(setting) + ", " + std::string(outcome) + ")");
  }
};

inline BSideMarginal b_side_marginal(const HistoryTable& table, const std::string& setting_slot = "t2",
                                     const std::string& outcome_slot = "t3b") {
  const std::size_t s = table.slot_index(setting_slot);
  const std::size_t o = table.slot_index(outcome_slot);
  BSideMarginal m;
  for (const auto& sl : table.event_labels()[s]) {
    for (const auto& ol : table.event_labels()[o]) {
      m.entries.push_back({{sl, ol}, table.probability(EventAssignment{{setting_slot, sl}, {outcome_slot, ol}})});
    }
  }
  return m;
}

inline BSideMarginal locality_audit(const Ket& c_state, const Tolerances& tol = {}) {
  return b_side_marginal(probability_table(locality_family(c_state), tol));
}

inline BSideMarginal locality_audit(int c_init, const Tolerances& tol = {}) {
  if (c_init != 0 && c_init != 1) throw HistoryError("c must be 0 or 1");
  return locality_audit(basis(qubit("c"), c_init == 0 ? "0" : "1"), tol);
}

// ---------------------------------------------------------------------------
// Classical gun and beaker

/// Aim (four equiprobable directions, one at the beaker), then the block
/// (in place or pushed away, 1/2 each), then the deterministic outcome.
inline ClassicalTree gun_beaker_scenario() {
  auto outcome = [](bool shattered) {
    return BranchNode{"", shattered ? "shattered" : "unbroken", 1.0, 0.0, {}};
  };
  auto block = [&](bool at_beaker) {
    BranchNode in{"", "in-place", 0.5, 0.0, {outcome(false)}};
    BranchNode out{"", "removed", 0.5, 0.0, {outcome(at_beaker)}};
    return std::vector<BranchNode>{in, out};
  };
  BranchNode root{"", "fire", 1.0, 1.0, {}};
  for (const char* dir : {"at-beaker", "away-1", "away-2", "away-3"}) {
    root.children.push_back(BranchNode{"", dir, 0.25, 0.0, block(std::string_view(dir) == "at-beaker")});
  }
  return ClassicalTree({"aim", "block", "outcome"}, std::move(root));
}

enum class GunPivot { before_aim, after_aim };

/// The bullet was aimed at the beaker and stopped by the block; what if the
/// block had been pushed away?
inline Distribution gun_beaker_counterfactual(GunPivot pivot) {
  const EventAssignment actual{{"aim", "at-beaker"}, {"block", "in-place"}, {"outcome", "unbroken"}};
  return classical_counterfactual(gun_beaker_scenario(), actual,
                                  pivot == GunPivot::before_aim ? std::string(kRootSlot) : "aim=at-beaker", "block",
                                  "removed", "outcome");
}

// ---------------------------------------------------------------------------
// Notation

enum class Notation { native, hardy, stapp };

struct NotationRow {
  std::string_view native;
  std::string_view hardy;
  std::string_view stapp;
};

inline constexpr std::array<NotationRow, 12> kNotationTable{{
    {"Z_a", "U_1", "L1"},
    {"Z_a^+", "U_1=0", "L1+"},
    {"Z_a^-", "U_1=1", "L1-"},
    {"X_a", "D_1", "L2"},
    {"X_a^+", "D_1=0", "L2-"},
    {"X_a^-", "D_1=1", "L2+"},
    {"Z_b", "U_2", "R1"},
    {"Z_b^+", "U_2=0", "R1-"},
    {"Z_b^-", "U_2=1", "R1+"},
    {"X_b", "D_2", "R2"},
    {"X_b^+", "D_2=0", "R2+"},
    {"X_b^-", "D_2=1", "R2-"},
}};

inline std::string_view column(const NotationRow& r, Notation n) {
  switch (n) {
    case Notation::native:
      return r.native;
    case Notation::hardy:
      return r.hardy;
    case Notation::stapp:
      return r.stapp;
  }
  return {};
}

inline Notation parse_notation(std::string_view s) {
  if (s == "native" || s == "this-paper") return Notation::native;
  if (s == "hardy") return Notation::hardy;
  if (s == "stapp") return Notation::stapp;
  throw std::invalid_argument("unknown notation '" + std::string(s) + "'");
}

inline std::string notation_alias(std::string_view label, Notation from, Notation to) {
  for (const auto& r : kNotationTable) {
    if (column(r, from) == label) return std::string(column(r, to));
  }
  throw std::invalid_argument("label '" + std::string(label) + "' is not part of the notation table");
}

/// Translates labels in the table and leaves every other label unchanged.
inline std::string render_label(std::string_view label, Notation to) {
  for (const auto& r : kNotationTable) {
    if (r.native == label) return std::string(column(r, to));
  }
  return std::string(label);
}

}  // namespace qhist::scenarios
