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
 * Command dispatch for the `qhist` tool. Exit codes: 0 success, 1 a family
 * failed its consistency check, 2 a parse or usage error.
 */

#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qhist/counterfactual.hpp"
#include "qhist/dsl.hpp"
#include "qhist/histories.hpp"
#include "qhist/render.hpp"
#include "qhist/scenarios.hpp"

namespace qhist::cli {

inline constexpr int kOk = 0;
inline constexpr int kInconsistent = 1;
inline constexpr int kUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string source;
  std::string family;
  std::string mode = "medium";
  double tol = 1e-10;
  std::string format = "ascii";
  std::string out;
  std::vector<std::string> actual;
  std::string pivot;
  std::string swap;
  std::string outcome;
  std::string query;
  std::string target;
  std::string notation = "native";
  bool all = false;

  // builtin:hardy-two-sided
  std::string t1;
  std::string t1_z;
  std::string t1_x;
  std::string a_setting;
  std::string a_final;
  std::string a_final_z;
  std::string a_final_x;
  std::string order = "a-first";
  std::string a_branch = "Z";
  bool no_setting_slot = false;

  // builtin:locality-audit
  int c = 0;
};

/// What a source argument resolved to: a quantum family or a classical tree.
struct Source {
  std::string name;
  std::optional<HistoryFamily> family;
  std::optional<ClassicalTree> classical;
  SrSpec sr;
  std::optional<CounterfactualQuery> query;  // from a document query
};

namespace detail {

inline scenarios::Basis parse_basis(const std::string& s) {
  if (s == "z") return scenarios::Basis::z;
  if (s == "x") return scenarios::Basis::x;
  throw UsageError("t1 basis must be z or x, not '" + s + "'");
}

inline scenarios::FinalBasis parse_final(const std::string& s) {
  if (s == "none") return scenarios::FinalBasis::none;
  if (s == "pointer") return scenarios::FinalBasis::pointer;
  if (s == "mqs" || s == "MQS") return scenarios::FinalBasis::mqs;
  throw UsageError("final basis must be none, pointer or mqs, not '" + s + "'");
}

inline scenarios::TwoSidedOptions two_sided_options(const Options& o) {
  using namespace scenarios;
  TwoSidedOptions t;
  if (!o.t1.empty()) t.t1_z = t.t1_x = parse_basis(o.t1);
  if (!o.t1_z.empty()) t.t1_z = parse_basis(o.t1_z);
  if (!o.t1_x.empty()) t.t1_x = parse_basis(o.t1_x);
  if (!o.a_final.empty()) {
    // "pointer-x" fixes the a setting to X_a and describes its outcomes in
    // the pointer basis; a bare basis applies to both coin branches.
    const auto dash = o.a_final.find('-');
    const FinalBasis fb = parse_final(o.a_final.substr(0, dash));
    if (dash == std::string::npos) {
      t.final_z = t.final_x = fb;
    } else {
      const std::string side = o.a_final.substr(dash + 1);
      if (side == "z") {
        t.a_setting = ASetting::z;
        t.final_z = fb;
      } else if (side == "x") {
        t.a_setting = ASetting::x;
        t.final_x = fb;
      } else {
        throw UsageError("--a-final suffix must be -z or -x");
      }
    }
  }
  if (!o.a_final_z.empty()) t.final_z = parse_final(o.a_final_z);
  if (!o.a_final_x.empty()) t.final_x = parse_final(o.a_final_x);
  if (!o.a_setting.empty()) {
    if (o.a_setting == "coin") {
      t.a_setting = ASetting::coin;
    } else if (o.a_setting == "z" || o.a_setting == "Z") {
      t.a_setting = ASetting::z;
    } else if (o.a_setting == "x" || o.a_setting == "X") {
      t.a_setting = ASetting::x;
    } else {
      throw UsageError("--a-setting must be coin, z or x");
    }
  }
  if (o.order == "a-first") {
    t.order = Order::a_first;
  } else if (o.order == "b-first") {
    t.order = Order::b_first;
  } else {
    throw UsageError("--order must be a-first or b-first");
  }
  t.setting_slot = !o.no_setting_slot;
  return t;
}

inline Source resolve(const Options& o) {
  Source s;
  s.name = o.source;
  const std::string prefix = "builtin:";
  if (o.source.rfind(prefix, 0) == 0) {
    const std::string b = o.source.substr(prefix.size());
    if (b == "hardy-eq6") {
      s.family.emplace(scenarios::family_eq6());
    } else if (b == "hardy-eq7") {
      s.family.emplace(scenarios::family_eq7());
    } else if (b == "hardy-two-sided") {
      const auto t = two_sided_options(o);
      s.family.emplace(scenarios::two_sided_family(t));
      char branch = o.a_branch == "X" || o.a_branch == "x" ? 'X' : 'Z';
      if (t.a_setting == scenarios::ASetting::x) branch = 'X';
      if (t.a_setting == scenarios::ASetting::z) branch = 'Z';
      s.sr = scenarios::two_sided_sr_spec(t, branch);
    } else if (b == "locality-audit") {
      if (o.c != 0 && o.c != 1) throw UsageError("--c must be 0 or 1");
      s.family.emplace(scenarios::locality_family(scenarios::basis(scenarios::qubit("c"), o.c == 0 ? "0" : "1")));
      s.sr.actual = {{"t3b", "Z_b^-"}};
      s.sr.pivot_slot = std::string(kRootSlot);
      s.sr.outcome_slot = "t3b";
    } else if (b == "gun-beaker") {
      s.classical.emplace(scenarios::gun_beaker_scenario());
    } else {
      throw UsageError("unknown builtin '" + b +
                       "' (known: hardy-eq6, hardy-eq7, hardy-two-sided, locality-audit, gun-beaker)");
    }
    return s;
  }

  const dsl::ScenarioDocument doc = dsl::load_scenario(o.source);
  const dsl::QueryDecl* q = nullptr;
  if (!o.query.empty()) {
    q = doc.find_query(o.query);
    if (!q) throw UsageError("no query named '" + o.query + "' in " + o.source);
  }
  std::string fam = o.family;
  if (fam.empty() && q) fam = q->family;
  if (fam.empty()) {
    if (doc.families.size() != 1) throw UsageError(o.source + " declares " + std::to_string(doc.families.size()) +
                                                   " families; choose one with --family");
    fam = doc.families.front().name;
  }
  if (!doc.find_family(fam)) throw UsageError("no family named '" + fam + "' in " + o.source);
  s.family.emplace(doc.family(fam));
  s.name = o.source + ":" + fam;
  if (q) s.query = CounterfactualQuery{q->actual, q->pivot, q->swap_slot, q->swap_event, q->outcome};
  return s;
}

inline Tolerances tolerances(const Options& o) {
  Tolerances t;
  if (o.mode == "medium") {
    t.mode = ConsistencyMode::medium;
  } else if (o.mode == "weak") {
    t.mode = ConsistencyMode::weak;
  } else {
    throw UsageError("--mode must be medium or weak");
  }
  if (!(o.tol >= 0.0)) throw UsageError("--tol must be non-negative");
  t.consistency = o.tol;
  return t;
}

struct Printer {
  scenarios::Notation notation = scenarios::Notation::native;

  std::string label(std::string_view l) const { return scenarios::render_label(l, notation); }

  std::string history(const std::vector<std::string>& labels) const {
    std::vector<std::string> mapped;
    for (const auto& l : labels) mapped.push_back(label(l));
    return format_history(mapped);
  }

  LabelMap map() const {
    return [n = notation](std::string_view l) { return scenarios::render_label(l, n); };
  }
};

inline std::string complex_text(Complex z) {
  return "(" + format_number(z.real()) + ", " + format_number(z.imag()) + ")";
}

inline void print_report(const DecoherenceReport& r, const HistoryFamily& f, const Printer& p, std::ostream& out) {
  out << "consistency: " << to_string(r.mode) << ", tolerance " << format_number(r.tolerance) << "\n";
  out << "histories: " << r.histories.size() << "\n";
  out << "max off-diagonal " << (r.mode == ConsistencyMode::medium ? "|D|" : "|Re D|") << ": "
      << format_number(r.max_off_diagonal) << "\n";
  if (r.consistent()) {
    out << "consistent\n";
    return;
  }
  out << "INCONSISTENT: " << r.violations.size() << " violating pair" << (r.violations.size() == 1 ? "" : "s")
      << "\n";
  for (const auto& v : r.violations) {
    out << "  " << p.history(f.labels(r.histories[v.alpha])) << " x " << p.history(f.labels(r.histories[v.beta]))
        << "  |D|=" << format_number(std::abs(v.value)) << "  D=" << complex_text(v.value) << "\n";
  }
}

inline void print_distribution(const Distribution& d, const Printer& p, std::ostream& out) {
  for (std::size_t i = 0; i < d.labels.size(); ++i) {
    out << "  " << p.label(d.labels[i]) << "  " << format_number(d.probabilities[i]) << "\n";
  }
}

inline std::string classification_line(const std::string& target, double prob, const Printer& p) {
  const bool strict = prob >= kStrictThreshold;
  return std::string(strict ? "STRICT" : "WEAK") + ": " + p.label(target) + " with probability " + format_number(prob);
}

inline EventAssignment parse_assignment(const std::vector<std::string>& items) {
  EventAssignment a;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      a.emplace_back("", item);
    } else {
      a.emplace_back(item.substr(0, eq), item.substr(eq + 1));
    }
  }
  return a;
}

/// Writes to --out when given, otherwise to `out`.
inline void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw UsageError("cannot write '" + o.out + "'");
  f << text;
}

// ---------------------------------------------------------------------------
// Commands

inline int cmd_check(const Options& o, std::ostream& out) {
  const Source s = resolve(o);
  const Printer p{scenarios::parse_notation(o.notation)};
  out << "family: " << s.name << "\n";
  if (s.classical) {
    out << "classical tree: every family of classical histories is consistent\nconsistent\n";
    return kOk;
  }
  const Tolerances t = tolerances(o);
  const auto r = check_consistency(*s.family, t.mode, t.consistency);
  print_report(r, *s.family, p, out);
  return r.consistent() ? kOk : kInconsistent;
}

inline int cmd_probs(const Options& o, std::ostream& out) {
  const Source s = resolve(o);
  const Printer p{scenarios::parse_notation(o.notation)};
  const Tolerances t = tolerances(o);
  const HistoryTable table = s.classical ? s.classical->table() : probability_table(*s.family, t);
  out << "family: " << s.name << "\n";
  out << "slots: " << table.root_label();
  for (const auto& l : table.slot_labels()) out << " -> " << l;
  out << "\n";
  for (const auto& [h, prob] : table.entries()) {
    if (!o.all && !(prob > t.prune)) continue;
    out << p.history(table.labels(h)) << "  " << format_number(prob) << "\n";
  }
  out << "total: " << format_number(table.total()) << "\n";
  return kOk;
}

inline int cmd_tree(const Options& o, std::ostream& out) {
  const Source s = resolve(o);
  const Printer p{scenarios::parse_notation(o.notation)};
  const Tolerances t = tolerances(o);
  const BranchTree tree = s.classical ? branch_tree(s.classical->table(), t.prune) : branch_tree(*s.family, t);
  if (o.format == "ascii") {
    emit(o, render_ascii(tree, p.map()), out);
  } else if (o.format == "dot") {
    emit(o, render_dot(tree, s.name, p.map()), out);
  } else {
    throw UsageError("--format must be ascii or dot");
  }
  return kOk;
}

inline int cmd_cf(const Options& o, std::ostream& out) {
  const Source s = resolve(o);
  const Printer p{scenarios::parse_notation(o.notation)};
  const Tolerances t = tolerances(o);

  CounterfactualQuery q;
  if (s.query) q = *s.query;
  if (!o.actual.empty()) q.actual = parse_assignment(o.actual);
  if (!o.pivot.empty()) q.pivot_slot = o.pivot;
  if (!o.swap.empty()) {
    const auto eq = o.swap.find('=');
    if (eq == std::string::npos) throw UsageError("--swap takes SLOT=EVENT");
    q.swap_slot = o.swap.substr(0, eq);
    q.swap_event = o.swap.substr(eq + 1);
  }
  if (!o.outcome.empty()) q.outcome_slot = o.outcome;
  if (q.actual.empty() || q.pivot_slot.empty() || q.swap_slot.empty()) {
    throw UsageError("cf needs --actual, --pivot and --swap (or --query)");
  }

  const HistoryTable table = s.classical ? s.classical->table() : probability_table(*s.family, t);
  const std::string outcome = q.outcome_slot.empty() ? table.slot_labels().back() : q.outcome_slot;

  Distribution result;
  out << "family: " << s.name << "\n";
  if (s.classical) {
    result = classical_counterfactual(*s.classical, q.actual, q.pivot_slot, q.swap_slot, q.swap_event, q.outcome_slot);
  } else {
    const auto r = counterfactual_query(table, q, t.zero);
    out << "pivot posterior (" << q.pivot_slot << "):\n";
    print_distribution(r.pivot_posterior, p, out);
    result = r.outcome_distribution;
  }
  out << "counterfactual outcome (" << outcome << ") after " << q.swap_slot << "=" << p.label(q.swap_event) << ":\n";
  print_distribution(result, p, out);
  const auto c = classify(result);
  out << classification_line(o.target.empty() ? c.event : o.target,
                             o.target.empty() ? c.probability : result.at(o.target), p)
      << "\n";
  return kOk;
}

inline int cmd_sr(const Options& o, std::ostream& out) {
  const Source s = resolve(o);
  if (!s.family) throw UsageError("sr needs a quantum family");
  const Printer p{scenarios::parse_notation(o.notation)};
  const Tolerances t = tolerances(o);
  SrSpec spec = s.sr;
  if (!o.target.empty()) spec.target = o.target;
  const SrStatus st = sr_status(*s.family, spec, t);
  if (st.kind == SrKind::underivable) {
    out << "UNDERIVABLE: " << p.label(st.target) << " (" << st.reason << ")\n";
    const bool inconsistent = !check_consistency(*s.family, t.mode, t.consistency).consistent();
    return inconsistent ? kInconsistent : kOk;
  }
  out << to_string(st.kind) << ": " << p.label(st.target) << " with probability " << format_number(st.probability)
      << "\n";
  return kOk;
}

inline int cmd_audit_locality(const Options& o, std::ostream& out) {
  const Tolerances t = tolerances(o);
  const auto m0 = scenarios::locality_audit(0, t);
  const auto m1 = scenarios::locality_audit(1, t);
  const Printer p{scenarios::parse_notation(o.notation)};
  out << "b-side marginal  c=|0>  c=|1>\n";
  double worst = 0.0;
  for (std::size_t i = 0; i < m0.entries.size(); ++i) {
    const auto& [k, a] = m0.entries[i];
    const double b = m1.entries[i].second;
    worst = std::max(worst, std::abs(a - b));
    if (a == 0.0 && b == 0.0 && !o.all) continue;
    out << "  " << p.label(k.first) << " " << p.label(k.second) << "  " << format_number(a) << "  "
        << format_number(b) << "\n";
  }
  const bool agree = worst <= 1e-12;
  out << "max difference: " << format_number(worst) << "\n";
  out << (agree ? "agree: the b-side marginal does not depend on c\n" : "DIFFER: the b-side marginal depends on c\n");
  return agree ? kOk : kInconsistent;
}

inline int cmd_search(const Options& o, std::ostream& out) {
  const Tolerances t = tolerances(o);
  const auto rows = scenarios::search_frameworks(t);
  auto verdict = [](const scenarios::BranchVerdict& v) {
    std::string s(to_string(v.sr.kind));
    if (v.sr.kind != SrKind::underivable) s += " " + format_number(v.sr.probability);
    return s;
  };
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  out << pad("Z_a branch", 14) << pad("X_a branch", 14) << pad("consistent", 12) << pad("SR | Z_a", 22)
      << pad("SR | X_a", 22) << "note\n";
  std::size_t hybrid = 0;
  std::size_t reversed = 0;
  for (const auto& r : rows) {
    std::string note;
    if (r.is_hybrid()) {
      note = "hybrid";
      ++hybrid;
    }
    if (r.is_reversed()) {
      note = "reversed";
      ++reversed;
    }
    out << pad(std::string(to_string(r.t1_z)) + "/" + std::string(to_string(r.final_z)), 14)
        << pad(std::string(to_string(r.t1_x)) + "/" + std::string(to_string(r.final_x)), 14)
        << pad(r.consistent ? "yes" : "no", 12) << pad(verdict(r.z), 22) << pad(verdict(r.x), 22) << note << "\n";
  }
  out << "hybrid rows: " << hybrid << "\nreversed rows: " << reversed << "\n";
  return kOk;
}

inline int cmd_gun_beaker(const Options& o, std::ostream& out) {
  scenarios::GunPivot pv;
  if (o.pivot == "before-aim") {
    pv = scenarios::GunPivot::before_aim;
  } else if (o.pivot == "after-aim") {
    pv = scenarios::GunPivot::after_aim;
  } else {
    throw UsageError("--pivot must be before-aim or after-aim");
  }
  const Distribution d = scenarios::gun_beaker_counterfactual(pv);
  const Printer p;
  out << "pivot: " << o.pivot << "\nblock removed, outcome:\n";
  print_distribution(d, p, out);
  return kOk;
}

}  // namespace detail

/// Runs one command; `args` excludes the program name.
inline int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Consistent-histories analysis of quantum counterfactuals", "qhist"};
  app.require_subcommand(1);

  auto source = [&](CLI::App* c) {
    c->add_option("source", o.source, "builtin:NAME or a .qh scenario file")->required();
    c->add_option("--family", o.family, "family to use from a scenario file");
    c->add_option("--query", o.query, "counterfactual query declared in a scenario file");
    c->add_option("--t1", o.t1, "hardy-two-sided: t1 basis of particle a (z|x)");
    c->add_option("--t1-z", o.t1_z, "hardy-two-sided: t1 basis in the Z_a branch");
    c->add_option("--t1-x", o.t1_x, "hardy-two-sided: t1 basis in the X_a branch");
    c->add_option("--a-setting", o.a_setting, "hardy-two-sided: coin|z|x");
    c->add_option("--a-final", o.a_final, "hardy-two-sided: none|pointer|mqs, or BASIS-z / BASIS-x to fix the setting");
    c->add_option("--a-final-z", o.a_final_z, "hardy-two-sided: final basis in the Z_a branch");
    c->add_option("--a-final-x", o.a_final_x, "hardy-two-sided: final basis in the X_a branch");
    c->add_option("--order", o.order, "hardy-two-sided: a-first|b-first");
    c->add_option("--a-branch", o.a_branch, "hardy-two-sided sr: condition on Z or X at the a side");
    c->add_flag("--no-setting-slot", o.no_setting_slot, "hardy-two-sided: t2 holds only the b setting");
    c->add_option("--c", o.c, "locality-audit: initial state of c (0|1)");
  };
  auto common = [&](CLI::App* c) {
    c->add_option("--mode", o.mode, "medium|weak");
    c->add_option("--tol", o.tol, "consistency tolerance");
    c->add_option("--notation", o.notation, "native (alias this-paper)|hardy|stapp");
  };

  auto* check = app.add_subcommand("check", "check the consistency of a family");
  source(check);
  common(check);
  auto* probs = app.add_subcommand("probs", "history probabilities of a consistent family");
  source(probs);
  common(probs);
  probs->add_flag("--all", o.all, "include zero-probability histories");
  auto* tree = app.add_subcommand("tree", "branch tree of a consistent family");
  source(tree);
  common(tree);
  tree->add_option("--format", o.format, "ascii|dot");
  tree->add_option("--out", o.out, "write to a file instead of stdout");
  auto* cf = app.add_subcommand("cf", "counterfactual query");
  source(cf);
  common(cf);
  cf->add_option("--actual", o.actual, "actual fact SLOT=EVENT (or EVENT for the outcome slot); repeatable");
  cf->add_option("--pivot", o.pivot, "pivot slot, or root");
  cf->add_option("--swap", o.swap, "SLOT=EVENT forced in the counterfactual world");
  cf->add_option("--outcome", o.outcome, "outcome slot (default: the last)");
  cf->add_option("--target", o.target, "event to classify (default: the most probable)");
  auto* sr = app.add_subcommand("sr", "classify the SR counterfactual");
  source(sr);
  common(sr);
  sr->add_option("--target", o.target, "target event (default X_b^+)");
  auto* audit = app.add_subcommand("audit-locality", "b-side marginals for both initial states of c");
  common(audit);
  audit->add_flag("--all", o.all, "include zero entries");
  auto* search = app.add_subcommand("search-frameworks", "SR across t1 and final-time frameworks");
  common(search);
  auto* gun = app.add_subcommand("gun-beaker", "classical counterfactual");
  gun->add_option("--pivot", o.pivot, "before-aim|after-aim")->required();

  std::vector<std::string> argv_store{"qhist"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "qhist: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (check->parsed()) return detail::cmd_check(o, out);
    if (probs->parsed()) return detail::cmd_probs(o, out);
    if (tree->parsed()) return detail::cmd_tree(o, out);
    if (cf->parsed()) return detail::cmd_cf(o, out);
    if (sr->parsed()) return detail::cmd_sr(o, out);
    if (audit->parsed()) return detail::cmd_audit_locality(o, out);
    if (search->parsed()) return detail::cmd_search(o, out);
    if (gun->parsed()) return detail::cmd_gun_beaker(o, out);
  } catch (const InconsistentFamily& e) {
    const Source s = detail::resolve(o);
    out << "family: " << s.name << "\n";
    detail::print_report(e.report(), *s.family, detail::Printer{scenarios::parse_notation(o.notation)}, out);
    err << "qhist: probabilities are undefined for an inconsistent family\n";
    return kInconsistent;
  } catch (const dsl::ParseError& e) {
    err << o.source << ":" << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "qhist: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace qhist::cli
