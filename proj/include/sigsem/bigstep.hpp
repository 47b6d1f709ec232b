#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigsem/store.hpp"
#include "sigsem/syntax.hpp"

namespace sigsem {

/// Result of evaluating a command: normal termination, an uncaught
/// exception, or exhaustion of a loop bound.
struct Outcome {
  enum class Kind { Normal, Uncaught, BudgetExceeded };

  Kind kind = Kind::Normal;
  std::string exn;
  State state;

  static Outcome normal(State s) { return {Kind::Normal, {}, std::move(s)}; }
  static Outcome uncaught(std::string e, State s) {
    return {Kind::Uncaught, std::move(e), std::move(s)};
  }
  static Outcome budget_exceeded() { return {Kind::BudgetExceeded, {}, {}}; }

  bool is_normal() const { return kind == Kind::Normal; }
  bool is_uncaught() const { return kind == Kind::Uncaught; }
  bool is_budget() const { return kind == Kind::BudgetExceeded; }

  /// `normal x=1`, `uncaught e x=0`, `budget-exceeded`.
  std::string to_string() const;

  friend bool operator==(const Outcome& a, const Outcome& b) {
    return a.kind == b.kind && a.exn == b.exn && a.state == b.state;
  }
  friend bool operator<(const Outcome& a, const Outcome& b);
};

using OutcomeSet = std::set<Outcome>;

struct Budget {
  std::uint32_t handler_fuel = 2;  // handler runs per derivation, all kinds
  std::uint32_t max_iters = 8;     // unrollings per dynamic while loop
};

enum class PriorityMode { ExceptionPriority, SignalPriority };

/// Picks for the choice points met by `run_scheduled`; an exhausted trace
/// picks 0 (proceed without firing a handler).
using ChoiceTrace = std::vector<std::size_t>;

struct Judgment {
  SigMap s_bind;
  SigMap o_bind;
  State state_in;
  CommandPtr command;
  Outcome outcome;
};

/// A derivation tree node. `signal` names the handler fired by the
/// handler rules; `handler_premise` marks the root of a handler body
/// evaluated under empty bindings.
struct Derivation {
  std::string rule;
  std::string signal;
  bool handler_premise = false;
  Judgment conclusion;
  std::vector<Derivation> premises;
};

class ChoiceOutOfRange : public std::out_of_range {
 public:
  ChoiceOutOfRange(std::size_t index, std::size_t available);
  std::size_t index() const { return index_; }
  std::size_t available() const { return available_; }

 private:
  std::size_t index_;
  std::size_t available_;
};

/// Exhaustive, fuel-bounded outcome set. One-shot bindings are threaded:
/// each sub-evaluation hands its unfired one-shots to the next.
OutcomeSet enumerate(const SigMap& s_bind, const SigMap& o_bind,
                     const State& state, const CommandPtr& command,
                     Budget budget, PriorityMode mode);

/// Same contract as `enumerate`, but sequential composition and exception
/// handling split the one-shot map into every disjoint pair, and handler
/// rules recurse on the same judgment literally.
OutcomeSet enumerate_split_oracle(const SigMap& s_bind, const SigMap& o_bind,
                                  const State& state, const CommandPtr& command,
                                  Budget budget, PriorityMode mode);

struct ScheduledRun {
  Outcome outcome;
  Derivation derivation;
  /// Width of every choice point met, in order. Points with a single
  /// option are not choice points and consume no pick.
  std::vector<std::size_t> widths;
  /// Picks actually taken (trace picks padded with zeros).
  ChoiceTrace taken;
};

ScheduledRun run_scheduled(const SigMap& s_bind, const SigMap& o_bind,
                           const State& state, const CommandPtr& command,
                           Budget budget, PriorityMode mode,
                           const ChoiceTrace& choices);

/// Indented text, one judgment per line, rule name first.
std::string derivation_render(const Derivation& d);

/// Calls `visit` with every derivation reachable by some choice trace, in
/// lexicographic pick order. Stops after `limit` runs (0 = unbounded) and
/// returns the number of derivations visited.
template <class Visit>
std::size_t for_each_derivation(const SigMap& s_bind, const SigMap& o_bind,
                                const State& state, const CommandPtr& command,
                                Budget budget, PriorityMode mode, Visit&& visit,
                                std::size_t limit = 0) {
  ChoiceTrace picks;
  std::size_t count = 0;
  while (true) {
    ScheduledRun run =
        run_scheduled(s_bind, o_bind, state, command, budget, mode, picks);
    visit(run);
    ++count;
    if (limit && count >= limit) return count;
    picks = run.taken;
    std::size_t i = picks.size();
    while (i > 0 && picks[i - 1] + 1 >= run.widths[i - 1]) --i;
    if (i == 0) return count;
    picks.resize(i);
    ++picks[i - 1];
  }
}

}  // namespace sigsem
