#include <set>
#include <sstream>

#include "sigsem/bigstep.hpp"

namespace sigsem {

namespace {

struct Fire {
  std::string signal;
  bool once = false;
  CommandPtr handler;
};

// Persistent handlers by name, then one-shot handlers by name.
std::vector<Fire> available(const SigMap& S, const SigMap& O) {
  std::vector<Fire> out;
  for (const auto& [z, h] : S.entries()) out.push_back({z, false, h});
  for (const auto& [z, h] : O.entries()) out.push_back({z, true, h});
  return out;
}

struct Node {
  Outcome outcome;
  SigMap residual;
  std::uint32_t fuel = 0;
  Derivation d;
};

// Removes `names` from the one-shot map of every judgment in `d` that can
// see the outer binding. Used when a premise never fired those one-shots,
// so the derivation shows the split explicitly.
void strip(Derivation& d, std::set<std::string> names) {
  for (auto it = names.begin(); it != names.end();) {
    if (d.conclusion.o_bind.contains(*it))
      d.conclusion.o_bind = d.conclusion.o_bind.remove(*it);
    ++it;
  }
  if (d.rule.rfind("OneSigBind", 0) == 0) names.erase(d.conclusion.command->name());
  if (names.empty()) return;
  for (Derivation& p : d.premises)
    if (!p.handler_premise) strip(p, names);
}

std::set<std::string> domain_set(const SigMap& m) {
  auto names = m.domain();
  return {names.begin(), names.end()};
}

std::string variant(const std::string& rule, const Outcome& premise,
                    int premise_index) {
  if (premise.is_budget()) return rule + "-Budget";
  return rule + "-Exn" + std::to_string(premise_index);
}

class Scheduler {
 public:
  Scheduler(Budget budget, PriorityMode mode, const ChoiceTrace& picks)
      : budget_(budget), mode_(mode), picks_(picks) {}

  Node eval(const SigMap& S, const SigMap& O, const State& s,
            const CommandPtr& c, std::uint32_t fuel, std::uint32_t iter) {
    struct Before {
      Fire fire;
      Derivation handler;
      State state;
      SigMap o_bind;
    };
    std::vector<Before> befores;
    State cur_s = s;
    SigMap cur_o = O;
    std::uint32_t cur_fuel = fuel;
    Node node;
    bool done = false;

    while (true) {
      auto fires = cur_fuel > 0 ? available(S, cur_o) : std::vector<Fire>{};
      std::size_t k = choose(fires.size() + 1);
      if (k == 0) break;
      const Fire& f = fires[k - 1];
      Node h = eval({}, {}, cur_s, f.handler, cur_fuel - 1, 0);
      h.d.handler_premise = true;
      SigMap o_after = f.once ? cur_o.remove(f.signal) : cur_o;
      if (h.outcome.is_normal()) {
        befores.push_back({f, std::move(h.d), cur_s, cur_o});
        cur_s = h.outcome.state;
        cur_o = std::move(o_after);
        cur_fuel = h.fuel;
        continue;
      }
      // The handler raised: the convention ends this judgment here.
      node.outcome = h.outcome;
      node.residual = o_after;
      node.fuel = h.fuel;
      node.d.rule = variant(f.once ? "OneShotHandl2" : "PerShotHandl2", h.outcome, 1);
      node.d.signal = f.signal;
      node.d.conclusion = {S, cur_o, cur_s, c, h.outcome};
      node.d.premises.push_back(std::move(h.d));
      done = true;
      break;
    }

    if (!done) {
      node = structural(S, cur_o, cur_s, c, cur_fuel, iter);
      while (node.outcome.is_normal()) {
        auto fires = node.fuel > 0 ? available(S, node.residual) : std::vector<Fire>{};
        std::size_t k = choose(fires.size() + 1);
        if (k == 0) break;
        const Fire& f = fires[k - 1];
        Node h = eval({}, {}, node.outcome.state, f.handler, node.fuel - 1, 0);
        h.d.handler_premise = true;
        if (f.once) {
          node.residual = node.residual.remove(f.signal);
          strip(node.d, {f.signal});
        }
        Derivation wrapped;
        wrapped.rule = h.outcome.is_normal()
                           ? std::string(f.once ? "OneShotHandl" : "PerShotHandl")
                           : variant(f.once ? "OneShotHandl" : "PerShotHandl",
                                     h.outcome, 2);
        wrapped.signal = f.signal;
        wrapped.conclusion = {S, cur_o, cur_s, c, h.outcome};
        wrapped.premises.push_back(std::move(node.d));
        wrapped.premises.push_back(std::move(h.d));
        node.d = std::move(wrapped);
        node.outcome = h.outcome;
        node.fuel = h.fuel;
      }
    }

    for (auto it = befores.rbegin(); it != befores.rend(); ++it) {
      Derivation wrapped;
      wrapped.rule = it->fire.once ? "OneShotHandl2" : "PerShotHandl2";
      if (!node.outcome.is_normal())
        wrapped.rule = variant(wrapped.rule, node.outcome, 2);
      wrapped.signal = it->fire.signal;
      wrapped.conclusion = {S, it->o_bind, it->state, c, node.outcome};
      wrapped.premises.push_back(std::move(it->handler));
      wrapped.premises.push_back(std::move(node.d));
      node.d = std::move(wrapped);
    }
    return node;
  }

  std::vector<std::size_t> widths;
  ChoiceTrace taken;

 private:
  std::size_t choose(std::size_t width) {
    if (width <= 1) return 0;
    std::size_t pick = cursor_ < picks_.size() ? picks_[cursor_] : 0;
    if (pick >= width) throw ChoiceOutOfRange(pick, width);
    ++cursor_;
    widths.push_back(width);
    taken.push_back(pick);
    return pick;
  }

  static Node leaf(const std::string& rule, const SigMap& S, const SigMap& O,
                   const State& s, const CommandPtr& c, Outcome outcome,
                   std::uint32_t fuel) {
    Node n;
    n.outcome = outcome;
    n.residual = O;
    n.fuel = fuel;
    n.d.rule = rule;
    n.d.conclusion = {S, O, s, c, std::move(outcome)};
    return n;
  }

  // Two premises evaluated in order, the second receiving the one-shots the
  // first left unfired (SeqComp, While-True, Handl, Handl3).
  Node chain(const std::string& rule, const SigMap& S, const SigMap& O,
             const State& s, const CommandPtr& c, Node first,
             const CommandPtr& second, std::uint32_t second_iter) {
    Node n2 = eval(S, first.residual, first.outcome.state, second, first.fuel,
                   second_iter);
    strip(first.d, domain_set(first.residual));
    Node out;
    out.outcome = n2.outcome;
    out.residual = n2.residual;
    out.fuel = n2.fuel;
    out.d.rule = n2.outcome.is_normal() ? rule : variant(rule, n2.outcome, 2);
    out.d.conclusion = {S, O, s, c, n2.outcome};
    out.d.premises.push_back(std::move(first.d));
    out.d.premises.push_back(std::move(n2.d));
    return out;
  }

  Node wrap1(const std::string& rule, const SigMap& S, const SigMap& O,
             const State& s, const CommandPtr& c, Node inner,
             bool convention = true) {
    Node out;
    out.outcome = inner.outcome;
    out.residual = inner.residual;
    out.fuel = inner.fuel;
    out.d.rule = (convention && !inner.outcome.is_normal())
                     ? variant(rule, inner.outcome, 1)
                     : rule;
    out.d.conclusion = {S, O, s, c, inner.outcome};
    out.d.premises.push_back(std::move(inner.d));
    return out;
  }

  // Signal priority: handlers visible in the scope may run while the
  // exception in `node` leaves it.
  void propagate(const SigMap& S_inner, Node& node) {
    if (mode_ != PriorityMode::SignalPriority) return;
    while (node.outcome.is_uncaught() && node.fuel > 0) {
      auto fires = available(S_inner, node.residual);
      std::size_t k = choose(fires.size() + 1);
      if (k == 0) return;
      const Fire& f = fires[k - 1];
      Node h = eval({}, {}, node.outcome.state, f.handler, node.fuel - 1, 0);
      h.d.handler_premise = true;
      if (f.once) {
        node.residual = node.residual.remove(f.signal);
        strip(node.d, {f.signal});
      }
      Outcome next = h.outcome;
      if (next.is_normal()) next = Outcome::uncaught(node.outcome.exn, next.state);
      Derivation wrapped;
      wrapped.rule = f.once ? "OneShotHandlRaise" : "PerShotHandlRaise";
      wrapped.signal = f.signal;
      wrapped.conclusion = node.d.conclusion;
      if (f.once) wrapped.conclusion.o_bind = wrapped.conclusion.o_bind.update(f.signal, f.handler);
      wrapped.conclusion.outcome = next;
      wrapped.premises.push_back(std::move(node.d));
      wrapped.premises.push_back(std::move(h.d));
      node.d = std::move(wrapped);
      node.outcome = next;
      node.fuel = h.fuel;
    }
  }

  static void restore_once(const std::string& z, const SigMap& outer, Node& n) {
    if (n.residual.contains(z)) n.residual = n.residual.remove(z);
    if (outer.contains(z)) n.residual = n.residual.update(z, outer.lookup(z));
  }

  Node structural(const SigMap& S, const SigMap& O, const State& s,
                  const CommandPtr& c, std::uint32_t fuel, std::uint32_t iter) {
    switch (c->kind()) {
      case CmdKind::Skip:
        return leaf("Skip", S, O, s, c, Outcome::normal(s), fuel);
      case CmdKind::Assign:
        return leaf("Atomic", S, O, s, c,
                    Outcome::normal(s.update(c->name(), eval_expr(*c->expr(), s))),
                    fuel);
      case CmdKind::Throw:
        return leaf("Throw", S, O, s, c, Outcome::uncaught(c->name(), s), fuel);
      case CmdKind::Seq: {
        Node n1 = eval(S, O, s, c->first(), fuel, 0);
        if (!n1.outcome.is_normal()) return wrap1("SeqComp", S, O, s, c, std::move(n1));
        return chain("SeqComp", S, O, s, c, std::move(n1), c->second(), 0);
      }
      case CmdKind::While: {
        if (eval_expr(*c->expr(), s) == 0)
          return leaf("While-False", S, O, s, c, Outcome::normal(s), fuel);
        if (iter >= budget_.max_iters)
          return leaf("While-Budget", S, O, s, c, Outcome::budget_exceeded(), 0);
        Node n1 = eval(S, O, s, c->body(), fuel, 0);
        if (!n1.outcome.is_normal()) return wrap1("While-True", S, O, s, c, std::move(n1));
        return chain("While-True", S, O, s, c, std::move(n1), c, iter + 1);
      }
      case CmdKind::TryCatch: {
        Node n1 = eval(S, O, s, c->body(), fuel, 0);
        Node out;
        if (n1.outcome.is_uncaught() && n1.outcome.exn == c->name()) {
          out = chain("Handl", S, O, s, c, std::move(n1), c->handler(), 0);
          if (out.outcome.is_uncaught()) out.d.rule = "Handl3";
        } else if (n1.outcome.is_normal()) {
          out = wrap1("Handl2", S, O, s, c, std::move(n1), false);
        } else if (n1.outcome.is_uncaught()) {
          out = wrap1("Handl4", S, O, s, c, std::move(n1), false);
        } else {
          out = wrap1("Handl", S, O, s, c, std::move(n1));
        }
        propagate(S, out);
        return out;
      }
      case CmdKind::SigBind: {
        SigMap inner = S.update(c->name(), c->handler());
        Node nb = eval(inner, O, s, c->body(), fuel, 0);
        propagate(inner, nb);
        return wrap1("PerSigBind", S, O, s, c, std::move(nb));
      }
      case CmdKind::SigBindOnce: {
        Node nb = eval(S, O.update(c->name(), c->handler()), s, c->body(), fuel, 0);
        propagate(S, nb);
        restore_once(c->name(), O, nb);
        return wrap1("OneSigBind", S, O, s, c, std::move(nb));
      }
      case CmdKind::SigBlock: {
        SigMap inner = S.contains(c->name()) ? S.remove(c->name()) : S;
        Node nb = eval(inner, O, s, c->body(), fuel, 0);
        propagate(inner, nb);
        return wrap1("PerSigBlock", S, O, s, c, std::move(nb));
      }
      case CmdKind::SigBlockOnce: {
        SigMap inner = O.contains(c->name()) ? O.remove(c->name()) : O;
        Node nb = eval(S, inner, s, c->body(), fuel, 0);
        propagate(S, nb);
        restore_once(c->name(), O, nb);
        return wrap1("OneSigBlock", S, O, s, c, std::move(nb));
      }
    }
    return {};
  }

  Budget budget_;
  PriorityMode mode_;
  const ChoiceTrace& picks_;
  std::size_t cursor_ = 0;
};

std::string outcome_text(const Outcome& o) {
  switch (o.kind) {
    case Outcome::Kind::Normal:
      return "{" + o.state.to_string() + "}";
    case Outcome::Kind::Uncaught:
      return "raise " + o.exn + " {" + o.state.to_string() + "}";
    case Outcome::Kind::BudgetExceeded:
      return "budget-exceeded";
  }
  return {};
}

std::string names(const SigMap& m) {
  std::string out = "[";
  for (const auto& z : m.domain()) {
    if (out.size() > 1) out += ",";
    out += z;
  }
  return out + "]";
}

void render_into(std::ostringstream& out, const Derivation& d, int depth) {
  out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << d.rule;
  if (!d.signal.empty()) out << "<" << d.signal << ">";
  const Judgment& j = d.conclusion;
  out << ": S" << names(j.s_bind) << " O" << names(j.o_bind) << " |- {"
      << j.state_in.to_string() << "}, " << render(*j.command) << " => "
      << outcome_text(j.outcome) << "\n";
  for (const Derivation& p : d.premises) render_into(out, p, depth + 1);
}

}  // namespace

ScheduledRun run_scheduled(const SigMap& s_bind, const SigMap& o_bind,
                           const State& state, const CommandPtr& command,
                           Budget budget, PriorityMode mode,
                           const ChoiceTrace& choices) {
  Scheduler sched(budget, mode, choices);
  Node n = sched.eval(s_bind, o_bind, state, command, budget.handler_fuel, 0);
  return ScheduledRun{n.outcome, std::move(n.d), std::move(sched.widths),
                      std::move(sched.taken)};
}

std::string derivation_render(const Derivation& d) {
  std::ostringstream out;
  render_into(out, d, 0);
  return out.str();
}

}  // namespace sigsem
