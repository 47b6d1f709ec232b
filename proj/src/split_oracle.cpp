// Literal reading of the rules: one-shot bindings are divided between
// premises by enumerating every disjoint split, and each handler rule
// re-derives the same judgment with less fuel. Kept independent of the
// threaded enumerator so the two can be checked against each other.

#include <functional>
#include <map>
#include <tuple>

#include "sigsem/bigstep.hpp"

namespace sigsem {

namespace {

struct Res {
  Outcome::Kind kind = Outcome::Kind::Normal;
  std::string exn;
  State state;
  std::uint32_t fuel = 0;

  friend bool operator<(const Res& a, const Res& b) {
    return std::tie(a.kind, a.exn, a.state, a.fuel) <
           std::tie(b.kind, b.exn, b.state, b.fuel);
  }
};

using ResSet = std::set<Res>;

const Res kBudget{Outcome::Kind::BudgetExceeded, {}, {}, 0};

struct Key {
  SigMap s_bind;
  SigMap o_bind;
  State state;
  const Command* command;
  std::uint32_t fuel;
  std::uint32_t iter;

  friend bool operator<(const Key& a, const Key& b) {
    return std::tie(a.command, a.fuel, a.iter, a.state, a.s_bind, a.o_bind) <
           std::tie(b.command, b.fuel, b.iter, b.state, b.s_bind, b.o_bind);
  }
};

class SplitOracle {
 public:
  SplitOracle(Budget budget, PriorityMode mode) : budget_(budget), mode_(mode) {}

  ResSet eval(const SigMap& S, const SigMap& O, const State& s,
              const CommandPtr& c, std::uint32_t fuel, std::uint32_t iter) {
    Key key{S, O, s, c.get(), fuel, iter};
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    ResSet out = structural(S, O, s, c, fuel, iter);
    if (fuel > 0) {
      for (const auto& [z, h] : S.entries())
        out.merge(handler_rules(S, s, c, fuel, iter, h, O));
      for (const auto& [z, h] : O.entries())
        out.merge(handler_rules(S, s, c, fuel, iter, h, O.remove(z)));
    }
    memo_.emplace(std::move(key), out);
    return out;
  }

 private:
  // Handler before (…Handl2) and after (…Handl) the judgment for c. The
  // inner judgment sees `inner_o`: O itself for persistent handlers and
  // O - z for one-shot ones.
  ResSet handler_rules(const SigMap& S, const State& s, const CommandPtr& c,
                       std::uint32_t fuel, std::uint32_t iter,
                       const CommandPtr& h, const SigMap& inner_o) {
    ResSet found;
    // After: inner judgment with one unit of fuel held back for the handler.
    for (const Res& r : eval(S, inner_o, s, c, fuel - 1, iter)) {
      if (r.kind != Outcome::Kind::Normal) continue;
      found.merge(eval({}, {}, r.state, h, r.fuel, 0));
    }
    // Before.
    for (const Res& hr : eval({}, {}, s, h, fuel - 1, 0)) {
      if (hr.kind == Outcome::Kind::Normal)
        found.merge(eval(S, inner_o, hr.state, c, hr.fuel, iter));
      else
        found.insert(hr);
    }
    return found;
  }

  ResSet seq(const SigMap& S, const SigMap& O, const State& s,
             const CommandPtr& first, const CommandPtr& second,
             std::uint32_t fuel, std::uint32_t second_iter) {
    ResSet out;
    for (const auto& [o1, o2] : splits(O)) {
      for (const Res& r1 : eval(S, o1, s, first, fuel, 0)) {
        if (r1.kind != Outcome::Kind::Normal) {
          out.insert(r1);
          continue;
        }
        out.merge(eval(S, o2, r1.state, second, r1.fuel, second_iter));
      }
    }
    return out;
  }

  // Signal priority: split the scope's one-shots between the body and the
  // handlers allowed to run while an exception leaves the scope.
  ResSet scope(const SigMap& S_inner, const SigMap& O_inner,
               const std::function<ResSet(const SigMap&)>& body) {
    if (mode_ != PriorityMode::SignalPriority) return body(O_inner);
    ResSet out;
    for (const auto& [oa, ob] : splits(O_inner)) {
      ResSet inner = body(oa);
      for (const Res& r : inner)
        if (r.kind == Outcome::Kind::Uncaught) propagate(S_inner, ob, r, out);
      out.merge(inner);
    }
    return out;
  }

  void propagate(const SigMap& S, const SigMap& O, const Res& r, ResSet& out) {
    if (r.fuel == 0) return;
    auto fire = [&](const CommandPtr& h, const SigMap& o_after) {
      for (const Res& hr : eval({}, {}, r.state, h, r.fuel - 1, 0)) {
        if (hr.kind == Outcome::Kind::BudgetExceeded) {
          out.insert(kBudget);
          continue;
        }
        Res next{Outcome::Kind::Uncaught,
                 hr.kind == Outcome::Kind::Normal ? r.exn : hr.exn, hr.state,
                 hr.fuel};
        out.insert(next);
        propagate(S, o_after, next, out);
      }
    };
    for (const auto& [z, h] : S.entries()) fire(h, O);
    for (const auto& [z, h] : O.entries()) fire(h, O.remove(z));
  }

  ResSet structural(const SigMap& S, const SigMap& O, const State& s,
                    const CommandPtr& c, std::uint32_t fuel, std::uint32_t iter) {
    switch (c->kind()) {
      case CmdKind::Skip:
        return {Res{Outcome::Kind::Normal, {}, s, fuel}};
      case CmdKind::Assign:
        return {Res{Outcome::Kind::Normal, {},
                    s.update(c->name(), eval_expr(*c->expr(), s)), fuel}};
      case CmdKind::Throw:
        return {Res{Outcome::Kind::Uncaught, c->name(), s, fuel}};
      case CmdKind::Seq:
        return seq(S, O, s, c->first(), c->second(), fuel, 0);
      case CmdKind::While:
        if (eval_expr(*c->expr(), s) == 0) return {Res{Outcome::Kind::Normal, {}, s, fuel}};
        if (iter >= budget_.max_iters) return {kBudget};
        return seq(S, O, s, c->body(), c, fuel, iter + 1);
      case CmdKind::TryCatch:
        return scope(S, O, [&](const SigMap& o) {
          ResSet out;
          // Normal body, or a different exception: the whole map goes to c1.
          for (const Res& r : eval(S, o, s, c->body(), fuel, 0))
            if (!(r.kind == Outcome::Kind::Uncaught && r.exn == c->name()))
              out.insert(r);
          for (const auto& [o1, o2] : splits(o)) {
            for (const Res& r : eval(S, o1, s, c->body(), fuel, 0)) {
              if (r.kind == Outcome::Kind::Uncaught && r.exn == c->name())
                out.merge(eval(S, o2, r.state, c->handler(), r.fuel, 0));
            }
          }
          return out;
        });
      case CmdKind::SigBind: {
        SigMap inner = S.update(c->name(), c->handler());
        return scope(inner, O, [&](const SigMap& o) {
          return eval(inner, o, s, c->body(), fuel, 0);
        });
      }
      case CmdKind::SigBindOnce:
        return scope(S, O.update(c->name(), c->handler()), [&](const SigMap& o) {
          return eval(S, o, s, c->body(), fuel, 0);
        });
      case CmdKind::SigBlock: {
        SigMap inner = S.contains(c->name()) ? S.remove(c->name()) : S;
        return scope(inner, O, [&](const SigMap& o) {
          return eval(inner, o, s, c->body(), fuel, 0);
        });
      }
      case CmdKind::SigBlockOnce:
        return scope(S, O.contains(c->name()) ? O.remove(c->name()) : O,
                     [&](const SigMap& o) { return eval(S, o, s, c->body(), fuel, 0); });
    }
    return {};
  }

  Budget budget_;
  PriorityMode mode_;
  std::map<Key, ResSet> memo_;
};

}  // namespace

OutcomeSet enumerate_split_oracle(const SigMap& s_bind, const SigMap& o_bind,
                                  const State& state, const CommandPtr& command,
                                  Budget budget, PriorityMode mode) {
  SplitOracle oracle(budget, mode);
  OutcomeSet out;
  for (const Res& r : oracle.eval(s_bind, o_bind, state, command, budget.handler_fuel, 0))
    out.insert(Outcome{r.kind, r.exn, r.state});
  return out;
}

}  // namespace sigsem
