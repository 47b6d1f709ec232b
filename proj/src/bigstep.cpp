#include "sigsem/bigstep.hpp"

#include <tuple>

namespace sigsem {

std::string Outcome::to_string() const {
  switch (kind) {
    case Kind::Normal:
      return "normal " + state.to_string();
    case Kind::Uncaught:
      return "uncaught " + exn + " " + state.to_string();
    case Kind::BudgetExceeded:
      return "budget-exceeded";
  }
  return {};
}

bool operator<(const Outcome& a, const Outcome& b) {
  return std::tie(a.kind, a.exn, a.state) < std::tie(b.kind, b.exn, b.state);
}

ChoiceOutOfRange::ChoiceOutOfRange(std::size_t index, std::size_t available)
    : std::out_of_range("choice " + std::to_string(index) + " out of range (" +
                        std::to_string(available) + " available)"),
      index_(index),
      available_(available) {}

namespace {

// A derivable conclusion together with the one-shot bindings left unfired
// and the handler fuel left over.
struct Res {
  Outcome::Kind kind = Outcome::Kind::Normal;
  std::string exn;
  State state;
  SigMap residual;
  std::uint32_t fuel = 0;

  static Res budget() { return Res{Outcome::Kind::BudgetExceeded, {}, {}, {}, 0}; }

  friend bool operator<(const Res& a, const Res& b) {
    return std::tie(a.kind, a.exn, a.state, a.residual, a.fuel) <
           std::tie(b.kind, b.exn, b.state, b.residual, b.fuel);
  }
};

using ResSet = std::set<Res>;

bool truthy(const Value& v) { return v != 0; }

class ThreadedEnumerator {
 public:
  ThreadedEnumerator(Budget budget, PriorityMode mode)
      : budget_(budget), mode_(mode) {}

  ResSet eval(const SigMap& S, const SigMap& O, const State& s,
              const CommandPtr& c, std::uint32_t fuel, std::uint32_t iter) {
    ResSet terminal;
    ResSet pre = fire_closure(S, {Res{Outcome::Kind::Normal, {}, s, O, fuel}},
                              terminal);
    ResSet normals;
    for (const Res& p : pre) {
      for (const Res& r : structural(S, p.residual, p.state, c, p.fuel, iter)) {
        if (r.kind == Outcome::Kind::Normal)
          normals.insert(r);
        else
          terminal.insert(r);
      }
    }
    ResSet out = fire_closure(S, std::move(normals), terminal);
    out.merge(terminal);
    return out;
  }

 private:
  // Fires handlers zero or more times after each normal item. Returns every
  // normal item reached; exceptional handler results go to `terminal`.
  ResSet fire_closure(const SigMap& S, ResSet start, ResSet& terminal) {
    ResSet seen = start;
    std::vector<Res> work(start.begin(), start.end());
    while (!work.empty()) {
      Res item = std::move(work.back());
      work.pop_back();
      if (item.fuel == 0) continue;
      auto fire = [&](const CommandPtr& h, const SigMap& residual_after) {
        for (const Res& r : eval({}, {}, item.state, h, item.fuel - 1, 0)) {
          if (r.kind == Outcome::Kind::Normal) {
            Res next{Outcome::Kind::Normal, {}, r.state, residual_after, r.fuel};
            if (seen.insert(next).second) work.push_back(std::move(next));
          } else if (r.kind == Outcome::Kind::Uncaught) {
            terminal.insert(
                Res{Outcome::Kind::Uncaught, r.exn, r.state, residual_after, r.fuel});
          } else {
            terminal.insert(Res::budget());
          }
        }
      };
      for (const auto& [z, h] : S.entries()) fire(h, item.residual);
      for (const auto& [z, h] : item.residual.entries())
        fire(h, item.residual.remove(z));
    }
    return seen;
  }

  // Signal priority: handlers visible inside a scope may run while an
  // exception leaves that scope.
  void propagate(const SigMap& S_inner, ResSet& results) {
    if (mode_ != PriorityMode::SignalPriority) return;
    std::vector<Res> work;
    for (const Res& r : results)
      if (r.kind == Outcome::Kind::Uncaught && r.fuel > 0) work.push_back(r);
    while (!work.empty()) {
      Res item = std::move(work.back());
      work.pop_back();
      if (item.fuel == 0) continue;
      auto fire = [&](const CommandPtr& h, const SigMap& residual_after) {
        for (const Res& r : eval({}, {}, item.state, h, item.fuel - 1, 0)) {
          Res next = r.kind == Outcome::Kind::BudgetExceeded
                         ? Res::budget()
                         : Res{Outcome::Kind::Uncaught,
                               r.kind == Outcome::Kind::Normal ? item.exn : r.exn,
                               r.state, residual_after, r.fuel};
          bool fresh = results.insert(next).second;
          if (fresh && next.kind == Outcome::Kind::Uncaught)
            work.push_back(std::move(next));
        }
      };
      for (const auto& [z, h] : S_inner.entries()) fire(h, item.residual);
      for (const auto& [z, h] : item.residual.entries())
        fire(h, item.residual.remove(z));
    }
  }

  ResSet structural(const SigMap& S, const SigMap& O, const State& s,
                    const CommandPtr& c, std::uint32_t fuel, std::uint32_t iter) {
    switch (c->kind()) {
      case CmdKind::Skip:
        return {Res{Outcome::Kind::Normal, {}, s, O, fuel}};
      case CmdKind::Assign:
        return {Res{Outcome::Kind::Normal, {},
                    s.update(c->name(), eval_expr(*c->expr(), s)), O, fuel}};
      case CmdKind::Throw:
        return {Res{Outcome::Kind::Uncaught, c->name(), s, O, fuel}};
      case CmdKind::Seq: {
        ResSet out;
        for (const Res& r1 : eval(S, O, s, c->first(), fuel, 0)) {
          if (r1.kind != Outcome::Kind::Normal) {
            out.insert(r1);
            continue;
          }
          out.merge(eval(S, r1.residual, r1.state, c->second(), r1.fuel, 0));
        }
        return out;
      }
      case CmdKind::While: {
        if (!truthy(eval_expr(*c->expr(), s)))
          return {Res{Outcome::Kind::Normal, {}, s, O, fuel}};
        if (iter >= budget_.max_iters) return {Res::budget()};
        ResSet out;
        for (const Res& r1 : eval(S, O, s, c->body(), fuel, 0)) {
          if (r1.kind != Outcome::Kind::Normal) {
            out.insert(r1);
            continue;
          }
          out.merge(eval(S, r1.residual, r1.state, c, r1.fuel, iter + 1));
        }
        return out;
      }
      case CmdKind::TryCatch: {
        ResSet out;
        for (const Res& r1 : eval(S, O, s, c->body(), fuel, 0)) {
          if (r1.kind == Outcome::Kind::Uncaught && r1.exn == c->name())
            out.merge(eval(S, r1.residual, r1.state, c->handler(), r1.fuel, 0));
          else
            out.insert(r1);
        }
        propagate(S, out);
        return out;
      }
      case CmdKind::SigBind: {
        SigMap inner = S.update(c->name(), c->handler());
        ResSet out = eval(inner, O, s, c->body(), fuel, 0);
        propagate(inner, out);
        return out;
      }
      case CmdKind::SigBlock: {
        SigMap inner = S.contains(c->name()) ? S.remove(c->name()) : S;
        ResSet out = eval(inner, O, s, c->body(), fuel, 0);
        propagate(inner, out);
        return out;
      }
      case CmdKind::SigBindOnce: {
        ResSet out = eval(S, O.update(c->name(), c->handler()), s, c->body(), fuel, 0);
        propagate(S, out);
        return restore_once(c->name(), O, std::move(out));
      }
      case CmdKind::SigBlockOnce: {
        SigMap inner = O.contains(c->name()) ? O.remove(c->name()) : O;
        ResSet out = eval(S, inner, s, c->body(), fuel, 0);
        propagate(S, out);
        return restore_once(c->name(), O, std::move(out));
      }
    }
    return {};
  }

  // Leaving a scope that rebinds or hides one-shot `z`: the inner binding
  // is dropped and the outer one, never visible inside, is handed back.
  static ResSet restore_once(const std::string& z, const SigMap& outer,
                             ResSet inner) {
    ResSet out;
    for (Res r : inner) {
      if (r.kind != Outcome::Kind::BudgetExceeded) {
        if (r.residual.contains(z)) r.residual = r.residual.remove(z);
        if (outer.contains(z)) r.residual = r.residual.update(z, outer.lookup(z));
      }
      out.insert(std::move(r));
    }
    return out;
  }

  Budget budget_;
  PriorityMode mode_;
};

}  // namespace

OutcomeSet enumerate(const SigMap& s_bind, const SigMap& o_bind,
                     const State& state, const CommandPtr& command,
                     Budget budget, PriorityMode mode) {
  ThreadedEnumerator e(budget, mode);
  OutcomeSet out;
  for (const Res& r : e.eval(s_bind, o_bind, state, command, budget.handler_fuel, 0))
    out.insert(Outcome{r.kind, r.exn, r.state});
  return out;
}

}  // namespace sigsem
