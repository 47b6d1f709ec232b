#include "sigsem/differential.hpp"

#include <algorithm>
#include <random>

#include "json.hpp"

namespace sigsem {

namespace {

std::string pool_name(char prefix, std::uint64_t i) {
  return std::string(1, prefix) + std::to_string(i + 1);
}

class Generator {
 public:
  Generator(const GenParams& p, std::uint64_t index) : p_(p) {
    std::seed_seq seq{static_cast<std::uint32_t>(p.seed), static_cast<std::uint32_t>(p.seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    rng_.seed(seq);
  }

  Program program() {
    Program out;
    out.command = command(std::max<std::uint32_t>(p_.max_depth, 1), false);
    for (std::uint32_t i = 0; i < std::max<std::uint32_t>(p_.num_vars, 1); ++i)
      out.initial_vars.emplace_back(pool_name('x', i), literal());
    return out;
  }

 private:
  enum class Ctor { Skip, Assign, Throw, Seq, While, TryCatch, Bind, BindOnce, Block, BlockOnce };

  std::uint64_t below(std::uint64_t n) { return rng_() % n; }
  bool coin() { return below(2) == 0; }

  Value literal() {
    auto span = static_cast<std::uint64_t>(p_.literal_hi - p_.literal_lo) + 1;
    return Value(p_.literal_lo + static_cast<std::int64_t>(below(span)));
  }
  std::string var() { return pool_name('x', below(std::max<std::uint32_t>(p_.num_vars, 1))); }
  std::string exn() { return pool_name('e', below(p_.num_exns)); }
  std::string per() { return pool_name('p', below(p_.num_signals_per_kind)); }
  std::string once() { return pool_name('o', below(p_.num_signals_per_kind)); }

  ExprPtr atom() { return coin() ? ex::var(var()) : ex::lit(literal()); }

  ExprPtr expr() {
    switch (below(3)) {
      case 0:
        return ex::var(var());
      case 1:
        return ex::lit(literal());
      default:
        return ex::add(atom(), atom());
    }
  }

  CommandPtr command(std::uint32_t depth, bool in_try) {
    std::vector<Ctor> ctors{Ctor::Skip, Ctor::Assign};
    if (p_.num_exns > 0) ctors.push_back(Ctor::Throw);
    if (depth > 1) {
      ctors.insert(ctors.end(), {Ctor::Seq, Ctor::While});
      if (p_.num_exns > 0) ctors.push_back(Ctor::TryCatch);
      if (p_.num_signals_per_kind > 0)
        ctors.insert(ctors.end(), {Ctor::Bind, Ctor::BindOnce, Ctor::Block, Ctor::BlockOnce});
    }
    Ctor c;
    do {
      c = ctors[below(ctors.size())];
    } while (c == Ctor::Throw && !in_try && coin());

    const std::uint32_t d = depth - 1;
    switch (c) {
      case Ctor::Skip:
        return cmd::skip();
      case Ctor::Assign:
        return cmd::assign(var(), expr());
      case Ctor::Throw:
        return cmd::throw_exn(exn());
      case Ctor::Seq: {
        CommandPtr first = command(d, in_try);
        return cmd::seq(first, command(d, in_try));
      }
      case Ctor::While: {
        ExprPtr cond = expr();
        if (cond->kind() == ExprKind::Lit && cond->value() != 0) cond = ex::var(var());
        return cmd::while_do(cond, command(d, in_try));
      }
      case Ctor::TryCatch: {
        CommandPtr body = command(d, true);
        std::string e = exn();
        return cmd::try_catch(body, e, command(d, in_try));
      }
      case Ctor::Bind: {
        std::string z = per();
        CommandPtr body = command(d, in_try);
        return cmd::bind(z, body, command(d, in_try));
      }
      case Ctor::BindOnce: {
        std::string z = once();
        CommandPtr body = command(d, in_try);
        return cmd::bind_once(z, body, command(d, in_try));
      }
      case Ctor::Block: {
        std::string z = per();
        return cmd::block(z, command(d, in_try));
      }
      case Ctor::BlockOnce: {
        std::string z = once();
        return cmd::block_once(z, command(d, in_try));
      }
    }
    return cmd::skip();
  }

  const GenParams& p_;
  std::mt19937_64 rng_;
};

}  // namespace

Program gen_program(const GenParams& params, std::uint64_t index) {
  return Generator(params, index).program();
}

CorpusTooLarge::CorpusTooLarge(std::size_t requested)
    : std::length_error("exhaustive corpus limited to " + std::to_string(kMaxCorpusSize) +
                        " nodes, requested " + std::to_string(requested)) {}

std::vector<Program> exhaustive_corpus(std::size_t max_ast_size, const GenParams& pools) {
  if (max_ast_size > kMaxCorpusSize) throw CorpusTooLarge(max_ast_size);
  const std::string x = "x1", p = "p1", o = "o1", e = "e1";
  const bool has_exn = pools.num_exns > 0;
  const bool has_sig = pools.num_signals_per_kind > 0;

  // exprs[n] and cmds[n] hold every term of exactly n nodes.
  std::vector<std::vector<ExprPtr>> exprs(max_ast_size + 1);
  std::vector<std::vector<CommandPtr>> cmds(max_ast_size + 1);
  for (std::size_t n = 1; n <= max_ast_size; ++n) {
    if (n == 1) {
      exprs[1].push_back(ex::var(x));
      for (std::int64_t v = pools.literal_lo; v <= pools.literal_hi; ++v)
        exprs[1].push_back(ex::lit(Value(v)));
    } else {
      for (std::size_t l = 1; l + 1 < n; ++l)
        for (const ExprPtr& a : exprs[l])
          for (const ExprPtr& b : exprs[n - 1 - l]) exprs[n].push_back(ex::add(a, b));
    }

    auto& out = cmds[n];
    if (n == 1) {
      out.push_back(cmd::skip());
      if (has_exn) out.push_back(cmd::throw_exn(e));
    }
    for (const ExprPtr& rhs : exprs[n]) out.push_back(cmd::assign(x, rhs));
    for (std::size_t l = 1; l < n; ++l)
      for (const ExprPtr& cond : exprs[l])
        for (const CommandPtr& body : cmds[n - l]) out.push_back(cmd::while_do(cond, body));
    if (n >= 2) {
      for (const CommandPtr& body : cmds[n - 1]) {
        if (has_sig) {
          out.push_back(cmd::block(p, body));
          out.push_back(cmd::block_once(o, body));
        }
      }
    }
    for (std::size_t l = 1; l + 1 < n; ++l) {
      for (const CommandPtr& a : cmds[l]) {
        for (const CommandPtr& b : cmds[n - 1 - l]) {
          out.push_back(cmd::seq(a, b));
          if (has_exn) out.push_back(cmd::try_catch(a, e, b));
          if (has_sig) {
            out.push_back(cmd::bind(p, a, b));
            out.push_back(cmd::bind_once(o, a, b));
          }
        }
      }
    }
  }

  std::vector<Program> corpus;
  for (std::size_t n = 1; n <= max_ast_size; ++n)
    for (const CommandPtr& c : cmds[n])
      corpus.push_back(Program{c, {{x, Value(pools.literal_lo)}}});
  return corpus;
}

std::string verdict_name(DiffReport::Verdict v) {
  switch (v) {
    case DiffReport::Verdict::Equal:
      return "equal";
    case DiffReport::Verdict::MissingInMachine:
      return "missing-in-machine";
    case DiffReport::Verdict::MissingInBigstep:
      return "missing-in-bigstep";
    case DiffReport::Verdict::BudgetIncomparable:
      return "budget-incomparable";
  }
  return {};
}

DiffReport compare(const Program& program, Budget budget, MachineMutation mutation) {
  DiffReport r;
  r.program = program;
  r.bigstep_outcomes = enumerate({}, {}, State::from_program(program), program.command,
                                 budget, PriorityMode::ExceptionPriority);
  r.machine_outcomes = enumerate_machine(program, budget, mutation);
  for (const Outcome& o : r.bigstep_outcomes)
    if (!o.is_budget() && !r.machine_outcomes.count(o)) r.only_bigstep.insert(o);
  for (const Outcome& o : r.machine_outcomes)
    if (!o.is_budget() && !r.bigstep_outcomes.count(o)) r.only_machine.insert(o);
  const Outcome budget_outcome = Outcome::budget_exceeded();
  if (r.bigstep_outcomes.count(budget_outcome) || r.machine_outcomes.count(budget_outcome))
    r.verdict = DiffReport::Verdict::BudgetIncomparable;
  else if (!r.only_bigstep.empty())
    r.verdict = DiffReport::Verdict::MissingInMachine;
  else if (!r.only_machine.empty())
    r.verdict = DiffReport::Verdict::MissingInBigstep;
  else
    r.verdict = DiffReport::Verdict::Equal;
  return r;
}

namespace {

bool is_handler_rule(const std::string& rule) {
  return rule.rfind("PerShotHandl", 0) == 0 || rule.rfind("OneShotHandl", 0) == 0;
}

bool is_once_rule(const std::string& rule) { return rule.rfind("OneShotHandl", 0) == 0; }

// After-rules put the judgment for c first and the handler second.
bool is_after_rule(const Derivation& d) {
  return is_handler_rule(d.rule) && d.rule.find("Raise") == std::string::npos &&
         d.premises.size() == 2 && d.premises[1].handler_premise &&
         !d.premises[0].handler_premise;
}

const Derivation* handler_premise(const Derivation& d) {
  for (const Derivation& p : d.premises)
    if (p.handler_premise) return &p;
  return nullptr;
}

// One-shot fires of z charged to the binding at the root of `d`.
std::size_t once_fires(const Derivation& d, const std::string& z) {
  std::size_t n = is_once_rule(d.rule) && d.signal == z ? 1 : 0;
  for (const Derivation& p : d.premises) {
    if (p.handler_premise) continue;
    if (p.rule.rfind("OneSigBind", 0) == 0 && p.conclusion.command->name() == z) continue;
    n += once_fires(p, z);
  }
  return n;
}

class DerivationAuditor {
 public:
  explicit DerivationAuditor(PriorityMode mode) : mode_(mode) {}

  void visit(const Derivation& d, const std::string& witness) {
    if (d.handler_premise && (!d.conclusion.s_bind.empty() || !d.conclusion.o_bind.empty()))
      report("HandlerIsolation", d.rule + " handler premise sees bindings", witness);
    if (is_handler_rule(d.rule)) {
      const Derivation* h = handler_premise(d);
      const SigMap& m = is_once_rule(d.rule) ? d.conclusion.o_bind : d.conclusion.s_bind;
      CommandPtr bound = m.lookup(d.signal);
      if (!h || !bound || !equal(bound, h->conclusion.command))
        report("ScopeConfinement", d.rule + " fires " + d.signal + " outside its binding",
               witness);
    }
    if (d.rule.rfind("OneSigBind", 0) == 0 && !d.premises.empty() &&
        once_fires(d.premises[0], d.conclusion.command->name()) > 1)
      report("OneShotRefired", "one-shot " + d.conclusion.command->name() + " fired twice",
             witness);
    if (mode_ == PriorityMode::ExceptionPriority) {
      if (d.rule.find("Raise") != std::string::npos ||
          (is_after_rule(d) && !d.premises[0].conclusion.outcome.is_normal()))
        report("ExceptionPriority", d.rule + " runs a handler during propagation", witness);
    }
    for (const Derivation& p : d.premises) visit(p, witness);
  }

  std::vector<AuditViolation> take() { return std::move(found_); }

 private:
  void report(const std::string& kind, std::string detail, const std::string& witness) {
    if (!kinds_.insert(kind).second) return;
    found_.push_back({kind, std::move(detail), witness});
  }

  PriorityMode mode_;
  std::set<std::string> kinds_;
  std::vector<AuditViolation> found_;
};

}  // namespace

std::vector<AuditViolation> audit_derivations(const Program& program, Budget budget,
                                              PriorityMode mode,
                                              std::size_t derivation_limit) {
  DerivationAuditor auditor(mode);
  for_each_derivation(
      {}, {}, State::from_program(program), program.command, budget, mode,
      [&](const ScheduledRun& run) {
        std::string witness = "picks";
        for (std::size_t p : run.taken) witness += " " + std::to_string(p);
        auditor.visit(run.derivation, witness);
      },
      derivation_limit);
  return auditor.take();
}

std::vector<AuditViolation> audit_invariants(const Program& program, Budget budget,
                                             MachineMutation mutation,
                                             std::size_t derivation_limit) {
  std::vector<AuditViolation> out =
      explore_machine(program, budget, mutation, true).violations;
  for (AuditViolation& v : audit_derivations(program, budget,
                                             PriorityMode::ExceptionPriority,
                                             derivation_limit))
    out.push_back(std::move(v));
  return out;
}

std::string report_line(const DiffReport& report) {
  nlohmann::ordered_json j;
  j["program"] = render(report.program);
  j["verdict"] = verdict_name(report.verdict);
  j["bigstep_count"] = report.bigstep_outcomes.size();
  j["machine_count"] = report.machine_outcomes.size();
  if (report.missing()) {
    nlohmann::ordered_json w;
    w["only_bigstep"] = nlohmann::json::array();
    w["only_machine"] = nlohmann::json::array();
    for (const Outcome& o : report.only_bigstep) w["only_bigstep"].push_back(o.to_string());
    for (const Outcome& o : report.only_machine) w["only_machine"].push_back(o.to_string());
    j["witness"] = std::move(w);
  }
  return j.dump();
}

std::string report_jsonl(std::vector<DiffReport> reports) {
  std::vector<std::pair<std::string, std::string>> lines;
  lines.reserve(reports.size());
  for (const DiffReport& r : reports) lines.emplace_back(render(r.program), report_line(r));
  std::stable_sort(lines.begin(), lines.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string out;
  for (const auto& [key, line] : lines) out += line + "\n";
  return out;
}

}  // namespace sigsem
