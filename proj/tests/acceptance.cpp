// One line per acceptance criterion; exit status 1 if any line fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "sigsem/bigstep.hpp"
#include "sigsem/differential.hpp"
#include "sigsem/machine.hpp"

using namespace sigsem;

namespace {

constexpr double kGoldenSeconds = 1.0;
constexpr double kEquivalenceSeconds = 300.0;
constexpr std::size_t kCorpusSize = 6;
constexpr std::size_t kFuzzCount = 500;
constexpr std::uint32_t kFuzzDepth = 4;
constexpr std::uint64_t kFuzzSeed = 42;
constexpr Budget kDiffBudget{2, 2};

const PriorityMode EP = PriorityMode::ExceptionPriority;
const PriorityMode SP = PriorityMode::SignalPriority;

int failures = 0;

void report(int n, const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s %d %s: %s\n", ok ? "PASS" : "FAIL", n, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3fs", s);
  return buf;
}

Program must_parse(const std::string& text) {
  ParseResult r = parse(text);
  if (auto* e = std::get_if<ParseError>(&r)) throw std::runtime_error(e->to_string());
  return std::get<Program>(r);
}

CommandPtr set(const std::string& v, int n) { return cmd::assign(v, ex::lit(n)); }
CommandPtr incr(const std::string& v) {
  return cmd::assign(v, ex::add(ex::var(v), ex::lit(1)));
}

// ---------------------------------------------------------------- golden traces

struct Row {
  std::string current;
  std::size_t j;
  std::string k;     // frame kinds top first: C cmd, P pop-upd, U upd, R ret
  std::string beta;  // enabled names
  int used = -1;     // used bit of the top tag, when checked
};

std::string frame_kinds(const std::vector<Frame>& k) {
  std::string out;
  for (const Frame& f : k) out += "CPUR"[static_cast<int>(f.kind)];
  return out;
}

std::vector<MachineChoice> schedule(const std::string& letters, const std::string& z) {
  std::vector<MachineChoice> out;
  for (char ch : letters) {
    if (ch == 'S') out.push_back(MachineChoice::structural());
    if (ch == 'F') out.push_back(MachineChoice::fire_per(z));
    if (ch == 'O') out.push_back(MachineChoice::fire_once(z));
  }
  return out;
}

void golden(int n, const std::string& name, const Program& p, const std::string& sched,
            const std::vector<Row>& rows, const std::function<std::string(const MachineRun&)>& extra) {
  auto t0 = std::chrono::steady_clock::now();
  MachineRun r = run(p, schedule(sched, "z"), Budget{});
  double secs = seconds_since(t0);
  std::ostringstream why;
  if (r.trace.size() != rows.size())
    why << "expected " << rows.size() - 1 << " transitions, got " << r.trace.size() - 1 << "; ";
  for (std::size_t i = 0; i < std::min(rows.size(), r.trace.size()); ++i) {
    const Config& c = r.trace[i];
    const Row& e = rows[i];
    std::string cur = frame_to_string(c.current);
    std::string beta = c.beta.to_string();
    bool ok = cur == e.current && c.j.size() == e.j && frame_kinds(c.k) == e.k && beta == e.beta;
    if (e.used >= 0) ok = ok && !c.j.empty() && c.j[0].used == (e.used == 1);
    if (!ok) {
      why << "row " << i << " got <" << cur << ", |J|=" << c.j.size() << ", " << frame_kinds(c.k)
          << ", " << beta << "> want <" << e.current << ", |J|=" << e.j << ", " << e.k << ", "
          << e.beta << ">; ";
    }
  }
  if (r.result.kind != MachineResult::Kind::Finished) why << "result " << r.result.to_string() << "; ";
  why << extra(r);
  if (secs >= kGoldenSeconds) why << "too slow; ";
  std::string problems = why.str();
  report(n, name, problems.empty(),
         problems.empty() ? std::to_string(rows.size() - 1) + " transitions match, " +
                                r.result.to_string() + ", " + fmt_seconds(secs)
                          : problems);
}

void criterion_binding_inside_try() {
  CommandPtr c = set("x", 1), h = set("y", 1), g = set("r", 1);
  CommandPtr ht = cmd::seq(h, cmd::throw_exn("e"));
  CommandPtr bind = cmd::bind("z", c, ht);
  CommandPtr prog = cmd::try_catch(bind, "e", g);
  Program p{prog, {{"r", 0}, {"x", 0}, {"y", 0}}};
  std::vector<Row> rows = {
      {render(*prog), 0, "R", "[]"},
      {render(*bind), 1, "PR", "[]"},
      {render(*c), 2, "PPR", "[z]"},
      {render(*ht), 2, "UCPPR", "[]"},
      {render(*h), 2, "CUCPPR", "[]"},
      {"throw e", 2, "UCPPR", "[]"},
      {render(*g), 0, "R", "[]"},
      {"ret", 0, "", "[]"},
  };
  golden(1, "binding-inside-try-trace", p, "SSF", rows, [](const MachineRun& r) {
    return r.result == MachineResult::finished(State{{"r", 1}, {"x", 0}, {"y", 1}})
               ? std::string()
               : "unexpected final state; ";
  });
}

void criterion_try_inside_binding() {
  CommandPtr g = set("r", 1), h = incr("y");
  CommandPtr t = cmd::try_catch(cmd::throw_exn("e"), "e", g);
  CommandPtr prog = cmd::bind("z", t, h);
  Program p{prog, {{"r", 0}, {"y", 0}}};
  std::vector<Row> rows = {
      {render(*prog), 0, "R", "[]"},
      {render(*t), 1, "PR", "[z]"},
      {"throw e", 2, "PPR", "[z]"},
      {render(*h), 2, "UCPPR", "[]"},
      {"upd[z]", 2, "CPPR", "[]"},
      {"throw e", 2, "PPR", "[z]"},
      {render(*g), 1, "PR", "[z]"},
      {render(*h), 1, "UCPR", "[]"},
      {"upd[z]", 1, "CPR", "[]"},
      {render(*g), 1, "PR", "[z]"},
      {"pop-upd[]", 1, "R", "[z]"},
      {"ret", 0, "", "[]"},
  };
  golden(2, "try-inside-binding-trace", p, "SSFSSSFS", rows, [](const MachineRun& r) {
    // both restorations re-enable z
    std::string out;
    for (std::size_t i : {3u, 7u}) {
      const Frame& u = r.trace.at(i).k.at(0);
      if (u.kind != Frame::Kind::Upd || u.beta.to_string() != "[z]") out += "row " + std::to_string(i) + " lacks upd[z]; ";
    }
    if (!(r.result == MachineResult::finished(State{{"r", 1}, {"y", 2}}))) out += "unexpected final state; ";
    return out;
  });
}

void criterion_once_and_sequence() {
  CommandPtr c1 = set("x", 1), c2 = set("y", 1), h1 = set("r", 1);
  CommandPtr body = cmd::seq(c1, c2);
  CommandPtr prog = cmd::bind_once("z", body, h1);
  Program p{prog, {{"r", 0}, {"x", 0}, {"y", 0}}};
  std::vector<Row> rows = {
      {render(*prog), 0, "R", "[]"},
      {render(*body), 1, "PR", "[z]", 0},
      {render(*c1), 1, "CPR", "[z]", 0},
      {render(*h1), 1, "UCCPR", "[]", 1},
      {"upd[]", 1, "CCPR", "[]", 1},
      {render(*c1), 1, "CPR", "[]", 1},
      {render(*c2), 1, "PR", "[]", 1},
      {"pop-upd[]", 1, "R", "[]", 1},
      {"ret", 0, "", "[]"},
  };
  golden(3, "one-shot-sequence-trace", p, "SSO", rows, [](const MachineRun& r) {
    bool flip = !r.trace.at(2).j.at(0).used && r.trace.at(3).j.at(0).used;
    return flip ? std::string() : "used bit did not flip between rows 2 and 3; ";
  });
}

// ---------------------------------------------------------------- rule table

struct Premise {
  SigMap s, o;
  State in;
  CommandPtr command;
  Outcome out;
  bool handler = false;
};

struct RuleCase {
  std::string rule;
  SigMap s, o;
  State in;
  CommandPtr command;
  ChoiceTrace picks;
  std::vector<Premise> premises;
  Outcome out;
};

std::string check_judgment(const Judgment& j, const SigMap& s, const SigMap& o, const State& in,
                           const CommandPtr& c, const Outcome& out) {
  std::string why;
  if (!(j.s_bind == s)) why += "S=" + j.s_bind.to_string() + " ";
  if (!(j.o_bind == o)) why += "O=" + j.o_bind.to_string() + " ";
  if (!(j.state_in == in)) why += "in=" + j.state_in.to_string() + " ";
  if (!equal(j.command, c)) why += "cmd=" + render(*j.command) + " ";
  if (!(j.outcome == out)) why += "out=" + j.outcome.to_string() + " ";
  return why;
}

void criterion_rules() {
  CommandPtr h = set("y", 1), g = set("r", 1), c = set("x", 1);
  CommandPtr te = cmd::throw_exn("e"), tf = cmd::throw_exn("f");
  State s0{{"r", 0}, {"x", 0}, {"y", 0}};
  State sx{{"r", 0}, {"x", 1}, {"y", 0}};
  State sy{{"r", 0}, {"x", 0}, {"y", 1}};
  State sxy{{"r", 0}, {"x", 1}, {"y", 1}};
  State sr{{"r", 1}, {"x", 0}, {"y", 0}};
  SigMap zh{{"z", h}};
  auto N = [](State s) { return Outcome::normal(std::move(s)); };
  auto U = [](std::string e, State s) { return Outcome::uncaught(std::move(e), std::move(s)); };

  std::vector<RuleCase> cases = {
      {"PerSigBind", {}, {}, s0, cmd::bind("z", c, h), {}, {{zh, {}, s0, c, N(sx)}}, N(sx)},
      {"OneSigBind", {}, {}, s0, cmd::bind_once("z", c, h), {}, {{{}, zh, s0, c, N(sx)}}, N(sx)},
      {"PerSigBlock", zh, {}, s0, cmd::block("z", c), {}, {{{}, {}, s0, c, N(sx)}}, N(sx)},
      {"OneSigBlock", {}, zh, s0, cmd::block_once("z", c), {}, {{{}, {}, s0, c, N(sx)}}, N(sx)},
      {"Throw", {}, {}, s0, te, {}, {}, U("e", s0)},
      {"Handl", {}, zh, s0, cmd::try_catch(te, "e", g), {},
       {{{}, {}, s0, te, U("e", s0)}, {{}, zh, s0, g, N(sr)}}, N(sr)},
      {"Handl2", {}, {}, s0, cmd::try_catch(c, "e", g), {}, {{{}, {}, s0, c, N(sx)}}, N(sx)},
      {"Handl3", {}, {}, s0, cmd::try_catch(te, "e", tf), {},
       {{{}, {}, s0, te, U("e", s0)}, {{}, {}, s0, tf, U("f", s0)}}, U("f", s0)},
      {"Handl4", {}, {}, s0, cmd::try_catch(tf, "e", g), {}, {{{}, {}, s0, tf, U("f", s0)}}, U("f", s0)},
      {"Atomic", {}, {}, s0, incr("x"), {}, {}, N(sx)},
      {"SeqComp", {}, {}, s0, cmd::seq(c, h), {},
       {{{}, {}, s0, c, N(sx)}, {{}, {}, sx, h, N(sxy)}}, N(sxy)},
      {"PerShotHandl", zh, {}, s0, c, {0, 1},
       {{zh, {}, s0, c, N(sx)}, {{}, {}, sx, h, N(sxy), true}}, N(sxy)},
      {"OneShotHandl", {}, zh, s0, c, {0, 1},
       {{{}, {}, s0, c, N(sx)}, {{}, {}, sx, h, N(sxy), true}}, N(sxy)},
      {"PerShotHandl2", zh, {}, s0, c, {1},
       {{{}, {}, s0, h, N(sy), true}, {zh, {}, sy, c, N(sxy)}}, N(sxy)},
      {"OneShotHandl2", {}, zh, s0, c, {1},
       {{{}, {}, s0, h, N(sy), true}, {{}, {}, sy, c, N(sxy)}}, N(sxy)},
      // the two sequence propagation rules produced by the exception convention
      {"SeqComp-Exn1", {}, {}, s0, cmd::seq(te, c), {}, {{{}, {}, s0, te, U("e", s0)}}, U("e", s0)},
      {"SeqComp-Exn2", {}, {}, s0, cmd::seq(c, te), {},
       {{{}, {}, s0, c, N(sx)}, {{}, {}, sx, te, U("e", sx)}}, U("e", sx)},
  };

  std::size_t passed = 0;
  std::string failed;
  for (const RuleCase& rc : cases) {
    std::string why;
    try {
      ScheduledRun r = run_scheduled(rc.s, rc.o, rc.in, rc.command, Budget{}, EP, rc.picks);
      const Derivation& d = r.derivation;
      if (d.rule != rc.rule) why += "root=" + d.rule + " ";
      why += check_judgment(d.conclusion, rc.s, rc.o, rc.in, rc.command, rc.out);
      if (d.premises.size() != rc.premises.size()) {
        why += "premises=" + std::to_string(d.premises.size()) + " ";
      } else {
        for (std::size_t i = 0; i < rc.premises.size(); ++i) {
          const Premise& e = rc.premises[i];
          std::string p = check_judgment(d.premises[i].conclusion, e.s, e.o, e.in, e.command, e.out);
          if (d.premises[i].handler_premise != e.handler) p += "handler-flag ";
          if (!p.empty()) why += "premise " + std::to_string(i) + ": " + p;
        }
      }
      if (!enumerate(rc.s, rc.o, rc.in, rc.command, Budget{}, EP).count(rc.out))
        why += "outcome not enumerated ";
    } catch (const std::exception& e) {
      why += e.what();
    }
    if (why.empty()) ++passed;
    else failed += rc.rule + " (" + why + ") ";
  }
  report(4, "rule-fidelity", passed == cases.size(),
         std::to_string(passed) + "/" + std::to_string(cases.size()) + " rules" +
             (failed.empty() ? "" : "; failed: " + failed));
}

// ---------------------------------------------------------------- corpora

struct Corpora {
  std::vector<Program> exhaustive;
  std::vector<Program> fuzz;
};

Corpora build_corpora() {
  Corpora c;
  c.exhaustive = exhaustive_corpus(kCorpusSize, GenParams{});
  GenParams p;
  p.max_depth = kFuzzDepth;
  p.seed = kFuzzSeed;
  for (std::uint64_t i = 0; i < kFuzzCount; ++i) c.fuzz.push_back(gen_program(p, i));
  return c;
}

bool subset_ignoring_budget(const OutcomeSet& a, const OutcomeSet& b) {
  for (const Outcome& o : a)
    if (!o.is_budget() && !b.count(o)) return false;
  return true;
}

void criterion_equivalence(const Corpora& corpora) {
  auto t0 = std::chrono::steady_clock::now();
  std::size_t equal = 0, incomparable = 0, missing = 0, bi_big_in_machine = 0, bi_machine_in_big = 0;
  std::string first_missing;
  for (const auto* set : {&corpora.exhaustive, &corpora.fuzz}) {
    for (const Program& p : *set) {
      DiffReport d = compare(p, kDiffBudget);
      switch (d.verdict) {
        case DiffReport::Verdict::Equal: ++equal; break;
        case DiffReport::Verdict::BudgetIncomparable:
          ++incomparable;
          bi_big_in_machine += subset_ignoring_budget(d.bigstep_outcomes, d.machine_outcomes);
          bi_machine_in_big += subset_ignoring_budget(d.machine_outcomes, d.bigstep_outcomes);
          break;
        default:
          if (!missing++) first_missing = report_line(d);
      }
    }
  }
  double secs = seconds_since(t0);
  std::size_t total = corpora.exhaustive.size() + corpora.fuzz.size();
  std::ostringstream detail;
  detail << total << " programs (" << corpora.exhaustive.size() << " exhaustive + "
         << corpora.fuzz.size() << " fuzz), " << missing << " missing, " << equal << " equal, "
         << incomparable << " budget-incomparable, " << fmt_seconds(secs);
  if (missing) detail << "; first: " << first_missing;
  if (secs >= kEquivalenceSeconds) detail << "; too slow";
  report(5, "machine-bigstep-equivalence", missing == 0 && secs < kEquivalenceSeconds, detail.str());
  std::printf("  note: among budget-incomparable programs, finished big-step outcomes reached by the "
              "machine in %zu/%zu, finished machine outcomes reached by big-step in %zu/%zu\n",
              bi_big_in_machine, incomparable, bi_machine_in_big, incomparable);
}

void criterion_split_oracle(const Corpora& corpora) {
  auto t0 = std::chrono::steady_clock::now();
  std::size_t mismatches = 0, sp_mismatches = 0;
  std::string first;
  for (const Program& p : corpora.exhaustive) {
    State s = State::from_program(p);
    if (enumerate({}, {}, s, p.command, kDiffBudget, EP) !=
        enumerate_split_oracle({}, {}, s, p.command, kDiffBudget, EP)) {
      if (!mismatches++) first = render(p);
    }
    if (enumerate({}, {}, s, p.command, kDiffBudget, SP) !=
        enumerate_split_oracle({}, {}, s, p.command, kDiffBudget, SP))
      ++sp_mismatches;
  }
  std::ostringstream detail;
  detail << corpora.exhaustive.size() << " programs, " << mismatches << " mismatches ("
         << sp_mismatches << " under signal priority), " << fmt_seconds(seconds_since(t0));
  if (mismatches) detail << "; first: " << first;
  report(6, "threading-matches-splitting", mismatches == 0, detail.str());
}

void criterion_audits(const Corpora& corpora) {
  auto t0 = std::chrono::steady_clock::now();
  std::size_t violations = 0;
  std::string first;
  for (const auto* set : {&corpora.exhaustive, &corpora.fuzz}) {
    for (const Program& p : *set) {
      auto v = audit_invariants(p, kDiffBudget);
      if (!v.empty() && !violations) first = render(p) + " " + v[0].to_string();
      violations += v.size();
    }
  }
  std::ostringstream detail;
  detail << violations << " violations over " << corpora.exhaustive.size() + corpora.fuzz.size()
         << " programs";
  if (violations) detail << "; first: " << first;

  struct Mut {
    MachineMutation m;
    const char* name;
  };
  std::size_t caught = 0;
  for (Mut mut : {Mut{MachineMutation::SkipUsedBitFlip, "skip-used-bit"},
                  Mut{MachineMutation::SkipPopUpdOnExit, "skip-pop-upd"},
                  Mut{MachineMutation::HandlerUnderCallerBeta, "caller-beta"},
                  Mut{MachineMutation::SkipUnwindTagPop, "skip-unwind-pop"}}) {
    std::string how;
    for (const Program& p : corpora.exhaustive) {
      auto v = audit_invariants(p, kDiffBudget, mut.m);
      if (!v.empty()) {
        how = v[0].kind + " on " + render(*p.command);
        break;
      }
      DiffReport d = compare(p, kDiffBudget, mut.m);
      if (d.missing()) {
        how = verdict_name(d.verdict) + " on " + render(*p.command);
        break;
      }
    }
    if (!how.empty()) ++caught;
    detail << "; " << mut.name << ": " << (how.empty() ? "NOT DETECTED" : how);
  }
  detail << "; " << fmt_seconds(seconds_since(t0));
  report(7, "invariant-audits", violations == 0 && caught == 4, detail.str());
}

// ---------------------------------------------------------------- priority

bool has_raise_rule(const Derivation& d) {
  if (d.rule.find("Raise") != std::string::npos) return true;
  for (const auto& p : d.premises)
    if (has_raise_rule(p)) return true;
  return false;
}

void criterion_priority() {
  // try { bind z handler { y := y + 1 ; throw e } in { x := x + 1 } } catch e { r := 1 }
  CommandPtr h = cmd::seq(incr("y"), cmd::throw_exn("e"));
  CommandPtr prog = cmd::try_catch(cmd::bind("z", incr("x"), h), "e", set("r", 1));
  State s{{"r", 0}, {"x", 0}, {"y", 0}};
  Budget b{2, 2};
  OutcomeSet ep = enumerate({}, {}, s, prog, b, EP);
  OutcomeSet sp = enumerate({}, {}, s, prog, b, SP);
  bool contains = subset_ignoring_budget(ep, sp);
  OutcomeSet extra;
  for (const Outcome& o : sp)
    if (!ep.count(o)) extra.insert(o);

  // An extra outcome must come only from derivations where a handler ran
  // between the raise and the catch.
  std::size_t unexplained = 0;
  for_each_derivation({}, {}, s, prog, b, SP, [&](const ScheduledRun& r) {
    if (extra.count(r.outcome) && !has_raise_rule(r.derivation)) ++unexplained;
  });
  std::size_t ep_runs = 0;
  for_each_derivation({}, {}, s, prog, b, EP, [&](const ScheduledRun& r) {
    ep_runs += has_raise_rule(r.derivation);
  });
  auto ep_audit = audit_derivations(Program{prog, {{"r", 0}, {"x", 0}, {"y", 0}}}, b, EP);

  std::string extras;
  for (const Outcome& o : extra) extras += (extras.empty() ? "" : ", ") + o.to_string();
  bool ok = contains && !extra.empty() && unexplained == 0 && ep_runs == 0 && ep_audit.empty();
  std::ostringstream detail;
  detail << "exception-priority " << ep.size() << " outcomes, signal-priority " << sp.size()
         << "; extra: " << (extras.empty() ? "none" : extras) << "; extra outcomes without a "
         << "handler between raise and catch: " << unexplained
         << "; exception-priority derivations with one: " << ep_runs + ep_audit.size();
  report(8, "priority-modes", ok, detail.str());

  // The catch-handler-only variant: throw leaves the state alone, so a handler
  // run after it is matched by one run before it.
  CommandPtr plain = cmd::try_catch(cmd::bind("z", cmd::throw_exn("e"), incr("y")), "e", set("r", 1));
  State s2{{"r", 0}, {"y", 0}};
  OutcomeSet ep2 = enumerate({}, {}, s2, plain, b, EP), sp2 = enumerate({}, {}, s2, plain, b, SP);
  bool after = false;
  for_each_derivation({}, {}, s2, plain, b, SP,
                      [&](const ScheduledRun& r) { after = after || has_raise_rule(r.derivation); });
  std::printf("  note: with a bare throw in the binding the two modes give %s outcome sets (%zu, %zu); "
              "a signal-priority derivation with the handler after the throw %s\n",
              ep2 == sp2 ? "equal" : "different", ep2.size(), sp2.size(),
              after ? "exists" : "does not exist");
}

}  // namespace

int main() {
  criterion_binding_inside_try();
  criterion_try_inside_binding();
  criterion_once_and_sequence();
  criterion_rules();
  Corpora corpora = build_corpora();
  criterion_equivalence(corpora);
  criterion_split_oracle(corpora);
  criterion_audits(corpora);
  criterion_priority();
  std::printf("%s: %d failing\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
