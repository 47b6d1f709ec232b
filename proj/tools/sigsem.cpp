// Command-line front end: run, enumerate, trace, diff, fuzz.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sigsem/bigstep.hpp"
#include "sigsem/differential.hpp"
#include "sigsem/machine.hpp"
#include "sigsem/syntax.hpp"

using namespace sigsem;
using json = nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kMismatch = 1, kUsage = 2, kUncaught = 3, kBudget = 4, kSchedule = 5 };

struct Options {
  std::string source;
  std::string semantics = "bigstep";
  std::string mode = "exception-priority";
  std::string schedule;
  std::uint32_t fuel = 2;
  std::uint32_t iters = 8;
  std::string format = "text";
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScheduleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool color_enabled() {
  const char* v = std::getenv("SIGSEM_COLOR");
  return v && std::string(v) == "1";
}

std::string paint(const std::string& text, bool good) {
  if (!color_enabled()) return text;
  return std::string(good ? "\x1b[32m" : "\x1b[31m") + text + "\x1b[0m";
}

std::string read_file(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Program load_program(const std::string& path) {
  ParseResult parsed = parse(read_file(path));
  if (auto* err = std::get_if<ParseError>(&parsed))
    throw UsageError(path + ":" + err->to_string());
  Program program = std::get<Program>(std::move(parsed));
  std::vector<Violation> problems = well_formed(program);
  for (Violation& v : undeclared_variables(program)) problems.push_back(std::move(v));
  if (!problems.empty()) {
    std::string msg = path + ": ill-formed program";
    for (const Violation& v : problems) msg += "\n  " + v.to_string();
    throw UsageError(msg);
  }
  return program;
}

PriorityMode parse_mode(const Options& o) {
  if (o.mode == "signal-priority") {
    if (o.semantics == "machine") throw UsageError("mode unsupported for machine");
    return PriorityMode::SignalPriority;
  }
  return PriorityMode::ExceptionPriority;
}

// Lines with `#` comments removed, blank lines dropped.
std::vector<std::string> schedule_lines(const std::string& path) {
  std::vector<std::string> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::string first;
    if (words >> first) out.push_back(line);
  }
  return out;
}

std::vector<MachineChoice> machine_schedule(const std::string& path) {
  std::vector<MachineChoice> out;
  if (path.empty()) return out;
  for (const std::string& line : schedule_lines(path)) {
    std::istringstream words(line);
    std::string op, sig, extra;
    words >> op >> sig >> extra;
    if (!extra.empty()) throw ScheduleError("unexpected text in schedule line: " + line);
    if (op == "structural" && sig.empty())
      out.push_back(MachineChoice::structural());
    else if (op == "fire-per" && is_identifier(sig))
      out.push_back(MachineChoice::fire_per(sig));
    else if (op == "fire-once" && is_identifier(sig))
      out.push_back(MachineChoice::fire_once(sig));
    else
      throw ScheduleError("bad schedule directive: " + line);
  }
  return out;
}

ChoiceTrace bigstep_schedule(const std::string& path) {
  ChoiceTrace out;
  if (path.empty()) return out;
  for (const std::string& line : schedule_lines(path)) {
    std::istringstream words(line);
    std::string w;
    while (words >> w) {
      if (w.find_first_not_of("0123456789") != std::string::npos)
        throw ScheduleError("bad schedule pick: " + w);
      out.push_back(std::stoul(w));
    }
  }
  return out;
}

json value_json(const Value& v) {
  if (v >= std::numeric_limits<std::int64_t>::min() &&
      v <= std::numeric_limits<std::int64_t>::max())
    return static_cast<std::int64_t>(v);
  return v.str();
}

json state_json(const State& s) {
  json out = json::object();
  for (const auto& [name, value] : s.entries()) out[name] = value_json(value);
  return out;
}

json outcome_json(const Outcome& o) {
  json out;
  switch (o.kind) {
    case Outcome::Kind::Normal:
      out["kind"] = "normal";
      out["state"] = state_json(o.state);
      break;
    case Outcome::Kind::Uncaught:
      out["kind"] = "uncaught";
      out["exn"] = o.exn;
      out["state"] = state_json(o.state);
      break;
    case Outcome::Kind::BudgetExceeded:
      out["kind"] = "budget-exceeded";
      break;
  }
  return out;
}

json config_json(const Config& c, std::size_t step) {
  json out;
  out["step"] = step;
  out["current"] = frame_to_string(c.current);
  out["state"] = state_json(c.state);
  out["beta"] = json::array();
  for (const auto& z : c.beta.enabled()) out["beta"].push_back(z);
  out["j"] = json::array();
  for (const Tag& t : c.j) {
    const char* kind = t.kind == Tag::Kind::Exn ? "exn" : t.kind == Tag::Kind::Per ? "per" : "once";
    out["j"].push_back({{"kind", kind}, {"name", t.name}, {"used", t.used ? 1 : 0}});
  }
  out["k"] = json::array();
  for (const Frame& f : c.k) out["k"].push_back(frame_to_string(f));
  return out;
}

int exit_for(const Outcome& o) {
  switch (o.kind) {
    case Outcome::Kind::Normal:
      return kOk;
    case Outcome::Kind::Uncaught:
      return kUncaught;
    case Outcome::Kind::BudgetExceeded:
      return kBudget;
  }
  return kOk;
}

int cmd_run(const Options& o, bool with_trace) {
  const PriorityMode mode = parse_mode(o);
  const Program program = load_program(o.source);
  const Budget budget{o.fuel, o.iters};
  const bool as_json = o.format == "json";

  if (o.semantics == "machine") {
    MachineRun r;
    try {
      r = run(program, machine_schedule(o.schedule), budget);
    } catch (const InvalidChoice& e) {
      throw ScheduleError(e.what());
    }
    const Outcome outcome = r.result.to_outcome();
    if (as_json) {
      json out;
      out["semantics"] = "machine";
      out["result"] = outcome_json(outcome);
      out["trace"] = json::array();
      for (std::size_t i = 0; i < r.trace.size(); ++i)
        out["trace"].push_back(config_json(r.trace[i], i));
      std::cout << out.dump(2) << "\n";
    } else {
      for (std::size_t i = 0; i < r.trace.size(); ++i)
        std::cout << config_to_string(r.trace[i], i) << "\n";
      std::cout << paint(r.result.to_string(), outcome.is_normal()) << "\n";
    }
    return exit_for(outcome);
  }

  ScheduledRun r;
  try {
    r = run_scheduled({}, {}, State::from_program(program), program.command, budget, mode,
                      bigstep_schedule(o.schedule));
  } catch (const ChoiceOutOfRange& e) {
    throw ScheduleError(e.what());
  }
  if (as_json) {
    json out;
    out["semantics"] = "bigstep";
    out["result"] = outcome_json(r.outcome);
    out["picks"] = r.taken;
    if (with_trace) out["derivation"] = derivation_render(r.derivation);
    std::cout << out.dump(2) << "\n";
  } else {
    if (with_trace) std::cout << derivation_render(r.derivation);
    std::cout << paint(r.outcome.to_string(), r.outcome.is_normal()) << "\n";
  }
  return exit_for(r.outcome);
}

int cmd_enumerate(const Options& o) {
  const PriorityMode mode = parse_mode(o);
  const Program program = load_program(o.source);
  const Budget budget{o.fuel, o.iters};
  OutcomeSet outcomes =
      o.semantics == "machine"
          ? enumerate_machine(program, budget)
          : enumerate({}, {}, State::from_program(program), program.command, budget, mode);
  if (o.format == "json") {
    json out = json::array();
    for (const Outcome& oc : outcomes) out.push_back(outcome_json(oc));
    std::cout << out.dump(2) << "\n";
  } else {
    for (const Outcome& oc : outcomes) std::cout << oc.to_string() << "\n";
  }
  return kOk;
}

struct DiffOptions {
  std::size_t exhaustive = 0;
  std::size_t fuzz = 0;
  std::uint64_t seed = 42;
  std::uint32_t depth = 4;
  std::uint32_t fuel = 2;
  std::uint32_t iters = 2;
  std::string mutation = "none";
};

MachineMutation parse_mutation(const std::string& name) {
  if (name == "none") return MachineMutation::None;
  if (name == "skip-used-bit") return MachineMutation::SkipUsedBitFlip;
  if (name == "skip-pop-upd") return MachineMutation::SkipPopUpdOnExit;
  if (name == "caller-beta") return MachineMutation::HandlerUnderCallerBeta;
  if (name == "skip-unwind-pop") return MachineMutation::SkipUnwindTagPop;
  throw UsageError("unknown mutation " + name);
}

int cmd_diff(const DiffOptions& d) {
  if ((d.exhaustive == 0) == (d.fuzz == 0))
    throw UsageError("diff needs exactly one of --exhaustive N or --fuzz N");
  const MachineMutation mutation = parse_mutation(d.mutation);
  const Budget budget{d.fuel, d.iters};
  std::vector<Program> corpus;
  if (d.exhaustive) {
    try {
      corpus = exhaustive_corpus(d.exhaustive, GenParams{});
    } catch (const CorpusTooLarge& e) {
      throw UsageError(e.what());
    }
  } else {
    GenParams params;
    params.max_depth = d.depth;
    params.seed = d.seed;
    for (std::size_t i = 0; i < d.fuzz; ++i) corpus.push_back(gen_program(params, i));
  }

  std::vector<DiffReport> reports;
  reports.reserve(corpus.size());
  std::size_t missing = 0, incomparable = 0;
  for (const Program& p : corpus) {
    reports.push_back(compare(p, budget, mutation));
    missing += reports.back().missing();
    incomparable +=
        reports.back().verdict == DiffReport::Verdict::BudgetIncomparable;
  }
  std::cout << report_jsonl(std::move(reports));
  std::cerr << corpus.size() << " programs, " << missing << " missing, " << incomparable
            << " budget-incomparable\n";
  return missing ? kMismatch : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Signal and exception semantics: big-step evaluator and abstract machine"};
  app.require_subcommand(1);

  Options run_opts, enum_opts, trace_opts;
  auto add_common = [](CLI::App* sub, Options& o, bool schedule) {
    sub->add_option("source", o.source, "Program file ('-' for stdin)")->required();
    sub->add_option("--semantics", o.semantics)
        ->check(CLI::IsMember({"bigstep", "machine"}));
    sub->add_option("--mode", o.mode)
        ->check(CLI::IsMember({"exception-priority", "signal-priority"}));
    if (schedule) sub->add_option("--schedule", o.schedule, "Schedule file");
    sub->add_option("--fuel", o.fuel, "Handler runs per derivation or run");
    sub->add_option("--iters", o.iters, "Unrollings per while loop");
    sub->add_option("--format", o.format)->check(CLI::IsMember({"text", "json"}));
  };
  CLI::App* run_cmd = app.add_subcommand("run", "Run one schedule and print the outcome");
  add_common(run_cmd, run_opts, true);
  CLI::App* enum_cmd = app.add_subcommand("enumerate", "Print every reachable outcome");
  add_common(enum_cmd, enum_opts, false);
  CLI::App* trace_cmd = app.add_subcommand("trace", "Run with the trace or derivation shown");
  add_common(trace_cmd, trace_opts, true);

  DiffOptions diff_opts, fuzz_opts;
  CLI::App* diff_cmd = app.add_subcommand("diff", "Compare big-step and machine outcome sets");
  diff_cmd->add_option("--exhaustive", diff_opts.exhaustive, "Every program up to N nodes");
  diff_cmd->add_option("--fuzz", diff_opts.fuzz, "N generated programs");
  diff_cmd->add_option("--seed", diff_opts.seed);
  diff_cmd->add_option("--depth", diff_opts.depth);
  diff_cmd->add_option("--fuel", diff_opts.fuel);
  diff_cmd->add_option("--iters", diff_opts.iters);
  diff_cmd->add_option("--mutation", diff_opts.mutation)->group("");
  CLI::App* fuzz_cmd = app.add_subcommand("fuzz", "Same as diff --fuzz N");
  fuzz_cmd->add_option("count", fuzz_opts.fuzz)->required();
  fuzz_cmd->add_option("--seed", fuzz_opts.seed);
  fuzz_cmd->add_option("--depth", fuzz_opts.depth);
  fuzz_cmd->add_option("--fuel", fuzz_opts.fuel);
  fuzz_cmd->add_option("--iters", fuzz_opts.iters);
  fuzz_cmd->add_option("--mutation", fuzz_opts.mutation)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run_opts, false);
    if (trace_cmd->parsed()) return cmd_run(trace_opts, true);
    if (enum_cmd->parsed()) return cmd_enumerate(enum_opts);
    if (diff_cmd->parsed()) return cmd_diff(diff_opts);
    if (fuzz_cmd->parsed()) return cmd_diff(fuzz_opts);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ScheduleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSchedule;
  }
  return kUsage;
}
