#include "sigsem/machine.hpp"

#include <algorithm>
#include <unordered_map>

#include <boost/container_hash/hash.hpp>

namespace sigsem {

Config Config::initial(const Program& program) {
  return initial(program.command, State::from_program(program));
}

Config Config::initial(CommandPtr command, State state) {
  Config c;
  c.current = Frame::cmd(std::move(command));
  c.state = std::move(state);
  c.k.push_back(Frame::ret());
  return c;
}

namespace {

bool same_frame(const Frame& a, const Frame& b) {
  return a.kind == b.kind && a.command == b.command && a.beta == b.beta &&
         a.scope_id == b.scope_id;
}

bool same_tag(const Tag& a, const Tag& b) {
  return a.kind == b.kind && a.name == b.name && a.handler == b.handler &&
         a.used == b.used && a.id == b.id && a.fires == b.fires;
}

void hash_frame(std::size_t& seed, const Frame& f) {
  boost::hash_combine(seed, static_cast<int>(f.kind));
  boost::hash_combine(seed, f.command.get());
  boost::hash_combine(seed, f.beta.enabled().size());
  boost::hash_combine(seed, f.scope_id);
}

}  // namespace

bool operator==(const Config& a, const Config& b) {
  return same_frame(a.current, b.current) &&
         a.beta == b.beta && a.state == b.state &&
         std::equal(a.j.begin(), a.j.end(), b.j.begin(), b.j.end(), same_tag) &&
         std::equal(a.k.begin(), a.k.end(), b.k.begin(), b.k.end(), same_frame);
}

std::size_t hash_value(const Config& c) {
  std::size_t seed = 0;
  hash_frame(seed, c.current);
  for (const auto& [name, value] : c.state.entries()) {
    boost::hash_combine(seed, name);
    boost::hash_combine(seed, static_cast<long long>(value));
  }
  for (const auto& z : c.beta.enabled()) boost::hash_combine(seed, z);
  for (const Tag& t : c.j) {
    boost::hash_combine(seed, t.id);
    boost::hash_combine(seed, t.used);
    boost::hash_combine(seed, t.fires);
  }
  for (const Frame& f : c.k) hash_frame(seed, f);
  return seed;
}

std::string MachineChoice::to_string() const {
  switch (kind) {
    case Kind::Structural:
      return "structural";
    case Kind::FirePersistent:
      return "fire-per " + signal;
    case Kind::FireOnce:
      return "fire-once " + signal;
  }
  return {};
}

Outcome MachineResult::to_outcome() const {
  switch (kind) {
    case Kind::Finished:
      return Outcome::normal(state);
    case Kind::StuckUncaught:
      return Outcome::uncaught(exn, state);
    case Kind::BudgetExceeded:
      return Outcome::budget_exceeded();
  }
  return {};
}

std::string MachineResult::to_string() const {
  switch (kind) {
    case Kind::Finished:
      return "finished " + state.to_string();
    case Kind::StuckUncaught:
      return "stuck " + exn + " " + state.to_string();
    case Kind::BudgetExceeded:
      return "budget-exceeded";
  }
  return {};
}

InvalidChoice::InvalidChoice(std::size_t step_index, const MachineChoice& choice)
    : std::invalid_argument("choice '" + choice.to_string() +
                            "' not enabled at step " + std::to_string(step_index)),
      step_index_(step_index) {}

namespace {

// The topmost signal tag named z: inner bindings shadow outer ones.
const Tag* visible_tag(const std::vector<Tag>& j, const std::string& z) {
  for (const Tag& t : j)
    if (t.is_signal() && t.name == z) return &t;
  return nullptr;
}

bool fire_enabled(const Config& c, const MachineChoice& ch) {
  if (!c.beta(ch.signal)) return false;
  const Tag* t = visible_tag(c.j, ch.signal);
  if (!t) return false;
  if (ch.kind == MachineChoice::Kind::FirePersistent) return t->kind == Tag::Kind::Per;
  return t->kind == Tag::Kind::Once && !t->used;
}

bool is_enabled(const Config& c, const MachineChoice& ch) {
  if (c.is_final()) return false;
  if (ch.kind == MachineChoice::Kind::Structural) return true;
  return fire_enabled(c, ch);
}

// Moves the top continuation frame into the current position.
void consume_next(Config& c) {
  if (c.k.empty()) throw std::logic_error("continuation exhausted before ret");
  c.current = std::move(c.k.front());
  c.k.erase(c.k.begin());
}

// Ids are reused once a scope is gone, so re-entering a binder in a loop
// reaches the same configuration again.
void push_tag(Config& c, Tag t) {
  std::uint32_t top = c.current.scope_id;
  for (const Tag& other : c.j) top = std::max(top, other.id);
  for (const Frame& f : c.k) top = std::max(top, f.scope_id);
  t.id = top + 1;
  c.k.insert(c.k.begin(), Frame::pop_upd(c.beta, t.id));
  c.j.insert(c.j.begin(), std::move(t));
}

StepResult structural_step(const Config& in, MachineMutation mutation) {
  Config c = in;
  switch (in.current.kind) {
    case Frame::Kind::Ret:
      throw std::logic_error("ret with a nonempty continuation");
    case Frame::Kind::PopUpd:
      if (!c.j.empty() && mutation != MachineMutation::SkipPopUpdOnExit)
        c.j.erase(c.j.begin());
      c.beta = in.current.beta;
      consume_next(c);
      return c;
    case Frame::Kind::Upd:
      c.beta = in.current.beta;
      consume_next(c);
      return c;
    case Frame::Kind::Cmd:
      break;
  }

  const CommandPtr& cmd = in.current.command;
  switch (cmd->kind()) {
    case CmdKind::Skip:
      consume_next(c);
      return c;
    case CmdKind::Assign:
      c.state = c.state.update(cmd->name(), eval_expr(*cmd->expr(), c.state));
      consume_next(c);
      return c;
    case CmdKind::While:
      if (eval_expr(*cmd->expr(), c.state) == 0) {
        consume_next(c);
      } else {
        c.k.insert(c.k.begin(), Frame::cmd(cmd));
        c.current = Frame::cmd(cmd->body());
      }
      return c;
    case CmdKind::Seq:
      c.k.insert(c.k.begin(), Frame::cmd(cmd->second()));
      c.current = Frame::cmd(cmd->first());
      return c;
    case CmdKind::Throw: {
      auto u = unwind(cmd->name(), c.j, c.k, mutation);
      if (!u) return MachineResult::stuck(cmd->name(), c.state);
      c.current = Frame::cmd(u->handler);
      c.beta = std::move(u->beta);
      c.j = std::move(u->j);
      c.k = std::move(u->k);
      return c;
    }
    case CmdKind::TryCatch:
      push_tag(c, Tag::exn(cmd->name(), cmd->handler()));
      c.current = Frame::cmd(cmd->body());
      return c;
    case CmdKind::SigBind:
      push_tag(c, Tag::per(cmd->name(), cmd->handler()));
      c.beta = c.beta.plus(cmd->name());
      c.current = Frame::cmd(cmd->body());
      return c;
    case CmdKind::SigBindOnce:
      push_tag(c, Tag::once(cmd->name(), cmd->handler()));
      c.beta = c.beta.plus(cmd->name());
      c.current = Frame::cmd(cmd->body());
      return c;
    case CmdKind::SigBlock:
    case CmdKind::SigBlockOnce:
      c.k.insert(c.k.begin(), Frame::upd(c.beta));
      c.beta = c.beta.minus(cmd->name());
      c.current = Frame::cmd(cmd->body());
      return c;
  }
  throw std::logic_error("unknown command kind");
}

Config fire_step(const Config& in, const MachineChoice& ch, MachineMutation mutation) {
  Config c = in;
  Tag* tag = nullptr;
  for (Tag& t : c.j)
    if (t.is_signal() && t.name == ch.signal) {
      tag = &t;
      break;
    }
  BitVector resume = in.beta;
  if (ch.kind == MachineChoice::Kind::FireOnce) {
    if (mutation != MachineMutation::SkipUsedBitFlip) tag->used = true;
    resume = resume.minus(ch.signal);
  }
  ++tag->fires;
  c.k.insert(c.k.begin(), in.current);
  c.k.insert(c.k.begin(), Frame::upd(std::move(resume)));
  c.current = Frame::cmd(tag->handler);
  c.beta = mutation == MachineMutation::HandlerUnderCallerBeta ? in.beta
                                                                : BitVector::zero();
  return c;
}

}  // namespace

std::vector<MachineChoice> enabled_choices(const Config& config) {
  std::vector<MachineChoice> out;
  if (config.is_final()) return out;
  out.push_back(MachineChoice::structural());
  std::vector<MachineChoice> once;
  for (const auto& z : config.beta.enabled()) {
    const Tag* t = visible_tag(config.j, z);
    if (!t) continue;
    if (t->kind == Tag::Kind::Per)
      out.push_back(MachineChoice::fire_per(z));
    else if (!t->used)
      once.push_back(MachineChoice::fire_once(z));
  }
  out.insert(out.end(), once.begin(), once.end());
  return out;
}

StepResult step(const Config& config, const MachineChoice& choice,
                MachineMutation mutation) {
  if (!is_enabled(config, choice)) throw InvalidChoice(0, choice);
  if (choice.kind == MachineChoice::Kind::Structural)
    return structural_step(config, mutation);
  return fire_step(config, choice, mutation);
}

std::optional<Unwound> unwind(const std::string& exn, const std::vector<Tag>& j,
                              const std::vector<Frame>& k, MachineMutation mutation) {
  std::size_t ji = 0;  // tags below ji have been popped
  std::vector<std::size_t> kept;  // crossed tags left in place by the mutation
  for (std::size_t ki = 0; ki < k.size(); ++ki) {
    const Frame& f = k[ki];
    if (f.kind == Frame::Kind::Ret) return std::nullopt;
    if (f.kind != Frame::Kind::PopUpd) continue;
    if (ji >= j.size()) return std::nullopt;
    const Tag& top = j[ji];
    if (top.kind == Tag::Kind::Exn && top.name == exn) {
      Unwound u{top.handler, f.beta, {}, {k.begin() + static_cast<long>(ki) + 1, k.end()}};
      for (std::size_t i : kept) u.j.push_back(j[i]);
      u.j.insert(u.j.end(), j.begin() + static_cast<long>(ji) + 1, j.end());
      return u;
    }
    if (mutation == MachineMutation::SkipUnwindTagPop && top.is_signal())
      kept.push_back(ji);
    ++ji;
  }
  return std::nullopt;
}

std::size_t step_bound(const Command& command, Budget budget) {
  return 64 * command.size() * (std::size_t{budget.max_iters} + 1) *
         (std::size_t{budget.handler_fuel} + 1);
}

MachineRun run(const Program& program, const std::vector<MachineChoice>& schedule,
               Budget budget, MachineMutation mutation) {
  MachineRun out;
  out.trace.push_back(Config::initial(program));
  const std::size_t bound = step_bound(*program.command, budget);
  for (std::size_t n = 0;; ++n) {
    const Config& cur = out.trace.back();
    if (cur.is_final()) {
      out.result = MachineResult::finished(cur.state);
      return out;
    }
    if (n >= bound) {
      out.result = MachineResult::budget_exceeded();
      return out;
    }
    MachineChoice ch = n < schedule.size() ? schedule[n] : MachineChoice::structural();
    if (!is_enabled(cur, ch)) throw InvalidChoice(n, ch);
    StepResult r = step(cur, ch, mutation);
    if (auto* res = std::get_if<MachineResult>(&r)) {
      out.result = std::move(*res);
      return out;
    }
    out.trace.push_back(std::move(std::get<Config>(r)));
  }
}

std::string AuditViolation::to_string() const {
  std::string out = kind + ": " + detail;
  if (!witness.empty()) out += " [" + witness + "]";
  return out;
}

namespace {

struct Node {
  Config config;
  std::uint32_t fuel;

  friend bool operator==(const Node&, const Node&) = default;
};

struct NodeHash {
  std::size_t operator()(const Node& n) const {
    std::size_t seed = hash_value(n.config);
    boost::hash_combine(seed, n.fuel);
    return seed;
  }
};

std::size_t pop_upd_count(const Config& c) {
  std::size_t n = c.current.kind == Frame::Kind::PopUpd ? 1 : 0;
  for (const Frame& f : c.k) n += f.kind == Frame::Kind::PopUpd;
  return n;
}

bool scope_open(const Config& c, std::uint32_t tag_id) {
  if (c.current.kind == Frame::Kind::PopUpd && c.current.scope_id == tag_id) return true;
  for (const Frame& f : c.k)
    if (f.kind == Frame::Kind::PopUpd && f.scope_id == tag_id) return true;
  return false;
}

class Auditor {
 public:
  void edge(const Config& before, const MachineChoice& ch, const StepResult& r,
            const std::vector<MachineChoice>& path) {
    const Config* after = std::get_if<Config>(&r);
    if (ch.kind != MachineChoice::Kind::Structural) {
      const Tag* t = visible_tag(before.j, ch.signal);
      if (ch.kind == MachineChoice::Kind::FireOnce && t->fires > 0)
        report("OneShotRefired", "one-shot " + ch.signal + " fired again", path, ch);
      if (!scope_open(before, t->id))
        report("ScopeEscape", "handler for " + ch.signal + " fired outside its scope",
               path, ch);
      if (!(after->beta == BitVector::zero()))
        report("HandlerUnmasked",
               "handler for " + ch.signal + " runs under " + after->beta.to_string(),
               path, ch);
    } else if (after && (before.current.kind == Frame::Kind::PopUpd ||
                         before.current.kind == Frame::Kind::Upd)) {
      if (!(after->beta == before.current.beta))
        report("BetaNotRestored",
               "expected " + before.current.beta.to_string() + ", got " +
                   after->beta.to_string(),
               path, ch);
    }
    if (after && after->j.size() != pop_upd_count(*after))
      report("StackImbalance",
             std::to_string(after->j.size()) + " tags, " +
                 std::to_string(pop_upd_count(*after)) + " pop-upd frames",
             path, ch);
  }

  std::vector<AuditViolation> take() { return std::move(found_); }

 private:
  void report(const std::string& kind, std::string detail,
              const std::vector<MachineChoice>& path, const MachineChoice& last) {
    if (!kinds_.insert(kind).second) return;  // first witness per kind
    std::string witness;
    for (const MachineChoice& c : path) witness += c.to_string() + ", ";
    witness += last.to_string();
    found_.push_back({kind, std::move(detail), std::move(witness)});
  }

  std::set<std::string> kinds_;
  std::vector<AuditViolation> found_;
};

// Limits past which exploration gives up with BudgetExceeded. A correct
// machine keeps |J| + |K| within the program's nesting plus two frames per
// handler run; only defective machines (see MachineMutation) get near these.
constexpr std::size_t kMaxConfigs = std::size_t{1} << 18;

std::size_t stack_limit(const Command& command, Budget budget) {
  return 2 * (command.size() + 2) * (std::size_t{budget.handler_fuel} + 1);
}

}  // namespace

Exploration explore_machine(const Program& program, Budget budget,
                            MachineMutation mutation, bool audit) {
  enum class Color { Open, Done };
  struct Entry {
    Node node;
    std::vector<MachineChoice> choices;
    std::size_t next = 0;
    MachineChoice via;
  };

  Exploration out;
  Auditor auditor;
  const std::size_t bound = step_bound(*program.command, budget);
  const std::size_t stack_cap = stack_limit(*program.command, budget);
  std::unordered_map<Node, Color, NodeHash> seen;
  std::vector<Entry> stack;
  std::vector<MachineChoice> path;

  auto open = [&](Node n, MachineChoice via) {
    seen.emplace(n, Color::Open);
    Entry e{std::move(n), {}, 0, std::move(via)};
    if (e.node.config.is_final()) {
      out.outcomes.insert(Outcome::normal(e.node.config.state));
    } else if (stack.size() >= bound || seen.size() > kMaxConfigs ||
               e.node.config.j.size() + e.node.config.k.size() > stack_cap) {
      out.outcomes.insert(Outcome::budget_exceeded());
    } else {
      for (MachineChoice& ch : enabled_choices(e.node.config))
        if (ch.kind == MachineChoice::Kind::Structural || e.node.fuel > 0)
          e.choices.push_back(std::move(ch));
    }
    stack.push_back(std::move(e));
  };

  open(Node{Config::initial(program), budget.handler_fuel}, {});
  while (!stack.empty()) {
    Entry& top = stack.back();
    if (top.next >= top.choices.size()) {
      seen[top.node] = Color::Done;
      stack.pop_back();
      if (!path.empty()) path.pop_back();
      continue;
    }
    const MachineChoice ch = top.choices[top.next++];
    StepResult r = step(top.node.config, ch, mutation);
    if (audit) auditor.edge(top.node.config, ch, r, path);
    if (auto* res = std::get_if<MachineResult>(&r)) {
      out.outcomes.insert(res->to_outcome());
      continue;
    }
    Node child{std::move(std::get<Config>(r)),
               top.node.fuel - (ch.kind == MachineChoice::Kind::Structural ? 0 : 1)};
    auto it = seen.find(child);
    if (it != seen.end()) {
      if (it->second == Color::Open) out.outcomes.insert(Outcome::budget_exceeded());
      continue;
    }
    path.push_back(ch);
    open(std::move(child), ch);
  }
  out.configs = seen.size();
  out.violations = auditor.take();
  return out;
}

OutcomeSet enumerate_machine(const Program& program, Budget budget,
                             MachineMutation mutation) {
  return explore_machine(program, budget, mutation, false).outcomes;
}

std::string tag_to_string(const Tag& t) {
  switch (t.kind) {
    case Tag::Kind::Exn:
    case Tag::Kind::Per:
      return "<" + t.name + "," + render(*t.handler) + ">";
    case Tag::Kind::Once:
      return "<" + t.name + "," + render(*t.handler) + "," + (t.used ? "1" : "0") + ">";
  }
  return {};
}

std::string frame_to_string(const Frame& f) {
  switch (f.kind) {
    case Frame::Kind::Cmd:
      return render(*f.command);
    case Frame::Kind::PopUpd:
      return "pop-upd" + f.beta.to_string();
    case Frame::Kind::Upd:
      return "upd" + f.beta.to_string();
    case Frame::Kind::Ret:
      return "ret";
  }
  return {};
}

std::string config_to_string(const Config& c, std::size_t step) {
  std::string j, k;
  for (const Tag& t : c.j) j += (j.empty() ? "" : ", ") + tag_to_string(t);
  for (const Frame& f : c.k) k += (k.empty() ? "" : "; ") + frame_to_string(f);
  return std::to_string(step) + ": <" + frame_to_string(c.current) + " | " +
         c.state.to_string() + " | " + c.beta.to_string() + " | [" + j + "] | [" +
         k + "]>";
}

}  // namespace sigsem
