#include "sigsem/syntax.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace sigsem {

namespace {

std::size_t mix(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

std::size_t value_hash(const Value& v) {
  return std::hash<std::string>{}(v.str());
}

const std::set<std::string, std::less<>>& keywords() {
  static const std::set<std::string, std::less<>> kw = {
      "skip",  "while", "do",      "throw", "try",   "catch",    "bind",
      "bindonce", "handler", "in", "block", "blockonce", "vars"};
  return kw;
}

}  // namespace

Expr::Expr(ExprKind kind, std::string name, Value value, ExprPtr left,
           ExprPtr right)
    : kind_(kind),
      name_(std::move(name)),
      value_(std::move(value)),
      left_(std::move(left)),
      right_(std::move(right)) {
  hash_ = mix(static_cast<std::size_t>(kind_), std::hash<std::string>{}(name_));
  size_ = 1;
  if (kind_ == ExprKind::Lit) hash_ = mix(hash_, value_hash(value_));
  if (left_) {
    hash_ = mix(hash_, left_->hash());
    size_ += left_->size();
  }
  if (right_) {
    hash_ = mix(hash_, right_->hash());
    size_ += right_->size();
  }
}

bool operator==(const Expr& a, const Expr& b) {
  if (&a == &b) return true;
  if (a.hash() != b.hash() || a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case ExprKind::Var:
      return a.name() == b.name();
    case ExprKind::Lit:
      return a.value() == b.value();
    case ExprKind::Add:
      return *a.left() == *b.left() && *a.right() == *b.right();
  }
  return false;
}

bool equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return *a == *b;
}

namespace ex {
ExprPtr var(std::string name) {
  return std::make_shared<const Expr>(ExprKind::Var, std::move(name), Value{},
                                      nullptr, nullptr);
}
ExprPtr lit(Value value) {
  return std::make_shared<const Expr>(ExprKind::Lit, "", std::move(value),
                                      nullptr, nullptr);
}
ExprPtr add(ExprPtr left, ExprPtr right) {
  return std::make_shared<const Expr>(ExprKind::Add, "", Value{},
                                      std::move(left), std::move(right));
}
}  // namespace ex

Command::Command(CmdKind kind, std::string name, ExprPtr expr, CommandPtr body,
                 CommandPtr other)
    : kind_(kind),
      name_(std::move(name)),
      expr_(std::move(expr)),
      body_(std::move(body)),
      other_(std::move(other)) {
  hash_ = mix(static_cast<std::size_t>(kind_) + 101,
              std::hash<std::string>{}(name_));
  // Assign and While absorb their expression's root node.
  size_ = expr_ ? expr_->size() : 1;
  if (expr_) hash_ = mix(hash_, expr_->hash());
  if (body_) {
    hash_ = mix(hash_, body_->hash());
    size_ += body_->size();
  }
  if (other_) {
    hash_ = mix(hash_, other_->hash());
    size_ += other_->size();
  }
}

bool operator==(const Command& a, const Command& b) {
  if (&a == &b) return true;
  if (a.hash() != b.hash() || a.kind() != b.kind() || a.name() != b.name())
    return false;
  return equal(a.expr(), b.expr()) && equal(a.body(), b.body()) &&
         equal(a.other(), b.other());
}

bool equal(const CommandPtr& a, const CommandPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return *a == *b;
}

namespace {

int compare_expr(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return 0;
  if (!a) return -1;
  if (!b) return 1;
  if (a->kind() != b->kind()) return a->kind() < b->kind() ? -1 : 1;
  switch (a->kind()) {
    case ExprKind::Var:
      return a->name().compare(b->name());
    case ExprKind::Lit:
      return a->value() < b->value() ? -1 : (b->value() < a->value() ? 1 : 0);
    case ExprKind::Add:
      if (int c = compare_expr(a->left(), b->left())) return c;
      return compare_expr(a->right(), b->right());
  }
  return 0;
}

int compare_cmd(const CommandPtr& a, const CommandPtr& b) {
  if (a == b) return 0;
  if (!a) return -1;
  if (!b) return 1;
  if (a->kind() != b->kind()) return a->kind() < b->kind() ? -1 : 1;
  if (int c = a->name().compare(b->name())) return c;
  if (int c = compare_expr(a->expr(), b->expr())) return c;
  if (int c = compare_cmd(a->body(), b->body())) return c;
  return compare_cmd(a->other(), b->other());
}

}  // namespace

bool less(const CommandPtr& a, const CommandPtr& b) {
  return compare_cmd(a, b) < 0;
}

namespace cmd {
namespace {
CommandPtr make(CmdKind k, std::string name, ExprPtr e, CommandPtr body,
                CommandPtr other) {
  return std::make_shared<const Command>(k, std::move(name), std::move(e),
                                         std::move(body), std::move(other));
}
}  // namespace

CommandPtr skip() {
  static const CommandPtr node = make(CmdKind::Skip, "", nullptr, nullptr, nullptr);
  return node;
}
CommandPtr assign(std::string var, ExprPtr rhs) {
  return make(CmdKind::Assign, std::move(var), std::move(rhs), nullptr, nullptr);
}
CommandPtr while_do(ExprPtr cond, CommandPtr body) {
  return make(CmdKind::While, "", std::move(cond), std::move(body), nullptr);
}
CommandPtr seq(CommandPtr first, CommandPtr second) {
  return make(CmdKind::Seq, "", nullptr, std::move(first), std::move(second));
}
CommandPtr throw_exn(std::string exn) {
  return make(CmdKind::Throw, std::move(exn), nullptr, nullptr, nullptr);
}
CommandPtr try_catch(CommandPtr body, std::string exn, CommandPtr handler) {
  return make(CmdKind::TryCatch, std::move(exn), nullptr, std::move(body),
              std::move(handler));
}
CommandPtr bind(std::string sig, CommandPtr body, CommandPtr handler) {
  return make(CmdKind::SigBind, std::move(sig), nullptr, std::move(body),
              std::move(handler));
}
CommandPtr bind_once(std::string sig, CommandPtr body, CommandPtr handler) {
  return make(CmdKind::SigBindOnce, std::move(sig), nullptr, std::move(body),
              std::move(handler));
}
CommandPtr block(std::string sig, CommandPtr body) {
  return make(CmdKind::SigBlock, std::move(sig), nullptr, std::move(body), nullptr);
}
CommandPtr block_once(std::string sig, CommandPtr body) {
  return make(CmdKind::SigBlockOnce, std::move(sig), nullptr, std::move(body),
              nullptr);
}
}  // namespace cmd

bool operator==(const Program& a, const Program& b) {
  return a.initial_vars == b.initial_vars && equal(a.command, b.command);
}

std::string ParseError::to_string() const {
  std::ostringstream out;
  out << line << ":" << column << ": " << message;
  if (!expected.empty()) {
    out << " (expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) out << ", ";
      out << "'" << expected[i] << "'";
    }
    out << ")";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Rendering

std::string render(const Expr& expr) {
  switch (expr.kind()) {
    case ExprKind::Var:
      return expr.name();
    case ExprKind::Lit:
      return expr.value().str();
    case ExprKind::Add: {
      std::string rhs = render(*expr.right());
      if (expr.right()->kind() == ExprKind::Add) rhs = "(" + rhs + ")";
      return render(*expr.left()) + " + " + rhs;
    }
  }
  return {};
}

std::string render(const Command& c) {
  auto braced = [](const CommandPtr& p) { return "{ " + render(*p) + " }"; };
  switch (c.kind()) {
    case CmdKind::Skip:
      return "skip";
    case CmdKind::Assign:
      return c.name() + " := " + render(*c.expr());
    case CmdKind::While:
      return "while " + render(*c.expr()) + " do " + braced(c.body());
    case CmdKind::Seq: {
      // `;` is right-associative, so a left-nested sequence needs grouping.
      std::string lhs = c.first()->kind() == CmdKind::Seq ? braced(c.first())
                                                          : render(*c.first());
      return lhs + " ; " + render(*c.second());
    }
    case CmdKind::Throw:
      return "throw " + c.name();
    case CmdKind::TryCatch:
      return "try " + braced(c.body()) + " catch " + c.name() + " " +
             braced(c.handler());
    case CmdKind::SigBind:
      return "bind " + c.name() + " handler " + braced(c.handler()) + " in " +
             braced(c.body());
    case CmdKind::SigBindOnce:
      return "bindonce " + c.name() + " handler " + braced(c.handler()) +
             " in " + braced(c.body());
    case CmdKind::SigBlock:
      return "block " + c.name() + " in " + braced(c.body());
    case CmdKind::SigBlockOnce:
      return "blockonce " + c.name() + " in " + braced(c.body());
  }
  return {};
}

std::string render(const Program& p) {
  std::string out = "vars ";
  for (std::size_t i = 0; i < p.initial_vars.size(); ++i) {
    if (i) out += ", ";
    out += p.initial_vars[i].first + "=" + p.initial_vars[i].second.str();
  }
  if (!p.initial_vars.empty()) out += " ";
  out += "; " + render(*p.command);
  return out;
}

// ---------------------------------------------------------------------------
// Static checks

namespace {

struct KindScan {
  std::set<std::string> bound_per, bound_once, blocked_per, blocked_once;

  void visit(const CommandPtr& c) {
    if (!c) return;
    switch (c->kind()) {
      case CmdKind::SigBind:
        bound_per.insert(c->name());
        break;
      case CmdKind::SigBindOnce:
        bound_once.insert(c->name());
        break;
      case CmdKind::SigBlock:
        blocked_per.insert(c->name());
        break;
      case CmdKind::SigBlockOnce:
        blocked_once.insert(c->name());
        break;
      default:
        break;
    }
    visit(c->body());
    visit(c->other());
  }
};

void collect_vars(const ExprPtr& e, std::set<std::string>& out) {
  if (!e) return;
  if (e->kind() == ExprKind::Var) out.insert(e->name());
  collect_vars(e->left(), out);
  collect_vars(e->right(), out);
}

void collect_vars(const CommandPtr& c, std::set<std::string>& out) {
  if (!c) return;
  if (c->kind() == CmdKind::Assign) out.insert(c->name());
  collect_vars(c->expr(), out);
  collect_vars(c->body(), out);
  collect_vars(c->other(), out);
}

}  // namespace

std::vector<Violation> well_formed(const Program& program) {
  KindScan scan;
  scan.visit(program.command);
  std::set<std::string> mixed;
  for (const auto& z : scan.bound_per)
    if (scan.bound_once.count(z)) mixed.insert(z);
  for (const auto& z : scan.blocked_per)
    if (scan.bound_once.count(z)) mixed.insert(z);
  for (const auto& z : scan.blocked_once)
    if (scan.bound_per.count(z)) mixed.insert(z);
  std::vector<Violation> out;
  for (const auto& z : mixed) out.push_back({"MixedKind", z});
  return out;
}

std::vector<Violation> undeclared_variables(const Program& program) {
  std::set<std::string> used;
  collect_vars(program.command, used);
  std::vector<Violation> out;
  for (const auto& x : used) {
    bool declared = std::any_of(
        program.initial_vars.begin(), program.initial_vars.end(),
        [&](const auto& kv) { return kv.first == x; });
    if (!declared) out.push_back({"UndeclaredVar", x});
  }
  return out;
}

bool is_keyword(std::string_view text) { return keywords().count(text) > 0; }

bool is_identifier(std::string_view text) {
  if (text.empty()) return false;
  auto alpha = [](char ch) {
    return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || ch == '_';
  };
  if (!alpha(text[0])) return false;
  for (char ch : text)
    if (!alpha(ch) && !(ch >= '0' && ch <= '9')) return false;
  return !is_keyword(text);
}

}  // namespace sigsem
