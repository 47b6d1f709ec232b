#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace sigsem {

// Program values are unbounded signed integers.
using Value = boost::multiprecision::cpp_int;

enum class ExprKind { Var, Lit, Add };

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Immutable expression node. Construct through the factories in `ex`.
class Expr {
 public:
  ExprKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  const Value& value() const { return value_; }
  const ExprPtr& left() const { return left_; }
  const ExprPtr& right() const { return right_; }
  std::size_t hash() const { return hash_; }
  std::size_t size() const { return size_; }

  Expr(ExprKind kind, std::string name, Value value, ExprPtr left,
       ExprPtr right);

 private:
  ExprKind kind_;
  std::string name_;
  Value value_;
  ExprPtr left_;
  ExprPtr right_;
  std::size_t hash_;
  std::size_t size_;
};

bool operator==(const Expr& a, const Expr& b);
bool equal(const ExprPtr& a, const ExprPtr& b);

namespace ex {
ExprPtr var(std::string name);
ExprPtr lit(Value value);
ExprPtr add(ExprPtr left, ExprPtr right);
}  // namespace ex

enum class CmdKind {
  Skip,
  While,
  Assign,
  Seq,
  Throw,
  TryCatch,
  SigBind,
  SigBindOnce,
  SigBlock,
  SigBlockOnce,
};

class Command;
using CommandPtr = std::shared_ptr<const Command>;

// Field usage by kind:
//   name   - Assign: variable, Throw/TryCatch: exception, binders/blocks: signal
//   expr   - Assign: right-hand side, While: condition
//   body   - While/TryCatch/binders/blocks: body, Seq: first
//   other  - Seq: second, TryCatch: exception handler, binders: signal handler
class Command {
 public:
  CmdKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  const ExprPtr& expr() const { return expr_; }
  const CommandPtr& body() const { return body_; }
  const CommandPtr& other() const { return other_; }

  // Seq accessors.
  const CommandPtr& first() const { return body_; }
  const CommandPtr& second() const { return other_; }
  // TryCatch / binder handler.
  const CommandPtr& handler() const { return other_; }

  std::size_t hash() const { return hash_; }
  /// Node count where a command absorbs one node of its own expression.
  std::size_t size() const { return size_; }

  Command(CmdKind kind, std::string name, ExprPtr expr, CommandPtr body,
          CommandPtr other);

 private:
  CmdKind kind_;
  std::string name_;
  ExprPtr expr_;
  CommandPtr body_;
  CommandPtr other_;
  std::size_t hash_;
  std::size_t size_;
};

bool operator==(const Command& a, const Command& b);
bool equal(const CommandPtr& a, const CommandPtr& b);
/// Total order used for deterministic containers; structural.
bool less(const CommandPtr& a, const CommandPtr& b);

namespace cmd {
CommandPtr skip();
CommandPtr assign(std::string var, ExprPtr rhs);
CommandPtr while_do(ExprPtr cond, CommandPtr body);
CommandPtr seq(CommandPtr first, CommandPtr second);
CommandPtr throw_exn(std::string exn);
CommandPtr try_catch(CommandPtr body, std::string exn, CommandPtr handler);
CommandPtr bind(std::string sig, CommandPtr body, CommandPtr handler);
CommandPtr bind_once(std::string sig, CommandPtr body, CommandPtr handler);
CommandPtr block(std::string sig, CommandPtr body);
CommandPtr block_once(std::string sig, CommandPtr body);
}  // namespace cmd

struct Program {
  CommandPtr command;
  std::vector<std::pair<std::string, Value>> initial_vars;
};

bool operator==(const Program& a, const Program& b);

struct ParseError {
  std::size_t line = 0;
  std::size_t column = 0;
  std::vector<std::string> expected;
  std::string message;

  std::string to_string() const;
};

using ParseResult = std::variant<Program, ParseError>;

ParseResult parse(std::string_view text);

std::string render(const Expr& expr);
std::string render(const Command& command);
std::string render(const Program& program);

struct Violation {
  std::string kind;
  std::string name;

  std::string to_string() const { return kind + " " + name; }
  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Signal-kind consistency: a name is bound/blocked by one kind only.
std::vector<Violation> well_formed(const Program& program);

/// Variables read or written but absent from the `vars` list.
std::vector<Violation> undeclared_variables(const Program& program);

bool is_identifier(std::string_view text);
bool is_keyword(std::string_view text);

}  // namespace sigsem
