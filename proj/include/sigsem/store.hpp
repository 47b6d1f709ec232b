#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sigsem/syntax.hpp"

namespace sigsem {

/// Variable store. Updates are persistent: they return a new State.
class State {
 public:
  State() = default;
  State(std::initializer_list<std::pair<const std::string, Value>> init)
      : entries_(init) {}
  explicit State(std::map<std::string, Value> entries)
      : entries_(std::move(entries)) {}

  static State from_program(const Program& program);

  bool contains(const std::string& name) const {
    return entries_.count(name) > 0;
  }
  std::optional<Value> lookup(const std::string& name) const;
  State update(const std::string& name, Value value) const;

  const std::map<std::string, Value>& entries() const { return entries_; }

  /// Sorted `name=value` list joined by commas.
  std::string to_string() const;

  friend bool operator==(const State& a, const State& b) {
    return a.entries_ == b.entries_;
  }
  friend bool operator<(const State& a, const State& b) {
    return a.entries_ < b.entries_;
  }

 private:
  std::map<std::string, Value> entries_;
};

/// Finite partial map from signal names to handler commands.
class SigMap {
 public:
  SigMap() = default;
  SigMap(std::initializer_list<std::pair<const std::string, CommandPtr>> init)
      : entries_(init) {}

  bool contains(const std::string& name) const {
    return entries_.count(name) > 0;
  }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  CommandPtr lookup(const std::string& name) const;
  std::vector<std::string> domain() const;

  SigMap update(const std::string& name, CommandPtr handler) const;
  /// Restriction to dom \ {name}; `name` must be bound.
  SigMap remove(const std::string& name) const;

  const std::map<std::string, CommandPtr>& entries() const { return entries_; }

  std::string to_string() const;

  friend bool operator==(const SigMap& a, const SigMap& b);
  friend bool operator<(const SigMap& a, const SigMap& b);

 private:
  std::map<std::string, CommandPtr> entries_;
};

/// Separating join: the union when the domains are disjoint, nullopt otherwise.
std::optional<SigMap> sep_join(const SigMap& o1, const SigMap& o2);

/// Every ordered pair (o1, o2) with sep_join(o1, o2) == o. Pair i puts the
/// names whose bit is set in i (bit 0 = last sorted name) on the left.
std::vector<std::pair<SigMap, SigMap>> splits(const SigMap& o);

/// Per-signal enabled flags; names not listed are disabled.
class BitVector {
 public:
  static BitVector zero() { return {}; }

  bool operator()(const std::string& name) const {
    return enabled_.count(name) > 0;
  }
  BitVector plus(const std::string& name) const;
  BitVector minus(const std::string& name) const;

  const std::set<std::string>& enabled() const { return enabled_; }
  std::string to_string() const;

  friend bool operator==(const BitVector&, const BitVector&) = default;
  friend bool operator<(const BitVector& a, const BitVector& b) {
    return a.enabled_ < b.enabled_;
  }

 private:
  std::set<std::string> enabled_;
};

class EvalError : public std::runtime_error {
 public:
  explicit EvalError(std::string variable)
      : std::runtime_error("unbound variable '" + variable + "'"),
        variable_(std::move(variable)) {}
  const std::string& variable() const { return variable_; }

 private:
  std::string variable_;
};

Value eval_expr(const Expr& expr, const State& state);

}  // namespace sigsem
