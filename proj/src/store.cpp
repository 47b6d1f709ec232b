#include "sigsem/store.hpp"

#include <cassert>

namespace sigsem {

State State::from_program(const Program& program) {
  std::map<std::string, Value> entries;
  for (const auto& [name, value] : program.initial_vars) entries[name] = value;
  return State(std::move(entries));
}

std::optional<Value> State::lookup(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

State State::update(const std::string& name, Value value) const {
  State out = *this;
  out.entries_[name] = std::move(value);
  return out;
}

std::string State::to_string() const {
  std::string out;
  for (const auto& [name, value] : entries_) {
    if (!out.empty()) out += ",";
    out += name + "=" + value.str();
  }
  return out;
}

CommandPtr SigMap::lookup(const std::string& name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : it->second;
}

std::vector<std::string> SigMap::domain() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& kv : entries_) out.push_back(kv.first);
  return out;
}

SigMap SigMap::update(const std::string& name, CommandPtr handler) const {
  SigMap out = *this;
  out.entries_[name] = std::move(handler);
  return out;
}

SigMap SigMap::remove(const std::string& name) const {
  assert(contains(name));
  SigMap out = *this;
  out.entries_.erase(name);
  return out;
}

std::string SigMap::to_string() const {
  std::string out = "{";
  bool first = true;
  for (const auto& [name, handler] : entries_) {
    if (!first) out += ", ";
    first = false;
    out += name + " -> " + render(*handler);
  }
  return out + "}";
}

bool operator==(const SigMap& a, const SigMap& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  auto ia = a.entries_.begin();
  for (auto ib = b.entries_.begin(); ib != b.entries_.end(); ++ia, ++ib) {
    if (ia->first != ib->first || !equal(ia->second, ib->second)) return false;
  }
  return true;
}

bool operator<(const SigMap& a, const SigMap& b) {
  auto ia = a.entries_.begin();
  auto ib = b.entries_.begin();
  for (; ia != a.entries_.end() && ib != b.entries_.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return ia->first < ib->first;
    if (less(ia->second, ib->second)) return true;
    if (less(ib->second, ia->second)) return false;
  }
  return ia == a.entries_.end() && ib != b.entries_.end();
}

std::optional<SigMap> sep_join(const SigMap& o1, const SigMap& o2) {
  SigMap out = o1;
  for (const auto& [name, handler] : o2.entries()) {
    if (o1.contains(name)) return std::nullopt;
    out = out.update(name, handler);
  }
  return out;
}

std::vector<std::pair<SigMap, SigMap>> splits(const SigMap& o) {
  const auto names = o.domain();
  const std::size_t n = names.size();
  std::vector<std::pair<SigMap, SigMap>> out;
  out.reserve(std::size_t{1} << n);
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    SigMap left, right;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& z = names[i];
      if (mask & (std::size_t{1} << (n - 1 - i)))
        left = left.update(z, o.lookup(z));
      else
        right = right.update(z, o.lookup(z));
    }
    out.emplace_back(std::move(left), std::move(right));
  }
  return out;
}

BitVector BitVector::plus(const std::string& name) const {
  BitVector out = *this;
  out.enabled_.insert(name);
  return out;
}

BitVector BitVector::minus(const std::string& name) const {
  BitVector out = *this;
  out.enabled_.erase(name);
  return out;
}

std::string BitVector::to_string() const {
  std::string out = "[";
  for (const auto& z : enabled_) {
    if (out.size() > 1) out += ",";
    out += z;
  }
  return out + "]";
}

Value eval_expr(const Expr& expr, const State& state) {
  switch (expr.kind()) {
    case ExprKind::Var: {
      auto v = state.lookup(expr.name());
      if (!v) throw EvalError(expr.name());
      return *v;
    }
    case ExprKind::Lit:
      return expr.value();
    case ExprKind::Add:
      return eval_expr(*expr.left(), state) + eval_expr(*expr.right(), state);
  }
  return {};
}

}  // namespace sigsem
