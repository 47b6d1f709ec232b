#include <cctype>
#include <optional>
#include <set>
#include <stdexcept>

#include "sigsem/syntax.hpp"

namespace sigsem {

namespace {

enum class Tok { Ident, Int, Sym, End, Bad };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::size_t line = 1;
  std::size_t column = 1;
};

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t line = 1, col = 1, i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    char ch = src[i];
    if (std::isspace(static_cast<unsigned char>(ch))) {
      advance(1);
      continue;
    }
    if (ch == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.column = col;
    auto is_digit = [&](std::size_t j) {
      return j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]));
    };
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      std::size_t j = i;
      while (j < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
        ++j;
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (is_digit(i) || (ch == '-' && is_digit(i + 1))) {
      std::size_t j = i + 1;
      while (is_digit(j)) ++j;
      t.kind = Tok::Int;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (ch == ':' && i + 1 < src.size() && src[i + 1] == '=') {
      t.kind = Tok::Sym;
      t.text = ":=";
      advance(2);
    } else if (std::string_view(";,=+(){}").find(ch) != std::string_view::npos) {
      t.kind = Tok::Sym;
      t.text = std::string(1, ch);
      advance(1);
    } else {
      t.kind = Tok::Bad;
      t.text = std::string(1, ch);
      out.push_back(t);
      return out;
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::End;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

struct Failure {
  ParseError error;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Program program() {
    expect_word("vars");
    Program p;
    if (!is_sym(";")) {
      while (true) {
        std::string name = identifier("variable name");
        for (const auto& kv : p.initial_vars)
          if (kv.first == name) fail_here("duplicate variable '" + name + "'", {});
        expect_sym("=");
        p.initial_vars.emplace_back(name, integer());
        if (!is_sym(",")) break;
        ++pos_;
      }
    }
    expect_sym(";");
    p.command = command();
    if (peek().kind != Tok::End) fail_here("trailing input", {";", "end of input"});
    return p;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }

  bool is_sym(std::string_view s) const {
    return peek().kind == Tok::Sym && peek().text == s;
  }
  bool is_word(std::string_view s) const {
    return peek().kind == Tok::Ident && peek().text == s;
  }

  [[noreturn]] void fail_here(std::string message,
                              std::vector<std::string> expected) {
    const Token& t = peek();
    ParseError e;
    e.line = t.line;
    e.column = t.column;
    e.expected = std::move(expected);
    if (t.kind == Tok::End)
      e.message = message + " at end of input";
    else if (t.kind == Tok::Bad)
      e.message = "unexpected character '" + t.text + "'";
    else
      e.message = message + ", found '" + t.text + "'";
    throw Failure{std::move(e)};
  }

  void expect_sym(std::string_view s) {
    if (!is_sym(s)) fail_here("unexpected token", {std::string(s)});
    ++pos_;
  }
  void expect_word(std::string_view s) {
    if (!is_word(s)) fail_here("unexpected token", {std::string(s)});
    ++pos_;
  }

  std::string identifier(const std::string& what) {
    const Token& t = peek();
    if (t.kind != Tok::Ident || is_keyword(t.text))
      fail_here("expected " + what, {"identifier"});
    ++pos_;
    return t.text;
  }

  Value integer() {
    const Token& t = peek();
    if (t.kind != Tok::Int) fail_here("expected integer", {"integer"});
    ++pos_;
    return Value(t.text);
  }

  CommandPtr braced() {
    expect_sym("{");
    CommandPtr c = command();
    expect_sym("}");
    return c;
  }

  CommandPtr command() {
    if (++depth_ > kMaxNesting) fail_here("nesting too deep", {});
    std::vector<CommandPtr> items{atom()};
    while (is_sym(";")) {
      ++pos_;
      items.push_back(atom());
    }
    CommandPtr result = items.back();
    for (std::size_t i = items.size() - 1; i-- > 0;)
      result = cmd::seq(items[i], std::move(result));
    --depth_;
    return result;
  }

  CommandPtr atom() {
    const Token& t = peek();
    if (t.kind == Tok::Sym && t.text == "{") return braced();
    if (t.kind != Tok::Ident) {
      fail_here("expected command",
                {"skip", "identifier", "while", "throw", "try", "bind",
                 "bindonce", "block", "blockonce", "{"});
    }
    const std::string word = t.text;
    if (word == "skip") {
      ++pos_;
      return cmd::skip();
    }
    if (word == "while") {
      ++pos_;
      ExprPtr cond = expr();
      expect_word("do");
      return cmd::while_do(std::move(cond), braced());
    }
    if (word == "throw") {
      ++pos_;
      return cmd::throw_exn(identifier("exception name"));
    }
    if (word == "try") {
      ++pos_;
      CommandPtr body = command();
      expect_word("catch");
      std::string exn = identifier("exception name");
      return cmd::try_catch(std::move(body), std::move(exn), braced());
    }
    if (word == "bind" || word == "bindonce") {
      ++pos_;
      std::string sig = identifier("signal name");
      expect_word("handler");
      CommandPtr handler = braced();
      expect_word("in");
      CommandPtr body = braced();
      return word == "bind"
                 ? cmd::bind(std::move(sig), std::move(body), std::move(handler))
                 : cmd::bind_once(std::move(sig), std::move(body),
                                  std::move(handler));
    }
    if (word == "block" || word == "blockonce") {
      ++pos_;
      std::string sig = identifier("signal name");
      expect_word("in");
      CommandPtr body = braced();
      return word == "block" ? cmd::block(std::move(sig), std::move(body))
                             : cmd::block_once(std::move(sig), std::move(body));
    }
    if (is_keyword(word)) fail_here("expected command", {"command"});
    ++pos_;
    expect_sym(":=");
    return cmd::assign(word, expr());
  }

  ExprPtr expr() {
    ExprPtr lhs = term();
    while (is_sym("+")) {
      ++pos_;
      lhs = ex::add(std::move(lhs), term());
    }
    return lhs;
  }

  ExprPtr term() {
    const Token& t = peek();
    if (t.kind == Tok::Int) return ex::lit(integer());
    if (t.kind == Tok::Sym && t.text == "(") {
      if (++depth_ > kMaxNesting) fail_here("nesting too deep", {});
      ++pos_;
      ExprPtr e = expr();
      --depth_;
      expect_sym(")");
      return e;
    }
    if (t.kind == Tok::Ident && !is_keyword(t.text)) {
      ++pos_;
      return ex::var(t.text);
    }
    fail_here("expected expression", {"identifier", "integer", "("});
  }

  static constexpr std::size_t kMaxNesting = 2000;

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::size_t depth_ = 0;
};

}  // namespace

ParseResult parse(std::string_view text) {
  try {
    Parser parser(lex(text));
    return parser.program();
  } catch (const Failure& f) {
    return f.error;
  }
}

}  // namespace sigsem
