#include "ineqlab/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

namespace ineqlab {

struct Expression::Node {
  enum class Kind { kConstant, kVariable, kNegate, kAdd, kSub, kMul, kDiv, kPow, kCall };
  Kind kind = Kind::kConstant;
  double value = 0.0;
  double (*fn)(double) = nullptr;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;

  double eval(double x) const {
    switch (kind) {
      case Kind::kConstant: return value;
      case Kind::kVariable: return x;
      case Kind::kNegate: return -lhs->eval(x);
      case Kind::kAdd: return lhs->eval(x) + rhs->eval(x);
      case Kind::kSub: return lhs->eval(x) - rhs->eval(x);
      case Kind::kMul: return lhs->eval(x) * rhs->eval(x);
      case Kind::kDiv: return lhs->eval(x) / rhs->eval(x);
      case Kind::kPow: {
        const double base = lhs->eval(x);
        const double expo = rhs->eval(x);
        // Integer powers by repeated multiplication so x^2 is exact.
        if (expo == std::round(expo) && std::abs(expo) <= 16) {
          const int k = static_cast<int>(std::abs(expo));
          double r = 1.0;
          for (int i = 0; i < k; ++i) r *= base;
          return expo < 0 ? 1.0 / r : r;
        }
        return std::pow(base, expo);
      }
      case Kind::kCall: return fn(lhs->eval(x));
    }
    return 0.0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind kind, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = kind;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

NodePtr constant(double v) {
  auto n = std::make_shared<Expression::Node>();
  n->value = v;
  return n;
}

struct Function {
  const char* name;
  double (*fn)(double);
};

double fabs_(double v) { return std::fabs(v); }
double exp_(double v) { return std::exp(v); }
double log_(double v) { return std::log(v); }
double sqrt_(double v) { return std::sqrt(v); }
double sin_(double v) { return std::sin(v); }
double cos_(double v) { return std::cos(v); }
double tan_(double v) { return std::tan(v); }
double sinh_(double v) { return std::sinh(v); }
double cosh_(double v) { return std::cosh(v); }
double tanh_(double v) { return std::tanh(v); }

constexpr Function kFunctions[] = {
    {"abs", fabs_}, {"exp", exp_},   {"log", log_},   {"sqrt", sqrt_}, {"sin", sin_},
    {"cos", cos_},  {"tan", tan_},   {"sinh", sinh_}, {"cosh", cosh_}, {"tanh", tanh_},
};

// expr   := term (('+'|'-') term)*
// term   := unary (('*'|'/') unary)*
// unary  := '-' unary | power
// power  := atom ('^' unary)?
// atom   := number | 'x' | const | func '(' expr ')' | '(' expr ')'
class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ != s_.size()) throw ParseError("unexpected '" + std::string(1, s_[pos_]) + "'", pos_);
    return n;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (accept('+')) n = make(Kind::kAdd, n, term());
      else if (accept('-')) n = make(Kind::kSub, n, term());
      else return n;
    }
  }
  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (accept('*')) n = make(Kind::kMul, n, unary());
      else if (accept('/')) n = make(Kind::kDiv, n, unary());
      else return n;
    }
  }
  NodePtr unary() {
    if (accept('-')) return make(Kind::kNegate, unary());
    if (accept('+')) return unary();
    return power();
  }
  NodePtr power() {
    NodePtr base = atom();
    if (accept('^')) return make(Kind::kPow, base, unary());
    return base;
  }
  NodePtr atom() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of expression", pos_);
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr n = expr();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string_view name = s_.substr(start, pos_ - start);
      if (name == "x") return make(Kind::kVariable);
      if (name == "pi") return constant(std::numbers::pi);
      if (name == "e") return constant(std::numbers::e);
      for (const auto& f : kFunctions) {
        if (name == f.name) {
          if (!accept('(')) throw ParseError("expected '(' after " + std::string(name), pos_);
          NodePtr arg = expr();
          if (!accept(')')) throw ParseError("expected ')'", pos_);
          auto n = std::make_shared<Expression::Node>();
          n->kind = Kind::kCall;
          n->fn = f.fn;
          n->lhs = std::move(arg);
          return n;
        }
      }
      throw ParseError("unknown identifier '" + std::string(name) + "'", start);
    }
    throw ParseError("unexpected '" + std::string(1, c) + "'", pos_);
  }
  NodePtr number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
      if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
        pos_ = p;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      }
    }
    const std::string tok(s_.substr(start, pos_ - start));
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw ParseError("malformed number '" + tok + "'", start);
      return constant(v);
    } catch (const std::logic_error&) {
      throw ParseError("malformed number '" + tok + "'", start);
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(std::string_view text) {
  Expression e;
  e.text_ = std::string(text);
  e.root_ = Parser(text).parse();
  return e;
}

double Expression::operator()(double x) const { return root_->eval(x); }

}  // namespace ineqlab
