#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ineqlab/errors.hpp"

namespace ineqlab {

class ParseError : public InvalidInput {
 public:
  ParseError(const std::string& what, std::size_t column)
      : InvalidInput(what + " (column " + std::to_string(column + 1) + ")"), column_(column) {}
  std::size_t column() const { return column_; }

 private:
  std::size_t column_;
};

// A real function of one variable `x`, parsed from text such as
// "x^4 - 2*x^2" or "exp(x^2/4)".  Supports + - * / ^, unary minus,
// the constants pi and e, and exp log sqrt abs sin cos tan sinh cosh tanh.
class Expression {
 public:
  static Expression parse(std::string_view text);

  double operator()(double x) const;
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace ineqlab
