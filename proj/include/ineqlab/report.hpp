#pragma once

#include <map>
#include <string>
#include <string_view>

namespace ineqlab {

enum class Verdict { kPass, kFail, kVacuous, kSkipped };

std::string_view to_string(Verdict v);

/// One evaluated inequality lhs <= rhs.
///
/// Vacuous marks a documented degeneracy (the inequality says nothing there);
/// skipped marks a check whose inputs were missing, with the reason in `note`.
/// Neither counts as a pass.
struct InequalityReport {
  std::string id;
  std::string context;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  double tolerance = 0.0;
  Verdict verdict = Verdict::kFail;
  std::map<std::string, double> constants;
  std::string note;

  /// Recomputes the verdict a pass/fail report must carry from its own fields.
  bool consistent() const;
};

/// Report with margin and pass/fail verdict derived from lhs, rhs, tolerance.
InequalityReport make_report(std::string id, std::string context, double lhs, double rhs, double tolerance,
                             std::map<std::string, double> constants = {});

InequalityReport vacuous_report(std::string id, std::string context, std::string reason,
                                std::map<std::string, double> constants = {});
InequalityReport skipped_report(std::string id, std::string context, std::string reason);

/// Slack for inequalities with a W2 term: 1e-6 + 2 dx max(|lhs|, |rhs|).
double w2_tolerance(double dx, double lhs, double rhs);
/// Slack for everything else.
inline constexpr double kAbsoluteTolerance = 1e-6;

}  // namespace ineqlab
