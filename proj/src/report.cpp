#include "ineqlab/report.hpp"

#include <algorithm>
#include <cmath>

namespace ineqlab {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kPass: return "pass";
    case Verdict::kFail: return "fail";
    case Verdict::kVacuous: return "vacuous";
    case Verdict::kSkipped: return "skipped";
  }
  return "fail";
}

bool InequalityReport::consistent() const {
  if (verdict == Verdict::kVacuous || verdict == Verdict::kSkipped) return true;
  if (margin != rhs - lhs) return false;
  const bool passes = margin >= -tolerance;
  return passes == (verdict == Verdict::kPass);
}

InequalityReport make_report(std::string id, std::string context, double lhs, double rhs, double tolerance,
                             std::map<std::string, double> constants) {
  InequalityReport r;
  r.id = std::move(id);
  r.context = std::move(context);
  r.lhs = lhs;
  r.rhs = rhs;
  r.margin = rhs - lhs;
  r.tolerance = tolerance;
  // NaN margins fail.
  r.verdict = r.margin >= -tolerance ? Verdict::kPass : Verdict::kFail;
  r.constants = std::move(constants);
  return r;
}

InequalityReport vacuous_report(std::string id, std::string context, std::string reason,
                                std::map<std::string, double> constants) {
  InequalityReport r;
  r.id = std::move(id);
  r.context = std::move(context);
  r.verdict = Verdict::kVacuous;
  r.constants = std::move(constants);
  r.note = std::move(reason);
  return r;
}

InequalityReport skipped_report(std::string id, std::string context, std::string reason) {
  InequalityReport r;
  r.id = std::move(id);
  r.context = std::move(context);
  r.verdict = Verdict::kSkipped;
  r.note = std::move(reason);
  return r;
}

double w2_tolerance(double dx, double lhs, double rhs) {
  return kAbsoluteTolerance + 2.0 * dx * std::max(std::abs(lhs), std::abs(rhs));
}

}  // namespace ineqlab
