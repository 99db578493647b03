#include "kbts/fuzzy.hpp"

#include <algorithm>
#include <cmath>

#include "kbts/error.hpp"
#include "kbts/text.hpp"

namespace kbts::fuzzy {

namespace {

std::size_t slot(LinguisticValue v) {
  if (v == LinguisticValue::Infinite) {
    throw Error(ErrorKind::NotDefuzzifiable, "infinite has no duration semantics");
  }
  return static_cast<std::size_t>(v);
}

void require_duration(double seconds) {
  if (std::isnan(seconds) || seconds < 0) {
    throw Error(ErrorKind::NegativeDuration,
                "beep duration must be non-negative, got " + std::to_string(seconds));
  }
}

}  // namespace

std::string_view label(LinguisticValue v) {
  switch (v) {
    case LinguisticValue::VeryShort: return "very short";
    case LinguisticValue::Short: return "short";
    case LinguisticValue::Long: return "long";
    case LinguisticValue::VeryLong: return "very long";
    case LinguisticValue::Continuous: return "continuous";
    case LinguisticValue::Infinite: return "infinite";
  }
  return "";
}

std::string_view config_key(LinguisticValue v) {
  switch (v) {
    case LinguisticValue::VeryShort: return "very_short";
    case LinguisticValue::Short: return "short";
    case LinguisticValue::Long: return "long";
    case LinguisticValue::VeryLong: return "very_long";
    case LinguisticValue::Continuous: return "continuous";
    case LinguisticValue::Infinite: return "infinite";
  }
  return "";
}

std::optional<LinguisticValue> from_label(std::string_view text) {
  const std::string key = fold_key(text);
  for (LinguisticValue v : kAllValues) {
    if (key == label(v) || key == config_key(v)) return v;
  }
  return std::nullopt;
}

std::string_view message_for(LinguisticValue v) {
  switch (v) {
    case LinguisticValue::VeryShort: return "normal POST, system is OK";
    case LinguisticValue::Short: return "POST error";
    case LinguisticValue::Long: return "system board problem";
    case LinguisticValue::VeryLong: return "3270 keyboard card";
    case LinguisticValue::Continuous: return "power supply, system board, or keyboard problem";
    case LinguisticValue::Infinite: return "power supply or system board problem or keyboard";
  }
  return "";
}

double Trapezoid::degree(double x) const {
  if (x < a || x > d) return 0.0;
  if (x >= b && x <= c) return 1.0;
  if (x < b) return (x - a) / (b - a);
  return (d - x) / (d - c);
}

bool Trapezoid::valid() const {
  return !std::isnan(a) && !std::isnan(b) && !std::isnan(c) && !std::isnan(d) &&
         a <= b && b <= c && c <= d;
}

MembershipFunction MembershipFunction::standard() {
  return MembershipFunction({{
      {0.0, 0.0, 0.2, 0.5},
      {0.2, 0.5, 0.9, 1.2},
      {0.9, 1.2, 2.0, 2.5},
      {2.0, 2.5, 4.0, 4.5},
      {4.0, 4.5, kUnbounded, kUnbounded},
  }});
}

MembershipFunction::MembershipFunction(std::array<Trapezoid, 5> shapes)
    : shapes_(shapes) {
  for (std::size_t i = 0; i < shapes_.size(); ++i) {
    const std::string name(label(kDurationValues[i]));
    if (!shapes_[i].valid()) {
      throw Error(ErrorKind::InvalidConfig, name + ": breakpoints must satisfy a <= b <= c <= d");
    }
    if (i > 0 && !(shapes_[i].a < shapes_[i - 1].d)) {
      throw Error(ErrorKind::InvalidConfig,
                  name + " must overlap " + std::string(label(kDurationValues[i - 1])));
    }
  }
  if (shapes_.front().a > 0 || shapes_.front().b > 0) {
    throw Error(ErrorKind::InvalidConfig, "very short must have full membership at 0 s");
  }
  if (!std::isinf(shapes_.back().c)) {
    throw Error(ErrorKind::InvalidConfig, "continuous must have an unbounded plateau");
  }
}

const Trapezoid& MembershipFunction::shape(LinguisticValue v) const {
  return shapes_[slot(v)];
}

MembershipFunction MembershipFunction::with_shape(LinguisticValue v, Trapezoid t) const {
  std::array<Trapezoid, 5> shapes = shapes_;
  shapes[slot(v)] = t;
  return MembershipFunction(shapes);
}

Memberships MembershipFunction::fuzzify(double duration_seconds) const {
  require_duration(duration_seconds);
  Memberships out;
  for (std::size_t i = 0; i < shapes_.size(); ++i) {
    out[kDurationValues[i]] = shapes_[i].degree(duration_seconds);
  }
  return out;
}

LinguisticValue MembershipFunction::classify(const BeepPattern& pattern) const {
  require_duration(pattern.duration_seconds);
  if (pattern.repeating_without_end) return LinguisticValue::Infinite;
  const Memberships degrees = fuzzify(pattern.duration_seconds);
  LinguisticValue best = kDurationValues.front();
  double best_degree = -1.0;
  // Ascending duration order with >= so the longer value wins ties.
  for (LinguisticValue v : kDurationValues) {
    const double mu = degrees.at(v);
    if (mu >= best_degree - kTieTolerance) {
      best = v;
      best_degree = std::max(best_degree, mu);
    }
  }
  return best;
}

PostDiagnosis MembershipFunction::diagnose_beep(const BeepPattern& pattern) const {
  const LinguisticValue v = classify(pattern);
  return PostDiagnosis{v, std::string(message_for(v))};
}

double MembershipFunction::defuzzify(LinguisticValue v) const {
  const Trapezoid& t = shape(v);
  if (std::isinf(t.c)) return std::max(kContinuousCrisp, t.b);
  return (t.b + t.c) / 2.0;
}

Memberships fuzzify(double duration_seconds) {
  return MembershipFunction::standard().fuzzify(duration_seconds);
}

LinguisticValue classify(const BeepPattern& pattern) {
  return MembershipFunction::standard().classify(pattern);
}

PostDiagnosis diagnose_beep(const BeepPattern& pattern) {
  return MembershipFunction::standard().diagnose_beep(pattern);
}

double defuzzify(LinguisticValue v) {
  return MembershipFunction::standard().defuzzify(v);
}

}  // namespace kbts::fuzzy
