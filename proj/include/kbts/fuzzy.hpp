#pragma once

#include <array>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace kbts::fuzzy {

enum class LinguisticValue { VeryShort, Short, Long, VeryLong, Continuous, Infinite };

inline constexpr std::array<LinguisticValue, 6> kAllValues{
    LinguisticValue::VeryShort, LinguisticValue::Short,      LinguisticValue::Long,
    LinguisticValue::VeryLong,  LinguisticValue::Continuous, LinguisticValue::Infinite};

/// The five values that have a duration trapezoid, shortest first.
inline constexpr std::array<LinguisticValue, 5> kDurationValues{
    LinguisticValue::VeryShort, LinguisticValue::Short, LinguisticValue::Long,
    LinguisticValue::VeryLong, LinguisticValue::Continuous};

/// "very short", "short", ... as displayed to users.
std::string_view label(LinguisticValue v);
/// "very_short", "short", ... as used in configuration keys.
std::string_view config_key(LinguisticValue v);
std::optional<LinguisticValue> from_label(std::string_view text);

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

/// Rises a->b, plateau b->c, falls c->d. a == b (or c == d) gives a vertical
/// edge that belongs to the plateau.
struct Trapezoid {
  double a = 0, b = 0, c = 0, d = 0;

  double degree(double x) const;
  bool valid() const;
};

struct BeepPattern {
  double duration_seconds = 0;
  bool repeating_without_end = false;
};

struct PostDiagnosis {
  LinguisticValue linguistic = LinguisticValue::VeryShort;
  std::string message;
};

using Memberships = std::map<LinguisticValue, double>;

/// Membership configuration for the five duration values. Infinite is decided
/// by the pattern flag alone.
class MembershipFunction {
 public:
  /// VeryShort (0,0,0.2,0.5), Short (0.2,0.5,0.9,1.2), Long (0.9,1.2,2.0,2.5),
  /// VeryLong (2.0,2.5,4.0,4.5), Continuous (4.0,4.5,inf,inf), in seconds.
  static MembershipFunction standard();

  /// Throws InvalidConfig unless every trapezoid is ordered, the first covers
  /// 0, adjacent trapezoids overlap, and the last is right-unbounded.
  explicit MembershipFunction(std::array<Trapezoid, 5> shapes);

  const Trapezoid& shape(LinguisticValue v) const;
  MembershipFunction with_shape(LinguisticValue v, Trapezoid t) const;

  /// Throws NegativeDuration.
  Memberships fuzzify(double duration_seconds) const;
  LinguisticValue classify(const BeepPattern& pattern) const;
  PostDiagnosis diagnose_beep(const BeepPattern& pattern) const;
  /// Midpoint of the plateau; Continuous yields kContinuousCrisp. Throws
  /// NotDefuzzifiable for Infinite.
  double defuzzify(LinguisticValue v) const;

 private:
  std::array<Trapezoid, 5> shapes_;
};

/// Crisp value reported for Continuous, the upper bound of the crisp domain.
inline constexpr double kContinuousCrisp = 5.0;

/// Degrees closer than this are treated as a tie.
inline constexpr double kTieTolerance = 1e-9;

/// Action text of the rule for v.
std::string_view message_for(LinguisticValue v);

Memberships fuzzify(double duration_seconds);
LinguisticValue classify(const BeepPattern& pattern);
PostDiagnosis diagnose_beep(const BeepPattern& pattern);
double defuzzify(LinguisticValue v);

}  // namespace kbts::fuzzy
