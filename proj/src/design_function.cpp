#include "servobench/design_function.hpp"

#include <cmath>

#include "servobench/errors.hpp"

namespace servobench {

namespace {

constexpr double kImagResidueTol = 1e-9;

// kp^2 - 4ki is compared against this fraction of kp^2.
constexpr double kRepeatedRootRelTol = 1e-12;

}  // namespace

std::string_view to_string(DfType t) {
  switch (t) {
    case DfType::TypeI: return "TypeI";
    case DfType::TypeII: return "TypeII";
    case DfType::TypeIII: return "TypeIII";
  }
  return "?";
}

std::optional<DfType> parse_df_type(std::string_view s) {
  if (s == "TypeI" || s == "I" || s == "1") return DfType::TypeI;
  if (s == "TypeII" || s == "II" || s == "2") return DfType::TypeII;
  if (s == "TypeIII" || s == "III" || s == "3") return DfType::TypeIII;
  return std::nullopt;
}

void validate(const DesignFunctionSpec& spec) {
  if (!(spec.kp > 0.0) || !std::isfinite(spec.kp)) throw InvalidArgument("kp must be a positive finite number");
  switch (spec.type) {
    case DfType::TypeI: break;
    case DfType::TypeII:
      if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
      break;
    case DfType::TypeIII:
      if (!(spec.ki > 0.0) || !std::isfinite(spec.ki)) throw InvalidArgument("ki must be a positive finite number");
      break;
  }
}

double df_value(const DesignFunctionSpec& spec, const ScalarErrorState& state) {
  validate(spec);
  if (!std::isfinite(state.e) || !std::isfinite(state.integral)) {
    throw InvalidArgument("error state has non-finite component");
  }
  switch (spec.type) {
    case DfType::TypeI:
      return -spec.kp * state.e;
    case DfType::TypeII:
      if (state.e == 0.0) return 0.0;
      return -spec.kp * std::copysign(std::pow(std::abs(state.e), spec.alpha), state.e);
    case DfType::TypeIII:
      return -spec.kp * state.e - spec.ki * state.integral;
  }
  return 0.0;
}

TypeIIIModes type3_modes(double kp, double ki) {
  if (!(kp > 0.0) || !(ki > 0.0)) throw InvalidArgument("kp and ki must be positive");
  const double disc = kp * kp - 4.0 * ki;
  if (std::abs(disc) <= kRepeatedRootRelTol * kp * kp) {
    throw UnsupportedConfiguration("repeated characteristic root (kp^2 == 4 ki) is not supported");
  }
  const std::complex<double> sq = std::sqrt(std::complex<double>(disc, 0.0));
  // Citardauq form for the real case keeps the small root accurate.
  if (disc > 0.0) {
    const double q = -0.5 * (kp + sq.real());
    return {q, ki / q};
  }
  return {0.5 * (-kp + sq), 0.5 * (-kp - sq)};
}

double extinction_time(const DesignFunctionSpec& spec, double e0) {
  validate(spec);
  if (spec.type != DfType::TypeII) throw InvalidArgument("extinction time is defined for TypeII only");
  return std::pow(std::abs(e0), 1.0 - spec.alpha) / ((1.0 - spec.alpha) * spec.kp);
}

double closed_form_error(const DesignFunctionSpec& spec, double e0, double t) {
  validate(spec);
  if (!(t >= 0.0)) throw InvalidArgument("t must be >= 0");
  if (!std::isfinite(e0)) throw InvalidArgument("e0 must be finite");

  switch (spec.type) {
    case DfType::TypeI:
      return e0 * std::exp(-spec.kp * t);

    case DfType::TypeII: {
      if (e0 == 0.0) return 0.0;
      const double beta = 1.0 - spec.alpha;
      const double head = std::pow(std::abs(e0), beta);
      if (t >= head / (beta * spec.kp)) return 0.0;  // at or past extinction
      // Clamp so the fractional power never sees a negative base.
      const double base = std::max(0.0, head - beta * spec.kp * t);
      if (base == 0.0) return 0.0;
      return std::copysign(std::pow(base, 1.0 / beta), e0);
    }

    case DfType::TypeIII: {
      const TypeIIIModes m = type3_modes(spec.kp, spec.ki);
      const std::complex<double> l1 = m.lambda1;
      const std::complex<double> l2 = m.lambda2;
      const std::complex<double> e =
          e0 * (-l1 * std::exp(l1 * t) + l2 * std::exp(l2 * t)) / (l2 - l1);
      if (std::abs(e.imag()) >= kImagResidueTol * std::max(std::abs(e0), 1e-300) && e0 != 0.0) {
        throw std::logic_error("TypeIII closed form left an imaginary residue");
      }
      return e.real();
    }
  }
  return 0.0;
}

double steady_state_error(const DesignFunctionSpec& spec, double dead_zone_m) {
  validate(spec);
  if (!(dead_zone_m >= 0.0)) throw InvalidArgument("dead zone size must be >= 0");
  switch (spec.type) {
    case DfType::TypeI: return dead_zone_m / spec.kp;
    case DfType::TypeII: return std::pow(dead_zone_m / spec.kp, 1.0 / spec.alpha);
    case DfType::TypeIII: return 0.0;
  }
  return 0.0;
}

}  // namespace servobench
