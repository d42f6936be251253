#pragma once

#include <complex>
#include <optional>
#include <string>
#include <string_view>

namespace servobench {

enum class DfType { TypeI, TypeII, TypeIII };

std::string_view to_string(DfType t);
std::optional<DfType> parse_df_type(std::string_view s);

/// Gains of one Design Function. Only the fields relevant to `type` are
/// validated: kp always, ki for TypeIII, alpha for TypeII.
struct DesignFunctionSpec {
  DfType type = DfType::TypeI;
  double kp = 1.0;     // 1/s
  double ki = 0.0;     // 1/s^2
  double alpha = 0.5;  // exponent, (0, 1)

  static DesignFunctionSpec type_i(double kp) { return {DfType::TypeI, kp, 0.0, 0.5}; }
  static DesignFunctionSpec type_ii(double kp, double alpha) { return {DfType::TypeII, kp, 0.0, alpha}; }
  static DesignFunctionSpec type_iii(double kp, double ki) { return {DfType::TypeIII, kp, ki, 0.5}; }
};

/// Throws InvalidArgument when the gains violate the family's constraints.
void validate(const DesignFunctionSpec& spec);

struct ScalarErrorState {
  double e = 0.0;
  double integral = 0.0;  // running integral of e; exactly 0 at t = 0
  double e0 = 0.0;
};

struct TypeIIIModes {
  std::complex<double> lambda1;
  std::complex<double> lambda2;
};

/// Evaluates f(e, t) for the configured family:
///   TypeI   -kp*e
///   TypeII  -kp*sign(e)*|e|^alpha
///   TypeIII -kp*e - ki*integral
double df_value(const DesignFunctionSpec& spec, const ScalarErrorState& state);

/// Analytic solution of de/dt = f(e, t) from e(0) = e0.
/// TypeIII requires kp^2 != 4 ki (UnsupportedConfiguration otherwise).
double closed_form_error(const DesignFunctionSpec& spec, double e0, double t);

/// TypeII finite extinction time |e0|^(1-alpha) / ((1-alpha) kp).
double extinction_time(const DesignFunctionSpec& spec, double e0);

/// Residual error at which |f| drops inside a velocity dead zone of size m.
double steady_state_error(const DesignFunctionSpec& spec, double dead_zone_m);

/// Roots of lambda^2 + kp*lambda + ki = 0.
TypeIIIModes type3_modes(double kp, double ki);

}  // namespace servobench
