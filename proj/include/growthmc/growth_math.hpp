#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "growthmc/data.hpp"

namespace growthmc {

/// Logistic curve a / (1 + exp(-(b + c x))) over standardized pressure x.
/// `a` is the asymptotic volume (litres), `b` the logit at x = 0 and `c` the
/// growth rate per standardized-pressure unit.
template <typename Scalar>
struct GrowthParams {
  Scalar a;
  Scalar b;
  Scalar c;
};

using GrowthParamsd = GrowthParams<double>;

/// Overflow-safe logistic sigmoid; saturates to exactly 0 or 1, never NaN.
template <typename Scalar>
Scalar sigmoid(Scalar t) {
  using std::exp;
  if (t >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-t));
  const Scalar e = exp(t);
  return e / (Scalar(1) + e);
}

template <typename Scalar>
Scalar logistic_mean(const GrowthParams<Scalar>& p, Scalar x) {
  return p.a * sigmoid(p.b + p.c * x);
}

template <typename Scalar>
struct CurveDerivatives {
  Scalar d1;
  Scalar d2;
  Scalar d3;
};

/// First three derivatives of logistic_mean with respect to x.
template <typename Scalar>
CurveDerivatives<Scalar> derivatives(const GrowthParams<Scalar>& p, Scalar x) {
  const Scalar s = sigmoid(p.b + p.c * x);
  const Scalar w = s * (Scalar(1) - s);
  const Scalar c2 = p.c * p.c;
  return {p.a * p.c * w,
          p.a * c2 * w * (Scalar(1) - Scalar(2) * s),
          p.a * c2 * p.c * w * (Scalar(1) - Scalar(6) * s + Scalar(6) * s * s)};
}

enum class CriticalKind { IP, ADP, MAP, MDP };

inline std::string_view critical_kind_name(CriticalKind kind);
inline CriticalKind parse_critical_kind(std::string_view name);

template <typename Scalar>
struct CurvePoint {
  Scalar pressure;
  Scalar volume;
};

template <typename Scalar>
struct CriticalPoints {
  CurvePoint<Scalar> ip;
  CurvePoint<Scalar> adp;
  CurvePoint<Scalar> map;
  CurvePoint<Scalar> mdp;
  Scalar asymptote;

  const CurvePoint<Scalar>& operator[](CriticalKind kind) const {
    switch (kind) {
      case CriticalKind::IP: return ip;
      case CriticalKind::ADP: return adp;
      case CriticalKind::MAP: return map;
      case CriticalKind::MDP: return mdp;
    }
    return ip;
  }
};

class InvalidGrowthParams : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Fraction of the asymptote reached at each critical point. IP is where the
/// second derivative vanishes; MAP and MDP are the extrema of the second
/// derivative, s = (3 -+ sqrt 3)/6; ADP is the extremum of the third
/// derivative beyond MDP, s = (3 + sqrt 6)/6.
template <typename Scalar>
Scalar critical_fraction(CriticalKind kind) {
  using std::sqrt;
  switch (kind) {
    case CriticalKind::IP: return Scalar(0.5);
    case CriticalKind::ADP: return (Scalar(3) + sqrt(Scalar(6))) / Scalar(6);
    case CriticalKind::MAP: return (Scalar(3) - sqrt(Scalar(3))) / Scalar(6);
    case CriticalKind::MDP: return (Scalar(3) + sqrt(Scalar(3))) / Scalar(6);
  }
  return Scalar(0.5);
}

/// logit of critical_fraction: 0, ln(5 + 2 sqrt 6), -ln(2 + sqrt 3), ln(2 + sqrt 3).
template <typename Scalar>
Scalar critical_logit(CriticalKind kind) {
  using std::log;
  using std::sqrt;
  switch (kind) {
    case CriticalKind::IP: return Scalar(0);
    case CriticalKind::ADP: return -log(Scalar(5) - Scalar(2) * sqrt(Scalar(6)));
    case CriticalKind::MAP: return -log(Scalar(2) + sqrt(Scalar(3)));
    case CriticalKind::MDP: return log(Scalar(2) + sqrt(Scalar(3)));
  }
  return Scalar(0);
}

template <typename Scalar>
void validate_for_critical_points(const GrowthParams<Scalar>& p) {
  if (!(p.a > Scalar(0)) || !(p.c > Scalar(0)))
    throw InvalidGrowthParams("critical points need a > 0 and c > 0");
}

template <typename Scalar>
CurvePoint<Scalar> critical_point(const GrowthParams<Scalar>& p, CriticalKind kind) {
  validate_for_critical_points(p);
  return {(critical_logit<Scalar>(kind) - p.b) / p.c, p.a * critical_fraction<Scalar>(kind)};
}

/// Critical points in standardized pressure units.
template <typename Scalar>
CriticalPoints<Scalar> critical_points(const GrowthParams<Scalar>& p) {
  validate_for_critical_points(p);
  return {critical_point(p, CriticalKind::IP), critical_point(p, CriticalKind::ADP),
          critical_point(p, CriticalKind::MAP), critical_point(p, CriticalKind::MDP), p.a};
}

/// Critical points with pressures back-transformed to mmHg.
template <typename Scalar>
CriticalPoints<Scalar> critical_points_mmhg(const GrowthParams<Scalar>& p, const Standardization& s) {
  auto cp = critical_points(p);
  for (auto* pt : {&cp.ip, &cp.adp, &cp.map, &cp.mdp})
    pt->pressure = Scalar(s.pressure_mean) + pt->pressure * Scalar(s.pressure_sd);
  return cp;
}

inline std::string_view critical_kind_name(CriticalKind kind) {
  switch (kind) {
    case CriticalKind::IP: return "IP";
    case CriticalKind::ADP: return "ADP";
    case CriticalKind::MAP: return "MAP";
    case CriticalKind::MDP: return "MDP";
  }
  return "IP";
}

inline CriticalKind parse_critical_kind(std::string_view name) {
  if (name == "IP" || name == "ip") return CriticalKind::IP;
  if (name == "ADP" || name == "adp") return CriticalKind::ADP;
  if (name == "MAP" || name == "map") return CriticalKind::MAP;
  if (name == "MDP" || name == "mdp") return CriticalKind::MDP;
  throw std::invalid_argument("unknown critical point '" + std::string(name) + "'");
}

}  // namespace growthmc
