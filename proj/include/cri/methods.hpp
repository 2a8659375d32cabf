#pragma once

#include <string>

#include "cri/crve.hpp"
#include "cri/wild.hpp"

namespace cri {

// The inference recipes compared in placebo and size experiments.
enum class MethodKind { HC1Normal, CV1T, CV2T, CV3T, WCR, WCU };

inline const char* to_string(MethodKind kind) {
  switch (kind) {
    case MethodKind::HC1Normal: return "HC1 N(0,1)";
    case MethodKind::CV1T: return "CV1 t(G-1)";
    case MethodKind::CV2T: return "CV2 t(G-1)";
    case MethodKind::CV3T: return "CV3 t(G-1)";
    case MethodKind::WCR: return "WCR";
    case MethodKind::WCU: return "WCU";
  }
  return "?";
}

inline MethodKind method_from_string(const std::string& name) {
  if (name == "hc1") return MethodKind::HC1Normal;
  if (name == "cv1") return MethodKind::CV1T;
  if (name == "cv2") return MethodKind::CV2T;
  if (name == "cv3") return MethodKind::CV3T;
  if (name == "wcr") return MethodKind::WCR;
  if (name == "wcu") return MethodKind::WCU;
  throw validation_error("unknown method '" + name + "' (use hc1, cv1, cv2, cv3, wcr, wcu)");
}

// Two-sided P value for beta_j = null_value under one method.  The fit's own
// partition supplies the clustering level; HC1 ignores it.
inline double method_p_value(const RegressionFit& fit, MethodKind kind, index_t j,
                             double null_value, const WildOptions& wild = {}) {
  switch (kind) {
    case MethodKind::HC1Normal: return t_test(fit, hc1(fit), j, null_value).p_value;
    case MethodKind::CV1T: return t_test(fit, cv1(fit), j, null_value).p_value;
    case MethodKind::CV2T: return t_test(fit, cv2(fit), j, null_value).p_value;
    case MethodKind::CV3T: return t_test(fit, cv3(fit), j, null_value).p_value;
    case MethodKind::WCR: {
      const auto restricted =
          add_restriction(fit, Restriction::coefficient(j, fit.n_regressors(), null_value));
      return wcr_test(restricted, wild).p_symmetric;
    }
    case MethodKind::WCU: {
      Eigen::VectorXd a = Eigen::VectorXd::Zero(fit.n_regressors());
      a(j) = 1.0;
      return wcu_test(fit, a, null_value, wild).p_symmetric;
    }
  }
  throw validation_error("unhandled method");
}

}  // namespace cri
