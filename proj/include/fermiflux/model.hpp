#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "fermiflux/phasespace.hpp"

namespace fermiflux {

// One quasi-free reservoir. All matrices in the Majorana basis:
// kappa = iR_B (2L_B × 2L_B), theta = iW (2L_S × 2L_B).
struct BathSpec {
  double beta = 0.0;
  MatC kappa;
  MatC theta;

  Eigen::Index modes() const { return kappa.rows() / 2; }
};

// System generator T_S, pseudo-energy κ_S and the reservoirs. Validation is
// explicit; construction never checks anything.
struct ThermalModel {
  int L_S = 0;
  MatC T_S;
  MatC kappa_S;
  std::vector<BathSpec> baths;

  Eigen::Index dim() const { return 2 * static_cast<Eigen::Index>(L_S); }
  std::size_t n_baths() const { return baths.size(); }

  std::vector<double> betas() const {
    std::vector<double> b;
    b.reserve(baths.size());
    for (const auto& x : baths) b.push_back(x.beta);
    return b;
  }
};

struct ValidationItem {
  std::string name;
  double residual = 0.0;
  bool ok = true;
};

struct ValidationReport {
  std::vector<ValidationItem> items;

  bool ok() const {
    for (const auto& i : items)
      if (!i.ok) return false;
    return true;
  }

  std::vector<std::string> violations() const {
    std::vector<std::string> v;
    for (const auto& i : items)
      if (!i.ok) {
        std::ostringstream os;
        os << i.name << " (residual " << i.residual << ")";
        v.push_back(os.str());
      }
    return v;
  }
};

namespace thermal {

inline ValidationReport validate(const ThermalModel& m, double tol = 1e-10) {
  using linalg::max_abs;
  ValidationReport r;
  auto add = [&](std::string name, double residual, bool ok) { r.items.push_back({std::move(name), residual, ok}); };
  auto add_tol = [&](std::string name, double residual) { add(std::move(name), residual, residual <= tol); };

  const Eigen::Index n = m.dim();
  const bool dims_ok = m.L_S >= 1 && m.T_S.rows() == n && m.T_S.cols() == n && m.kappa_S.rows() == n &&
                       m.kappa_S.cols() == n;
  add("system dimensions", dims_ok ? 0.0 : 1.0, dims_ok);
  if (!dims_ok) return r;

  add_tol("T_S is iR with R real antisymmetric", phasespace::generator_residual(m.T_S));
  add_tol("kappa_S is iR with R real antisymmetric", phasespace::generator_residual(m.kappa_S));
  add_tol("[T_S, kappa_S] = 0", max_abs(MatC(m.T_S * m.kappa_S - m.kappa_S * m.T_S)));

  for (std::size_t i = 0; i < m.baths.size(); ++i) {
    const auto& b = m.baths[i];
    const std::string tag = "bath " + std::to_string(i) + ": ";
    const bool bd = b.kappa.rows() == b.kappa.cols() && b.kappa.rows() % 2 == 0 && b.kappa.rows() > 0 &&
                    b.theta.rows() == n && b.theta.cols() == b.kappa.rows();
    add(tag + "dimensions", bd ? 0.0 : 1.0, bd);
    if (!bd) continue;
    add(tag + "beta finite", std::isfinite(b.beta) ? 0.0 : 1.0, std::isfinite(b.beta));
    add_tol(tag + "kappa is iR with R real antisymmetric", phasespace::generator_residual(b.kappa));
    add_tol(tag + "Theta is iW with W real", phasespace::coupling_residual(b.theta));
    add_tol(tag + "Theta kappa_B = kappa_S Theta", max_abs(MatC(b.theta * b.kappa - m.kappa_S * b.theta)));
  }
  return r;
}

inline void require_valid(const ThermalModel& m, double tol = 1e-10) {
  const auto r = validate(m, tol);
  if (!r.ok()) {
    std::string msg = "invalid thermal model:";
    for (const auto& v : r.violations()) msg += "\n  " + v;
    throw InvalidModel(msg, r.violations());
  }
}

}  // namespace thermal
}  // namespace fermiflux
