#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fermiflux {

using cplx = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using MatR = Eigen::MatrixXd;
using VecR = Eigen::VectorXd;

inline constexpr cplx I{0.0, 1.0};
inline constexpr const char* version = "0.1.0";

// Numerical tolerances shared across modules. Defaults follow the
// documented contracts; every field may be overridden by the caller.
struct Tolerances {
  double invariant = 1e-10;  // structural checks (ξ-structure, commutators)
  double split = 1e-8;       // imaginary-axis band for the Z_α spectrum
  double riccati = 1e-8;     // residual of the maximal Riccati solution
  double golden = 1e-10;     // bracket width of the Legendre maximisation
  double gradient = 1e-8;    // finite-difference slope accepted as stationary
  double alpha_max = 50.0;   // bound on |α| in the Legendre supremum
  double kalman = 1e-9;      // relative threshold for Krylov rank decisions
};

enum class ExitCode : int {
  ok = 0,
  usage = 1,
  invalid_model = 2,
  not_ergodic = 3,
  non_convergence = 4,
  oracle_failure = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

struct MalformedInput : Error {
  explicit MalformedInput(const std::string& w) : Error(ExitCode::invalid_model, w) {}
};

struct InvalidModel : Error {
  explicit InvalidModel(const std::string& w, std::vector<std::string> violations = {})
      : Error(ExitCode::invalid_model, w), violations(std::move(violations)) {}
  std::vector<std::string> violations;
};

struct NotErgodic : Error {
  explicit NotErgodic(const std::string& w) : Error(ExitCode::not_ergodic, w) {}
};

struct NonConvergence : Error {
  explicit NonConvergence(const std::string& w) : Error(ExitCode::non_convergence, w) {}
};

// Spectral degeneracies (eigenvalues on the imaginary axis, singular
// subspace bases). Reported with the non-convergence exit code.
struct NumericDegeneracy : Error {
  explicit NumericDegeneracy(const std::string& w) : Error(ExitCode::non_convergence, w) {}
};

struct ResourceError : Error {
  explicit ResourceError(const std::string& w) : Error(ExitCode::invalid_model, w) {}
};

struct Infeasible : Error {
  explicit Infeasible(const std::string& w) : Error(ExitCode::invalid_model, w) {}
};

struct UsageError : Error {
  explicit UsageError(const std::string& w) : Error(ExitCode::usage, w) {}
};

}  // namespace fermiflux
