#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fermiflux/model.hpp"

// CSV output with a '#'-prefixed metadata header. Numbers use "%.17g" so
// files round-trip exactly and are byte-identical across repeated runs.
namespace fermiflux::csv {

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// FNV-1a over a canonical text rendering of the model (Majorana basis).
inline std::string model_hash(const ThermalModel& m) {
  std::ostringstream os;
  auto mat = [&](const MatC& x) {
    os << x.rows() << 'x' << x.cols() << ':';
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < x.cols(); ++j) os << num(x(i, j).real()) << ',' << num(x(i, j).imag()) << ';';
  };
  os << "L=" << m.L_S << ';';
  mat(m.T_S);
  mat(m.kappa_S);
  for (const auto& b : m.baths) {
    os << "beta=" << num(b.beta) << ';';
    mat(b.kappa);
    mat(b.theta);
  }
  return "fnv1a64:" + hex(fnv1a(os.str()));
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  Writer& meta(const std::string& key, const std::string& value) {
    out_ << "# " << key << ": " << value << '\n';
    return *this;
  }
  Writer& meta(const std::string& key, double value) { return meta(key, num(value)); }

  Writer& header(const std::vector<std::string>& cols) {
    columns_ = cols.size();
    return line(cols);
  }

  Writer& row(const std::vector<std::string>& cells) {
    if (columns_ && cells.size() != columns_) throw std::logic_error("csv row width does not match header");
    return line(cells);
  }

 private:
  Writer& line(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) out_ << ',';
      out_ << cells[k];
    }
    out_ << '\n';
    return *this;
  }

  std::ostream& out_;
  std::size_t columns_ = 0;
};

// Standard provenance lines: tool version, command and model hash.
inline void provenance(Writer& w, const std::string& command, const std::string& model_hash, const Tolerances& tol) {
  w.meta("fermiflux", version);
  w.meta("command", command);
  w.meta("model_hash", model_hash);
  std::ostringstream t;
  t << "invariant=" << num(tol.invariant) << " split=" << num(tol.split) << " riccati=" << num(tol.riccati)
    << " golden=" << num(tol.golden) << " alpha_max=" << num(tol.alpha_max) << " kalman=" << num(tol.kalman);
  w.meta("tolerances", t.str());
}

}  // namespace fermiflux::csv
