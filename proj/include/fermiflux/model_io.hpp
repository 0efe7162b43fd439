#pragma once

#include <fstream>
#include <sstream>

#include "fermiflux/chain.hpp"
#include "fermiflux/model.hpp"
#include "json.hpp"

// JSON model files. A model is either {"chain": {L, theta0, thetaL, beta0,
// betaL}} or an explicit description
//   {"L_S": n, "basis": "majorana" | "ca", "T_S": M, "kappa_S": M,
//    "baths": [{"beta": b, "kappa": M, "theta": M}, ...]}
// where a matrix M is a nested row array, or {"rows", "cols", "data"} with
// row-major data. Entries are numbers or [re, im] pairs. A key with suffix
// "_im" (e.g. "T_S_im") gives a real matrix Y standing for iY, the natural
// form of Majorana-basis generators.
namespace fermiflux::model_io {

using json = nlohmann::json;

namespace detail {

inline cplx entry(const json& v, const std::string& path) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  throw MalformedInput(path + ": expected a number or a [re, im] pair");
}

inline MatC matrix(const json& v, const std::string& path) {
  if (v.is_object()) {
    if (!v.contains("rows") || !v.contains("cols") || !v.contains("data"))
      throw MalformedInput(path + ": flat matrices need rows, cols and data");
    const auto r = v.at("rows").get<long>(), c = v.at("cols").get<long>();
    const json& d = v.at("data");
    if (r < 0 || c < 0 || !d.is_array() || static_cast<long>(d.size()) != r * c)
      throw MalformedInput(path + ": data must hold rows*cols = " + std::to_string(r * c) + " entries");
    MatC m(r, c);
    for (long i = 0; i < r; ++i)
      for (long j = 0; j < c; ++j)
        m(i, j) = entry(d[static_cast<std::size_t>(i * c + j)], path + ".data[" + std::to_string(i * c + j) + "]");
    return m;
  }
  if (!v.is_array()) throw MalformedInput(path + ": expected a matrix");
  const auto r = static_cast<Eigen::Index>(v.size());
  if (r == 0) return MatC(0, 0);
  if (!v[0].is_array()) throw MalformedInput(path + ": expected an array of rows");
  const auto c = static_cast<Eigen::Index>(v[0].size());
  MatC m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const json& row = v[static_cast<std::size_t>(i)];
    const std::string rp = path + "[" + std::to_string(i) + "]";
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c)
      throw MalformedInput(rp + ": ragged matrix, expected " + std::to_string(c) + " columns");
    for (Eigen::Index j = 0; j < c; ++j)
      m(i, j) = entry(row[static_cast<std::size_t>(j)], rp + "[" + std::to_string(j) + "]");
  }
  return m;
}

inline MatC field(const json& obj, const std::string& key, const std::string& path) {
  const bool plain = obj.contains(key), imag = obj.contains(key + "_im");
  if (plain && imag) throw MalformedInput(path + ": give either " + key + " or " + key + "_im, not both");
  if (plain) return matrix(obj.at(key), path + "." + key);
  if (imag) return I * matrix(obj.at(key + "_im"), path + "." + key + "_im");
  throw MalformedInput(path + ": missing " + key);
}

inline double number(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) throw MalformedInput(path + ": missing " + key);
  const json& v = obj.at(key);
  if (!v.is_number()) throw MalformedInput(path + "." + key + ": expected a number");
  return v.get<double>();
}

inline void shape(const MatC& m, Eigen::Index r, Eigen::Index c, const std::string& path) {
  if (m.rows() != r || m.cols() != c)
    throw MalformedInput(path + ": expected " + std::to_string(r) + "x" + std::to_string(c) + ", got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

}  // namespace detail

inline chain::ChainSpec chain_from_json(const json& c) {
  if (!c.is_object()) throw MalformedInput("chain: expected an object");
  chain::ChainSpec s;
  if (c.contains("L")) {
    if (!c.at("L").is_number_integer()) throw MalformedInput("chain.L: expected an integer");
    s.L = c.at("L").get<int>();
  }
  auto opt = [&](const char* k, double& x) {
    if (c.contains(k)) x = detail::number(c, k, "chain");
  };
  opt("theta0", s.theta0);
  opt("thetaL", s.thetaL);
  opt("beta0", s.beta0);
  opt("betaL", s.betaL);
  chain::require_valid_spec(s);
  return s;
}

namespace detail {

inline ThermalModel from_json_unchecked(const json& j) {
  if (!j.is_object()) throw MalformedInput("model: expected a JSON object");
  if (j.contains("chain")) return chain::build(chain_from_json(j.at("chain")));
  if (!j.contains("L_S") || !j.at("L_S").is_number_integer()) throw MalformedInput("model: missing integer L_S");
  ThermalModel m;
  m.L_S = j.at("L_S").get<int>();
  if (m.L_S < 1) throw MalformedInput("model.L_S: must be >= 1");
  const std::string basis = j.value("basis", std::string("majorana"));
  if (basis != "majorana" && basis != "ca") throw MalformedInput("model.basis: expected \"majorana\" or \"ca\"");
  const bool ca = basis == "ca";
  const Eigen::Index n = 2 * m.L_S;
  m.T_S = detail::field(j, "T_S", "model");
  m.kappa_S = detail::field(j, "kappa_S", "model");
  detail::shape(m.T_S, n, n, "model.T_S");
  detail::shape(m.kappa_S, n, n, "model.kappa_S");
  if (ca) {
    m.T_S = phasespace::to_majorana(m.T_S);
    m.kappa_S = phasespace::to_majorana(m.kappa_S);
  }
  if (!j.contains("baths") || !j.at("baths").is_array()) throw MalformedInput("model: missing baths array");
  const json& baths = j.at("baths");
  for (std::size_t b = 0; b < baths.size(); ++b) {
    const std::string p = "model.baths[" + std::to_string(b) + "]";
    const json& bj = baths[b];
    if (!bj.is_object()) throw MalformedInput(p + ": expected an object");
    BathSpec s;
    s.beta = detail::number(bj, "beta", p);
    s.kappa = detail::field(bj, "kappa", p);
    s.theta = detail::field(bj, "theta", p);
    if (s.kappa.rows() != s.kappa.cols() || s.kappa.rows() % 2)
      throw MalformedInput(p + ".kappa: expected an even square matrix");
    detail::shape(s.theta, n, s.kappa.rows(), p + ".theta");
    if (ca) {
      s.kappa = phasespace::to_majorana(s.kappa);
      s.theta = phasespace::coupling_to_majorana(s.theta);
    }
    m.baths.push_back(std::move(s));
  }
  return m;
}

}  // namespace detail

inline ThermalModel from_json(const json& j) {
  try {
    return detail::from_json_unchecked(j);
  } catch (const json::exception& e) {
    throw MalformedInput(std::string("model: ") + e.what());
  }
}

inline json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw MalformedInput(std::string("JSON parse error: ") + e.what());
  }
}

inline ThermalModel load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedInput("cannot open model file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return from_json(parse(ss.str()));
  } catch (const MalformedInput& e) {
    throw MalformedInput(path + ": " + e.what());
  }
}

inline json matrix_to_json(const MatC& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      const cplx z = m(i, k);
      if (z.imag() == 0.0)
        row.push_back(z.real());
      else
        row.push_back({z.real(), z.imag()});
    }
    rows.push_back(row);
  }
  return rows;
}

// Majorana-basis serialisation; purely imaginary matrices use the "_im" form.
inline json to_json(const ThermalModel& m) {
  auto put = [](json& obj, const std::string& key, const MatC& x) {
    if (linalg::max_abs(MatR(x.real())) == 0.0)
      obj[key + "_im"] = matrix_to_json(x.imag().cast<cplx>());
    else
      obj[key] = matrix_to_json(x);
  };
  json j;
  j["L_S"] = m.L_S;
  j["basis"] = "majorana";
  put(j, "T_S", m.T_S);
  put(j, "kappa_S", m.kappa_S);
  j["baths"] = json::array();
  for (const auto& b : m.baths) {
    json bj;
    bj["beta"] = b.beta;
    put(bj, "kappa", b.kappa);
    put(bj, "theta", b.theta);
    j["baths"].push_back(bj);
  }
  return j;
}

}  // namespace fermiflux::model_io
