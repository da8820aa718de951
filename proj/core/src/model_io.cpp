#include "qrm/model_io.hpp"

#include <fstream>

namespace qrm {

Json matrix_to_json(const CMat& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j)
      row.push_back(Json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

CMat matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw ModelError("matrix_from_json: expected nested array");
  const Index rows = Index(j.size());
  const Index cols = Index(j.at(0).size());
  CMat m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = j.at(size_t(r));
    if (Index(row.size()) != cols) throw ModelError("matrix_from_json: ragged rows");
    for (Index c = 0; c < cols; ++c) {
      const auto& e = row.at(size_t(c));
      if (!e.is_array() || e.size() != 2)
        throw ModelError("matrix_from_json: entries must be [re, im]");
      m(r, c) = Complex(e.at(0).get<double>(), e.at(1).get<double>());
    }
  }
  return m;
}

Json model_to_json(const QrmModel& model) {
  Json j;
  j["dims"] = {{"n_a", model.dims.n_a}, {"n_c", model.dims.n_c}, {"n_b", model.dims.n_b}};
  j["tau_a"] = matrix_to_json(model.reset_a.tau);
  j["tau_b"] = matrix_to_json(model.reset_b.tau);
  j["gamma_a"] = model.reset_a.gamma;
  j["gamma_b"] = model.reset_b.gamma;
  j["h_a"] = model.h_a.size() ? matrix_to_json(model.h_a) : Json();
  j["h_b"] = model.h_b.size() ? matrix_to_json(model.h_b) : Json();
  j["h_c"] = model.h_c.size() ? matrix_to_json(model.h_c) : Json();
  j["h_coupling"] = model.h_coupling.size() ? matrix_to_json(model.h_coupling) : Json();
  j["g"] = model.g;
  return j;
}

QrmModel model_from_json(const Json& j) {
  QrmModel m;
  try {
    const auto& d = j.at("dims");
    m.dims = {d.at("n_a").get<Index>(), d.at("n_c").get<Index>(), d.at("n_b").get<Index>()};
    m.reset_a.tau = matrix_from_json(j.at("tau_a"));
    m.reset_b.tau = matrix_from_json(j.at("tau_b"));
    m.reset_a.gamma = j.at("gamma_a").get<double>();
    m.reset_b.gamma = j.at("gamma_b").get<double>();
    auto opt = [&](const char* key) -> CMat {
      if (!j.contains(key) || j.at(key).is_null()) return CMat();
      return matrix_from_json(j.at(key));
    };
    m.h_a = opt("h_a");
    m.h_b = opt("h_b");
    m.h_c = opt("h_c");
    m.h_coupling = opt("h_coupling");
    m.g = j.value("g", 0.0);
  } catch (const Json::exception& e) {
    throw ModelError(std::string("model_from_json: ") + e.what());
  }
  m.validate();
  return m;
}

QrmModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw ModelError("model file is not valid JSON: " + std::string(e.what()));
  }
  return model_from_json(j);
}

namespace {

double num_override(const std::map<std::string, std::string>& o, const std::string& key,
                    double fallback) {
  auto it = o.find(key);
  if (it == o.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (...) {
    throw ModelError("preset override " + key + "=" + it->second + " is not a number");
  }
}

}  // namespace

ThreeQubitParams three_qubit_preset(const std::map<std::string, std::string>& overrides) {
  ThreeQubitParams p;
  p.u = 1.0;
  p.j_alpha = 0.7;
  p.j_beta = 0.4;
  p.t_a = 0.8;
  p.t_b = 0.3;
  p.gamma_a = 1.0;
  p.gamma_b = 2.0;
  p.g = 0.01;
  p.u = num_override(overrides, "u", p.u);
  p.j_alpha = num_override(overrides, "j_alpha", p.j_alpha);
  p.j_beta = num_override(overrides, "j_beta", p.j_beta);
  p.t_a = num_override(overrides, "t_a", p.t_a);
  p.t_b = num_override(overrides, "t_b", p.t_b);
  if (overrides.contains("beta_a"))
    p.t_a = ThreeQubitParams::thermal_population(num_override(overrides, "beta_a", 1.0),
                                                 num_override(overrides, "e_a", 1.0));
  if (overrides.contains("beta_b"))
    p.t_b = ThreeQubitParams::thermal_population(num_override(overrides, "beta_b", 1.0),
                                                 num_override(overrides, "e_b", 1.0));
  p.gamma_a = num_override(overrides, "gamma_a", p.gamma_a);
  p.gamma_b = num_override(overrides, "gamma_b", p.gamma_b);
  p.e_a = num_override(overrides, "e_a", p.e_a);
  p.e_b = num_override(overrides, "e_b", p.e_b);
  p.e_c = num_override(overrides, "e_c", p.e_c);
  p.g = num_override(overrides, "g", p.g);
  return p;
}

QubitNQubitParams qubit_n_qubit_preset(const std::map<std::string, std::string>& overrides) {
  QubitNQubitParams p;
  p.n = Index(num_override(overrides, "n", 4));
  p.a_g = RVec::Zero(p.n);
  p.a_e = RVec::Zero(p.n);
  p.b_down = RVec::Zero(p.n);
  p.b_up = RVec::Zero(p.n);
  p.alpha = CVec::Zero(p.n);
  p.beta = CVec::Zero(p.n);
  // Generic energies and couplings keeping Spec(H_bar_tau) comfortably away
  // from degeneracy for any t in (0,1).
  for (Index j = 0; j < p.n; ++j) {
    const double x = double(j + 1);
    p.a_g(j) = 0.31 * x * x;
    p.a_e(j) = -0.17 * x;
    p.b_down(j) = 0.23 * x;
    p.b_up(j) = 0.11 * x * x + 0.05 * x;
    p.alpha(j) = Complex(0.5 + 0.1 * double(j), 0.0);
    p.beta(j) = Complex(0.4, 0.05 * double(j));
  }
  p.t_a = num_override(overrides, "t_a", 0.7);
  p.t_b = num_override(overrides, "t_b", 0.35);
  p.gamma_a = num_override(overrides, "gamma_a", 1.0);
  p.gamma_b = num_override(overrides, "gamma_b", 1.5);
  p.g = num_override(overrides, "g", 0.01);
  return p;
}

QrmModel preset_model(const std::string& name,
                      const std::map<std::string, std::string>& overrides) {
  if (name == "three-qubit") return build_three_qubit(three_qubit_preset(overrides));
  if (name == "qubit-n-qubit") return build_qubit_n_qubit(qubit_n_qubit_preset(overrides));
  throw ModelError("unknown preset: " + name + " (known: three-qubit, qubit-n-qubit)");
}

std::uint64_t model_hash(const QrmModel& model) {
  const std::string s = model_to_json(model).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace qrm
