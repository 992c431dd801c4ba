#include <string>

#include <json.hpp>

#include "attrakt/roa.hpp"

namespace attrakt::roa {

namespace {

using Json = nlohmann::ordered_json;

Json PolyToJson(const Polynomial& p) {
  Json out = Json::array();
  for (const auto& [m, c] : p.terms()) out.push_back(Json{{"exponents", m.exponents()}, {"coeff", c}});
  return out;
}

[[noreturn]] void Fail(const std::string& what) { throw ParseError("certificate: " + what, 0, 0); }

const Json& Field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) Fail(std::string("missing field '") + key + "'");
  return *it;
}

double Number(const Json& j, const char* key) {
  const Json& v = Field(j, key);
  if (!v.is_number()) Fail(std::string("field '") + key + "' is not a number");
  return v.get<double>();
}

Monomial MonomialFromJson(const Json& j, int nvars) {
  if (!j.is_array() || static_cast<int>(j.size()) != nvars) Fail("exponent vector has the wrong length");
  std::vector<int> e;
  for (const Json& v : j) {
    if (!v.is_number_integer() || v.get<int>() < 0) Fail("exponents must be non-negative integers");
    e.push_back(v.get<int>());
  }
  return Monomial(std::move(e));
}

Polynomial PolyFromJson(const Json& j, int nvars) {
  if (!j.is_array()) Fail("polynomial must be an array of terms");
  Polynomial::TermMap terms;
  for (const Json& t : j) {
    const double c = Number(t, "coeff");
    if (!terms.emplace(MonomialFromJson(Field(t, "exponents"), nvars), c).second) Fail("repeated monomial");
  }
  return Polynomial(nvars, std::move(terms));
}

Json GramToJson(const sos::Gram& g) {
  Json basis = Json::array();
  for (const Monomial& m : g.basis) basis.push_back(m.exponents());
  Json q = Json::array();
  for (Eigen::Index r = 0; r < g.q.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < g.q.cols(); ++c) row.push_back(g.q(r, c));
    q.push_back(std::move(row));
  }
  return Json{{"basis", std::move(basis)}, {"q", std::move(q)}};
}

sos::Gram GramFromJson(const Json& j, int nvars) {
  sos::Gram g;
  for (const Json& m : Field(j, "basis")) g.basis.push_back(MonomialFromJson(m, nvars));
  const Json& q = Field(j, "q");
  const auto n = static_cast<Eigen::Index>(g.basis.size());
  if (!q.is_array() || static_cast<Eigen::Index>(q.size()) != n) Fail("Gram matrix does not match its basis");
  g.q.resize(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (!q[r].is_array() || static_cast<Eigen::Index>(q[r].size()) != n) Fail("Gram matrix is not square");
    for (Eigen::Index c = 0; c < n; ++c) {
      if (!q[r][c].is_number()) Fail("Gram entry is not a number");
      g.q(r, c) = q[r][c].get<double>();
    }
  }
  return g;
}

Json PerPiece(const std::vector<Polynomial>& v, bool piecewise) {
  if (!piecewise) return PolyToJson(v.at(0));
  Json out = Json::array();
  for (const Polynomial& p : v) out.push_back(PolyToJson(p));
  return out;
}

std::vector<Polynomial> PerPieceFromJson(const Json& j, bool piecewise, int pieces, int nvars) {
  if (!piecewise) return {PolyFromJson(j, nvars)};
  if (!j.is_array() || static_cast<int>(j.size()) != pieces) Fail("expected one multiplier per piece");
  std::vector<Polynomial> out;
  for (const Json& p : j) out.push_back(PolyFromJson(p, nvars));
  return out;
}

}  // namespace

std::string WriteCertificate(const EraCertificate& c) {
  const bool pw = c.piecewise();
  Json j;
  j["nvars"] = c.nvars();
  j["var_names"] = c.var_names;
  if (pw) {
    Json pieces = Json::array();
    for (const Polynomial& p : c.r.pieces) pieces.push_back(PolyToJson(p));
    j["pieces"] = std::move(pieces);
  } else {
    j["R"] = PolyToJson(c.r.pieces.at(0));
  }
  j["gamma"] = c.gamma;
  j["V_N"] = PolyToJson(c.v_n);
  j["p"] = PerPiece(c.p, pw);
  j["m0"] = PerPiece(c.m0, pw);
  j["m1"] = PerPiece(c.m1, pw);
  if (c.has_rational()) j["m2"] = PerPiece(c.m2, pw);
  if (!c.s.empty()) {
    Json s = Json::object();
    for (const auto& [k, v] : c.s) s[k] = PolyToJson(v);
    j["s"] = std::move(s);
  }
  Json chain = Json::array();
  for (const ContainmentLink& l : c.m3_chain) {
    chain.push_back(Json{{"R_prev", PolyToJson(l.r_prev)},
                         {"gamma_prev", l.gamma_prev},
                         {"R", PolyToJson(l.r)},
                         {"gamma", l.gamma},
                         {"m3", PolyToJson(l.m3)},
                         {"m3_gram", GramToJson(l.m3_gram)},
                         {"gram", GramToJson(l.gram)}});
  }
  j["m3_chain"] = std::move(chain);
  j["eps_margin"] = c.eps_margin;
  j["iteration"] = c.iteration;
  Json grams = Json::object();
  for (const auto& [k, g] : c.grams) grams[k] = GramToJson(g);
  j["grams"] = std::move(grams);
  Json cfg = Json::object();
  for (const auto& [k, v] : c.config) cfg[k] = v;
  j["config"] = std::move(cfg);
  return j.dump(1) + "\n";
}

EraCertificate ReadCertificate(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::exception& e) {
    Fail(e.what());
  }
  try {
    if (!j.is_object()) Fail("top level must be an object");
    EraCertificate c;
    const Json& nv = Field(j, "nvars");
    if (!nv.is_number_integer() || nv.get<int>() < 1) Fail("nvars must be a positive integer");
    const int n = nv.get<int>();
    c.var_names = Field(j, "var_names").get<std::vector<std::string>>();
    if (static_cast<int>(c.var_names.size()) != n) Fail("var_names does not match nvars");

    const bool pw = j.contains("pieces");
    if (pw) {
      for (const Json& p : j["pieces"]) c.r.pieces.push_back(PolyFromJson(p, n));
      if (c.r.size() < 2) Fail("'pieces' needs at least two entries; use 'R' for one");
    } else {
      c.r.pieces.push_back(PolyFromJson(Field(j, "R"), n));
    }
    const int d = c.r.size();
    c.gamma = Number(j, "gamma");
    c.v_n = PolyFromJson(Field(j, "V_N"), n);
    c.p = PerPieceFromJson(Field(j, "p"), pw, d, n);
    c.m0 = PerPieceFromJson(Field(j, "m0"), pw, d, n);
    c.m1 = PerPieceFromJson(Field(j, "m1"), pw, d, n);
    if (j.contains("m2")) c.m2 = PerPieceFromJson(j["m2"], pw, d, n);
    if (j.contains("s")) {
      for (const auto& [k, v] : j["s"].items()) c.s[k] = PolyFromJson(v, n);
    }
    for (const Json& l : Field(j, "m3_chain")) {
      ContainmentLink link;
      link.r_prev = PolyFromJson(Field(l, "R_prev"), n);
      link.gamma_prev = Number(l, "gamma_prev");
      link.r = PolyFromJson(Field(l, "R"), n);
      link.gamma = Number(l, "gamma");
      link.m3 = PolyFromJson(Field(l, "m3"), n);
      link.m3_gram = GramFromJson(Field(l, "m3_gram"), n);
      link.gram = GramFromJson(Field(l, "gram"), n);
      c.m3_chain.push_back(std::move(link));
    }
    c.eps_margin = Number(j, "eps_margin");
    c.iteration = Field(j, "iteration").get<int>();
    for (const auto& [k, g] : Field(j, "grams").items()) c.grams[k] = GramFromJson(g, n);
    if (j.contains("config")) {
      for (const auto& [k, v] : j["config"].items()) c.config.emplace_back(k, v.get<std::string>());
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    Fail(e.what());
  }
}

}  // namespace attrakt::roa
