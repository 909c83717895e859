#include "redunquant/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "redunquant/errors.hpp"

namespace redunquant {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& detail) {
  throw ConfigValidationError(field, detail);
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) {
      invalid(where.empty() ? key : where + "." + key, "unknown field");
    }
  }
}

double number(const json& j, const std::string& field) {
  if (!j.is_number()) invalid(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) invalid(field, "must be finite");
  return v;
}

double positive(const json& j, const std::string& field) {
  const double v = number(j, field);
  if (!(v > 0.0)) invalid(field, "must be positive");
  return v;
}

std::size_t count(const json& j, const std::string& field) {
  if (!j.is_number_integer() || j.get<long long>() < 1) {
    invalid(field, "expected a positive integer");
  }
  return j.get<std::size_t>();
}

Vector vector_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) invalid(field, "expected a non-empty array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = number(j[i], field);
  }
  return v;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace

json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < M.cols(); ++k) row.push_back(M(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) {
    invalid(field, "expected a non-empty array of rows");
  }
  const std::size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty()) invalid(field, "rows must be non-empty arrays");
  const std::size_t cols = j[0].size();
  Matrix M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) {
      invalid(field, "rows must all have " + std::to_string(cols) + " entries");
    }
    for (std::size_t k = 0; k < cols; ++k) {
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          number(j[i][k], field);
    }
  }
  return M;
}

ProblemSpec parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a 1-based line/column.
    const std::size_t offset = std::min<std::size_t>(e.byte, text.size() + 1);
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i + 1 < offset && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigSyntaxError("config syntax error at line " + std::to_string(line) +
                                ", column " + std::to_string(column) + ": " +
                                e.what(),
                            line, column);
  }
  if (!root.is_object()) invalid("<root>", "expected a JSON object");
  reject_unknown(root,
                 {"schema_version", "system", "gains", "epsilon", "rho0", "times",
                  "seed", "method", "grid", "mode", "monte_carlo", "synthesis",
                  "avg_normalization", "jacobian"},
                 "");

  if (root.contains("schema_version") &&
      root["schema_version"] != json(kSchemaVersion)) {
    invalid("schema_version", "unsupported version (expected \"1\")");
  }
  if (!root.contains("system") || !root["system"].is_object()) {
    invalid("system", "required object missing");
  }
  const json& js = root["system"];
  reject_unknown(js, {"A", "B", "sigma", "N", "d"}, "system");
  if (!js.contains("A")) invalid("A", "required");
  if (!js.contains("B")) invalid("B", "required");
  Matrix A = matrix_from_json(js["A"], "A");
  if (A.rows() != A.cols()) invalid("A", "must be square");
  const Eigen::Index d = A.rows();
  if (js.contains("d") && (!js["d"].is_number_integer() || js["d"].get<long long>() != d)) {
    invalid("d", "does not match the size of A");
  }
  if (!js["B"].is_array() || js["B"].empty()) invalid("B", "expected a non-empty list");
  if (js.contains("N")) {
    const std::size_t N = count(js["N"], "N");
    if (js["B"].size() != N) {
      invalid("B", "has " + std::to_string(js["B"].size()) +
                       " entries but N = " + std::to_string(N));
    }
  }
  std::vector<Matrix> B;
  for (std::size_t i = 0; i < js["B"].size(); ++i) {
    B.push_back(matrix_from_json(js["B"][i], "B"));
    if (B.back().rows() != d) {
      invalid("B", "B[" + std::to_string(i) + "] must have " + std::to_string(d) + " rows");
    }
  }

  std::vector<std::string> defaults;
  std::optional<DiffusionSpec> sigma;
  try {
    if (!js.contains("sigma")) {
      sigma = DiffusionSpec::constant(Matrix::Identity(d, d));
      defaults.push_back("sigma");
    } else {
      const json& jsig = js["sigma"];
      if (!jsig.is_object() || !jsig.contains("type")) {
        invalid("sigma", "expected an object with a 'type'");
      }
      const std::string type = jsig["type"].is_string() ? jsig["type"].get<std::string>() : "";
      if (type == "constant") {
        reject_unknown(jsig, {"type", "S"}, "sigma");
        if (!jsig.contains("S")) invalid("sigma", "constant diffusion needs S");
        Matrix S = matrix_from_json(jsig["S"], "sigma");
        if (S.rows() != d) invalid("sigma", "S must have d rows");
        sigma = DiffusionSpec::constant(std::move(S));
      } else if (type == "diag_affine") {
        reject_unknown(jsig, {"type", "c", "s"}, "sigma");
        if (!jsig.contains("c") || !jsig.contains("s")) {
          invalid("sigma", "diag_affine diffusion needs c and s");
        }
        Vector c = vector_from_json(jsig["c"], "sigma");
        Vector s = vector_from_json(jsig["s"], "sigma");
        if (c.size() != d || s.size() != d) invalid("sigma", "c and s need length d");
        sigma = DiffusionSpec::diag_affine(std::move(c), std::move(s));
      } else {
        invalid("sigma", "type must be 'constant' or 'diag_affine'");
      }
    }
  } catch (const ConfigValidationError&) {
    throw;
  } catch (const Error& e) {
    invalid("sigma", e.what());
  }

  ProblemSpec spec(MultiChannelSystem(std::move(A), std::move(B), std::move(*sigma)));
  const std::size_t N = spec.system.channels();

  if (root.contains("gains")) {
    const json& jg = root["gains"];
    if (!jg.is_array() || jg.size() != N) {
      invalid("gains", "expected a list of " + std::to_string(N) + " matrices");
    }
    GainSet g;
    for (std::size_t i = 0; i < N; ++i) g.K.push_back(matrix_from_json(jg[i], "gains"));
    try {
      check_compatible(spec.system, g);
    } catch (const DimensionError& e) {
      invalid("gains", e.what());
    }
    spec.gains = std::move(g);
  }

  if (root.contains("epsilon")) {
    const json& je = root["epsilon"];
    if (je.is_array()) {
      if (je.empty()) invalid("epsilon", "list must not be empty");
      for (const auto& e : je) spec.epsilon.push_back(positive(e, "epsilon"));
      spec.epsilon_is_list = true;
    } else {
      spec.epsilon.push_back(positive(je, "epsilon"));
    }
  }

  if (root.contains("rho0")) {
    const json& jr = root["rho0"];
    if (!jr.is_object()) invalid("rho0", "expected {mean, cov}");
    reject_unknown(jr, {"mean", "cov"}, "rho0");
    if (!jr.contains("mean") || !jr.contains("cov")) invalid("rho0", "needs mean and cov");
    Vector mean = vector_from_json(jr["mean"], "rho0");
    Matrix cov = matrix_from_json(jr["cov"], "rho0");
    if (mean.size() != d) invalid("rho0", "mean must have length d");
    try {
      spec.rho0.emplace(std::move(mean), std::move(cov));
    } catch (const Error& e) {
      invalid("rho0", e.what());
    }
  }

  if (root.contains("times")) {
    const json& jt = root["times"];
    if (!jt.is_array() || jt.empty()) invalid("times", "expected a non-empty list");
    for (const auto& t : jt) {
      const double v = number(t, "times");
      if (v < 0.0) invalid("times", "must be nonnegative");
      spec.times.push_back(v);
    }
  }

  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned()) invalid("seed", "expected a nonnegative integer");
    spec.seed = root["seed"].get<std::uint64_t>();
  } else {
    defaults.push_back("seed");
  }

  if (root.contains("method")) {
    if (!root["method"].is_string()) invalid("method", "expected a string");
    try {
      spec.method = parse_method(root["method"].get<std::string>());
    } catch (const DomainError& e) {
      invalid("method", e.what());
    }
  } else {
    defaults.push_back("method");
  }

  if (root.contains("grid")) {
    const json& jg = root["grid"];
    if (!jg.is_object()) invalid("grid", "expected {lo, hi, cells}");
    reject_unknown(jg, {"lo", "hi", "cells"}, "grid");
    if (!jg.contains("lo") || !jg.contains("hi") || !jg.contains("cells")) {
      invalid("grid", "needs lo, hi and cells");
    }
    Box box{vector_from_json(jg["lo"], "grid"), vector_from_json(jg["hi"], "grid")};
    std::vector<std::size_t> cells;
    if (!jg["cells"].is_array()) invalid("grid", "cells must be a list");
    for (const auto& c : jg["cells"]) cells.push_back(count(c, "grid"));
    if (box.dim() != d) invalid("grid", "box must have dimension d");
    try {
      spec.grid.emplace(std::move(box), std::move(cells));
    } catch (const Error& e) {
      invalid("grid", e.what());
    }
  }

  if (root.contains("mode")) {
    if (!root["mode"].is_number_unsigned() || root["mode"].get<std::size_t>() > N) {
      invalid("mode", "must be an integer in [0, N]");
    }
    spec.mode = root["mode"].get<std::size_t>();
  }

  if (root.contains("monte_carlo")) {
    const json& jm = root["monte_carlo"];
    if (!jm.is_object()) invalid("monte_carlo", "expected an object");
    reject_unknown(jm, {"n_paths", "dt", "horizon", "cells", "pseudo_count", "threads"},
                   "monte_carlo");
    auto& mc = spec.monte_carlo;
    if (jm.contains("n_paths")) mc.n_paths = count(jm["n_paths"], "monte_carlo");
    if (jm.contains("dt")) mc.dt = positive(jm["dt"], "monte_carlo");
    if (jm.contains("horizon")) mc.horizon = positive(jm["horizon"], "monte_carlo");
    if (jm.contains("cells")) {
      mc.cells_1d = mc.cells_2d = count(jm["cells"], "monte_carlo");
    }
    if (jm.contains("pseudo_count")) {
      mc.pseudo_count = number(jm["pseudo_count"], "monte_carlo");
      if (mc.pseudo_count < 0.0) invalid("monte_carlo", "pseudo_count must be nonnegative");
    }
    if (jm.contains("threads")) {
      mc.threads = static_cast<unsigned>(count(jm["threads"], "monte_carlo"));
    }
  }
  spec.monte_carlo.seed = spec.seed;

  if (root.contains("synthesis")) {
    const json& jy = root["synthesis"];
    if (!jy.is_object()) invalid("synthesis", "expected an object");
    reject_unknown(jy, {"Q", "R", "theta_max", "margin_floor"}, "synthesis");
    auto& so = spec.synthesis;
    if (jy.contains("Q")) so.Q_weight = matrix_from_json(jy["Q"], "synthesis");
    if (jy.contains("R")) {
      if (!jy["R"].is_array() || jy["R"].size() != N) {
        invalid("synthesis", "R needs one matrix per channel");
      }
      std::vector<Matrix> R;
      for (const auto& r : jy["R"]) R.push_back(matrix_from_json(r, "synthesis"));
      so.R_weights = std::move(R);
    }
    if (jy.contains("theta_max")) {
      so.theta_max = number(jy["theta_max"], "synthesis");
      if (so.theta_max < 1.0) invalid("synthesis", "theta_max must be >= 1");
    }
    if (jy.contains("margin_floor")) {
      so.margin_floor = number(jy["margin_floor"], "synthesis");
      if (so.margin_floor < 0.0) invalid("synthesis", "margin_floor must be >= 0");
    }
  }

  if (root.contains("avg_normalization")) {
    if (!root["avg_normalization"].is_string()) invalid("avg_normalization", "expected a string");
    try {
      spec.normalization = parse_normalization(root["avg_normalization"].get<std::string>());
    } catch (const DomainError& e) {
      invalid("avg_normalization", e.what());
    }
  }
  if (root.contains("jacobian")) {
    const json& jj = root["jacobian"];
    if (jj == "mass_conserving") {
      spec.jacobian = JacobianConvention::MassConserving;
    } else if (jj == "paper_literal") {
      spec.jacobian = JacobianConvention::PaperLiteral;
    } else {
      invalid("jacobian", "must be 'mass_conserving' or 'paper_literal'");
    }
  }

  spec.defaults_applied = std::move(defaults);
  return spec;
}

ProblemSpec parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

json ProblemSpec::canonical() const {
  json j;
  j["schema_version"] = kSchemaVersion;
  json js;
  js["A"] = matrix_to_json(system.A());
  js["B"] = json::array();
  for (const auto& b : system.B()) js["B"].push_back(matrix_to_json(b));
  if (system.sigma().is_constant()) {
    js["sigma"] = {{"type", "constant"},
                   {"S", matrix_to_json(system.sigma().as_constant().S)}};
  } else {
    const auto& a = system.sigma().as_diag_affine();
    js["sigma"] = {{"type", "diag_affine"}, {"c", vector_to_json(a.c)},
                   {"s", vector_to_json(a.s)}};
  }
  j["system"] = std::move(js);
  if (gains) {
    json jg = json::array();
    for (const auto& k : gains->K) jg.push_back(matrix_to_json(k));
    j["gains"] = std::move(jg);
  }
  if (!epsilon.empty()) {
    j["epsilon"] = epsilon_is_list ? json(epsilon) : json(epsilon.front());
  }
  if (rho0) {
    j["rho0"] = {{"mean", vector_to_json(rho0->mean())},
                 {"cov", matrix_to_json(rho0->cov())}};
  }
  if (!times.empty()) j["times"] = times;
  j["seed"] = seed;
  j["method"] = to_string(method);
  if (grid) {
    json cells = json::array();
    for (auto c : grid->cells) cells.push_back(c);
    j["grid"] = {{"lo", vector_to_json(grid->box.lo)},
                 {"hi", vector_to_json(grid->box.hi)},
                 {"cells", std::move(cells)}};
  }
  j["mode"] = mode;
  json mc = {{"n_paths", monte_carlo.n_paths},
             {"pseudo_count", monte_carlo.pseudo_count},
             {"cells_1d", monte_carlo.cells_1d},
             {"cells_2d", monte_carlo.cells_2d}};
  if (monte_carlo.dt) mc["dt"] = *monte_carlo.dt;
  if (monte_carlo.horizon) mc["horizon"] = *monte_carlo.horizon;
  j["monte_carlo"] = std::move(mc);
  j["avg_normalization"] = to_string(normalization);
  j["jacobian"] = to_string(jacobian);
  j["defaults_applied"] = defaults_applied;
  return j;
}

}  // namespace redunquant
