#include "redunquant/report.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "redunquant/config.hpp"
#include "redunquant/errors.hpp"

namespace redunquant {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

json vec(const std::vector<double>& v) { return json(v); }

std::vector<double> doubles(const json& j) { return j.get<std::vector<double>>(); }

std::string sweep_kind(SweepKind k) { return k == SweepKind::Epsilon ? "epsilon" : "time"; }

void render(const json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, val] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out += inner + json(key).dump() + ": ";
        render(val, out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      const bool flat = std::all_of(j.begin(), j.end(),
                                    [](const json& e) { return e.is_primitive(); });
      if (flat) {
        out += "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ", ";
          render(j[i], out, indent + 1);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += inner;
        render(j[i], out, indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        // JSON has no literal for these.
        out += json(format_double(v)).dump();
      } else {
        out += format_double(v);
      }
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

json to_json(const Bits& b) {
  if (b.is_infinite()) return json("inf");
  return json(b.value());
}

Bits bits_from_json(const json& j) {
  if (j.is_string() && j.get<std::string>() == "inf") return Bits::infinite();
  return Bits(j.get<double>());
}

json to_json(const CellGrid& g) {
  json cells = json::array();
  for (auto c : g.cells) cells.push_back(c);
  json lo = json::array();
  json hi = json::array();
  for (Eigen::Index a = 0; a < g.dim(); ++a) {
    lo.push_back(g.box.lo(a));
    hi.push_back(g.box.hi(a));
  }
  return {{"lo", lo}, {"hi", hi}, {"cells", cells}};
}

namespace {

CellGrid grid_from_json(const json& j) {
  const auto lo = doubles(j.at("lo"));
  const auto hi = doubles(j.at("hi"));
  return CellGrid(Box{Eigen::Map<const Vector>(lo.data(), static_cast<Eigen::Index>(lo.size())),
                      Eigen::Map<const Vector>(hi.data(), static_cast<Eigen::Index>(hi.size()))},
                  j.at("cells").get<std::vector<std::size_t>>());
}

}  // namespace

json to_json(const RedundancyReport& r) {
  json j;
  j["method"] = to_string(r.method);
  j["normalization"] = to_string(r.normalization);
  if (r.epsilon) j["epsilon"] = *r.epsilon;
  if (r.time) j["time"] = *r.time;
  json kl = json::array();
  for (const auto& b : r.kl_per_channel) kl.push_back(to_json(b));
  j["kl_per_channel"] = std::move(kl);
  j["avg_term"] = to_json(r.avg_term);
  j["entropy_term"] = to_json(r.entropy_term);
  j["r"] = to_json(r.r);
  j["units"] = "bits";
  json p = json::object();
  const auto& pv = r.provenance;
  if (pv.seed) p["seed"] = *pv.seed;
  if (pv.n_paths) p["n_paths"] = *pv.n_paths;
  if (!pv.dt.empty()) p["dt"] = vec(pv.dt);
  if (!pv.horizon.empty()) p["horizon"] = vec(pv.horizon);
  if (!pv.leakage.empty()) p["leakage"] = vec(pv.leakage);
  if (!pv.mass.empty()) p["mass"] = vec(pv.mass);
  if (pv.grid) p["grid"] = to_json(*pv.grid);
  if (pv.jacobian) p["jacobian"] = *pv.jacobian;
  j["provenance"] = std::move(p);
  return j;
}

RedundancyReport redundancy_report_from_json(const json& j) {
  RedundancyReport r;
  r.method = parse_method(j.at("method").get<std::string>());
  r.normalization = parse_normalization(j.at("normalization").get<std::string>());
  if (j.contains("epsilon")) r.epsilon = j["epsilon"].get<double>();
  if (j.contains("time")) r.time = j["time"].get<double>();
  for (const auto& b : j.at("kl_per_channel")) r.kl_per_channel.push_back(bits_from_json(b));
  r.avg_term = bits_from_json(j.at("avg_term"));
  r.entropy_term = bits_from_json(j.at("entropy_term"));
  r.r = bits_from_json(j.at("r"));
  const json& p = j.at("provenance");
  auto& pv = r.provenance;
  if (p.contains("seed")) pv.seed = p["seed"].get<std::uint64_t>();
  if (p.contains("n_paths")) pv.n_paths = p["n_paths"].get<std::size_t>();
  if (p.contains("dt")) pv.dt = doubles(p["dt"]);
  if (p.contains("horizon")) pv.horizon = doubles(p["horizon"]);
  if (p.contains("leakage")) pv.leakage = doubles(p["leakage"]);
  if (p.contains("mass")) pv.mass = doubles(p["mass"]);
  if (p.contains("grid")) pv.grid = grid_from_json(p["grid"]);
  if (p.contains("jacobian")) pv.jacobian = p["jacobian"].get<std::string>();
  return r;
}

json to_json(const SweepTable& t) {
  json j;
  j["kind"] = sweep_kind(t.kind);
  json rows = json::array();
  for (const auto& r : t.rows) rows.push_back(to_json(r));
  j["rows"] = std::move(rows);
  j["nondecreasing"] = t.nondecreasing;
  if (t.r_at_unit_eps) {
    j["scaling_law"] = {{"method", to_string(Method::ClosedForm)},
                        {"r_at_unit_eps", *t.r_at_unit_eps},
                        {"prediction", vec(t.scaling_law_prediction)}};
  }
  if (t.reference) {
    j["reference"] = to_json(*t.reference);
    j["reference_exceeds"] = t.reference_exceeds;
  }
  j["claim"] = t.claim;
  j["finding"] = t.finding;
  return j;
}

SweepTable sweep_table_from_json(const json& j) {
  SweepTable t;
  t.kind = j.at("kind") == "epsilon" ? SweepKind::Epsilon : SweepKind::Time;
  for (const auto& r : j.at("rows")) t.rows.push_back(redundancy_report_from_json(r));
  t.nondecreasing = j.at("nondecreasing").get<std::vector<bool>>();
  if (j.contains("scaling_law")) {
    t.r_at_unit_eps = j["scaling_law"].at("r_at_unit_eps").get<double>();
    t.scaling_law_prediction = doubles(j["scaling_law"].at("prediction"));
  }
  if (j.contains("reference")) {
    t.reference = redundancy_report_from_json(j["reference"]);
    t.reference_exceeds = j.at("reference_exceeds").get<std::vector<bool>>();
  }
  t.claim = j.at("claim").get<std::string>();
  t.finding = j.at("finding").get<std::string>();
  return t;
}

json to_json(const ReliabilityReport& r) {
  return {{"method", to_string(Method::ClosedForm)},
          {"abscissae", vec(r.abscissae)},
          {"margin", r.margin},
          {"reliable", r.reliable}};
}

ReliabilityReport reliability_report_from_json(const json& j) {
  ReliabilityReport r;
  r.abscissae = doubles(j.at("abscissae"));
  r.margin = j.at("margin").get<double>();
  r.reliable = j.at("reliable").get<bool>();
  return r;
}

std::string render_structured(const json& j) {
  std::string out;
  render(j, out, 0);
  out += "\n";
  return out;
}

namespace {

std::string bits_cell(const Bits& b) {
  return b.is_infinite() ? "inf" : format_double(b.value());
}

void append_report_row(std::ostringstream& os, double parameter,
                       const RedundancyReport& r) {
  os << format_double(parameter) << ',' << to_string(r.method) << ','
     << bits_cell(r.r) << ',' << bits_cell(r.avg_term) << ','
     << bits_cell(r.entropy_term);
  for (const auto& b : r.kl_per_channel) os << ',' << bits_cell(b);
  os << '\n';
}

std::string report_header(const std::string& parameter, std::size_t channels) {
  std::string h = parameter + ",method,r,avg_term,entropy_term";
  for (std::size_t i = 1; i <= channels; ++i) h += ",kl_" + std::to_string(i);
  return h + "\n";
}

}  // namespace

std::string render_tabular(const ReportPayload& payload) {
  std::ostringstream os;
  std::visit(
      [&os](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SweepTable>) {
          const std::size_t n = p.rows.empty() ? 0 : p.rows.front().kl_per_channel.size();
          const std::string name = p.kind == SweepKind::Epsilon ? "epsilon" : "t";
          os << report_header(name, n);
          for (const auto& r : p.rows) {
            append_report_row(os, p.kind == SweepKind::Epsilon ? r.epsilon.value_or(NAN)
                                                               : r.time.value_or(NAN),
                              r);
          }
        } else if constexpr (std::is_same_v<T, RedundancyReport>) {
          const bool eps = p.epsilon.has_value();
          os << report_header(eps ? "epsilon" : "t", p.kl_per_channel.size());
          append_report_row(os, eps ? *p.epsilon : p.time.value_or(NAN), p);
        } else {
          os << "mode,method,abscissa\n";
          for (std::size_t j = 0; j < p.abscissae.size(); ++j) {
            os << j << ',' << to_string(Method::ClosedForm) << ','
               << format_double(p.abscissae[j]) << '\n';
          }
        }
      },
      payload);
  return os.str();
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

void emit_report(const ReportPayload& payload, ReportFormat format,
                 const std::filesystem::path& path) {
  if (format == ReportFormat::Tabular) {
    write_atomic(path, render_tabular(payload));
    return;
  }
  const json j = std::visit([](const auto& p) { return to_json(p); }, payload);
  write_atomic(path, render_structured(j));
}

std::string inputs_digest(const json& config) {
  const std::string text = render_structured(config);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex = "sha256:";
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[md[i] >> 4];
    hex += kHex[md[i] & 0xF];
  }
  return hex;
}

json report_envelope(const std::string& command, const json& config, json outputs) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  j["command"] = command;
  j["inputs_digest"] = inputs_digest(config);
  j["config"] = config;
  j["outputs"] = std::move(outputs);
  return j;
}

}  // namespace redunquant
