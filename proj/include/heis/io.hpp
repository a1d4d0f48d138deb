#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "classify.hpp"
#include "error.hpp"
#include "families.hpp"
#include "flow.hpp"
#include "profile.hpp"

namespace heis {

// Round-trip text for a double; non-finite values as nan/inf/-inf, -0 as 0.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v + 0.0);
  return buf;
}

// ---------------------------------------------------------------------------
// Profile JSON

namespace detail {

inline double num(const nlohmann::json& p, const char* key) {
  if (!p.contains(key) || !p[key].is_number()) throw invalid_input(std::string("profile JSON: missing number '") + key + "'");
  return p[key].get<double>();
}

inline double num_or(const nlohmann::json& p, const char* key, double dflt) {
  return p.contains(key) ? num(p, key) : dflt;
}

inline SigmaVariant variant_from_string(const std::string& s) {
  if (s == "sol1") return SigmaVariant::Sol1;
  if (s == "sol2") return SigmaVariant::Sol2;
  if (s == "sol3") return SigmaVariant::Sol3;
  if (s == "sol4") return SigmaVariant::Sol4;
  throw invalid_input("unknown σ-branch variant '" + s + "' (expected sol1..sol4)");
}

inline RicciFlatSheet sheet_from_string(const std::string& s) {
  if (s == "upper") return RicciFlatSheet::Upper;
  if (s == "lower") return RicciFlatSheet::Lower;
  throw invalid_input("unknown Ricci-flat sheet '" + s + "' (expected upper|lower)");
}

}  // namespace detail

// Accepts {"kind": k, "params": {...}, "domain": [lo, hi]} and the flat
// branch form {"family": k, ...params}.
inline MetricProfile profile_from_json(const nlohmann::json& j) {
  using detail::num;
  using detail::num_or;
  if (!j.is_object()) throw invalid_input("profile JSON must be an object");
  std::string kind;
  nlohmann::json p;
  if (j.contains("kind")) {
    kind = j["kind"].get<std::string>();
    p = j.contains("params") ? j["params"] : nlohmann::json::object();
  } else if (j.contains("family")) {
    kind = j["family"].get<std::string>();
    p = j;
  } else {
    throw invalid_input("profile JSON needs a 'kind' or 'family' field");
  }
  const std::optional<Interval> dom =
      j.contains("domain") ? std::optional<Interval>(domain_from_json(j["domain"])) : std::nullopt;

  if (kind == "sampled")
    return sampled_profile(j.at("t").get<std::vector<double>>(), j.at("a").get<std::vector<double>>(),
                           j.at("b").get<std::vector<double>>());
  if (kind == "exponential")
    return exponential_profile(num(p, "a0"), num(p, "alpha"), num(p, "b0"), num(p, "beta"), dom.value_or(Interval{}));
  if (kind == "stationary") return stationary_profile(StationaryFamily(num(p, "mu"), num_or(p, "C", 1)));
  if (kind == "hyperkahler" || kind == "hk")
    return hyperkahler_profile(HyperKahlerFamily(num(p, "b1"), static_cast<int>(num_or(p, "halfline", 1))));
  if (kind == "uhm") return uhm_profile(UHMFamily(num(p, "c"), num(p, "rho_ref"), num_or(p, "t_ref", 0)));
  if (kind == "ricciflat") {
    const RicciFlatBranch br(num(p, "C"), num_or(p, "t0", 0), detail::sheet_from_string(p.value("branch", "lower")),
                             static_cast<int>(num_or(p, "mu_sign", 1)));
    const Interval d = ricci_flat_domain(br);
    const double mid = std::isfinite(d.lo) && std::isfinite(d.hi) ? 0.5 * (d.lo + d.hi)
                       : std::isfinite(d.lo)                       ? d.lo + 1
                                                                   : d.hi - 1;
    return ricci_flat_profile(br, num_or(p, "t_ref", mid));
  }
  if (kind == "sigma") {
    const SigmaBranch br(detail::variant_from_string(p.value("variant", "sol4")), num_or(p, "t0", 0),
                         static_cast<int>(num_or(p, "sign", 1)), num_or(p, "Lambda", -6));
    Interval d = dom.value_or(Interval{});
    if (!dom && br.variant != SigmaVariant::Sol4) d = Interval{br.t0, inf};
    const double t_ref = num_or(p, "t_ref", std::isfinite(d.lo) ? d.lo + 1 : (std::isfinite(d.hi) ? d.hi - 1 : 0));
    return sigma_branch_profile(br, d, t_ref);
  }
  if (kind == "homothety") {
    if (!j.contains("base")) throw invalid_input("homothety profile needs a 'base' profile");
    return homothety_rescale(profile_from_json(j["base"]), num(j, "k"));
  }
  throw invalid_input("unknown profile kind '" + kind + "'");
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw invalid_input("malformed JSON in '" + path + "': " + e.what());
  }
}

inline MetricProfile load_profile(const std::string& path) { return profile_from_json(load_json_file(path)); }

// ---------------------------------------------------------------------------
// Tabular records

using Cell = std::variant<double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::string> comments;  // written as '# ...' lines after the rows
};

enum class Format { Csv, Json };

inline Format format_from_string(const std::string& s) {
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  throw invalid_input("unknown format '" + s + "' (expected csv|json)");
}

inline void write_table(const Table& t, Format f, std::ostream& out) {
  if (t.rows.empty()) throw invalid_input("emit: no records to write");
  for (const auto& r : t.rows)
    if (r.size() != t.columns.size()) throw invalid_input("emit: ragged record");
  if (f == Format::Csv) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
    out << '\n';
    for (const auto& r : t.rows) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        out << (i ? "," : "");
        if (const double* d = std::get_if<double>(&r[i])) out << format_double(*d);
        else out << std::get<std::string>(r[i]);
      }
      out << '\n';
    }
    for (const auto& c : t.comments) out << "# " << c << '\n';
    return;
  }
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : t.rows) {
    nlohmann::ordered_json o;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (const double* d = std::get_if<double>(&r[i])) {
        if (std::isfinite(*d)) o[t.columns[i]] = *d + 0.0;
        else if (std::isnan(*d)) o[t.columns[i]] = nullptr;
        else o[t.columns[i]] = format_double(*d);
      } else {
        o[t.columns[i]] = std::get<std::string>(r[i]);
      }
    }
    rows.push_back(std::move(o));
  }
  nlohmann::ordered_json doc;
  doc["records"] = std::move(rows);
  if (!t.comments.empty()) doc["events"] = t.comments;
  out << doc.dump(2) << '\n';
}

// Writes to `path`, or to `fallback` when the path is empty.
inline void emit(const Table& t, Format f, const std::string& path, std::ostream& fallback) {
  if (t.rows.empty()) throw invalid_input("emit: no records to write");
  if (path.empty()) {
    write_table(t, f, fallback);
    return;
  }
  std::ostringstream buf;
  write_table(t, f, buf);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit: cannot write '" + path + "'");
  out << buf.str();
  if (!out) throw std::runtime_error("emit: write to '" + path + "' failed");
}

inline const std::vector<std::string>& trajectory_columns() {
  static const std::vector<std::string> c{"t", "lambda", "mu", "P_lambda", "K", "sign_quantity"};
  return c;
}

inline std::vector<Cell> trajectory_row(double t, const LogDerivState& s, double Lambda) {
  const FlowInvariants inv = invariants(s, Lambda);
  return {t, s.lambda, s.mu, inv.p_lambda_value, inv.K ? *inv.K : std::nan(""), inv.sign_quantity};
}

inline Table trajectory_table(const FlowTrajectory& tr) {
  Table t;
  t.columns = trajectory_columns();
  for (const auto& [time, s] : tr.nodes()) t.rows.push_back(trajectory_row(time, s, tr.Lambda));
  for (const auto& e : tr.events)
    t.comments.push_back(std::string("event ") + to_string(e.kind) + " t=" + format_double(e.t) +
                         " lambda=" + format_double(e.state.lambda) + " mu=" + format_double(e.state.mu));
  t.comments.push_back(std::string("termination ") + to_string(tr.termination) + " t=" + format_double(tr.t_stop));
  return t;
}

// ---------------------------------------------------------------------------
// Reports

// JSON has no infinities; unbounded ends are written as "inf" / "-inf".
inline nlohmann::ordered_json end_to_json(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

inline nlohmann::ordered_json domain_estimate_to_json(const DomainEstimate& d) {
  nlohmann::ordered_json j;
  j["domain"] = {end_to_json(d.lo.value), end_to_json(d.hi.value)};
  j["provenance"] = {to_string(d.lo.provenance), to_string(d.hi.provenance)};
  j["numeric"] = {end_to_json(d.lo.numeric), end_to_json(d.hi.numeric)};
  j["agrees"] = d.lo.agrees() && d.hi.agrees();
  return j;
}

inline nlohmann::ordered_json report_to_json(const ClassificationReport& r) {
  nlohmann::ordered_json j;
  j["K"] = r.K && std::isfinite(*r.K) ? nlohmann::ordered_json(*r.K + 0.0) : nlohmann::ordered_json(nullptr);
  j["branch"] = to_string(r.branch);
  if (r.branch == Branch::NoEinsteinMetric || r.branch == Branch::NonRiemannian)
    j["domain"] = nullptr;
  else
    j["domain"] = {end_to_json(r.domain.lo.value), end_to_json(r.domain.hi.value)};
  j["verdict"] = to_string(r.verdict);
  j["justification"] = r.justification;
  j["state"] = {r.state.lambda, r.state.mu};
  j["Lambda"] = r.Lambda;
  j["ill_conditioned"] = r.ill_conditioned;
  if (r.branch != Branch::NoEinsteinMetric && r.branch != Branch::NonRiemannian) {
    j["endpoint_provenance"] = {to_string(r.domain.lo.provenance), to_string(r.domain.hi.provenance)};
    j["numeric_domain"] = {end_to_json(r.domain.lo.numeric), end_to_json(r.domain.hi.numeric)};
  }
  return j;
}

}  // namespace heis
