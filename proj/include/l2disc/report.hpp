#pragma once

// Diagnostics CSV and run summary JSON.

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "l2disc/io.hpp"
#include "l2disc/uvc.hpp"
#include "l2disc/walk.hpp"

namespace l2disc {

inline const std::vector<std::string>& diagnostics_columns() {
  static const std::vector<std::string> cols{"t",      "alive", "V_B", "max_prefix_disc", "prefix_i",
                                             "Q",      "L",     "Qt",  "Lt",              "corr_size"};
  return cols;
}

/// One row per monitored prefix per recorded step. Steps without monitored
/// prefixes get a single row with prefix_i = 0.
inline std::string diagnostics_csv(const DiagnosticsTrace& trace) {
  std::string out;
  const auto& cols = diagnostics_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) out += (c ? "," : "") + cols[c];
  out += '\n';
  char buf[512];
  for (const auto& rec : trace.records) {
    auto emit = [&](const PrefixRecord& p) {
      std::snprintf(buf, sizeof buf, "%llu,%lld,%.17g,%.17g,%lld,%.17g,%.17g,%.17g,%.17g,%lld\n",
                    static_cast<unsigned long long>(rec.t), static_cast<long long>(rec.alive), rec.v_b,
                    rec.max_prefix_disc, static_cast<long long>(p.prefix), p.q, p.l, p.q_tilde, p.l_tilde,
                    static_cast<long long>(p.corr_size));
      out += buf;
    };
    if (rec.prefixes.empty()) {
      emit(PrefixRecord{});
    } else {
      for (const auto& p : rec.prefixes) emit(p);
    }
  }
  return out;
}

inline void write_diagnostics_csv(const DiagnosticsTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::out | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  out << diagnostics_csv(trace);
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path + "' failed");
}

inline nlohmann::json config_json(const RunConfig& c) {
  return {{"gamma", c.gamma},
          {"max_steps", c.max_steps},
          {"beta", c.beta},
          {"delta", c.delta},
          {"delta_prime", c.delta_prime},
          {"alpha1", c.alpha1},
          {"alpha2", c.alpha2},
          {"seed", c.seed},
          {"uvc_method", to_string(c.uvc_method)},
          {"verify_every", c.verify_every},
          {"monitored_prefixes", c.monitored_prefixes},
          {"record_every", c.record_every},
          {"heavy_row_threshold", c.heavy_row_threshold},
          {"max_halvings", c.max_halvings}};
}

inline nlohmann::json checks_json(const InvariantReport& c) {
  return {{"steps_checked", c.steps_checked},
          {"verifications", c.verifications},
          {"drop_certifications", c.drop_certifications},
          {"certified_fallbacks", c.certified_fallbacks},
          {"box_violations", c.box_violations},
          {"cert_failures", c.cert_failures},
          {"operator_norm_violations", c.operator_norm_violations},
          {"ortho_violations", c.ortho_violations},
          {"op_bound_violations", c.op_bound_violations},
          {"energy_violations", c.energy_violations},
          {"linear_variance_violations", c.linear_variance_violations},
          {"heavy_row_violations", c.heavy_row_violations},
          {"support_drops", c.support_drops},
          {"halved_steps", c.halved_steps},
          {"max_kernel_residual", c.max_kernel_residual},
          {"min_spectral_margin", std::isfinite(c.min_spectral_margin) ? c.min_spectral_margin : 0.0},
          {"max_operator_norm_sq", c.max_operator_norm_sq},
          {"max_ortho_residual", c.max_ortho_residual},
          {"max_heavy_row_residual", c.max_heavy_row_residual},
          {"max_op_ratio", c.max_op_ratio}};
}

inline nlohmann::json summary_json(const DiagnosticsTrace& trace, const WalkState& state, const Coloring& coloring,
                                   const RunConfig& config) {
  std::size_t forced = 0;
  for (auto p : coloring.provenance) forced += p == SignProvenance::kForcedAlive;
  nlohmann::json j{{"max_prefix_discrepancy", trace.summary.max_prefix_discrepancy},
                   {"argmax_prefix", trace.summary.argmax_prefix},
                   {"steps", trace.summary.steps},
                   {"frozen_count", trace.summary.frozen_count},
                   {"alive_at_end", state.alive_count()},
                   {"forced_alive", forced},
                   {"wall_time_s", trace.summary.wall_time_s},
                   {"V_B", trace.v_b},
                   {"conservative_corruption", trace.conservative_corruption},
                   {"fitted_constants",
                    {{"c_l_hat", trace.fitted.c_l_hat},
                     {"energy_ratio", trace.fitted.energy_ratio},
                     {"op_ratio_over_bound", trace.fitted.op_ratio_over_bound}}},
                   {"checks", checks_json(trace.checks)},
                   {"config", config_json(config)}};
  if (!trace.unorms.empty()) {
    nlohmann::json u = nlohmann::json::array();
    for (const auto& [frob, gamma] : trace.unorms) u.push_back({frob, gamma});
    j["unorms"] = std::move(u);
  }
  return j;
}

inline nlohmann::json cert_json(const CertReport& r) {
  return {{"kernel_residual", r.kernel_residual}, {"spectral_margin", r.spectral_margin},
          {"max_row_norm", r.max_row_norm},       {"mass", r.mass},
          {"mass_floor", r.mass_floor},           {"operator_norm_sq", r.operator_norm_sq},
          {"passed", r.passed}};
}

// Constraint files:
//   l2disc-constraints v1 <n> <count>
//   active <i_1> ... <i_k>
//   <family> <v_1> ... <v_n>        (count lines, full length-n vectors)

inline std::string format_constraints(const ConstraintSet& set) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "l2disc-constraints v1 " << set.n() << ' ' << set.size() << '\n';
  out << "active";
  for (Index i : set.active()) out << ' ' << i;
  out << '\n';
  for (std::size_t j = 0; j < set.size(); ++j) {
    out << to_string(set.family()[j]);
    const Vector v = set.embedded(j);
    for (Index i = 0; i < v.size(); ++i) out << ' ' << v(i);
    out << '\n';
  }
  return out.str();
}

inline ConstraintSet parse_constraints(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParse, "empty constraint file");
  std::istringstream hs(line);
  std::string tag, version, extra;
  long long n = 0, count = 0;
  if (!(hs >> tag >> version >> n >> count) || tag != "l2disc-constraints" || version != "v1" || (hs >> extra) ||
      n < 1 || count < 0) {
    throw Error(ErrorCode::kParse, "malformed constraint header '" + line + "'");
  }
  if (!std::getline(in, line)) throw Error(ErrorCode::kParse, "missing active line");
  std::istringstream as(line);
  if (!(as >> tag) || tag != "active") throw Error(ErrorCode::kParse, "expected 'active' line");
  std::vector<Index> active;
  std::vector<Index> position(static_cast<std::size_t>(n), -1);
  long long idx = 0;
  while (as >> idx) {
    if (idx < 0 || idx >= n) throw Error(ErrorCode::kParse, "active index out of range");
    if (!active.empty() && idx <= active.back()) throw Error(ErrorCode::kParse, "active indices must increase");
    position[static_cast<std::size_t>(idx)] = static_cast<Index>(active.size());
    active.push_back(static_cast<Index>(idx));
  }
  if (!as.eof()) throw Error(ErrorCode::kParse, "bad token in active line");
  Matrix local = Matrix::Zero(static_cast<Index>(active.size()), count);
  std::vector<Family> family;
  for (long long j = 0; j < count; ++j) {
    if (!std::getline(in, line)) throw Error(ErrorCode::kParse, "missing constraint " + std::to_string(j));
    std::istringstream ls(line);
    std::string fam;
    ls >> fam;
    family.push_back(parse_family(fam));
    std::string token;
    for (long long i = 0; i < n; ++i) {
      if (!(ls >> token)) throw Error(ErrorCode::kParse, "constraint " + std::to_string(j) + " is too short");
      const double v = detail::parse_double(token);
      if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "constraint " + std::to_string(j));
      const Index p = position[static_cast<std::size_t>(i)];
      if (p < 0) {
        if (v != 0.0) {
          throw Error(ErrorCode::kParse, "constraint " + std::to_string(j) + " has support outside the active set");
        }
        continue;
      }
      local(p, static_cast<Index>(j)) = v;
    }
    if (ls >> token) throw Error(ErrorCode::kParse, "constraint " + std::to_string(j) + " is too long");
  }
  return ConstraintSet(std::move(active), static_cast<Index>(n), std::move(local), std::move(family));
}

}  // namespace l2disc
