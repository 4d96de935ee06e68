#pragma once

// Experiment suites and CSV/JSON report emission.
//
// Each suite writes <out>/<suite>.csv (deterministic in the master seed),
// <out>/<suite>_timing.csv (wall time per row) and <out>/<suite>.json
// (rows plus a summary).

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "l2disc/baselines.hpp"
#include "l2disc/conc.hpp"
#include "l2disc/komlos.hpp"
#include "l2disc/walk.hpp"

namespace l2disc {

using Cell = std::variant<std::int64_t, double, std::string>;

struct ReportBundle {
  std::string suite;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  /// Wall time per row in seconds; kept out of the main CSV.
  std::vector<double> runtimes;
  nlohmann::json summary = nlohmann::json::object();

  bool operator==(const ReportBundle&) const = default;
};

enum class Suite { kScalingSignedSeries, kKomlosCover, kConcSuite, kUvcCert };

inline const char* to_string(Suite s) {
  switch (s) {
    case Suite::kScalingSignedSeries: return "scaling_signed_series";
    case Suite::kKomlosCover: return "komlos_cover";
    case Suite::kConcSuite: return "conc_suite";
    case Suite::kUvcCert: return "uvc_cert";
  }
  return "unknown";
}

inline Suite parse_suite(const std::string& s) {
  for (Suite v : {Suite::kScalingSignedSeries, Suite::kKomlosCover, Suite::kConcSuite, Suite::kUvcCert}) {
    if (s == to_string(v)) return v;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown suite '" + s + "'");
}

/// Column order of each suite's CSV.
inline std::vector<std::string> suite_columns(Suite s) {
  switch (s) {
    case Suite::kScalingSignedSeries:
      return {"cell", "d", "n", "seed", "instance_seed", "walk_seed", "steps", "alive_at_end",
              "walk_disc", "walk_ratio", "random_disc", "random_ratio", "greedy_disc", "greedy_ratio",
              "halved_steps", "support_drops", "verifications", "cert_failures", "invariant_violations",
              "error"};
    case Suite::kKomlosCover:
      return {"cell", "n", "seed", "instance_seed", "walk_seed", "steps", "alive_at_end", "sets", "width",
              "cover_valid", "max_ratio", "median_ratio", "max_over_median", "max_set_sum", "max_row_sq",
              "random_max_ratio", "support_drops", "cert_failures", "invariant_violations", "error"};
    case Suite::kConcSuite:
      return {"which", "scenario", "a", "b", "empirical", "bound", "slack", "pass"};
    case Suite::kUvcCert:
      return {"system", "d", "n", "k", "constraints", "row", "singular", "ortho", "drops", "method",
              "kernel_residual", "spectral_margin", "max_row_norm", "mass", "mass_floor", "operator_norm_sq",
              "passed", "error"};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Emission

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string format_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return csv_escape(v);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else {
          return std::to_string(v);
        }
      },
      c);
}

inline nlohmann::json cell_to_json(const Cell& c) {
  return std::visit([](const auto& v) { return nlohmann::json(v); }, c);
}

inline Cell cell_from_json(const nlohmann::json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  throw Error(ErrorCode::kParse, "unsupported cell value in report");
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::out | std::ios::trunc | std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path + "' failed");
}

}  // namespace detail

inline std::string to_csv(const ReportBundle& b) {
  std::string out;
  for (std::size_t c = 0; c < b.columns.size(); ++c) {
    if (c) out += ',';
    out += detail::csv_escape(b.columns[c]);
  }
  out += '\n';
  for (const auto& row : b.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += detail::format_cell(row[c]);
    }
    out += '\n';
  }
  return out;
}

inline std::string timing_csv(const ReportBundle& b) {
  std::string out = "row,runtime_s\n";
  for (std::size_t r = 0; r < b.runtimes.size(); ++r) {
    out += std::to_string(r) + ',' + detail::format_double(b.runtimes[r]) + '\n';
  }
  return out;
}

inline nlohmann::json to_json(const ReportBundle& b) {
  nlohmann::json j;
  j["suite"] = b.suite;
  j["columns"] = b.columns;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : b.rows) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& c : row) r.push_back(detail::cell_to_json(c));
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  j["runtimes"] = b.runtimes;
  j["summary"] = b.summary;
  return j;
}

inline ReportBundle bundle_from_json(const nlohmann::json& j) {
  try {
    ReportBundle b;
    b.suite = j.at("suite").get<std::string>();
    b.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& r : j.at("rows")) {
      std::vector<Cell> row;
      for (const auto& c : r) row.push_back(detail::cell_from_json(c));
      b.rows.push_back(std::move(row));
    }
    b.runtimes = j.at("runtimes").get<std::vector<double>>();
    b.summary = j.at("summary");
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed report: ") + e.what());
  }
}

enum class ReportFormat { kCsv, kJson };

/// Write one file. CSV writes the row table; JSON the whole bundle.
inline void emit_report(const ReportBundle& b, ReportFormat format, const std::string& path) {
  if (format == ReportFormat::kCsv) {
    detail::write_file(path, to_csv(b));
  } else {
    detail::write_file(path, to_json(b).dump(2) + "\n");
  }
}

// ---------------------------------------------------------------------------
// Grid overrides: "key=v1,v2;key=v" with keys per suite.

using GridOverrides = std::map<std::string, std::vector<std::string>>;

inline GridOverrides parse_grid(const std::string& text) {
  GridOverrides out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ';')) {
    if (part.find_first_not_of(" \t") == std::string::npos) continue;
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "grid entry '" + part + "' lacks '='");
    std::string key = part.substr(0, eq);
    key.erase(std::remove_if(key.begin(), key.end(), ::isspace), key.end());
    std::vector<std::string> values;
    std::stringstream vs(part.substr(eq + 1));
    std::string v;
    while (std::getline(vs, v, ',')) {
      v.erase(std::remove_if(v.begin(), v.end(), ::isspace), v.end());
      if (!v.empty()) values.push_back(v);
    }
    if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "grid entry '" + key + "' has no values");
    out[key] = std::move(values);
  }
  return out;
}

namespace detail {

inline void check_keys(const GridOverrides& g, std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : g) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw Error(ErrorCode::kInvalidArgument, "unknown grid key '" + key + "'");
    }
  }
}

inline std::int64_t parse_int(const std::string& s) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kInvalidArgument, "bad integer '" + s + "' in grid");
  }
  return v;
}

inline std::vector<Index> int_list(const GridOverrides& g, const std::string& key, std::vector<Index> def) {
  const auto it = g.find(key);
  if (it == g.end()) return def;
  std::vector<Index> out;
  for (const auto& s : it->second) {
    const auto v = parse_int(s);
    if (v < 1) throw Error(ErrorCode::kInvalidArgument, "grid value for '" + key + "' must be positive");
    out.push_back(static_cast<Index>(v));
  }
  return out;
}

inline std::int64_t int_value(const GridOverrides& g, const std::string& key, std::int64_t def, std::int64_t min = 0) {
  const auto it = g.find(key);
  if (it == g.end()) return def;
  if (it->second.size() != 1) throw Error(ErrorCode::kInvalidArgument, "grid key '" + key + "' takes one value");
  const auto v = parse_int(it->second.front());
  if (v < min) throw Error(ErrorCode::kInvalidArgument, "grid value for '" + key + "' is too small");
  return v;
}

/// Run fn(i) for i in [0, count) on `workers` threads; results are written by
/// index so completion order does not matter.
template <typename F>
void parallel_for(std::size_t count, unsigned workers, F&& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i; (i = next.fetch_add(1)) < count;) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline double normalized_prefix(double disc, Index d, Index n) {
  const double ln = std::log(static_cast<double>(n));
  return disc / std::sqrt(static_cast<double>(d) + ln * ln);
}

inline std::uint64_t violation_total(const InvariantReport& c) {
  return c.box_violations + c.operator_norm_violations + c.ortho_violations + c.op_bound_violations +
         c.energy_violations + c.linear_variance_violations + c.heavy_row_violations;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::uint64_t cell_key(Index a, Index b) {
  return static_cast<std::uint64_t>(a) << 32 | static_cast<std::uint64_t>(b);
}

}  // namespace detail

struct BenchOptions {
  std::uint64_t seed = 1;
  std::string grid;
  /// Per-run wall-clock budget; 0 disables it.
  double cell_time_budget_s = 600.0;
  /// 0 uses the hardware concurrency.
  unsigned workers = 0;

  unsigned effective_workers() const {
    if (workers) return workers;
    return std::max(1u, std::thread::hardware_concurrency());
  }
};

// ---------------------------------------------------------------------------
// Suites

namespace detail {

inline ReportBundle scaling_suite(const BenchOptions& opt) {
  const GridOverrides g = parse_grid(opt.grid);
  check_keys(g, {"d", "n", "seeds", "aux"});
  const auto ds = int_list(g, "d", {4, 16, 64});
  const auto ns = int_list(g, "n", {128, 512, 2048});
  const auto seeds = int_value(g, "seeds", 10, 1);
  const auto aux = int_value(g, "aux", 100, 0);

  struct Job {
    Index d, n;
    std::int64_t s;
  };
  std::vector<Job> jobs;
  for (Index d : ds) {
    for (Index n : ns) {
      for (std::int64_t s = 0; s < seeds; ++s) jobs.push_back({d, n, s});
    }
  }
  const CounterRng master(opt.seed);

  ReportBundle b;
  b.suite = to_string(Suite::kScalingSignedSeries);
  b.columns = suite_columns(Suite::kScalingSignedSeries);
  b.rows.resize(jobs.size());
  b.runtimes.resize(jobs.size());
  std::vector<double> walk_d(jobs.size(), 0.0), rand_d(jobs.size(), 0.0), greedy_d(jobs.size(), 0.0);
  std::vector<std::uint8_t> ok(jobs.size(), 0);

  const auto started = std::chrono::steady_clock::now();
  parallel_for(jobs.size(), opt.effective_workers(), [&](std::size_t j) {
    const Job& job = jobs[j];
    const auto t0 = std::chrono::steady_clock::now();
    const auto key = cell_key(job.d, job.n);
    const std::uint64_t inst_seed = master.bits(Stream::kBench, key, static_cast<std::uint64_t>(job.s) * 3);
    const std::uint64_t walk_seed = master.bits(Stream::kBench, key, static_cast<std::uint64_t>(job.s) * 3 + 1);
    const std::uint64_t rand_seed = master.bits(Stream::kBench, key, static_cast<std::uint64_t>(job.s) * 3 + 2);
    const Instance inst = generate_instance(InstanceKind::kSphere, job.d, job.n, inst_seed);
    const double rd = max_prefix_discrepancy(inst, random_signing(inst, rand_seed).as_vector()).value;
    const double gd = max_prefix_discrepancy(inst, greedy_signing(inst).as_vector()).value;
    rand_d[j] = rd;
    greedy_d[j] = gd;

    RunConfig cfg;
    cfg.seed = walk_seed;
    cfg.time_budget_s = opt.cell_time_budget_s;
    std::int64_t steps = 0, alive = job.n, halved = 0, drops = 0, verifs = 0, cert = 0, viol = 0;
    double wd = 0.0;
    std::string error;
    try {
      const RunResult r = run_signed_series(inst, cfg);
      const auto& c = r.trace.checks;
      steps = static_cast<std::int64_t>(r.trace.summary.steps);
      alive = r.state.alive_count();
      halved = static_cast<std::int64_t>(c.halved_steps);
      drops = static_cast<std::int64_t>(c.support_drops);
      verifs = static_cast<std::int64_t>(c.verifications + c.drop_certifications);
      cert = static_cast<std::int64_t>(c.cert_failures);
      viol = static_cast<std::int64_t>(violation_total(c));
      wd = r.trace.summary.max_prefix_discrepancy;
      ok[j] = 1;
    } catch (const MaxStepsExceeded& e) {
      const auto& r = e.partial();
      steps = static_cast<std::int64_t>(r.state.t);
      alive = r.state.alive_count();
      wd = r.trace.summary.max_prefix_discrepancy;
      error = e.what();
    } catch (const std::exception& e) {
      error = e.what();
    }
    walk_d[j] = wd;
    b.rows[j] = {std::string("d=" + std::to_string(job.d) + ",n=" + std::to_string(job.n)),
                 static_cast<std::int64_t>(job.d), static_cast<std::int64_t>(job.n), job.s,
                 std::to_string(inst_seed), std::to_string(walk_seed), steps, alive,
                 wd, normalized_prefix(wd, job.d, job.n), rd, normalized_prefix(rd, job.d, job.n), gd,
                 normalized_prefix(gd, job.d, job.n), halved, drops, verifs, cert, viol, error};
    b.runtimes[j] = elapsed_since(t0);
  });

  nlohmann::json cells = nlohmann::json::array();
  double k_min = std::numeric_limits<double>::infinity(), k_max = 0.0;
  bool all_le = true;
  std::size_t errors = 0;
  for (Index d : ds) {
    for (Index n : ns) {
      double sw = 0.0, sr = 0.0, sg = 0.0;
      std::size_t done = 0, runs = 0;
      for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (jobs[j].d != d || jobs[j].n != n) continue;
        ++runs;
        if (!ok[j]) {
          ++errors;
          continue;
        }
        ++done;
        sw += walk_d[j];
        sr += rand_d[j];
        sg += greedy_d[j];
      }
      nlohmann::json cell{{"d", d}, {"n", n}, {"runs", runs}, {"completed", done}};
      if (done) {
        const double mw = sw / static_cast<double>(done), mr = sr / static_cast<double>(done);
        const double fitted = normalized_prefix(mw, d, n);
        cell["mean_walk_disc"] = mw;
        cell["mean_random_disc"] = mr;
        cell["mean_greedy_disc"] = sg / static_cast<double>(done);
        cell["fitted_k"] = fitted;
        cell["walk_le_random"] = mw <= mr;
        all_le = all_le && mw <= mr;
        k_min = std::min(k_min, fitted);
        k_max = std::max(k_max, fitted);
      } else {
        all_le = false;
      }
      cells.push_back(std::move(cell));
    }
  }

  // Sanity floor: the walk never beats the exact optimum on small instances.
  std::int64_t aux_violations = 0;
  double aux_min_gap = std::numeric_limits<double>::infinity();
  for (std::int64_t a = 0; a < aux; ++a) {
    const Index n = 4 + a % 9;
    const Index d = 1 + a % 4;
    const std::uint64_t s = master.bits(Stream::kBench, 0xA0A0, static_cast<std::uint64_t>(a));
    const Instance inst = generate_instance(InstanceKind::kSphere, d, n, s);
    RunConfig cfg;
    cfg.seed = s ^ 0x5bd1e995u;
    const double walk = run_signed_series(inst, cfg).trace.summary.max_prefix_discrepancy;
    const double opt_value = brute_force_min_prefix(inst).value;
    aux_min_gap = std::min(aux_min_gap, walk - opt_value);
    if (walk < opt_value - 1e-9) ++aux_violations;
  }

  b.summary = {{"suite", b.suite},
               {"master_seed", opt.seed},
               {"cells", std::move(cells)},
               {"fitted_k_max_over_min", k_max > 0.0 && std::isfinite(k_min) ? k_max / k_min : 0.0},
               {"walk_le_random_all_cells", all_le},
               {"errors", errors},
               {"aux", {{"instances", aux}, {"violations", aux_violations},
                        {"min_gap", aux > 0 ? aux_min_gap : 0.0}}},
               {"total_runtime_s", elapsed_since(started)}};
  return b;
}

inline ReportBundle komlos_suite(const BenchOptions& opt) {
  const GridOverrides g = parse_grid(opt.grid);
  check_keys(g, {"n", "seeds"});
  const auto ns = int_list(g, "n", {256, 1024});
  const auto seeds = int_value(g, "seeds", 10, 1);
  struct Job {
    Index n;
    std::int64_t s;
  };
  std::vector<Job> jobs;
  for (Index n : ns) {
    for (std::int64_t s = 0; s < seeds; ++s) jobs.push_back({n, s});
  }
  const CounterRng master(opt.seed);

  ReportBundle b;
  b.suite = to_string(Suite::kKomlosCover);
  b.columns = suite_columns(Suite::kKomlosCover);
  b.rows.resize(jobs.size());
  b.runtimes.resize(jobs.size());
  std::vector<double> k2(jobs.size(), 0.0), mom(jobs.size(), 0.0);
  std::vector<std::uint8_t> ok(jobs.size(), 0), valid(jobs.size(), 0);

  const auto started = std::chrono::steady_clock::now();
  parallel_for(jobs.size(), opt.effective_workers(), [&](std::size_t j) {
    const Job& job = jobs[j];
    const auto t0 = std::chrono::steady_clock::now();
    const auto key = cell_key(job.n, 0xC0);
    const std::uint64_t inst_seed = master.bits(Stream::kBench, key, static_cast<std::uint64_t>(job.s) * 3);
    const std::uint64_t walk_seed = master.bits(Stream::kBench, key, static_cast<std::uint64_t>(job.s) * 3 + 1);
    const std::uint64_t rand_seed = master.bits(Stream::kBench, key, static_cast<std::uint64_t>(job.s) * 3 + 2);
    const Instance m = generate_instance(InstanceKind::kSphere, job.n, job.n, inst_seed);
    const RowCover cover = disjoint_cover(job.n, minimum_cover_width(job.n));
    std::string error;
    std::int64_t cover_ok = 0;
    try {
      validate_cover(cover, m.d(), m.n());
      cover_ok = 1;
    } catch (const Error& e) {
      error = e.what();
    }
    valid[j] = static_cast<std::uint8_t>(cover_ok);

    double rand_ratio = 0.0;
    for (const auto& s : local_mean_sq_discrepancy(m, random_signing(m, rand_seed).as_vector(), cover.sets)) {
      rand_ratio = std::max(rand_ratio, s.ratio);
    }

    RunConfig cfg;
    cfg.seed = walk_seed;
    cfg.time_budget_s = opt.cell_time_budget_s;
    std::int64_t steps = 0, alive = job.n, drops = 0, cert = 0, viol = 0;
    double max_ratio = 0.0, med = 0.0, max_sum = 0.0, max_row = 0.0;
    if (cover_ok) {
      try {
        const KomlosResult r = run_komlos(m, cover, cfg);
        const auto& c = r.trace.checks;
        steps = static_cast<std::int64_t>(r.trace.summary.steps);
        alive = r.state.alive_count();
        drops = static_cast<std::int64_t>(c.support_drops);
        cert = static_cast<std::int64_t>(c.cert_failures);
        viol = static_cast<std::int64_t>(violation_total(c));
        std::vector<double> ratios;
        for (const auto& s : r.per_set) {
          ratios.push_back(s.ratio);
          max_sum = std::max(max_sum, s.sum);
        }
        max_ratio = r.max_ratio();
        med = median(ratios);
        max_row = (m.matrix() * r.coloring.as_vector()).cwiseAbs2().maxCoeff();
        ok[j] = 1;
      } catch (const std::exception& e) {
        error = e.what();
      }
    }
    k2[j] = max_ratio;
    mom[j] = med > 0.0 ? max_ratio / med : 0.0;
    b.rows[j] = {std::string("n=" + std::to_string(job.n)), static_cast<std::int64_t>(job.n), job.s,
                 std::to_string(inst_seed), std::to_string(walk_seed), steps, alive,
                 static_cast<std::int64_t>(cover.sets.size()), static_cast<std::int64_t>(cover.width()), cover_ok,
                 max_ratio, med, mom[j], max_sum, max_row, rand_ratio, drops, cert, viol, error};
    b.runtimes[j] = elapsed_since(t0);
  });

  nlohmann::json cells = nlohmann::json::array();
  double k_min = std::numeric_limits<double>::infinity(), k_max = 0.0, worst_mom = 0.0;
  std::size_t errors = 0;
  bool all_valid = true;
  for (Index n : ns) {
    double sum = 0.0;
    std::size_t done = 0, runs = 0;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (jobs[j].n != n) continue;
      ++runs;
      all_valid = all_valid && valid[j];
      if (!ok[j]) {
        ++errors;
        continue;
      }
      ++done;
      sum += k2[j];
      worst_mom = std::max(worst_mom, mom[j]);
    }
    nlohmann::json cell{{"n", n}, {"runs", runs}, {"completed", done}};
    if (done) {
      const double fitted = sum / static_cast<double>(done);
      cell["fitted_k2"] = fitted;
      k_min = std::min(k_min, fitted);
      k_max = std::max(k_max, fitted);
    }
    cells.push_back(std::move(cell));
  }
  b.summary = {{"suite", b.suite},
               {"master_seed", opt.seed},
               {"cells", std::move(cells)},
               {"k2_max_over_min", k_max > 0.0 && std::isfinite(k_min) ? k_max / k_min : 0.0},
               {"max_over_median_worst", worst_mom},
               {"all_covers_valid", all_valid},
               {"errors", errors},
               {"total_runtime_s", elapsed_since(started)}};
  return b;
}

inline ReportBundle conc_suite(const BenchOptions& opt) {
  const GridOverrides g = parse_grid(opt.grid);
  check_keys(g, {"trials"});
  const auto trials = static_cast<std::uint64_t>(int_value(g, "trials", 100000, 10000));
  struct Job {
    TailBound which;
    std::string scenario;
  };
  std::vector<Job> jobs;
  for (TailBound w : {TailBound::kFreedman, TailBound::kModifiedFreedman, TailBound::kHansonWright}) {
    for (const auto& s : tail_scenarios(w)) jobs.push_back({w, s});
  }
  std::vector<ValidationReport> reports(jobs.size());
  std::vector<double> times(jobs.size());
  const auto started = std::chrono::steady_clock::now();
  parallel_for(jobs.size(), opt.effective_workers(), [&](std::size_t j) {
    const auto t0 = std::chrono::steady_clock::now();
    reports[j] = mc_tail_validate(jobs[j].which, jobs[j].scenario, trials, opt.seed);
    times[j] = elapsed_since(t0);
  });

  ReportBundle b;
  b.suite = to_string(Suite::kConcSuite);
  b.columns = suite_columns(Suite::kConcSuite);
  nlohmann::json scenarios = nlohmann::json::array();
  bool all_pass = true;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const auto& r = reports[j];
    for (const auto& p : r.points) {
      b.rows.push_back({std::string(to_string(r.which)), r.scenario, p.a, p.b, p.empirical, p.bound, p.slack,
                        static_cast<std::int64_t>(p.pass)});
      b.runtimes.push_back(times[j] / static_cast<double>(r.points.size()));
    }
    all_pass = all_pass && r.passed;
    scenarios.push_back({{"which", to_string(r.which)},
                         {"scenario", r.scenario},
                         {"passed", r.passed},
                         {"steps", r.steps},
                         {"constants",
                          {{"C", r.constants.c_big},
                           {"C_default", r.constants.c_big_default},
                           {"c", r.constants.c},
                           {"c_tilde", r.constants.c_tilde},
                           {"c_prime", r.constants.c_prime}}}});
  }
  b.summary = {{"suite", b.suite},      {"master_seed", opt.seed},
               {"trials", trials},     {"scenarios", std::move(scenarios)},
               {"all_pass", all_pass}, {"total_runtime_s", elapsed_since(started)}};
  return b;
}

/// Partial walk state: a random fraction of coordinates frozen at +-1, the
/// rest alive in (-0.95, 0.95); at least one coordinate stays alive.
inline WalkState random_partial_state(Index n, std::uint64_t seed) {
  const CounterRng rng(seed);
  WalkState st(n, seed);
  const double frozen_fraction = 0.75 * rng.uniform(Stream::kBench, 0xF0, 0);
  for (Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::uint64_t>(i);
    if (i > 0 && rng.uniform(Stream::kBench, 0xF1, ui) < frozen_fraction) {
      st.x(i) = rng.rademacher(Stream::kBench, 0xF2, ui);
      st.status[static_cast<std::size_t>(i)] = VarStatus::kFrozen;
    } else {
      st.x(i) = 0.95 * (2.0 * rng.uniform(Stream::kBench, 0xF3, ui) - 1.0);
    }
  }
  return st;
}

inline ReportBundle uvc_suite(const BenchOptions& opt) {
  const GridOverrides g = parse_grid(opt.grid);
  check_keys(g, {"systems", "d", "n"});
  const auto systems = int_value(g, "systems", 200, 1);
  const auto ds = int_list(g, "d", {4, 16, 64});
  const auto ns = int_list(g, "n", {64, 256, 1024});
  const CounterRng master(opt.seed);

  ReportBundle b;
  b.suite = to_string(Suite::kUvcCert);
  b.columns = suite_columns(Suite::kUvcCert);
  const auto count = static_cast<std::size_t>(systems);
  b.rows.resize(count);
  b.runtimes.resize(count);
  std::vector<std::uint8_t> passed(count, 0), fallback(count, 0);
  std::vector<double> kernel(count, 0.0), margin(count, 0.0);

  const auto started = std::chrono::steady_clock::now();
  parallel_for(count, opt.effective_workers(), [&](std::size_t s) {
    const auto t0 = std::chrono::steady_clock::now();
    const Index d = ds[s % ds.size()];
    const Index n = ns[(s / ds.size()) % ns.size()];
    const std::uint64_t inst_seed = master.bits(Stream::kBench, 0xCE27, s * 2);
    const std::uint64_t state_seed = master.bits(Stream::kBench, 0xCE27, s * 2 + 1);
    const Instance inst = generate_instance(InstanceKind::kSphere, d, n, inst_seed);
    const WalkState st = random_partial_state(n, state_seed);
    RunConfig cfg;
    std::int64_t k = 0, total = 0, rows = 0, singular = 0, ortho = 0, drops = 0;
    std::string method, error;
    CertReport rep;
    try {
      std::vector<Index> active = compute_active_set(st, inst, cfg);
      k = static_cast<std::int64_t>(active.size());
      const ConstraintSet set = build_signed_series_constraints(inst, st, std::move(active), cfg);
      const FamilyCounts fc = set.counts();
      total = static_cast<std::int64_t>(set.size());
      rows = static_cast<std::int64_t>(fc.row);
      singular = static_cast<std::int64_t>(fc.singular);
      ortho = static_cast<std::int64_t>(fc.ortho);
      const VectorColoring u = construct_uvc_unverified(set, cfg);
      drops = static_cast<std::int64_t>(u.drops().size());
      method = u.exact_margin() ? "certified" : "projection";
      fallback[s] = u.exact_margin().has_value();
      rep = verify_uvc(u, set, cfg);
      passed[s] = rep.passed;
      kernel[s] = rep.kernel_residual;
      margin[s] = rep.spectral_margin;
    } catch (const std::exception& e) {
      error = e.what();
    }
    b.rows[s] = {static_cast<std::int64_t>(s), static_cast<std::int64_t>(d), static_cast<std::int64_t>(n), k, total,
                 rows, singular, ortho, drops, method, rep.kernel_residual, rep.spectral_margin, rep.max_row_norm,
                 rep.mass, rep.mass_floor, rep.operator_norm_sq, static_cast<std::int64_t>(rep.passed), error};
    b.runtimes[s] = elapsed_since(t0);
  });

  std::size_t n_pass = 0, n_fallback = 0;
  double max_kernel = 0.0, min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < count; ++s) {
    n_pass += passed[s];
    n_fallback += fallback[s];
    max_kernel = std::max(max_kernel, kernel[s]);
    min_margin = std::min(min_margin, margin[s]);
  }
  b.summary = {{"suite", b.suite},
               {"master_seed", opt.seed},
               {"systems", count},
               {"passed", n_pass},
               {"pass_rate", static_cast<double>(n_pass) / static_cast<double>(count)},
               {"certified_fallbacks", n_fallback},
               {"max_kernel_residual", max_kernel},
               {"min_spectral_margin", min_margin},
               {"total_runtime_s", elapsed_since(started)}};
  return b;
}

}  // namespace detail

/// Run a suite and write its reports into out_dir (created if missing).
inline ReportBundle run_benchmark(Suite suite, const BenchOptions& options, const std::string& out_dir) {
  ReportBundle b;
  switch (suite) {
    case Suite::kScalingSignedSeries: b = detail::scaling_suite(options); break;
    case Suite::kKomlosCover: b = detail::komlos_suite(options); break;
    case Suite::kConcSuite: b = detail::conc_suite(options); break;
    case Suite::kUvcCert: b = detail::uvc_suite(options); break;
  }
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create '" + out_dir + "': " + ec.message());
    const std::string stem = out_dir + "/" + b.suite;
    emit_report(b, ReportFormat::kCsv, stem + ".csv");
    emit_report(b, ReportFormat::kJson, stem + ".json");
    detail::write_file(stem + "_timing.csv", timing_csv(b));
  }
  return b;
}

}  // namespace l2disc
