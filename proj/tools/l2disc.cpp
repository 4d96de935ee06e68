// Command-line front end: run, verify, komlos, conc-validate, baseline, bench, generate.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "l2disc/l2disc.hpp"

namespace {

using namespace l2disc;

struct WalkFlags {
  std::string input;
  std::string format = "text";
  RunConfig config;
  std::string uvc_method = "projection";
  std::string monitor;
  double time_budget = 0.0;
};

void add_walk_flags(CLI::App* cmd, WalkFlags& f) {
  cmd->add_option("--input", f.input, "matrix file")->required();
  cmd->add_option("--format", f.format, "text or binary")->check(CLI::IsMember({"text", "binary"}));
  cmd->add_option("--gamma", f.config.gamma, "step scale");
  cmd->add_option("--beta", f.config.beta);
  cmd->add_option("--delta", f.config.delta);
  cmd->add_option("--delta-prime", f.config.delta_prime);
  cmd->add_option("--alpha1", f.config.alpha1);
  cmd->add_option("--alpha2", f.config.alpha2);
  cmd->add_option("--seed", f.config.seed);
  cmd->add_option("--max-steps", f.config.max_steps, "0 = 10 * ceil(n / gamma^2)");
  cmd->add_option("--uvc-method", f.uvc_method)->check(CLI::IsMember({"projection", "certified_feasibility"}));
  cmd->add_option("--verify-every", f.config.verify_every);
  cmd->add_option("--monitor-prefixes", f.monitor, "comma-separated prefix lengths");
  cmd->add_option("--record-every", f.config.record_every, "trace cadence (1 = every step)");
  cmd->add_flag("--record-unorms", f.config.record_unorms, "keep gamma and ||U_t||_F^2 per step");
  cmd->add_option("--time-budget", f.config.time_budget_s, "seconds, 0 = unlimited");
}

std::vector<Index> parse_index_list(const std::string& s) {
  std::vector<Index> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(static_cast<Index>(v));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "bad index '" + item + "'");
    }
  }
  return out;
}

RunConfig finish_config(WalkFlags& f) {
  RunConfig c = f.config;
  c.uvc_method = parse_uvc_method(f.uvc_method);
  c.monitored_prefixes = parse_index_list(f.monitor);
  c.validate();
  return c;
}

void write_json(const nlohmann::json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path, std::ios::out | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path + "' failed");
}

Vector read_state(const std::string& path, Index n) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::vector<double> values;
  std::string token;
  while (in >> token) values.push_back(l2disc::detail::parse_double(token));
  if (static_cast<Index>(values.size()) != n) {
    throw Error(ErrorCode::kParse, "state has " + std::to_string(values.size()) + " entries, expected " +
                                       std::to_string(n));
  }
  Vector x(n);
  for (Index i = 0; i < n; ++i) {
    x(i) = values[static_cast<std::size_t>(i)];
    if (!(std::abs(x(i)) <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "state entries must lie in [-1, 1]");
  }
  return x;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"l2-discrepancy random walks, baselines and benchmarks"};
  app.require_subcommand(1);

  // run
  WalkFlags run_flags;
  std::string run_diag, run_summary, run_out;
  auto* run = app.add_subcommand("run", "signed-series walk on a matrix");
  add_walk_flags(run, run_flags);
  run->add_option("--diag", run_diag, "diagnostics CSV");
  run->add_option("--summary", run_summary, "summary JSON (- for stdout)");
  run->add_option("--out", run_out, "coloring file");

  // verify
  std::string ver_input, ver_format = "text", ver_constraints, ver_uvc, ver_state, ver_dump, ver_method = "projection";
  auto* verify = app.add_subcommand("verify", "certify a vector coloring for a constraint system");
  verify->add_option("--input", ver_input, "instance matrix (needed unless --constraints is given)");
  verify->add_option("--format", ver_format)->check(CLI::IsMember({"text", "binary"}));
  verify->add_option("--constraints", ver_constraints, "constraint file");
  verify->add_option("--state", ver_state, "fractional coloring x (n values) for building constraints");
  verify->add_option("--uvc", ver_uvc, "n x n matrix U to check instead of constructing one");
  verify->add_option("--uvc-method", ver_method)->check(CLI::IsMember({"projection", "certified_feasibility"}));
  verify->add_option("--dump-constraints", ver_dump, "write the constraint system used");

  // komlos
  WalkFlags kom_flags;
  std::string kom_cover, kom_summary, kom_out;
  auto* komlos = app.add_subcommand("komlos", "walk for local mean squared discrepancy over a row cover");
  add_walk_flags(komlos, kom_flags);
  komlos->add_option("--cover", kom_cover, "row cover file (default: disjoint blocks of ceil(ln n) rows)");
  komlos->add_option("--heavy-threshold", kom_flags.config.heavy_row_threshold, "row-mass threshold");
  komlos->add_option("--summary", kom_summary, "summary JSON (- for stdout)");
  komlos->add_option("--out", kom_out, "coloring file");

  // conc-validate
  std::string conc_which, conc_scenario, conc_out;
  std::uint64_t conc_trials = 100000, conc_seed = 1;
  auto* conc = app.add_subcommand("conc-validate", "Monte-Carlo check of a martingale tail bound");
  conc->add_option("--which", conc_which)->required()->check(CLI::IsMember({"freedman", "mfreedman", "hw"}));
  conc->add_option("--scenario", conc_scenario, "default: all scenarios of the bound");
  conc->add_option("--trials", conc_trials);
  conc->add_option("--seed", conc_seed);
  conc->add_option("--out", conc_out, "report JSON (- for stdout)");

  // baseline
  std::string base_input, base_format = "text", base_method, base_out;
  std::uint64_t base_seed = 0;
  auto* baseline = app.add_subcommand("baseline", "reference signers");
  baseline->add_option("--input", base_input)->required();
  baseline->add_option("--format", base_format)->check(CLI::IsMember({"text", "binary"}));
  baseline->add_option("--method", base_method)->required()->check(CLI::IsMember({"random", "greedy", "brute"}));
  baseline->add_option("--seed", base_seed);
  baseline->add_option("--out", base_out, "coloring file");

  // bench
  std::string bench_suite, bench_out;
  BenchOptions bench_opts;
  auto* bench = app.add_subcommand("bench", "experiment suites");
  bench->add_option("--suite", bench_suite)
      ->required()
      ->check(CLI::IsMember({"scaling_signed_series", "komlos_cover", "conc_suite", "uvc_cert"}));
  bench->add_option("--out", bench_out)->required();
  bench->add_option("--seed", bench_opts.seed);
  bench->add_option("--grid", bench_opts.grid, "overrides, e.g. \"d=4,16;n=128;seeds=2\"");
  bench->add_option("--workers", bench_opts.workers, "0 = hardware concurrency");
  bench->add_option("--cell-budget", bench_opts.cell_time_budget_s, "seconds per run, 0 = unlimited");

  // generate
  std::string gen_kind = "sphere", gen_out, gen_format = "text";
  Index gen_d = 0, gen_n = 0;
  std::uint64_t gen_seed = 0;
  auto* generate = app.add_subcommand("generate", "write a random instance");
  generate->add_option("--kind", gen_kind)
      ->check(CLI::IsMember({"sphere", "basis", "gaussian_normalized", "zero_sum_sphere"}));
  generate->add_option("-d,--dim", gen_d)->required();
  generate->add_option("-n,--count", gen_n)->required();
  generate->add_option("--seed", gen_seed);
  generate->add_option("--out", gen_out)->required();
  generate->add_option("--format", gen_format)->check(CLI::IsMember({"text", "binary"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const RunConfig cfg = finish_config(run_flags);
      const Instance inst = load_matrix(run_flags.input, parse_matrix_format(run_flags.format));
      RunResult r;
      int code = 0;
      try {
        r = run_signed_series(inst, cfg);
      } catch (const MaxStepsExceeded& e) {
        std::cerr << "warning: " << e.what() << '\n';
        r = e.partial();
        code = 3;
      }
      if (!run_diag.empty()) write_diagnostics_csv(r.trace, run_diag);
      if (!run_out.empty()) save_coloring(r.coloring, run_out);
      if (!run_summary.empty() || run_out.empty()) {
        write_json(summary_json(r.trace, r.state, r.coloring, cfg), run_summary);
      }
      return code;
    }

    if (*verify) {
      RunConfig cfg;
      cfg.uvc_method = parse_uvc_method(ver_method);
      ConstraintSet set;
      if (!ver_constraints.empty()) {
        std::ifstream in(ver_constraints);
        if (!in) throw Error(ErrorCode::kIo, "cannot open '" + ver_constraints + "'");
        set = parse_constraints(in);
      } else {
        if (ver_input.empty()) throw Error(ErrorCode::kInvalidArgument, "verify needs --constraints or --input");
        const Instance inst = load_matrix(ver_input, parse_matrix_format(ver_format));
        WalkState st(inst.n(), 0);
        if (!ver_state.empty()) {
          st.x = read_state(ver_state, inst.n());
          for (Index i = 0; i < inst.n(); ++i) {
            if (std::abs(st.x(i)) >= st.freeze_threshold()) st.status[static_cast<std::size_t>(i)] = VarStatus::kFrozen;
          }
        }
        set = build_signed_series_constraints(inst, st, compute_active_set(st, inst, cfg), cfg);
      }
      if (!ver_dump.empty()) {
        std::ofstream out(ver_dump);
        if (!out) throw Error(ErrorCode::kIo, "cannot write '" + ver_dump + "'");
        out << format_constraints(set);
      }
      VectorColoring u;
      if (!ver_uvc.empty()) {
        const Matrix full = load_raw_matrix(ver_uvc, MatrixFormat::kText);
        if (full.rows() != set.n() || full.cols() != set.n()) {
          throw Error(ErrorCode::kInvalidArgument, "U must be n x n");
        }
        Matrix local(set.k(), set.k());
        for (Index a = 0; a < set.k(); ++a) {
          for (Index b = 0; b < set.k(); ++b) {
            local(a, b) = full(set.active()[static_cast<std::size_t>(a)], set.active()[static_cast<std::size_t>(b)]);
          }
        }
        u = VectorColoring::dense(set.active(), set.n(), std::move(local));
      } else {
        u = construct_uvc_unverified(set, cfg);
      }
      const CertReport rep = verify_uvc(u, set, cfg);
      nlohmann::json j = cert_json(rep);
      j["k"] = set.k();
      j["constraints"] = set.size();
      j["drops"] = u.drops().size();
      std::cout << j.dump(2) << '\n';
      return rep.passed ? 0 : 4;
    }

    if (*komlos) {
      const RunConfig cfg = finish_config(kom_flags);
      const Instance m = load_matrix(kom_flags.input, parse_matrix_format(kom_flags.format));
      const RowCover cover = kom_cover.empty() ? disjoint_cover(m.d(), minimum_cover_width(m.n())) : load_cover(kom_cover);
      const KomlosResult r = run_komlos(m, cover, cfg);
      if (!kom_out.empty()) save_coloring(r.coloring, kom_out);
      nlohmann::json j = summary_json(r.trace, r.state, r.coloring, cfg);
      nlohmann::json sets = nlohmann::json::array();
      for (const auto& s : r.per_set) sets.push_back({{"rows", s.rows}, {"sum", s.sum}, {"ratio", s.ratio}});
      j["per_set"] = std::move(sets);
      j["max_ratio"] = r.max_ratio();
      if (!kom_summary.empty() || kom_out.empty()) write_json(j, kom_summary);
      return 0;
    }

    if (*conc) {
      const TailBound which = parse_tail_bound(conc_which);
      const std::vector<std::string> scenarios =
          conc_scenario.empty() ? tail_scenarios(which) : std::vector<std::string>{conc_scenario};
      nlohmann::json reports = nlohmann::json::array();
      bool all = true;
      for (const auto& s : scenarios) {
        const ValidationReport r = mc_tail_validate(which, s, conc_trials, conc_seed);
        nlohmann::json points = nlohmann::json::array();
        for (const auto& p : r.points) {
          points.push_back({{"a", p.a}, {"b", p.b}, {"empirical", p.empirical}, {"bound", p.bound},
                            {"slack", p.slack}, {"pass", p.pass}});
        }
        reports.push_back({{"which", to_string(r.which)},
                           {"scenario", r.scenario},
                           {"trials", r.trials},
                           {"seed", r.seed},
                           {"steps", r.steps},
                           {"constants",
                            {{"C", r.constants.c_big},
                             {"C_default", r.constants.c_big_default},
                             {"c", r.constants.c},
                             {"c_tilde", r.constants.c_tilde},
                             {"c_prime", r.constants.c_prime}}},
                           {"points", std::move(points)},
                           {"passed", r.passed}});
        all = all && r.passed;
      }
      write_json({{"reports", std::move(reports)}, {"passed", all}}, conc_out);
      return all ? 0 : 4;
    }

    if (*baseline) {
      const Instance inst = load_matrix(base_input, parse_matrix_format(base_format));
      Coloring c;
      if (base_method == "random") {
        c = random_signing(inst, base_seed);
      } else if (base_method == "greedy") {
        c = greedy_signing(inst);
      } else {
        c = brute_force_min_prefix(inst).coloring;
      }
      if (!base_out.empty()) save_coloring(c, base_out);
      const auto disc = max_prefix_discrepancy(inst, c.as_vector());
      std::cout << nlohmann::json{{"method", base_method},
                                  {"max_prefix_discrepancy", disc.value},
                                  {"argmax_prefix", disc.argmax}}
                       .dump(2)
                << '\n';
      return 0;
    }

    if (*bench) {
      const ReportBundle b = run_benchmark(parse_suite(bench_suite), bench_opts, bench_out);
      std::cout << b.summary.dump(2) << '\n';
      return 0;
    }

    if (*generate) {
      const Instance inst = generate_instance(parse_instance_kind(gen_kind), gen_d, gen_n, gen_seed);
      save_matrix(inst, gen_out, parse_matrix_format(gen_format));
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
