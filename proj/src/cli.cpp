#include "cpvar/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cpvar/csv.hpp"
#include "cpvar/error.hpp"
#include "cpvar/estimators.hpp"
#include "cpvar/pseudo.hpp"
#include "cpvar/sim.hpp"

namespace cpvar::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using csv::format;

std::size_t as_count(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw FormatError("config key '" + key + "' must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

double as_real(const json& v, const std::string& key) {
  if (!v.is_number()) {
    throw FormatError("config key '" + key + "' must be a number");
  }
  return v.get<double>();
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) {
    throw FormatError(what + " file not found: " + path);
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw FormatError("cannot create output directory " + dir.string());
  }
}

// Output file next to an existing directory; the directory must exist.
void require_parent(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw FormatError("output directory does not exist: " + parent.string());
  }
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> g;
  for (const auto& field : csv::split(text)) {
    g.push_back(csv::parse_double(field, "--grid"));
  }
  return g;
}

// Error messages must fit on one line.
std::string one_line(std::string s) {
  for (char& ch : s) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

std::string side_label(const PartitionPoint& pt) {
  return format(pt.time) + (pt.side == Side::left_limit ? "-" : "");
}

// ---- verbs ----

struct EstimateArgs {
  std::string design;
  std::string subjects;
  std::string events;
  double horizon = 0.0;
  std::string grid;
  std::string out;
  std::optional<double> pseudo_t;
  std::string pseudo_out;
  std::string influence_out;
};

void run_estimate(const EstimateArgs& a, std::ostream& out) {
  const DesignKind design = parse_design(a.design);
  require_file(a.subjects, "subjects");
  require_file(a.events, "events");
  require_parent(a.out);
  if (a.pseudo_t && a.pseudo_out.empty()) {
    throw InvalidArgument("--pseudo needs --pseudo-out");
  }
  if (!a.pseudo_out.empty()) {
    if (!a.pseudo_t) throw InvalidArgument("--pseudo-out needs --pseudo");
    require_parent(a.pseudo_out);
  }
  if (!a.influence_out.empty()) require_parent(a.influence_out);
  const auto grid = a.grid.empty() ? std::vector<double>{} : parse_grid(a.grid);

  const Sample sample = read_sample(a.subjects, a.events, design);
  const EstimateCurve c = estimate(sample, design, a.horizon, grid);
  {
    auto f = open_output(a.out);
    f << "s,mu_hat,k_hat,var_hat,se_hat\n";
    for (std::size_t g = 0; g < c.grid.size(); ++g) {
      f << format(c.grid[g]) << ',' << format(c.mu_at_grid[g]) << ','
        << format(c.k_at_grid[g]) << ',' << format(c.variance[g]) << ','
        << format(c.se(g)) << '\n';
    }
  }
  if (!a.influence_out.empty()) {
    auto f = open_output(a.influence_out);
    f << "id,s,influence\n";
    for (std::size_t i = 0; i < c.n; ++i) {
      for (std::size_t g = 0; g < c.grid.size(); ++g) {
        f << sample[i].id << ',' << format(c.grid[g]) << ','
          << format(c.influence_at(i, g)) << '\n';
      }
    }
  }
  out << "design " << design_name(design) << ", n = " << c.n
      << ", horizon = " << format(c.horizon) << '\n';
  const std::size_t last = c.grid.size() - 1;
  out << "mu_hat(" << format(c.grid[last]) << ") = " << format(c.mu_at_grid[last])
      << "  se = " << format(c.se(last)) << '\n';
  out << "wrote " << c.grid.size() << " grid rows to " << a.out << '\n';

  if (a.pseudo_t) {
    const auto ps = pseudo_values(sample, *a.pseudo_t, design);
    auto f = open_output(a.pseudo_out);
    f << "id,z,pseudo\n";
    double sum = 0.0;
    for (std::size_t i = 0; i < ps.values.size(); ++i) {
      f << ps.ids[i] << ',' << (ps.z[i] ? format(*ps.z[i]) : std::string())
        << ',' << format(ps.values[i]) << '\n';
      sum += ps.values[i];
    }
    out << "pseudo-values at t = " << format(ps.t)
        << ": mean = " << format(sum / static_cast<double>(ps.values.size()))
        << ", mu_hat(t) = " << format(ps.full_estimate) << '\n';
  }
}

void run_pvar(const std::string& input, double p, bool oracle, std::ostream& out) {
  require_file(input, "step");
  auto in = open_input(input);
  const StepFunction f = read_step(in);
  const PVarResult r = pvar(f, p);
  out << "p = " << format(r.p) << '\n'
      << "v_p = " << format(r.v_p) << '\n'
      << "seminorm = " << format(r.seminorm_p) << '\n'
      << "sup = " << format(r.sup_norm) << '\n'
      << "norm = " << format(r.norm_p) << '\n'
      << "partition =";
  for (const auto& pt : r.partition) out << ' ' << side_label(pt);
  out << '\n';
  if (oracle) {
    const PVarResult b = pvar_bruteforce(f, p);
    const bool agree = std::fabs(b.v_p - r.v_p) <=
                       1e-12 * std::max({1.0, std::fabs(b.v_p), std::fabs(r.v_p)});
    out << "oracle v_p = " << format(b.v_p) << " ("
        << (agree ? "agrees" : "DISAGREES") << ")\n";
    if (!agree) throw StudyError("dynamic programme and brute force disagree");
  }
}

void write_latent(const Generated& g, const fs::path& dir) {
  auto lat = open_output(dir / "latent.csv");
  auto ev = open_output(dir / "latent_events.csv");
  lat << "id,z,terminal_time,censor_time\n";
  ev << "id,time\n";
  for (std::size_t i = 0; i < g.latent.size(); ++i) {
    const auto& x = g.latent[i];
    const auto id = g.sample[i].id;
    lat << id << ',' << (x.z ? csv::format_exact(*x.z) : std::string()) << ','
        << csv::format_exact(x.terminal) << ',' << csv::format_exact(x.censor)
        << '\n';
    for (double t : x.events) ev << id << ',' << csv::format_exact(t) << '\n';
  }
}

void run_simulate(const Config& cfg, const fs::path& dir, std::ostream& out) {
  ensure_dir(dir);
  const Generated g = generate({cfg.truth, cfg.n, cfg.seed, cfg.design});
  {
    auto s = open_output(dir / "subjects.csv");
    auto e = open_output(dir / "events.csv");
    write_sample(g.sample, s, e);
  }
  write_latent(g, dir);
  std::size_t events = 0;
  std::size_t terminal = 0;
  for (const auto& s : g.sample.subjects()) {
    events += s.path.total();
    if (const auto* c = std::get_if<CensoredCensoring>(&s.design)) {
      terminal += c->d_tilde ? 0 : 1;
    }
  }
  out << "simulated " << cfg.n << " subjects (design " << design_name(cfg.design)
      << ", seed " << cfg.seed << "): " << events << " observed events";
  if (cfg.design == DesignKind::censored) out << ", " << terminal << " terminal";
  out << "\nwrote subjects.csv, events.csv, latent.csv, latent_events.csv to "
      << dir.string() << '\n';
}

void write_rate_report(const ConvergenceReport& r, const std::string& stat,
                       const fs::path& file, std::ostream& out) {
  auto f = open_output(file);
  f << "n,mean_" << stat << ",se_" << stat << '\n';
  for (std::size_t k = 0; k < r.n_list.size(); ++k) {
    f << r.n_list[k] << ',' << format(r.mean_stat[k]) << ','
      << format(r.se_stat[k]) << '\n';
  }
  out << "p = " << format(r.p) << ", B = " << r.replications << '\n';
  for (std::size_t k = 0; k < r.n_list.size(); ++k) {
    out << "  n = " << r.n_list[k] << "  mean " << stat << " = "
        << format(r.mean_stat[k]) << "  (se " << format(r.se_stat[k]) << ")\n";
  }
  out << "fitted slope = " << format(r.fitted_slope)
      << ", theoretical slope = " << format(r.theoretical_slope) << '\n';
}

void write_design_summary(std::ostream& f, const DesignSummary& d) {
  f << design_name(d.design) << ',' << d.succeeded << ',' << d.failed << ','
    << format(d.coverage) << ',' << format(d.mean_plugin_variance) << ','
    << format(d.empirical_variance) << ',' << format(d.variance_ratio) << ','
    << format(d.oracle_variance) << '\n';
}

void print_design_summary(std::ostream& out, const DesignSummary& d) {
  out << "design " << design_name(d.design) << ": " << d.succeeded
      << " replications (" << d.failed << " failed)\n"
      << "  coverage = " << format(d.coverage) << '\n'
      << "  mean plug-in variance = " << format(d.mean_plugin_variance) << '\n'
      << "  empirical variance = " << format(d.empirical_variance) << '\n'
      << "  ratio = " << format(d.variance_ratio) << '\n'
      << "  oracle variance = " << format(d.oracle_variance) << '\n';
}

void run_coverage(const Config& cfg, const fs::path& dir, unsigned threads,
                  std::ostream& out) {
  const std::size_t B = cfg.replications.value_or(2000);
  const auto r = coverage_and_variance_study(cfg.truth, cfg.design, cfg.t, cfg.n,
                                             B, cfg.seed, threads);
  {
    auto f = open_output(dir / "coverage.csv");
    f << "replication,design,mu_hat,var_hat,se_hat,covered\n";
    const double z975 = 1.959963984540054;
    auto rows = [&](const DesignSummary& d) {
      for (std::size_t b = 0; b < d.estimate.size(); ++b) {
        const double se = std::sqrt(d.plugin_variance[b] / static_cast<double>(cfg.n));
        const bool covered = std::fabs(d.estimate[b] - r.true_mean) <= z975 * se;
        f << b << ',' << design_name(d.design) << ',' << format(d.estimate[b])
          << ',' << format(d.plugin_variance[b]) << ',' << format(se) << ','
          << (std::isnan(d.estimate[b]) ? "" : (covered ? "1" : "0")) << '\n';
      }
    };
    rows(r.primary);
    if (r.companion) rows(*r.companion);
  }
  {
    auto f = open_output(dir / "coverage_summary.csv");
    f << "design,succeeded,failed,coverage,mean_plugin_variance,"
         "empirical_variance,variance_ratio,oracle_variance\n";
    write_design_summary(f, r.primary);
    if (r.companion) write_design_summary(f, *r.companion);
  }
  out << "t = " << format(r.t) << ", n = " << r.n << ", B = " << r.replications
      << ", mu(t) = " << format(r.true_mean) << '\n';
  print_design_summary(out, r.primary);
  if (r.companion) {
    print_design_summary(out, *r.companion);
    out << "observed minus censored design:\n"
        << "  oracle variance gap = " << format(r.oracle_gap) << '\n'
        << "  mean plug-in gap = " << format(r.plugin_gap_mean) << " (se "
        << format(r.plugin_gap_se) << ")\n"
        << "  empirical variance gap = " << format(r.empirical_gap) << " (se "
        << format(r.empirical_gap_se) << ")\n";
  }
}

void run_asbound(const Config& cfg, const fs::path& dir, std::ostream& out) {
  const auto r = as_bound_study(cfg.truth, cfg.p, cfg.n_max, cfg.seed,
                                cfg.window_start);
  auto f = open_output(dir / "asbound.csv");
  f << "n,r\n";
  for (std::size_t n = 1; n <= r.r.size(); ++n) {
    f << n << ',' << format(r.r[n - 1]) << '\n';
  }
  out << "p = " << format(r.p) << ", n = 1.." << r.n_max << '\n'
      << "max r_n over [" << r.window_start << ", " << r.n_max
      << "] = " << format(r.max_in_window) << " at n = " << r.argmax << '\n'
      << "last new running max at n = " << r.last_new_max << '\n'
      << "stabilized = " << (r.stabilized ? "yes" : "no") << '\n';
}

void run_study(const std::string& kind, const Config& cfg, const fs::path& dir,
               unsigned threads, std::ostream& out) {
  ensure_dir(dir);
  if (kind == "convergence") {
    const auto r = convergence_study(cfg.truth, cfg.p, cfg.n_list,
                                     cfg.replications.value_or(500), cfg.seed,
                                     threads);
    write_rate_report(r, "norm", dir / "convergence.csv", out);
  } else if (kind == "prop1") {
    const auto r = prop1_study(cfg.truth.horizon, cfg.p, cfg.n_list,
                               cfg.replications.value_or(500), cfg.seed, threads);
    write_rate_report(r, "vp", dir / "prop1.csv", out);
  } else if (kind == "asbound") {
    run_asbound(cfg, dir, out);
  } else {
    run_coverage(cfg, dir, threads, out);
  }
}

}  // namespace

Config parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("config must be a JSON object");
  Config c;
  for (const auto& [key, v] : j.items()) {
    if (key == "lambda") {
      c.truth.event_rate = as_real(v, key);
    } else if (key == "censor_rate") {
      c.truth.censor_rate = as_real(v, key);
    } else if (key == "terminal_rate") {
      c.truth.terminal_rate = as_real(v, key);
    } else if (key == "tau") {
      c.truth.horizon = as_real(v, key);
    } else if (key == "n") {
      c.n = as_count(v, key);
    } else if (key == "n_list") {
      if (!v.is_array()) throw FormatError("config key 'n_list' must be an array");
      c.n_list.clear();
      for (const auto& x : v) c.n_list.push_back(as_count(x, key));
    } else if (key == "B") {
      c.replications = as_count(v, key);
    } else if (key == "p") {
      c.p = as_real(v, key);
    } else if (key == "t") {
      c.t = as_real(v, key);
    } else if (key == "design") {
      if (!v.is_string()) throw FormatError("config key 'design' must be a string");
      c.design = parse_design(v.get<std::string>());
    } else if (key == "seed") {
      if (!v.is_number_unsigned()) {
        throw FormatError("config key 'seed' must be a nonnegative integer");
      }
      c.seed = v.get<std::uint64_t>();
    } else if (key == "z_prob") {
      if (!c.truth.covariate) c.truth.covariate = CovariateMix{};
      c.truth.covariate->z_prob = as_real(v, key);
    } else if (key == "z_multiplier") {
      if (!c.truth.covariate) c.truth.covariate = CovariateMix{};
      c.truth.covariate->multiplier = as_real(v, key);
    } else if (key == "cap") {
      c.truth.event_cap = static_cast<int>(as_count(v, key));
    } else if (key == "n_max") {
      c.n_max = as_count(v, key);
    } else if (key == "window_start") {
      c.window_start = as_count(v, key);
    } else {
      throw FormatError("unknown config key '" + key + "'");
    }
  }
  c.truth.validate();
  return c;
}

Config load_config(const fs::path& path) {
  auto in = open_input(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

StepFunction read_step(std::istream& in) {
  const auto t = csv::read(in, "time,value", "step file");
  std::vector<double> times;
  std::vector<double> values;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string where = "step line " + std::to_string(t.lines[r]);
    times.push_back(csv::parse_double(t.rows[r][0], where));
    values.push_back(csv::parse_double(t.rows[r][1], where));
  }
  return StepFunction::from_levels(times, values);
}

void write_step(const StepFunction& f, std::ostream& out) {
  out << "time,value\n" << "0," << csv::format_exact(f.initial_value()) << '\n';
  for (std::size_t k = 0; k < f.size(); ++k) {
    out << csv::format_exact(f.breakpoints()[k]) << ','
        << csv::format_exact(f.levels()[k]) << '\n';
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Recurrent-event mean estimation and p-variation diagnostics",
               "cpvar"};
  app.require_subcommand(1);

  EstimateArgs est;
  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate the mean function");
  estimate_cmd->add_option("--design", est.design, "uncensored, observed or censored")
      ->required();
  estimate_cmd->add_option("--subjects", est.subjects, "subjects CSV")->required();
  estimate_cmd->add_option("--events", est.events, "events CSV")->required();
  estimate_cmd->add_option("--horizon", est.horizon, "time horizon")->required();
  estimate_cmd->add_option("--grid", est.grid, "comma-separated grid points");
  estimate_cmd->add_option("--out", est.out, "curve CSV")->required();
  estimate_cmd->add_option("--pseudo", est.pseudo_t, "time for pseudo-values");
  estimate_cmd->add_option("--pseudo-out", est.pseudo_out, "pseudo-value CSV");
  estimate_cmd->add_option("--dump-influence", est.influence_out, "influence CSV");

  std::string pvar_input;
  double pvar_p = 1.5;
  bool pvar_oracle = false;
  auto* pvar_cmd = app.add_subcommand("pvar", "p-variation of a step function");
  pvar_cmd->add_option("--input", pvar_input, "step CSV (time,value)")->required();
  pvar_cmd->add_option("--p", pvar_p, "exponent in [1, 2)")->required();
  pvar_cmd->add_flag("--oracle", pvar_oracle, "cross-check by brute force");

  std::string sim_config;
  std::string sim_out;
  std::optional<std::uint64_t> sim_seed;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate a scenario");
  sim_cmd->add_option("--config", sim_config, "JSON config")->required();
  sim_cmd->add_option("--out", sim_out, "output directory")->required();
  sim_cmd->add_option("--seed", sim_seed, "override the config seed");

  std::string study_kind;
  std::string study_config;
  std::string study_out;
  std::optional<std::uint64_t> study_seed;
  unsigned threads = 0;
  auto* study_cmd = app.add_subcommand("study", "Run a Monte Carlo study");
  study_cmd->add_option("kind", study_kind, "convergence, asbound, coverage or prop1")
      ->required()
      ->check(CLI::IsMember({"convergence", "asbound", "coverage", "prop1"}));
  study_cmd->add_option("--config", study_config, "JSON config")->required();
  study_cmd->add_option("--out", study_out, "output directory")->required();
  study_cmd->add_option("--seed", study_seed, "override the config seed");
  study_cmd->add_option("--threads", threads, "worker threads (0: all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "ERROR " << static_cast<int>(ErrorCode::bad_argument) << ": "
        << one_line(e.what()) << '\n';
    return static_cast<int>(ErrorCode::bad_argument);
  }

  try {
    if (*estimate_cmd) {
      run_estimate(est, out);
    } else if (*pvar_cmd) {
      run_pvar(pvar_input, pvar_p, pvar_oracle, out);
    } else if (*sim_cmd) {
      require_file(sim_config, "config");
      Config cfg = load_config(sim_config);
      if (sim_seed) cfg.seed = *sim_seed;
      run_simulate(cfg, sim_out, out);
    } else if (*study_cmd) {
      require_file(study_config, "config");
      Config cfg = load_config(study_config);
      if (study_seed) cfg.seed = *study_seed;
      run_study(study_kind, cfg, study_out, threads, out);
    }
  } catch (const Error& e) {
    err << "ERROR " << static_cast<int>(e.code()) << ": " << one_line(e.what())
        << '\n';
    return static_cast<int>(e.code());
  }
  return 0;
}

}  // namespace cpvar::cli
