#include <axinsm/acceptance.hpp>
#include <axinsm/harness.hpp>
#include <axinsm/lemmas.hpp>
#include <axinsm/persistence.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace axinsm;

namespace {

constexpr const char* version = "1.0.0";

enum Exit { ok = 0, usage = 1, numerical = 2, check_failed = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_root;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

void add_common(CLI::App* app, Common& c, bool with_jobs) {
  app->add_option("--config", c.config_path, "experiment config file (key=value lines)");
  app->add_option("--set", c.overrides, "override a config key, e.g. --set params.c=16 (repeatable)");
  app->add_option("--out", c.out_root, "output root; defaults to $AXINSM_OUT or ./out");
  if (with_jobs) app->add_option("--jobs", c.jobs, "concurrent sweep members")->check(CLI::PositiveNumber);
  app->add_option("--seed", c.seed, "random seed; overrides sweep.seed");
  app->add_flag("--quiet", c.quiet, "suppress progress and summaries on stdout");
}

ExperimentConfig resolve_config(const Common& c) {
  try {
    ExperimentConfig cfg = c.config_path.empty() ? ExperimentConfig{} : load_config(c.config_path);
    for (const auto& kv : c.overrides) cfg.assign(kv);
    if (c.seed) cfg.sweep.seed = *c.seed;
    cfg.validate();
    return cfg;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string header_line(const ExperimentConfig& cfg) {
  return std::string("# axinsm ") + version + " config_hash=" + hex(config_hash(cfg)) +
         " seed=" + std::to_string(cfg.sweep.seed);
}

nlohmann::json header_json(const ExperimentConfig& cfg) {
  return {{"version", version}, {"config_hash", hex(config_hash(cfg))}, {"seed", cfg.sweep.seed}};
}

// out/<run-id>/ with run-id fixed by the command, its arguments and the resolved config.
fs::path prepare_run_dir(const Common& c, const std::string& command, const ExperimentConfig& cfg,
                         const std::string& extra = "") {
  std::string root = c.out_root;
  if (root.empty()) {
    const char* env = std::getenv("AXINSM_OUT");
    root = env && *env ? env : "out";
  }
  const std::string id = command + "-" + hex(fnv1a(command + "\n" + extra + "\n" + cfg.resolved())).substr(0, 12);
  const fs::path dir = fs::path(root) / id;
  fs::create_directories(dir / "snapshots");
  std::ofstream out(dir / "config.resolved", std::ios::trunc);
  out << header_line(cfg) << '\n' << cfg.resolved();
  if (!out) throw Error("cannot write " + (dir / "config.resolved").string());
  return dir;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw Error("cannot write " + path.string());
}

class Printer {
 public:
  explicit Printer(bool quiet) : quiet_(quiet) {}
  template <class... A>
  void operator()(const char* f, A... a) const {
    if (quiet_) return;
    std::printf(f, a...);
    std::fflush(stdout);
  }
  void line(const std::string& s) const { (*this)("%s\n", s.c_str()); }

 private:
  bool quiet_;
};

// ------------------------------------------------------------------ run-nsm / run-mhd

struct RunArgs {
  int sample_every = 10;
  int snapshot_every = 0;
  bool with_h = false;
};

int cmd_run(const Common& c, const RunArgs& a, bool mhd) {
  const ExperimentConfig cfg = resolve_config(c);
  if (a.sample_every < 1 || a.snapshot_every < 0) throw UsageError("--sample-every must be positive");
  const Params& p = cfg.params;
  const long n_macro = detail::macro_steps(p);
  if (a.with_h && n_macro / a.sample_every + 1 < static_cast<long>(min_h_samples))
    throw UsageError("--with-h needs at least " + std::to_string(min_h_samples) + " samples; lower --sample-every or raise params.t_end");
  const Printer say(c.quiet);
  const std::string name = mhd ? "run-mhd" : "run-nsm";
  const fs::path dir = prepare_run_dir(c, name, cfg,
                                       std::to_string(a.sample_every) + "," + std::to_string(a.snapshot_every) +
                                           (a.with_h ? ",h" : ""));
  say.line(header_line(cfg));
  say("%s -> %s\n", name.c_str(), dir.string().c_str());
  const InitialData data = make_initial_data(cfg.profile, p);
  auto snapshot_due = [&](long macro_index) {
    return a.snapshot_every > 0 && macro_index > 0 && macro_index % a.snapshot_every == 0 && macro_index < n_macro;
  };
  auto snap_path = [&](long macro_index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "step_%08ld.bin", macro_index);
    return (dir / "snapshots" / buf).string();
  };

  nlohmann::json report{{"header", header_json(cfg)}, {"command", name}};
  NormLedger ledger;
  if (mhd) {
    save_snapshot(data.mhd, (dir / "snapshots" / "initial.bin").string());
    MHDRun r = run_mhd(p, data.mhd, RunOptions{a.sample_every, false, true}, [&](const MHDEvent& ev) {
      if (ev.macro_boundary && snapshot_due(ev.macro_index)) save_snapshot(ev.state, snap_path(ev.macro_index));
    });
    save_snapshot(r.final_state, (dir / "snapshots" / "final.bin").string());
    ledger = r.ledger;
    report["steps"] = r.steps;
    report["initial_energy"] = r.initial_energy;
    report["cumulative_residual"] = r.cumulative_residual;
    report["relative_residual"] = r.initial_energy > 0 ? r.cumulative_residual / r.initial_energy : 0.0;
  } else {
    save_snapshot(data.nsm, (dir / "snapshots" / "initial.bin").string());
    NormLedger extra;
    NSMRun r = run(p, data.nsm, RunOptions{a.sample_every, false, true}, [&](const StepEvent& ev) {
      if (!ev.macro_boundary) return;
      if (snapshot_due(ev.macro_index)) save_snapshot(ev.state, snap_path(ev.macro_index));
      if (a.with_h && detail::is_sample(ev.macro_index, a.sample_every, n_macro))
        record_h_constituents(extra, ev.report.t, ev.state, ev.evaluation, p);
    });
    save_snapshot(r.final_state, (dir / "snapshots" / "final.bin").string());
    ledger = r.ledger;
    if (a.with_h) {
      ledger.merge(extra);
      const HSeries h = assemble_H(ledger, p.c, p.sigma);
      std::ofstream hcsv(dir / "h.csv", std::ios::trunc);
      hcsv << "t,H\n";
      for (std::size_t i = 0; i < h.t.size(); ++i) hcsv << format_real(h.t[i]) << ',' << format_real(h.value[i]) << '\n';
      report["H_sup"] = h.sup();
      nlohmann::json parts;
      for (const auto& [k, v] : h.parts) parts[k] = v.back();
      report["H_parts"] = parts;
    }
    report["steps"] = r.steps;
    report["initial_energy"] = r.initial_energy;
    report["cumulative_residual"] = r.cumulative_residual;
    report["relative_residual"] = r.initial_energy > 0 ? r.cumulative_residual / r.initial_energy : 0.0;
  }
  write_ledger_csv(ledger, (dir / "ledger.csv").string());
  write_json(dir / "report.json", report);
  say("steps %ld, relative energy residual %.3e\n", report["steps"].get<long>(), report["relative_residual"].get<double>());
  return ok;
}

// ------------------------------------------------------------------ sweep-c

int cmd_sweep(const Common& c) {
  const ExperimentConfig cfg = resolve_config(c);
  const Printer say(c.quiet);
  const fs::path dir = prepare_run_dir(c, "sweep-c", cfg);
  say.line(header_line(cfg));
  say("sweep-c -> %s\n", dir.string().c_str());
  SweepOptions opts;
  opts.sample_every = cfg.sweep.sample_every;
  opts.refinement = cfg.sweep.refinement;
  opts.jobs = c.jobs;
  if (!c.quiet) opts.progress = [](const std::string& msg) { std::printf("  %s\n", msg.c_str()), std::fflush(stdout); };
  const SweepResult r = sweep_c(cfg.profile, cfg.params, cfg.sweep.c_list, opts);

  write_ledger_csv(r.mhd_ledger, (dir / "ledger.csv").string());
  for (const auto& m : r.members)
    if (m.ok) write_ledger_csv(m.ledger, (dir / ("ledger_c" + format_real(m.c) + ".csv")).string());
  {
    std::ofstream csv(dir / "report.csv", std::ios::trunc);
    write_sweep_csv(r, csv);
  }
  nlohmann::json j = fit_report(r);
  j["header"] = header_json(cfg);
  write_json(dir / "report.json", j);

  for (const auto& [name, f] : r.fits) {
    if (f.fit)
      say("  %-16s slope %7.3f  r2 %.4f  points %zu\n", name.c_str(), f.fit->slope, f.fit->r2, f.used_c.size());
    else
      say("  %-16s slope absent  points %zu\n", name.c_str(), f.used_c.size());
  }
  if (!r.complete) {
    for (const auto& m : r.members)
      if (!m.ok) std::fprintf(stderr, "axinsm: sweep member c = %g failed: %s\n", m.c, m.error.c_str());
    return numerical;
  }
  return ok;
}

// ------------------------------------------------------------------ verify-lemmas

int cmd_lemmas(const Common& c, const std::string& suite, int n) {
  const ExperimentConfig cfg = resolve_config(c);
  if (n < 1) throw UsageError("--n must be positive");
  const Printer say(c.quiet);
  const fs::path dir = prepare_run_dir(c, "verify-lemmas", cfg, suite + "," + std::to_string(n));
  say.line(header_line(cfg));
  const std::uint64_t seed = cfg.sweep.seed;
  std::vector<LemmaReport> reports;
  auto want = [&](const char* s) { return suite == "all" || suite == s; };
  if (want("colinearity")) reports.push_back(colinearity_suite(n, seed));
  if (want("bony")) reports.push_back(bony_suite(std::max(2, n), seed));
  if (want("hardy")) reports.push_back(hardy_suite(n, seed));
  if (want("swirl")) reports.push_back(swirl_suite(n, seed));
  if (want("structure")) {
    const Params& p = cfg.params;
    reports.push_back(structure_suite(make_initial_data(cfg.profile, p).nsm, p));
  }
  if (reports.empty()) throw UsageError("unknown suite '" + suite + "'");

  say("%-12s %8s %12s %10s %12s  %s\n", "suite", "samples", "worst", "tolerance", "control", "result");
  nlohmann::json j{{"header", header_json(cfg)}, {"suites", nlohmann::json::array()}};
  bool all = true;
  for (const auto& r : reports) {
    say("%-12s %8d %12.3e %10.1e %12s  %s\n", r.suite.c_str(), r.samples, r.worst, r.tolerance,
        r.control ? acceptance::fmt("%.3e", *r.control).c_str() : "-", r.passed() ? "pass" : "FAIL");
    j["suites"].push_back(r.to_json());
    all = all && r.passed();
  }
  write_json(dir / "report.json", j);
  return all ? ok : check_failed;
}

// ------------------------------------------------------------------ norms

int cmd_norms(const Common& c, const std::string& snapshot) {
  const ExperimentConfig cfg = resolve_config(c);
  const Printer say(c.quiet);
  Snapshot snap;
  try {
    snap = load_snapshot(snapshot);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const fs::path dir = prepare_run_dir(c, "norms", cfg, fs::absolute(snapshot).string());
  say.line(header_line(cfg));
  const int lift_n = cfg.params.lift_n;
  nlohmann::json norms;
  const ScalarField2D* vorticity;
  const ScalarField2D* magnetic;
  const NoSwirlVec2* electric = nullptr;
  double t;
  if (std::holds_alternative<NSMState>(snap)) {
    const auto& s = std::get<NSMState>(snap);
    vorticity = &s.vorticity;
    magnetic = &s.magnetic;
    electric = &s.electric;
    t = s.t;
  } else {
    const auto& s = std::get<MHDState>(snap);
    vorticity = &s.vorticity;
    magnetic = &s.magnetic;
    t = s.t;
  }
  const ScalarField2D potential = stream_potential(*vorticity);
  norms["t"] = t;
  norms["u_L2"] = std::sqrt(std::max(0.0, inner(potential, *vorticity)));
  norms["omega_L2"] = norm_l2(*vorticity);
  norms["Omega_L2"] = norm_l2(divide_by_r(*vorticity));
  norms["B_L2"] = norm_l2(*magnetic);
  norms["B_H1"] = norm_l2(masked(curl_swirl(*magnetic)));
  norms["gamma_L3"] = norm_lp(divide_by_r(*magnetic), 3);
  const Spectrum3D b_hat = forward(lift(*magnetic, lift_n));
  norms["B_H12"] = sobolev_norm(b_hat, 0.5);
  norms["B_H32"] = sobolev_norm(b_hat, 1.5);
  const BlockSpectrum blocks = dyadic_blocks(b_hat, cfg.params.sigma * cfg.params.c);
  norms["B_B52_21"] = besov_norm(blocks, 2.5, 1);
  if (electric) {
    norms["E_L2"] = norm_l2(*electric);
    norms["E_H32"] = sobolev_norm(lift(masked(*electric), lift_n), 1.5);
  }
  {
    std::ofstream csv(dir / "blocks.csv", std::ios::trunc);
    write_block_csv(blocks, csv);
  }
  for (const auto& [k, v] : norms.items()) say("%-10s %.10e\n", k.c_str(), v.get<double>());
  write_json(dir / "report.json", {{"header", header_json(cfg)}, {"snapshot", snapshot}, {"norms", norms}});
  return ok;
}

// ------------------------------------------------------------------ checks

std::vector<int> parse_criteria(const std::string& list) {
  std::vector<int> ids;
  if (list == "all") {
    for (int i = 1; i <= 10; ++i) ids.push_back(i);
    return ids;
  }
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const int id = std::stoi(item, &used);
      if (used != item.size() || id < 1 || id > 10) throw std::invalid_argument(item);
      ids.push_back(id);
    } catch (const std::exception&) {
      throw UsageError("--criteria expects numbers 1..10, got '" + item + "'");
    }
  }
  if (ids.empty()) throw UsageError("--criteria is empty");
  return ids;
}

int cmd_checks(const Common& c, const std::string& list) {
  const std::vector<int> ids = parse_criteria(list);
  const ExperimentConfig cfg = resolve_config(c);
  const Printer say(c.quiet);
  const fs::path dir = prepare_run_dir(c, "checks", cfg, list);
  say.line(header_line(cfg));
  acceptance::Runner runner(c.jobs);
  nlohmann::json j{{"header", header_json(cfg)}, {"criteria", nlohmann::json::array()}};
  bool all = true;
  for (int id : ids) {
    const CriterionResult r = runner.run(id);
    say.line(r.line());
    j["criteria"].push_back(
        {{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail}, {"seconds", r.seconds}, {"budget", r.budget}});
    all = all && r.passed;
  }
  write_json(dir / "report.json", j);
  return all ? ok : check_failed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Axisymmetric Navier-Stokes-Maxwell solver, MHD limit and c-sweep harness"};
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", version);
  app.require_subcommand(1);

  Common common;
  RunArgs run_args;
  std::string suite = "all";
  int lemma_n = 20;
  std::string snapshot;
  std::string criteria = "all";

  auto* run_nsm = app.add_subcommand("run-nsm", "integrate the Navier-Stokes-Maxwell system");
  auto* run_mhd_cmd = app.add_subcommand("run-mhd", "integrate the MHD limit system");
  for (auto* sub : {run_nsm, run_mhd_cmd}) {
    add_common(sub, common, false);
    sub->add_option("--sample-every", run_args.sample_every, "macro steps between ledger rows");
    sub->add_option("--snapshot-every", run_args.snapshot_every, "macro steps between snapshots (0: initial and final only)");
  }
  run_nsm->add_flag("--with-h", run_args.with_h, "record the H(t) constituents and write h.csv");
  auto* sweep = app.add_subcommand("sweep-c", "NSM runs over sweep.c_list against one MHD reference");
  add_common(sweep, common, true);
  auto* lemmas = app.add_subcommand("verify-lemmas", "structural identity and inequality suites");
  add_common(lemmas, common, false);
  lemmas->add_option("--suite", suite, "colinearity, bony, hardy, swirl, structure or all")
      ->check(CLI::IsMember({"colinearity", "bony", "hardy", "swirl", "structure", "all"}));
  lemmas->add_option("--n", lemma_n, "random cases per suite");
  auto* norms = app.add_subcommand("norms", "norm table of a snapshot");
  add_common(norms, common, false);
  norms->add_option("--snapshot", snapshot, "snapshot file")->required();
  auto* checks = app.add_subcommand("checks", "acceptance criteria; exit 3 if any fails");
  add_common(checks, common, true);
  checks->add_option("--criteria", criteria, "comma separated criterion numbers or all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return usage;
  }

  try {
    if (*run_nsm) return cmd_run(common, run_args, false);
    if (*run_mhd_cmd) return cmd_run(common, run_args, true);
    if (*sweep) return cmd_sweep(common);
    if (*lemmas) return cmd_lemmas(common, suite, lemma_n);
    if (*norms) return cmd_norms(common, snapshot);
    if (*checks) return cmd_checks(common, criteria);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "axinsm: %s\n", e.what());
    return usage;
  } catch (const CflViolation& e) {
    std::fprintf(stderr, "axinsm: CFL abort: %s\n", e.what());
    return numerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "axinsm: %s\n", e.what());
    return numerical;
  }
  return usage;
}
