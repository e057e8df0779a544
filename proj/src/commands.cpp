#include "osc_echo/commands.hpp"

#include "osc_echo/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace osc_echo {

namespace fs = std::filesystem;
using std::numbers::pi;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

// Files to write, keyed by path relative to the output directory.
using Bundle = std::map<fs::path, std::string>;

class CsvWriter {
 public:
  explicit CsvWriter(std::initializer_list<const char*> header) {
    bool first = true;
    for (const char* h : header) {
      out_ << (first ? "" : ",") << h;
      first = false;
    }
    out_ << '\n';
  }

  CsvWriter& cell(const std::string& s) {
    out_ << (row_started_ ? "," : "") << s;
    row_started_ = true;
    return *this;
  }
  CsvWriter& cell(double x) { return cell(format_double(x)); }
  CsvWriter& cell(std::size_t n) { return cell(std::to_string(n)); }
  void end_row() {
    out_ << '\n';
    row_started_ = false;
  }

  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
  bool row_started_ = false;
};

void write_bundle(const fs::path& out_dir, const Bundle& files) {
  std::error_code ec;
  for (const auto& [rel, _] : files) {
    fs::create_directories(out_dir / rel.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + (out_dir / rel.parent_path()).string() + ": " + ec.message());
  }
  for (const auto& [rel, content] : files) {
    const fs::path path = out_dir / rel;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw IoError("write failed for " + path.string());
  }
}

double zscore(double observed, double expected, double se) {
  const double diff = observed - expected;
  if (se > 0.0) return diff / se;
  return diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff);
}

struct PropagateOutput {
  std::vector<SequencePoint> points;
  std::string csv;
};

PropagateOutput propagate_states(const RunConfig& cfg) {
  const ForceModel force = cfg.force_model();
  PropagateOutput out;
  out.points = trace_sequence(cfg.initial(), cfg.sequence(), force.f0_mean, cfg.oscillator_config());
  CsvWriter csv({"mark_label", "theta_cum", "mean_q", "mean_p", "cov_qq", "cov_qp", "cov_pp", "v_tot"});
  for (const auto& pt : out.points) {
    const CovMat cov = pt.ensemble_cov(force.f0_sigma);
    csv.cell(pt.label).cell(pt.theta_cum).cell(pt.state.mean.q).cell(pt.state.mean.p);
    csv.cell(cov.qq).cell(cov.qp).cell(cov.pp).cell(state_size(cov));
    csv.end_row();
  }
  out.csv = csv.str();
  return out;
}

struct McOutput {
  Bundle files;
  std::vector<std::string> labels;
  std::vector<EnsembleStats> stats;
};

McOutput monte_carlo_clouds(const RunConfig& cfg) {
  const JumpSequence seq = cfg.sequence();
  const ForceModel force = cfg.force_model();
  const OscillatorConfig osc = cfg.oscillator_config();
  const auto records = run_ensemble(cfg.initial(), seq, force, osc, cfg.mc_config());
  const auto analytic = trace_sequence(cfg.initial(), seq, force.f0_mean, osc);

  McOutput out;
  CsvWriter summary({"mark", "mean_q", "mean_p", "cov_qq", "cov_qp", "cov_pp", "v_tot", "analytic_v_tot",
                     "z_mean_q", "z_mean_p", "z_cov_qq", "z_cov_qp", "z_cov_pp"});
  const std::size_t n_marks = seq.sample_marks.size();
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    const auto points = sample_column(records, k);
    const bool is_final = k == n_marks;
    if (!is_final || n_marks == 0) {
      CsvWriter cloud({"shot_index", "q", "p"});
      for (std::size_t i = 0; i < points.size(); ++i) {
        cloud.cell(i).cell(points[i].q).cell(points[i].p);
        cloud.end_row();
      }
      out.files["cloud_" + analytic[k].label + ".csv"] = cloud.str();
    }
    if (points.size() < 2) continue;

    const EnsembleStats s = ensemble_stats(points);
    const StatErrors se = moment_standard_errors(points);
    const PhaseVec mean = analytic[k].state.mean;
    const CovMat cov = analytic[k].ensemble_cov(force.f0_sigma);
    summary.cell(analytic[k].label).cell(s.mean.q).cell(s.mean.p);
    summary.cell(s.cov.qq).cell(s.cov.qp).cell(s.cov.pp).cell(state_size(s.cov)).cell(state_size(cov));
    summary.cell(zscore(s.mean.q, mean.q, se.mean.q)).cell(zscore(s.mean.p, mean.p, se.mean.p));
    summary.cell(zscore(s.cov.qq, cov.qq, se.cov.qq)).cell(zscore(s.cov.qp, cov.qp, se.cov.qp));
    summary.cell(zscore(s.cov.pp, cov.pp, se.cov.pp));
    summary.end_row();
    out.labels.push_back(analytic[k].label);
    out.stats.push_back(s);
  }
  out.files["mc_summary.csv"] = summary.str();
  return out;
}

struct SweepOutput {
  SweepResult result;
  std::string sweep_csv;
  std::string fit_csv;
};

SweepOutput sweep_and_fit(const RunConfig& cfg, Backend backend) {
  const SweepSetup setup = cfg.sweep_setup(backend);
  SweepOutput out;
  out.result = sweep_rprime(setup);
  auto& res = out.result;

  std::string status;
  auto note = [&status](const std::string& what) { status += (status.empty() ? "" : "|") + what; };
  auto code = [](const Error& e) -> std::string {
    if (dynamic_cast<const UnidentifiableError*>(&e)) return "unidentifiable";
    if (dynamic_cast<const FitFailureError*>(&e)) return "fit_failure";
    if (dynamic_cast<const InsufficientDataError*>(&e)) return "insufficient_data";
    return "error";
  };
  try {
    res.fit_f0 = fit_f0_from_displacement(res.rows, setup.r, setup.theta2, setup.cfg);
  } catch (const Error& e) {
    note("f0_" + code(e));
  }
  try {
    res.fit_sigma_f0 = fit_sigma_from_vtot(res.rows, setup.r, setup.theta2, setup.cfg, setup.state0.cov);
  } catch (const Error& e) {
    note("sigma_" + code(e));
  }
  if (status.empty()) status = "ok";

  CsvWriter sweep({"r_prime", "d_norm", "v_tot", "d_norm_model", "v_tot_model"});
  for (const auto& row : res.rows) {
    const double d_model = res.fit_f0 ? displacement_model(row.r_prime, res.fit_f0->value, setup.r, setup.theta2,
                                                           setup.cfg.omega)
                                      : NAN;
    const double v_model = res.fit_sigma_f0 ? vtot_model(row.r_prime, res.fit_sigma_f0->value, setup.r, setup.theta2,
                                                         setup.cfg, setup.state0.cov)
                                            : NAN;
    sweep.cell(row.r_prime).cell(row.d_norm).cell(row.v_tot).cell(d_model).cell(v_model);
    sweep.end_row();
  }
  out.sweep_csv = sweep.str();

  CsvWriter fit({"status", "f0_hat", "f0_err", "sigma_hat", "sigma_err", "r_prime_op"});
  fit.cell(status);
  fit.cell(res.fit_f0 ? res.fit_f0->value : NAN).cell(res.fit_f0 ? res.fit_f0->error : NAN);
  fit.cell(res.fit_sigma_f0 ? res.fit_sigma_f0->value : NAN).cell(res.fit_sigma_f0 ? res.fit_sigma_f0->error : NAN);
  fit.cell(optimal_ratio(setup.r));
  fit.end_row();
  out.fit_csv = fit.str();
  return out;
}

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

}  // namespace

void cmd_propagate(const RunConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  write_bundle(out_dir, {{"states.csv", propagate_states(cfg).csv}});
}

void cmd_mc(const RunConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  write_bundle(out_dir, monte_carlo_clouds(cfg).files);
}

void cmd_sweep(const RunConfig& cfg, const fs::path& out_dir, std::optional<Backend> backend) {
  cfg.validate();
  const SweepOutput s = sweep_and_fit(cfg, backend.value_or(cfg.sweep.backend));
  write_bundle(out_dir, {{"sweep.csv", s.sweep_csv}, {"fit.csv", s.fit_csv}});
}

void cmd_fig4(const RunConfig& cfg, const fs::path& out_dir, std::optional<Backend> backend) {
  cfg.validate();
  const Backend sweep_backend = backend.value_or(cfg.sweep.backend);
  const PropagateOutput prop = propagate_states(cfg);
  McOutput mc = monte_carlo_clouds(cfg);
  const SweepOutput sweep = sweep_and_fit(cfg, sweep_backend);

  Bundle files;
  files["panel_a-f_states/states.csv"] = prop.csv;
  for (auto& [rel, content] : mc.files) files["panel_b-f_clouds" / rel] = std::move(content);
  files["panel_g-h_sweep/sweep.csv"] = sweep.sweep_csv;
  files["panel_g-h_sweep/fit.csv"] = sweep.fit_csv;

  const OscillatorConfig osc = cfg.oscillator_config();
  const ForceModel force = cfg.force_model();
  const EchoSpec spec = cfg.echo_spec();
  const double r_op = optimal_ratio(spec.r);
  const CovMat cov0 = cfg.initial().cov;
  const double v_th = state_size(echo_cov(cov0, {spec.r, r_op, spec.theta2}, osc, 0.0));
  const double step2_us = Segment{spec.r, spec.theta2}.duration(osc.omega) * 1e6;

  auto find = [](const auto& labels, const std::string& label) -> long {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == label) return static_cast<long>(i);
    }
    return -1;
  };

  std::ostringstream rep;
  rep << "oscillator echo: frequency-jump probe and r' sweep\n";
  rep << "omega/2pi = " << format_double(cfg.oscillator.omega_hz) << " Hz, gamma/2pi = "
      << format_double(cfg.oscillator.gamma_hz) << " Hz\n";
  rep << "force: f0 = " << format_double(force.f0_mean) << " 1/s, sigma_f0 = " << format_double(force.f0_sigma)
      << " 1/s (normalized by p_zp)\n";
  rep << "step (ii) duration: " << fixed(step2_us, 1) << " us (r = " << format_double(spec.r)
      << ", theta2 = " << format_double(spec.theta2) << ")\n";
  rep << "r_prime_op (r = " << format_double(spec.r) << "): " << format_double(r_op) << "\n";
  rep << "r_prime used: " << format_double(spec.r_prime) << "\n";
  rep << "predicted v_tot_th (ideal echo, no shot noise): " << format_double(v_th) << "\n";

  std::vector<std::string> prop_labels;
  for (const auto& p : prop.points) prop_labels.push_back(p.label);
  for (const char* label : {"t1", "t11"}) {
    const long i = find(prop_labels, label);
    if (i >= 0) {
      rep << "v_tot(" << label << ") analytic: "
          << format_double(state_size(prop.points[static_cast<std::size_t>(i)].ensemble_cov(force.f0_sigma)))
          << "\n";
    }
    const long j = find(mc.labels, label);
    if (j >= 0) {
      rep << "v_tot(" << label << ") monte carlo (" << cfg.monte_carlo.shots
          << " shots): " << format_double(state_size(mc.stats[static_cast<std::size_t>(j)].cov)) << "\n";
    }
  }

  const double sweep_r = cfg.sweep_r();
  rep << "sweep: r = " << format_double(sweep_r) << ", r_prime_op = " << format_double(optimal_ratio(sweep_r))
      << ", backend = " << (sweep_backend == Backend::Analytic ? "analytic" : "mc") << "\n";
  auto report_fit = [&](const char* name, const std::optional<Estimate>& e) {
    rep << "fit " << name << ": ";
    if (!e) {
      rep << "failed\n";
      return;
    }
    rep << format_double(e->value) << " +- " << format_double(e->error) << " 1/s";
    if (cfg.force.si_mass_kg) {
      const double pzp = momentum_zero_point(*cfg.force.si_mass_kg, osc.omega);
      rep << " (" << fixed(e->value * pzp * 1e18, 2) << " +- " << fixed(e->error * pzp * 1e18, 2) << " aN)";
    }
    rep << "\n";
  };
  report_fit("f0", sweep.result.fit_f0);
  report_fit("sigma_f0", sweep.result.fit_sigma_f0);
  files["report.txt"] = rep.str();

  write_bundle(out_dir, files);
}

}  // namespace osc_echo
