#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "mhd.hpp"
#include "nsm.hpp"
#include "persistence.hpp"
#include "spectral.hpp"

namespace axinsm {

// ---------------------------------------------------------------- initial data

enum class ProfileKind { stream_bump, swirl_bump, composite };

struct DataProfile {
  ProfileKind kind = ProfileKind::composite;
  double amplitude = 1.0;
  double r0 = 0.0;
  double z0 = pi;
  double width = 0.35;
  std::optional<double> mollifier_width;
  bool prepared_electric = false;  // choose E0 so that the initial current equals curl B0

  void validate(const GridSpec& g) const {
    if (!std::isfinite(amplitude)) throw Error("profile: amplitude must be finite");
    if (!(width > 0)) throw Error("profile: width must be positive");
    if (r0 < 0) throw Error("profile: r0 must be non-negative");
    if (r0 + 4 * width > 0.5 * g.R + 1e-12) throw Error("profile: support r0 + 4 width exceeds R/2");
    if (z0 - 4 * width < 0 || z0 + 4 * width > g.Lz) throw Error("profile: support leaves the axial period");
    if (mollifier_width && !(*mollifier_width > 0)) throw Error("profile: mollifier_width must be positive");
  }

  double bump(double r, double z) const {
    return std::exp(-((r - r0) * (r - r0) + (z - z0) * (z - z0)) / (width * width));
  }
};

// Gaussian smoothing in (r, z) with standard deviation `width`; the radial
// direction uses the parity extension across the axis and zero beyond the wall.
inline ScalarField2D mollify(const ScalarField2D& f, double width) {
  const GridSpec& g = f.grid();
  AxialSpectrum s = axial_forward(f);
  for (int i = 0; i < s.rows; ++i)
    for (int m = 0; m < s.modes; ++m) {
      const double k = 2 * pi * m / g.Lz;
      s(i, m) *= std::exp(-0.5 * k * k * width * width);
    }
  ScalarField2D smooth_z = axial_inverse(std::move(s), g, f.parity());

  const double dr = g.dr();
  const int reach = static_cast<int>(std::ceil(8 * width / dr));
  std::vector<double> kernel(2 * g.Nr + 1);
  double norm = 0;
  for (int m = -reach; m <= reach; ++m) norm += std::exp(-0.5 * (m * dr) * (m * dr) / (width * width));
  for (int m = 0; m <= 2 * g.Nr; ++m) {
    const double d = (m - g.Nr) * dr;
    kernel[m] = std::abs(m - g.Nr) > reach ? 0.0 : std::exp(-0.5 * d * d / (width * width)) / norm;
  }
  const double sign = f.parity() == Parity::odd ? -1.0 : 1.0;
  ScalarField2D out(g, f.parity());
  for (int i = 0; i <= g.Nr; ++i)
    for (int j = std::max(-g.Nr, i - reach); j <= std::min(g.Nr, i + reach); ++j) {
      const double w = kernel[i - j + g.Nr] * (j < 0 ? sign : 1.0);
      if (w == 0) continue;
      const int src = std::abs(j);
      for (int k = 0; k < g.Nz; ++k) out(i, k) += w * smooth_z(src, k);
    }
  out.enforce_parity();
  return out;
}

struct InitialData {
  NSMState nsm;
  MHDState mhd;
};

inline InitialData make_initial_data(const DataProfile& profile, const Params& p) {
  p.validate();
  profile.validate(p.grid);
  const GridSpec& g = p.grid;
  auto shape = [&](double r, double z) { return profile.amplitude * r * profile.bump(r, z); };
  ScalarField2D potential(g, Parity::odd), magnetic(g, Parity::odd);
  if (profile.kind != ProfileKind::swirl_bump) potential = ScalarField2D::sample(g, Parity::odd, shape);
  if (profile.kind != ProfileKind::stream_bump) magnetic = ScalarField2D::sample(g, Parity::odd, shape);
  if (profile.mollifier_width) {
    potential = mollify(potential, *profile.mollifier_width);
    magnetic = mollify(magnetic, *profile.mollifier_width);
  }
  potential.zero_wall();
  magnetic.zero_wall();

  InitialData out{NSMState(g), MHDState(g)};
  out.nsm.vorticity = -1.0 * lap_minus(potential);
  out.nsm.vorticity.zero_wall();
  out.nsm.magnetic = magnetic;
  if (profile.prepared_electric) {
    NSMEvaluation ev = evaluate(out.nsm, p);
    out.nsm.electric = (1.0 / (p.sigma * p.c)) * masked(curl_swirl(magnetic)) - (1.0 / p.c) * ev.fields.induction;
    out.nsm.electric.zero_wall();
  }
  out.mhd = to_mhd(out.nsm);
  return out;
}

// Pure Maxwell test mode: no flow, E0 = 0, B0 = amplitude r bump.
inline NSMState damped_wave_state(const GridSpec& g, double amplitude, double width) {
  NSMState s(g);
  s.magnetic = ScalarField2D::sample(
      g, Parity::odd, [&](double r, double z) { return amplitude * r * std::exp(-(r * r + (z - 0.5 * g.Lz) * (z - 0.5 * g.Lz)) / (width * width)); });
  s.magnetic.zero_wall();
  return s;
}

// ---------------------------------------------------------------- configuration

struct SweepSettings {
  std::vector<double> c_list{4, 8, 16, 32, 64};
  std::uint64_t seed = 0;
  int sample_every = 5;
  bool refinement = true;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline double parse_real(const std::string& key, const std::string& v) {
  double out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw Error("config: '" + key + "' expects a number, got '" + v + "'");
  return out;
}

inline long parse_integer(const std::string& key, const std::string& v) {
  long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw Error("config: '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error("config: '" + key + "' expects true or false, got '" + v + "'");
}

inline std::string real_text(double v) { return format_real(v); }

}  // namespace detail

struct ExperimentConfig {
  DataProfile profile;
  Params params;
  SweepSettings sweep;

  void set(const std::string& key, const std::string& raw) {
    using namespace detail;
    const std::string v = trim(raw);
    if (key == "profile.kind") {
      if (v == "stream_bump") profile.kind = ProfileKind::stream_bump;
      else if (v == "swirl_bump") profile.kind = ProfileKind::swirl_bump;
      else if (v == "composite") profile.kind = ProfileKind::composite;
      else throw Error("config: unknown profile.kind '" + v + "'");
    } else if (key == "profile.amplitude") profile.amplitude = parse_real(key, v);
    else if (key == "profile.r0") profile.r0 = parse_real(key, v);
    else if (key == "profile.z0") profile.z0 = parse_real(key, v);
    else if (key == "profile.width") profile.width = parse_real(key, v);
    else if (key == "profile.mollifier_width") {
      if (v == "none") profile.mollifier_width.reset();
      else profile.mollifier_width = parse_real(key, v);
    } else if (key == "profile.prepared_electric") profile.prepared_electric = parse_bool(key, v);
    else if (key == "params.nu") params.nu = parse_real(key, v);
    else if (key == "params.sigma") params.sigma = parse_real(key, v);
    else if (key == "params.c") params.c = parse_real(key, v);
    else if (key == "params.Nr") params.grid.Nr = static_cast<int>(parse_integer(key, v));
    else if (key == "params.Nz") params.grid.Nz = static_cast<int>(parse_integer(key, v));
    else if (key == "params.R") params.grid.R = parse_real(key, v);
    else if (key == "params.Lz") params.grid.Lz = parse_real(key, v);
    else if (key == "params.dt") params.dt = parse_real(key, v);
    else if (key == "params.t_end") params.t_end = parse_real(key, v);
    else if (key == "params.maxwell_scheme") {
      if (v == "crank_nicolson") params.maxwell_scheme = MaxwellScheme::crank_nicolson;
      else if (v == "exact_split") params.maxwell_scheme = MaxwellScheme::exact_split;
      else throw Error("config: unknown params.maxwell_scheme '" + v + "'");
    } else if (key == "params.resolve_layer") params.resolve_layer = parse_bool(key, v);
    else if (key == "params.layer_step") params.layer_step = parse_real(key, v);
    else if (key == "params.cfl_target") params.cfl_target = parse_real(key, v);
    else if (key == "params.lift_n") params.lift_n = static_cast<int>(parse_integer(key, v));
    else if (key == "sweep.c_list") {
      std::vector<double> list;
      std::stringstream in(v);
      std::string item;
      while (std::getline(in, item, ',')) list.push_back(parse_real(key, trim(item)));
      if (list.empty()) throw Error("config: sweep.c_list is empty");
      sweep.c_list = list;
    } else if (key == "sweep.seed") {
      const long s = parse_integer(key, v);
      if (s < 0) throw Error("config: sweep.seed must be non-negative");
      sweep.seed = static_cast<std::uint64_t>(s);
    } else if (key == "sweep.sample_every") sweep.sample_every = static_cast<int>(parse_integer(key, v));
    else if (key == "sweep.refinement") sweep.refinement = parse_bool(key, v);
    else throw Error("config: unknown key '" + key + "'");
  }

  // Applies "key=value".
  void assign(const std::string& line) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("config: expected key=value, got '" + line + "'");
    set(detail::trim(line.substr(0, eq)), line.substr(eq + 1));
  }

  void validate() const {
    params.validate();
    profile.validate(params.grid);
    if (sweep.sample_every < 1) throw Error("config: sweep.sample_every must be positive");
    for (std::size_t i = 0; i < sweep.c_list.size(); ++i) {
      if (!(sweep.c_list[i] > 0)) throw Error("config: sweep.c_list entries must be positive");
      if (i > 0 && !(sweep.c_list[i] > sweep.c_list[i - 1])) throw Error("config: sweep.c_list must be strictly increasing");
    }
  }

  // Every key with its effective value, one per line in a fixed order.
  std::string resolved() const {
    using detail::real_text;
    std::ostringstream o;
    const char* kinds[] = {"stream_bump", "swirl_bump", "composite"};
    o << "profile.kind=" << kinds[static_cast<int>(profile.kind)] << '\n';
    o << "profile.amplitude=" << real_text(profile.amplitude) << '\n';
    o << "profile.r0=" << real_text(profile.r0) << '\n';
    o << "profile.z0=" << real_text(profile.z0) << '\n';
    o << "profile.width=" << real_text(profile.width) << '\n';
    o << "profile.mollifier_width=" << (profile.mollifier_width ? real_text(*profile.mollifier_width) : "none") << '\n';
    o << "profile.prepared_electric=" << (profile.prepared_electric ? "true" : "false") << '\n';
    o << "params.nu=" << real_text(params.nu) << '\n';
    o << "params.sigma=" << real_text(params.sigma) << '\n';
    o << "params.c=" << real_text(params.c) << '\n';
    o << "params.Nr=" << params.grid.Nr << '\n';
    o << "params.Nz=" << params.grid.Nz << '\n';
    o << "params.R=" << real_text(params.grid.R) << '\n';
    o << "params.Lz=" << real_text(params.grid.Lz) << '\n';
    o << "params.dt=" << real_text(params.dt) << '\n';
    o << "params.t_end=" << real_text(params.t_end) << '\n';
    o << "params.maxwell_scheme="
      << (params.maxwell_scheme == MaxwellScheme::crank_nicolson ? "crank_nicolson" : "exact_split") << '\n';
    o << "params.resolve_layer=" << (params.resolve_layer ? "true" : "false") << '\n';
    o << "params.layer_step=" << real_text(params.layer_step) << '\n';
    o << "params.cfl_target=" << real_text(params.cfl_target) << '\n';
    o << "params.lift_n=" << params.lift_n << '\n';
    o << "sweep.c_list=";
    for (std::size_t i = 0; i < sweep.c_list.size(); ++i) o << (i ? "," : "") << real_text(sweep.c_list[i]);
    o << '\n';
    o << "sweep.seed=" << sweep.seed << '\n';
    o << "sweep.sample_every=" << sweep.sample_every << '\n';
    o << "sweep.refinement=" << (sweep.refinement ? "true" : "false") << '\n';
    return o.str();
  }
};

inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    try {
      cfg.assign(t);
    } catch (const Error& e) {
      throw Error(std::string(e.what()) + " (line " + std::to_string(number) + ")");
    }
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open '" + path + "'");
  return parse_config(in);
}

inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t config_hash(const ExperimentConfig& cfg) { return fnv1a(cfg.resolved()); }

// ---------------------------------------------------------------- H(t)

// Ledger rows feeding H(t) that are not written by the NSM run itself.
inline void record_h_constituents(NormLedger& ledger, double t, const NSMState& s, const NSMEvaluation& ev,
                                  const Params& p) {
  ledger.append(t, "omega_L2", norm_l2(s.vorticity));
  ledger.append(t, "omega_H1", norm_l2(masked(curl_swirl(s.vorticity))));
  ledger.append(t, "Omega_H1", norm_l2(masked(gradient(ev.fields.vorticity_over_r))));
  ledger.append(t, "u_L2", std::sqrt(std::max(0.0, 2 * ev.kinetic_energy)));
  ledger.append(t, "E_L2", norm_l2(s.electric));
  ledger.append(t, "B_L2", norm_l2(s.magnetic));
  ledger.append(t, "B_H1", norm_l2(masked(curl_swirl(s.magnetic))));
  const Spectrum3D e_hat = forward(lift(masked(s.electric), p.lift_n));
  const Spectrum3D b_hat = forward(lift(s.magnetic, p.lift_n));
  ledger.append(t, "E_H32", sobolev_norm(e_hat, 1.5));
  ledger.append(t, "B_H32", sobolev_norm(b_hat, 1.5));
  ledger.append(t, "ampere_H12", ampere_residual(s, ev.fields, 0.5, p.lift_n));
  const BlockSpectrum eb = dyadic_blocks(e_hat), bb = dyadic_blocks(b_hat);
  for (int j = eb.j_lo; j <= eb.j_hi; ++j) {
    ledger.append(t, "E_block_" + std::to_string(j), eb.block(j));
    ledger.append(t, "B_block_" + std::to_string(j), bb.block(j));
  }
}

struct HSeries {
  std::vector<double> t;
  std::vector<double> value;
  std::map<std::string, std::vector<double>> parts;

  double sup() const { return value.empty() ? 0.0 : *std::max_element(value.begin(), value.end()); }
};

inline constexpr int min_h_samples = 32;

// Running sups and running time integrals of the constituents, summed.
inline HSeries assemble_H(const NormLedger& ledger, double c, double sigma) {
  auto column = [&](const std::string& name) {
    if (!ledger.has(name)) throw Error("assemble_H: missing constituent rows '" + name + "'");
    return ledger.series(name);
  };
  const auto base = column("omega_L2");
  const std::size_t n = base.size();
  if (n < static_cast<std::size_t>(min_h_samples))
    throw Error("assemble_H: need at least " + std::to_string(min_h_samples) + " samples, got " + std::to_string(n));
  std::map<std::string, std::vector<double>> v;
  for (const char* name : {"omega_L2", "Omega_L2", "omega_H1", "Omega_H1", "u_L2", "E_L2", "B_L2", "gamma_L3", "E_H32",
                           "B_H32", "B_H1", "ampere_H12"}) {
    const auto s = column(name);
    if (s.size() != n) throw Error(std::string("assemble_H: misaligned rows for '") + name + "'");
    for (std::size_t i = 0; i < n; ++i) {
      if (s[i].first != base[i].first) throw Error(std::string("assemble_H: misaligned times for '") + name + "'");
      v[name].push_back(s[i].second);
    }
  }
  std::vector<int> blocks;
  for (const auto& name : ledger.names())
    if (name.rfind("E_block_", 0) == 0) blocks.push_back(std::stoi(name.substr(8)));
  std::sort(blocks.begin(), blocks.end());
  if (blocks.empty()) throw Error("assemble_H: missing constituent rows 'E_block_*'");
  std::map<int, std::vector<double>> eb, bb;
  for (int j : blocks) {
    for (auto [target, prefix] : {std::pair{&eb, "E_block_"}, std::pair{&bb, "B_block_"}}) {
      const auto s = column(prefix + std::to_string(j));
      if (s.size() != n) throw Error("assemble_H: misaligned block rows");
      for (const auto& [t, x] : s) (*target)[j].push_back(x);
    }
  }
  const int jc = split_index(sigma * c);
  auto weight = [](int j) { return std::pow(2.0, 2.5 * j); };

  HSeries h;
  struct Running {
    double sup = 0, integral = 0, last = 0;
    bool first = true;
    void add_sup(double x) { sup = std::max(sup, x); }
    void add_integrand(double x, double dt) {
      if (!first) integral += 0.5 * dt * (x + last);
      last = x;
      first = false;
    }
  };
  std::map<std::string, Running> run;
  std::map<int, Running> high_blocks;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = base[i].first, dt = i ? t - base[i - 1].first : 0.0;
    auto sq = [](double a, double b) { return std::sqrt(a * a + b * b); };
    double b52_full = 0, e52 = 0, b52_low = 0;
    for (int j : blocks) {
      b52_full += weight(j) * sq(eb[j][i], bb[j][i]);
      e52 += weight(j) * eb[j][i];
      if (j < jc) b52_low += weight(j) * bb[j][i];
      else high_blocks[j].add_integrand(eb[j][i] * eb[j][i] + bb[j][i] * bb[j][i], dt);
    }
    run["vort_sup"].add_sup(sq(v["omega_L2"][i], v["Omega_L2"][i]));
    run["vort_int"].add_integrand(v["omega_H1"][i] * v["omega_H1"][i] + v["Omega_H1"][i] * v["Omega_H1"][i], dt);
    run["energy_sup"].add_sup(std::sqrt(v["u_L2"][i] * v["u_L2"][i] + v["E_L2"][i] * v["E_L2"][i] + v["B_L2"][i] * v["B_L2"][i]));
    run["energy_int"].add_integrand(v["omega_L2"][i] * v["omega_L2"][i], dt);
    run["gamma_sup"].add_sup(v["gamma_L3"][i]);
    run["h32_sup"].add_sup(sq(v["E_H32"][i], v["B_H32"][i]));
    run["b52_sup"].add_sup(b52_full);
    run["e32_int"].add_integrand(v["E_H32"][i] * v["E_H32"][i], dt);
    run["b52_low_int"].add_integrand(b52_low * b52_low, dt);
    run["e52_int"].add_integrand(e52 * e52, dt);
    run["bh1_int"].add_integrand(v["B_H1"][i] * v["B_H1"][i], dt);
    run["ampere_sup"].add_sup(v["ampere_H12"][i]);

    double tilde = 0;
    for (auto& [j, r] : high_blocks) tilde += weight(j) * std::sqrt(r.integral);
    std::map<std::string, double> part{
        {"vorticity", run["vort_sup"].sup + std::sqrt(run["vort_int"].integral)},
        {"energy", run["energy_sup"].sup + std::sqrt(run["energy_int"].integral)},
        {"gamma_L3", run["gamma_sup"].sup},
        {"EB_H32", run["h32_sup"].sup},
        {"EB_B52_over_c", run["b52_sup"].sup / c},
        {"c_E_L2H32", c * std::sqrt(run["e32_int"].integral)},
        {"EB_B52_high_tilde", tilde},
        {"B_B52_low_L2", std::sqrt(run["b52_low_int"].integral)},
        {"E_B52_L2", std::sqrt(run["e52_int"].integral)},
        {"B_L2H1", std::sqrt(run["bh1_int"].integral)},
        {"ampere_H12_sup", run["ampere_sup"].sup},
    };
    double total = 0;
    for (const auto& [name, x] : part) {
      h.parts[name].push_back(x);
      total += x;
    }
    h.t.push_back(t);
    h.value.push_back(total);
  }
  return h;
}

// ---------------------------------------------------------------- rate fits

struct FitResult {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
  double slope_stderr = 0;
  double ci_low = 0;   // 95% interval for the slope
  double ci_high = 0;
};

inline FitResult fit_rate(const std::vector<double>& values, const std::vector<double>& c_list) {
  if (values.size() != c_list.size()) throw Error("fit_rate: size mismatch");
  const std::size_t n = values.size();
  if (n < 3) throw Error("fit_rate: need at least 3 points");
  double sx = 0, sy = 0;
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(values[i] > 0) || !(c_list[i] > 0)) throw Error("fit_rate: values and c must be positive");
    x[i] = std::log(c_list[i]);
    y[i] = std::log(values[i]);
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw Error("fit_rate: c values must differ");
  FitResult f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - f.intercept - f.slope * x[i];
    sse += e * e;
  }
  f.r2 = syy == 0 ? 1.0 : 1 - sse / syy;
  f.slope_stderr = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
  const boost::math::students_t dist(static_cast<double>(n - 2));
  const double q = boost::math::quantile(boost::math::complement(dist, 0.025));
  f.ci_low = f.slope - q * f.slope_stderr;
  f.ci_high = f.slope + q * f.slope_stderr;
  return f;
}

// ---------------------------------------------------------------- c sweep

struct ErrorNorms {
  double u_L2 = 0, u_H1 = 0, u_H2 = 0, B_L2 = 0, B_H1 = 0, B_H32 = 0;
};

inline ErrorNorms error_norms(const ScalarField2D& d_vorticity, const ScalarField2D& d_magnetic, int lift_n) {
  ErrorNorms e;
  e.u_L2 = std::sqrt(std::max(0.0, inner(stream_potential(d_vorticity), d_vorticity)));
  e.u_H1 = norm_l2(d_vorticity);
  e.u_H2 = norm_l2(masked(curl_swirl(d_vorticity)));
  e.B_L2 = norm_l2(d_magnetic);
  e.B_H1 = norm_l2(masked(curl_swirl(d_magnetic)));
  e.B_H32 = sobolev_norm(lift(d_magnetic, lift_n), 1.5);
  return e;
}

// Linear interpolation in time between stored states.
inline MHDState interpolate(const std::vector<MHDState>& traj, double t) {
  if (traj.empty()) throw Error("interpolate: empty trajectory");
  const double tol = 1e-9 * std::max(1.0, std::abs(t));
  if (t < traj.front().t - tol || t > traj.back().t + tol) throw Error("interpolate: time outside the trajectory");
  auto it = std::lower_bound(traj.begin(), traj.end(), t - tol, [](const MHDState& s, double x) { return s.t < x; });
  if (it == traj.end()) it = traj.end() - 1;
  if (std::abs(it->t - t) <= tol || it == traj.begin()) return *it;
  const MHDState& a = *(it - 1);
  const MHDState& b = *it;
  const double w = (t - a.t) / (b.t - a.t);
  MHDState out = a;
  out.vorticity = (1 - w) * a.vorticity + w * b.vorticity;
  out.magnetic = (1 - w) * a.magnetic + w * b.magnetic;
  out.t = t;
  return out;
}

inline const std::vector<std::string>& error_metric_names() {
  static const std::vector<std::string> names{"u_L2_sup", "u_H1_sup", "u_H2_L2t", "B_L2_sup", "B_H1_sup", "B_H32_sup"};
  return names;
}

namespace detail {

// Running sups and trapezoid integrals of the error norms along sampled times.
struct ErrorAccumulator {
  std::map<std::string, double> value;
  double last_t = 0, last_h2 = 0, h2_integral = 0;
  bool first = true;

  void add(double t, const ErrorNorms& e) {
    for (auto [name, x] : {std::pair{"u_L2_sup", e.u_L2}, std::pair{"u_H1_sup", e.u_H1}, std::pair{"B_L2_sup", e.B_L2},
                           std::pair{"B_H1_sup", e.B_H1}, std::pair{"B_H32_sup", e.B_H32}})
      value[name] = std::max(value[name], x);
    const double h2 = e.u_H2 * e.u_H2;
    if (!first) h2_integral += 0.5 * (t - last_t) * (h2 + last_h2);
    last_t = t;
    last_h2 = h2;
    first = false;
    value["u_H2_L2t"] = std::sqrt(h2_integral);
  }
};

inline bool is_sample(long macro_index, int sample_every, long n_macro) {
  return macro_index % sample_every == 0 || macro_index == n_macro;
}

}  // namespace detail

struct SweepOptions {
  int sample_every = 5;
  bool refinement = true;
  int jobs = 1;
  std::function<void(const std::string&)> progress;
};

struct SweepMember {
  double c = 0;
  bool ok = false;
  std::string error;
  std::map<std::string, double> metrics;
  NormLedger ledger;  // run ledger plus H constituents and error norms
  HSeries h;
};

struct SweepFit {
  std::optional<FitResult> fit;
  std::vector<double> used_c;
  std::vector<double> excluded_c;
};

struct SweepResult {
  std::vector<double> c_list;
  std::vector<SweepMember> members;
  std::map<std::string, double> floors;  // scheme-error estimates from the MHD refinement pair
  std::map<std::string, SweepFit> fits;
  bool complete = false;
  NormLedger mhd_ledger;

  std::vector<double> metric(const std::string& name) const {
    std::vector<double> out;
    for (const auto& m : members)
      if (m.ok) out.push_back(m.metrics.at(name));
    return out;
  }
};

inline const std::vector<std::string>& fitted_metric_names() {
  static const std::vector<std::string> names{"u_L2_sup",  "u_H1_sup",  "u_H2_L2t",      "B_L2_sup",
                                              "B_H1_sup",  "B_H32_sup", "ampere_L2_L2t", "ampere_H12_L2t"};
  return names;
}

inline SweepMember run_member(const DataProfile& profile, Params p, double c, const std::vector<MHDState>& reference,
                              int sample_every) {
  SweepMember m;
  m.c = c;
  p.c = c;
  const InitialData data = make_initial_data(profile, p);
  const long n_macro = detail::macro_steps(p);
  detail::ErrorAccumulator errors;
  NormLedger extra;
  double amp_l2 = 0, amp_h12 = 0, last_t = 0, last_l2 = 0, last_h12 = 0;
  bool first = true;
  auto observe = [&](const StepEvent& ev) {
    const double t = ev.report.t;
    const double l2 = ampere_residual(ev.state, ev.evaluation.fields, 0);
    const double h12 = ampere_residual(ev.state, ev.evaluation.fields, 0.5, p.lift_n);
    if (!first) {
      amp_l2 += 0.5 * (t - last_t) * (l2 * l2 + last_l2 * last_l2);
      amp_h12 += 0.5 * (t - last_t) * (h12 * h12 + last_h12 * last_h12);
    }
    first = false;
    last_t = t;
    last_l2 = l2;
    last_h12 = h12;
    if (!ev.macro_boundary || !detail::is_sample(ev.macro_index, sample_every, n_macro)) return;
    const MHDState ref = interpolate(reference, t);
    const ErrorNorms e = error_norms(ev.state.vorticity - ref.vorticity, ev.state.magnetic - ref.magnetic, p.lift_n);
    errors.add(t, e);
    extra.append(t, "err_u_L2", e.u_L2);
    extra.append(t, "err_u_H1", e.u_H1);
    extra.append(t, "err_B_L2", e.B_L2);
    extra.append(t, "err_B_H32", e.B_H32);
    record_h_constituents(extra, t, ev.state, ev.evaluation, p);
  };
  NSMRun r = run(p, data.nsm, RunOptions{sample_every, false, true}, observe);
  m.ledger = r.ledger;
  m.ledger.merge(extra);
  m.metrics = errors.value;
  m.metrics["ampere_L2_L2t"] = std::sqrt(amp_l2);
  m.metrics["ampere_H12_L2t"] = std::sqrt(amp_h12);
  m.h = assemble_H(m.ledger, c, p.sigma);
  m.metrics["H_sup"] = m.h.sup();
  m.ok = true;
  return m;
}

inline SweepResult sweep_c(const DataProfile& profile, const Params& base, const std::vector<double>& c_list,
                           const SweepOptions& opts = {}) {
  if (c_list.empty()) throw Error("sweep_c: c_list is empty");
  for (std::size_t i = 1; i < c_list.size(); ++i)
    if (!(c_list[i] > c_list[i - 1])) throw Error("sweep_c: c values must be strictly increasing");
  if (opts.sample_every < 1) throw Error("sweep_c: sample_every must be positive");
  auto say = [&](const std::string& msg) {
    if (opts.progress) opts.progress(msg);
  };

  SweepResult out;
  out.c_list = c_list;
  const InitialData data = make_initial_data(profile, base);
  say("mhd reference");
  MHDRun mhd = run_mhd(base, data.mhd, RunOptions{opts.sample_every, true, true});
  out.mhd_ledger = mhd.ledger;

  if (opts.refinement) {
    say("mhd refinement pair");
    Params fine = base;
    fine.dt = 0.5 * base.dt;
    MHDRun half = run_mhd(fine, data.mhd, RunOptions{2 * opts.sample_every, true, true});
    detail::ErrorAccumulator acc;
    for (const MHDState& s : mhd.trajectory) {
      const MHDState f = interpolate(half.trajectory, s.t);
      acc.add(s.t, error_norms(s.vorticity - f.vorticity, s.magnetic - f.magnetic, base.lift_n));
    }
    out.floors = acc.value;
  }

  std::vector<SweepMember> members(c_list.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex say_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= c_list.size() || failed) return;
      {
        std::lock_guard lock(say_mutex);
        say("nsm c = " + format_real(c_list[i]));
      }
      try {
        members[i] = run_member(profile, base, c_list[i], mhd.trajectory, opts.sample_every);
      } catch (const std::exception& e) {
        members[i].c = c_list[i];
        members[i].error = e.what();
        failed = true;
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(opts.jobs, static_cast<int>(c_list.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& m : members)
    if (m.ok || !m.error.empty()) out.members.push_back(std::move(m));
  out.complete = !failed && out.members.size() == c_list.size();
  if (!out.complete) return out;

  for (const auto& name : fitted_metric_names()) {
    SweepFit sf;
    std::vector<double> vals, cs;
    const auto floor = out.floors.find(name);
    for (const auto& m : out.members) {
      const double v = m.metrics.at(name);
      if (floor != out.floors.end() && !(v > 10 * floor->second)) {
        sf.excluded_c.push_back(m.c);
        continue;
      }
      vals.push_back(v);
      cs.push_back(m.c);
    }
    sf.used_c = cs;
    if (vals.size() >= 3 && std::all_of(vals.begin(), vals.end(), [](double v) { return v > 0; }))
      sf.fit = fit_rate(vals, cs);
    out.fits[name] = sf;
  }
  return out;
}

inline void write_sweep_csv(const SweepResult& r, std::ostream& out) {
  out << "c,metric,value\n";
  for (const auto& m : r.members) {
    if (!m.ok) continue;
    for (const auto& [name, v] : m.metrics) out << format_real(m.c) << ',' << name << ',' << format_real(v) << '\n';
  }
}

inline nlohmann::json fit_report(const SweepResult& r) {
  nlohmann::json j;
  j["complete"] = r.complete;
  j["c_list"] = r.c_list;
  j["floors"] = r.floors;
  nlohmann::json fits = nlohmann::json::object();
  for (const auto& [name, sf] : r.fits) {
    nlohmann::json f;
    if (sf.fit) {
      f["slope"] = sf.fit->slope;
      f["intercept"] = sf.fit->intercept;
      f["r2"] = sf.fit->r2;
      f["slope_stderr"] = sf.fit->slope_stderr;
      f["slope_ci95"] = {sf.fit->ci_low, sf.fit->ci_high};
    } else {
      f["slope"] = nullptr;
    }
    f["used_c"] = sf.used_c;
    f["excluded_c"] = sf.excluded_c;
    fits[name] = f;
  }
  j["fits"] = fits;
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& m : r.members)
    if (!m.ok) failures.push_back({{"c", m.c}, {"error", m.error}});
  j["failures"] = failures;
  return j;
}

// ---------------------------------------------------------------- Y_p identity

struct YpReport {
  std::vector<double> t;         // interior sample times
  std::vector<double> Y, dY, d2Y, X, A;
  std::vector<double> residual;  // (Y'' - A) / (sigma c^2) + Y' + X
  std::vector<double> relative;
  std::vector<double> X_gradient;  // gradient form with the axis term
  double max_relative = 0;
};

namespace detail {

inline ScalarField2D signed_power(const ScalarField2D& f, double q) {
  ScalarField2D out = f;
  for (int i = 0; i <= f.grid().Nr; ++i)
    for (int k = 0; k < f.grid().Nz; ++k) {
      const double v = f(i, k);
      out(i, k) = q == 0 ? 1.0 : std::pow(std::abs(v), q);
    }
  return out;
}

}  // namespace detail

// Checks (1/(sigma c^2)) Y_p'' + Y_p' + X_p = A_p / (sigma c^2) for the Maxwell-only
// evolution of Gamma = B/r, with Y_p = (1/p) ||Gamma||_p^p, X_p the dissipation
// pairing and A_p = (p-1) int |dGamma/dt|^2 |Gamma|^(p-2).
inline YpReport yp_identity_check(const std::vector<NSMState>& traj, const Params& p, int power) {
  if (power != 2 && power != 4) throw Error("yp_identity_check: p must be 2 or 4");
  if (traj.size() < 5) throw Error("yp_identity_check: need at least 5 samples");
  const double h = traj[1].t - traj[0].t;
  for (std::size_t n = 1; n < traj.size(); ++n)
    if (std::abs(traj[n].t - traj[n - 1].t - h) > 1e-9 * h) throw Error("yp_identity_check: samples must be uniform");
  const double q = power;
  const double inv = 1.0 / (p.sigma * p.c * p.c);
  std::vector<ScalarField2D> gamma;
  std::vector<double> y;
  for (const auto& s : traj) {
    gamma.push_back(divide_by_r(s.magnetic));
    y.push_back(std::pow(norm_lp(gamma.back(), q), q) / q);
  }
  YpReport rep;
  const GridSpec& g = p.grid;
  for (std::size_t n = 1; n + 1 < traj.size(); ++n) {
    const ScalarField2D& G = gamma[n];
    const ScalarField2D weight = detail::signed_power(G, q - 2);
    ScalarField2D dG = (0.5 / h) * (gamma[n + 1] - gamma[n - 1]);
    const double dy = (y[n + 1] - y[n - 1]) / (2 * h);
    const double d2y = (y[n + 1] - 2 * y[n] + y[n - 1]) / (h * h);
    const double a = (q - 1) * inner(weight, multiply(dG, dG));
    const ScalarField2D kb = divide_by_r(curl_curl(traj[n].magnetic));
    const double x = inner(multiply(weight, G), kb) / p.sigma;

    const ScalarField2D half = detail::signed_power(G, 0.5 * q);
    const NoSwirlVec2 grad = masked(gradient(half));
    double axis = 0;
    for (int k = 0; k < g.Nz; ++k) axis += std::pow(std::abs(G(0, k)), q) * g.dz();
    const double xg = (4 * (q - 1) / (q * q) * inner(grad, grad) + 4 * pi / q * axis) / p.sigma;

    const double res = inv * (d2y - a) + dy + x;
    const double scale = std::max({std::abs(dy), std::abs(x), inv * std::abs(d2y), inv * std::abs(a), 1e-300});
    rep.t.push_back(traj[n].t);
    rep.Y.push_back(y[n]);
    rep.dY.push_back(dy);
    rep.d2Y.push_back(d2y);
    rep.X.push_back(x);
    rep.A.push_back(a);
    rep.residual.push_back(res);
    const bool zero = y[n] == 0 && x == 0 && a == 0;
    rep.relative.push_back(zero ? 0.0 : std::abs(res) / scale);
    rep.X_gradient.push_back(xg);
    rep.max_relative = std::max(rep.max_relative, rep.relative.back());
  }
  return rep;
}

}  // namespace axinsm
