#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace axinsm {

inline constexpr double pi = 3.14159265358979323846;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised for NaN/Inf, failed solves and rejected steps.
struct NumericalError : Error {
  using Error::Error;
};

struct CflViolation : NumericalError {
  double cfl;
  double suggested_dt;
  CflViolation(double cfl_value, double dt_hint)
      : NumericalError("CFL violation: advective CFL " + std::to_string(cfl_value) +
                       " > 1, suggested dt " + std::to_string(dt_hint)),
        cfl(cfl_value), suggested_dt(dt_hint) {}
};

enum class Parity { even, odd };

inline Parity flipped(Parity p) { return p == Parity::even ? Parity::odd : Parity::even; }
inline const char* to_string(Parity p) { return p == Parity::even ? "even" : "odd"; }

struct GridSpec {
  int Nr = 128;
  int Nz = 128;
  double R = pi;
  double Lz = 2.0 * pi;

  double dr() const { return R / Nr; }
  double dz() const { return Lz / Nz; }
  double r(int i) const { return i * dr(); }
  double z(int k) const { return k * dz(); }
  int rows() const { return Nr + 1; }
  std::size_t size() const { return static_cast<std::size_t>(Nr + 1) * Nz; }

  void validate() const {
    if (Nr < 8 || Nz < 8) throw Error("grid: Nr and Nz must be at least 8");
    if ((Nz & (Nz - 1)) != 0) throw Error("grid: Nz must be a power of two");
    if (!(R > 0) || !(Lz > 0)) throw Error("grid: R and Lz must be positive");
  }

  bool operator==(const GridSpec&) const = default;
};

enum class MaxwellScheme { crank_nicolson, exact_split };

inline const char* to_string(MaxwellScheme s) {
  return s == MaxwellScheme::crank_nicolson ? "crank_nicolson" : "exact_split";
}

struct Params {
  double nu = 0.1;
  double sigma = 4.0;
  double c = 16.0;
  GridSpec grid{};
  double dt = 2e-3;
  double t_end = 1.0;
  MaxwellScheme maxwell_scheme = MaxwellScheme::crank_nicolson;
  // Substep the Ohmic relaxation layer (rate sigma*c^2) while it is active.
  bool resolve_layer = true;
  double layer_step = 0.25;
  double cfl_target = 0.5;
  int lift_n = 64;

  double relaxation_rate() const { return sigma * c * c; }

  void validate() const {
    grid.validate();
    if (!(nu > 0) || !(sigma > 0) || !(c > 0) || !(dt > 0))
      throw Error("params: nu, sigma, c and dt must be positive");
    if (!(t_end >= 0)) throw Error("params: t_end must be non-negative");
    if (!(layer_step > 0) || !(cfl_target > 0) || cfl_target > 1)
      throw Error("params: layer_step and cfl_target must lie in (0, 1]");
    if (lift_n < 8 || (lift_n & (lift_n - 1)) != 0)
      throw Error("params: lift_n must be a power of two >= 8");
  }
};

// Samples on r_i = i*dr (i = 0..Nr), z_k = k*dz (k = 0..Nz-1), row-major in r.
class ScalarField2D {
 public:
  ScalarField2D() = default;
  ScalarField2D(const GridSpec& grid, Parity parity)
      : grid_(grid), parity_(parity), values_(grid.size(), 0.0) {}

  template <class F>
  static ScalarField2D sample(const GridSpec& grid, Parity parity, F&& f) {
    ScalarField2D out(grid, parity);
    for (int i = 0; i <= grid.Nr; ++i)
      for (int k = 0; k < grid.Nz; ++k) out(i, k) = f(grid.r(i), grid.z(k));
    out.enforce_parity();
    return out;
  }

  const GridSpec& grid() const { return grid_; }
  Parity parity() const { return parity_; }
  int Nr() const { return grid_.Nr; }
  int Nz() const { return grid_.Nz; }

  double& operator()(int i, int k) { return values_[static_cast<std::size_t>(i) * grid_.Nz + k]; }
  double operator()(int i, int k) const { return values_[static_cast<std::size_t>(i) * grid_.Nz + k]; }
  double* row(int i) { return values_.data() + static_cast<std::size_t>(i) * grid_.Nz; }
  const double* row(int i) const { return values_.data() + static_cast<std::size_t>(i) * grid_.Nz; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  void enforce_parity() {
    if (parity_ == Parity::odd) std::fill_n(values_.begin(), grid_.Nz, 0.0);
  }
  void zero_wall() { std::fill_n(row(grid_.Nr), grid_.Nz, 0.0); }

  double max_abs() const {
    double m = 0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }
  bool finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  ScalarField2D& operator+=(const ScalarField2D& o) {
    check_compatible(o);
    for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += o.values_[n];
    return *this;
  }
  ScalarField2D& operator-=(const ScalarField2D& o) {
    check_compatible(o);
    for (std::size_t n = 0; n < values_.size(); ++n) values_[n] -= o.values_[n];
    return *this;
  }
  ScalarField2D& operator*=(double a) {
    for (double& v : values_) v *= a;
    return *this;
  }
  // this += a * o
  ScalarField2D& axpy(double a, const ScalarField2D& o) {
    check_compatible(o);
    for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += a * o.values_[n];
    return *this;
  }

  friend ScalarField2D operator+(ScalarField2D a, const ScalarField2D& b) { return a += b; }
  friend ScalarField2D operator-(ScalarField2D a, const ScalarField2D& b) { return a -= b; }
  friend ScalarField2D operator*(double s, ScalarField2D a) { return a *= s; }

  bool operator==(const ScalarField2D& o) const {
    return grid_ == o.grid_ && parity_ == o.parity_ && values_ == o.values_;
  }

 private:
  void check_compatible(const ScalarField2D& o) const {
    if (!(grid_ == o.grid_)) throw Error("field arithmetic: grid mismatch");
    if (parity_ != o.parity_) throw Error("field arithmetic: parity mismatch");
  }

  GridSpec grid_{};
  Parity parity_ = Parity::even;
  std::vector<double> values_;
};

inline void require_parity(const ScalarField2D& f, Parity expected, const char* message = "parity mismatch") {
  if (f.parity() != expected) throw Error(message);
}

// Meridional vector field radial*e_r + axial*e_z.
struct NoSwirlVec2 {
  ScalarField2D radial;
  ScalarField2D axial;

  NoSwirlVec2() = default;
  explicit NoSwirlVec2(const GridSpec& g) : radial(g, Parity::odd), axial(g, Parity::even) {}
  NoSwirlVec2(ScalarField2D r, ScalarField2D z) : radial(std::move(r)), axial(std::move(z)) {
    require_parity(radial, Parity::odd);
    require_parity(axial, Parity::even);
  }

  const GridSpec& grid() const { return radial.grid(); }
  void zero_wall() {
    radial.zero_wall();
    axial.zero_wall();
  }
  NoSwirlVec2& operator+=(const NoSwirlVec2& o) {
    radial += o.radial;
    axial += o.axial;
    return *this;
  }
  NoSwirlVec2& operator-=(const NoSwirlVec2& o) {
    radial -= o.radial;
    axial -= o.axial;
    return *this;
  }
  NoSwirlVec2& operator*=(double a) {
    radial *= a;
    axial *= a;
    return *this;
  }
  NoSwirlVec2& axpy(double a, const NoSwirlVec2& o) {
    radial.axpy(a, o.radial);
    axial.axpy(a, o.axial);
    return *this;
  }
  friend NoSwirlVec2 operator+(NoSwirlVec2 a, const NoSwirlVec2& b) { return a += b; }
  friend NoSwirlVec2 operator-(NoSwirlVec2 a, const NoSwirlVec2& b) { return a -= b; }
  friend NoSwirlVec2 operator*(double s, NoSwirlVec2 a) { return a *= s; }
  bool operator==(const NoSwirlVec2&) const = default;
};

struct NSMState {
  ScalarField2D vorticity;  // odd
  NoSwirlVec2 electric;
  ScalarField2D magnetic;   // odd
  double t = 0;

  NSMState() = default;
  explicit NSMState(const GridSpec& g)
      : vorticity(g, Parity::odd), electric(g), magnetic(g, Parity::odd) {}
  const GridSpec& grid() const { return vorticity.grid(); }
  bool finite() const {
    return vorticity.finite() && electric.radial.finite() && electric.axial.finite() && magnetic.finite();
  }
  bool operator==(const NSMState&) const = default;
};

struct MHDState {
  ScalarField2D vorticity;  // odd
  ScalarField2D magnetic;   // odd
  double t = 0;

  MHDState() = default;
  explicit MHDState(const GridSpec& g) : vorticity(g, Parity::odd), magnetic(g, Parity::odd) {}
  const GridSpec& grid() const { return vorticity.grid(); }
  bool finite() const { return vorticity.finite() && magnetic.finite(); }
  bool operator==(const MHDState&) const = default;
};

struct DerivedFields {
  ScalarField2D stream;            // psi, odd tag, O(r^2) at the axis
  NoSwirlVec2 velocity;
  NoSwirlVec2 current;             // j = sigma (c E + induction)
  NoSwirlVec2 induction;           // Leray projection of u x B
  ScalarField2D magnetic_over_r;   // B_theta / r, even
  ScalarField2D vorticity_over_r;  // omega_theta / r, even
};

struct StepReport {
  double t = 0;
  double dt_used = 0;
  double cfl_advective = 0;
  double energy_total = 0;
  double energy_balance_residual = 0;
  double ampere_residual_L2 = 0;
  double div_E_residual = 0;
  double kinetic_energy = 0;
  double em_energy = 0;
  double u_dissipation = 0;
  double j_dissipation = 0;
};

// Append-only (t, name, value) table; times are non-decreasing per name.
class NormLedger {
 public:
  struct Row {
    double t;
    std::string name;
    double value;
  };

  void append(double t, const std::string& name, double value) {
    auto it = last_t_.find(name);
    if (it != last_t_.end() && t < it->second)
      throw Error("ledger: time went backwards for '" + name + "'");
    last_t_[name] = t;
    rows_.push_back({t, name, value});
  }

  const std::vector<Row>& rows() const { return rows_; }
  bool has(const std::string& name) const { return last_t_.count(name) != 0; }

  std::vector<std::pair<double, double>> series(const std::string& name) const {
    std::vector<std::pair<double, double>> out;
    for (const auto& row : rows_)
      if (row.name == name) out.emplace_back(row.t, row.value);
    return out;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [name, t] : last_t_) out.push_back(name);
    return out;
  }

  void merge(const NormLedger& other) {
    for (const auto& row : other.rows_) append(row.t, row.name, row.value);
  }

 private:
  std::vector<Row> rows_;
  std::map<std::string, double> last_t_;
};

}  // namespace axinsm
