#include "dhpm/rd_oracle.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "dhpm/errors.hpp"

namespace dhpm {

InputFunctionSpec InputFunctionSpec::periodic(std::array<double, kNumModes> coeffs, double length) {
  InputFunctionSpec s;
  s.kind = FunctionKind::Periodic;
  s.coefficients = coeffs;
  s.length = length;
  s.validate();
  return s;
}

InputFunctionSpec InputFunctionSpec::quadratic(double length) {
  InputFunctionSpec s;
  s.kind = FunctionKind::Quadratic;
  s.length = length;
  s.validate();
  return s;
}

InputFunctionSpec InputFunctionSpec::cubic(double length) {
  InputFunctionSpec s;
  s.kind = FunctionKind::Cubic;
  s.length = length;
  s.validate();
  return s;
}

InputFunctionSpec InputFunctionSpec::trigonometric(double length) {
  InputFunctionSpec s;
  s.kind = FunctionKind::Trigonometric;
  s.length = length;
  s.validate();
  return s;
}

void InputFunctionSpec::validate() const {
  if (!(length > 0.0) || !std::isfinite(length)) {
    throw ValidationError("input function domain length must be positive and finite");
  }
  if (kind == FunctionKind::Periodic) {
    for (double a : coefficients) {
      if (!std::isfinite(a) || std::abs(a) > kMaxAmplitude) {
        std::ostringstream msg;
        msg << "periodic amplitude " << a << " outside [-" << kMaxAmplitude << ", "
            << kMaxAmplitude << "]";
        throw ValidationError(msg.str());
      }
    }
  }
}

std::string InputFunctionSpec::describe() const {
  std::ostringstream out;
  out << to_string(kind);
  if (kind == FunctionKind::Periodic) {
    out.precision(17);
    out << "[";
    for (int k = 0; k < kNumModes; ++k) out << (k ? "," : "") << coefficients[k];
    out << "]";
  }
  out.precision(17);
  out << "@L=" << length;
  return out.str();
}

std::string to_string(FunctionKind kind) {
  switch (kind) {
    case FunctionKind::Periodic: return "periodic";
    case FunctionKind::Quadratic: return "quadratic";
    case FunctionKind::Cubic: return "cubic";
    case FunctionKind::Trigonometric: return "trigonometric";
  }
  return "unknown";
}

FunctionKind function_kind_from_string(const std::string& name) {
  if (name == "periodic") return FunctionKind::Periodic;
  if (name == "quadratic") return FunctionKind::Quadratic;
  if (name == "cubic") return FunctionKind::Cubic;
  if (name == "trigonometric" || name == "trig") return FunctionKind::Trigonometric;
  throw ValidationError("unknown input function kind '" + name + "'");
}

double eval_input_function(const InputFunctionSpec& spec, double x) {
  const double L = spec.length;
  if (!(x >= 0.0 && x <= L)) {
    std::ostringstream msg;
    msg << "x = " << x << " outside the domain [0, " << L << "]";
    throw ValidationError(msg.str());
  }
  if (x == 0.0 || x == L) return 0.0;
  using std::numbers::pi;
  switch (spec.kind) {
    case FunctionKind::Periodic: {
      double f = 0.0;
      for (int k = 0; k < InputFunctionSpec::kNumModes; ++k) {
        f += spec.coefficients[k] * std::sin((k + 1) * pi * x / L);
      }
      return f;
    }
    case FunctionKind::Quadratic: return x * (x - L);
    case FunctionKind::Cubic: return x * (x - L) * (x - 0.5 * L);
    case FunctionKind::Trigonometric: return x / L - std::tan(pi * x / (4.0 * L));
  }
  return 0.0;
}

InputFunctionSpec random_periodic(std::uint64_t seed, double length) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(-InputFunctionSpec::kMaxAmplitude,
                                             InputFunctionSpec::kMaxAmplitude);
  std::array<double, InputFunctionSpec::kNumModes> a{};
  for (double& v : a) v = amp(rng);
  return InputFunctionSpec::periodic(a, length);
}

void PdeParams::validate() const {
  if (!(diffusion > 0.0) || !std::isfinite(diffusion)) {
    throw ValidationError("diffusion coefficient D must be positive");
  }
  if (!(reaction >= 0.0) || !std::isfinite(reaction)) {
    throw ValidationError("reaction rate K must be non-negative");
  }
}

double SpaceTimeGrid::x(Eigen::Index i) const {
  return i == nx - 1 ? length : length * static_cast<double>(i) / static_cast<double>(nx - 1);
}

double SpaceTimeGrid::t(Eigen::Index j) const {
  return j == nt - 1 ? end_time : end_time * static_cast<double>(j) / static_cast<double>(nt - 1);
}

Eigen::VectorXd SpaceTimeGrid::x_coords() const {
  Eigen::VectorXd v(nx);
  for (Eigen::Index i = 0; i < nx; ++i) v[i] = x(i);
  return v;
}

Eigen::VectorXd SpaceTimeGrid::t_coords() const {
  Eigen::VectorXd v(nt);
  for (Eigen::Index j = 0; j < nt; ++j) v[j] = t(j);
  return v;
}

void SpaceTimeGrid::validate() const {
  if (!(length > 0.0) || !(end_time > 0.0) || nx < 3 || nt < 2) {
    throw ValidationError("space-time grid needs L > 0, t_end > 0, nx >= 3, nt >= 2");
  }
}

SolutionField ftcs_solve(const PdeParams& params, const InputFunctionSpec& spec,
                         const SpaceTimeGrid& grid, const FtcsSettings& settings) {
  params.validate();
  spec.validate();
  grid.validate();
  if (std::abs(spec.length - grid.length) > 1e-12 * grid.length) {
    throw ValidationError("input function length does not match grid length");
  }
  if (settings.refinement < 1 || !(settings.time_step > 0.0)) {
    throw ValidationError("FTCS refinement must be >= 1 and time step positive");
  }
  const int r = settings.refinement;
  const double dt = settings.time_step / r;
  const double dx = grid.dx() / r;
  const double ratio = params.diffusion * dt / (dx * dx);
  if (ratio > 0.5) {
    std::ostringstream msg;
    msg << "FTCS unstable: D*dt/dx^2 = " << ratio << " exceeds 0.5";
    throw ValidationError(msg.str());
  }
  const double steps_per_snapshot_real = grid.dt() / dt;
  const auto stride = static_cast<long>(std::llround(steps_per_snapshot_real));
  if (stride < 1 || std::abs(steps_per_snapshot_real - static_cast<double>(stride)) > 1e-9) {
    throw ValidationError("snapshot spacing is not a whole number of FTCS steps");
  }

  const Eigen::Index n = (grid.nx - 1) * r + 1;
  Eigen::VectorXd u(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double xi = i == n - 1 ? grid.length : dx * static_cast<double>(i);
    u[i] = eval_input_function(spec, xi);
  }
  Eigen::VectorXd next = u;

  SolutionField field{grid, Eigen::MatrixXd::Zero(grid.nx, grid.nt)};
  auto store = [&](Eigen::Index j) {
    for (Eigen::Index i = 0; i < grid.nx; ++i) field.values(i, j) = u[i * r];
  };
  store(0);

  const double D = params.diffusion;
  const double K = params.reaction;
  const double inv_dx2 = 1.0 / (dx * dx);
  for (Eigen::Index j = 1; j < grid.nt; ++j) {
    for (long s = 0; s < stride; ++s) {
      next[0] = 0.0;
      next[n - 1] = 0.0;
      for (Eigen::Index i = 1; i + 1 < n; ++i) {
        const double lap = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_dx2;
        next[i] = u[i] + dt * (D * lap + K * u[i] * u[i]);
      }
      u.swap(next);
    }
    if (!u.allFinite()) {
      std::ostringstream msg;
      msg << "FTCS march produced non-finite values by t = " << grid.t(j);
      throw NumericalError(msg.str());
    }
    store(j);
  }
  // Initial column is the exact input function; boundaries are exact zeros.
  for (Eigen::Index i = 0; i < grid.nx; ++i) field.values(i, 0) = eval_input_function(spec, grid.x(i));
  field.values.row(0).setZero();
  field.values.row(grid.nx - 1).setZero();
  return field;
}

}  // namespace dhpm
