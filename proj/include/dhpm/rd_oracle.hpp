#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dhpm {

enum class FunctionKind { Periodic, Quadratic, Cubic, Trigonometric };

/// Initial condition f(x) on [0, L]. Every kind vanishes at both ends.
///   Periodic:      sum_k A_k sin(k pi x / L), k = 1..5
///   Quadratic:     x (x - L)
///   Cubic:         x (x - L) (x - L/2)
///   Trigonometric: x / L - tan(pi x / (4 L))
struct InputFunctionSpec {
  static constexpr int kNumModes = 5;
  static constexpr double kMaxAmplitude = 0.4;

  FunctionKind kind = FunctionKind::Periodic;
  std::array<double, kNumModes> coefficients{};  // Periodic only
  double length = 1.0;

  static InputFunctionSpec periodic(std::array<double, kNumModes> coeffs, double length = 1.0);
  static InputFunctionSpec quadratic(double length = 1.0);
  static InputFunctionSpec cubic(double length = 1.0);
  static InputFunctionSpec trigonometric(double length = 1.0);

  void validate() const;
  /// Short human-readable form, e.g. "periodic[0.1,0,...]" or "cubic".
  std::string describe() const;
  bool operator==(const InputFunctionSpec&) const = default;
};

std::string to_string(FunctionKind kind);
FunctionKind function_kind_from_string(const std::string& name);

/// f(x); x must lie in [0, L]. The end points return exactly 0.
double eval_input_function(const InputFunctionSpec& spec, double x);

/// Five amplitudes i.i.d. uniform on [-0.4, 0.4].
InputFunctionSpec random_periodic(std::uint64_t seed, double length = 1.0);

struct PdeParams {
  double diffusion = 1e-3;  // D
  double reaction = 1e-3;   // K
  void validate() const;
  bool operator==(const PdeParams&) const = default;
};

/// Stored space-time lattice: nx nodes on [0, L], nt snapshots on [0, t_end].
struct SpaceTimeGrid {
  static constexpr Eigen::Index kNx = 201;
  static constexpr Eigen::Index kNt = 101;
  static constexpr double kEndTime = 10.0;

  double length = 1.0;
  Eigen::Index nx = kNx;
  Eigen::Index nt = kNt;
  double end_time = kEndTime;

  static SpaceTimeGrid standard(double length = 1.0) { return {length}; }
  double dx() const { return length / static_cast<double>(nx - 1); }
  double dt() const { return end_time / static_cast<double>(nt - 1); }
  double x(Eigen::Index i) const;
  double t(Eigen::Index j) const;
  Eigen::VectorXd x_coords() const;
  Eigen::VectorXd t_coords() const;
  Eigen::Index size() const { return nx * nt; }
  void validate() const;
  bool operator==(const SpaceTimeGrid&) const = default;
};

/// u on the stored grid; values(i, j) = u(x_i, t_j).
struct SolutionField {
  SpaceTimeGrid grid;
  Eigen::MatrixXd values;
};

/// Internal march settings. The stored grid is sampled from a finer
/// lattice with spacing grid.dx()/refinement and step time_step/refinement.
struct FtcsSettings {
  double time_step = 1e-3;
  int refinement = 1;
};

/// Explicit forward-time centred-space march of u_t = D u_xx + K u^2 with
/// homogeneous Dirichlet ends. Rejects unstable step ratios up front and
/// aborts (NumericalError) with the offending time on blow-up.
SolutionField ftcs_solve(const PdeParams& params, const InputFunctionSpec& spec,
                         const SpaceTimeGrid& grid, const FtcsSettings& settings = {});

}  // namespace dhpm
