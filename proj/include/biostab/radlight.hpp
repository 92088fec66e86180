#ifndef BIOSTAB_RADLIGHT_HPP
#define BIOSTAB_RADLIGHT_HPP

#include <vector>

#include "biostab/interp.hpp"

namespace biostab {

struct OpticsParams {
  double kappa = 1.0;    // extinction optical depth of the full layer
  double omega = 0.0;    // single-scattering albedo, in [0, 1)
  double theta_i = 0.0;  // incidence angle from vertical, radians, in [0, pi/2)
  double G_t = 1.0;      // top irradiation magnitude

  double cos0() const;
  void validate() const;
};

/// Nondimensional total intensity Lambda(tau) = I_s(tau)/G_t on a uniform
/// optical-depth grid, tau = 0 at the top, tau = kappa at the bottom.
struct IntensityProfile {
  std::vector<double> tau_nodes;
  std::vector<double> lambda;
  Interpolant1D spline;
  double kappa = 0.0;

  double operator()(double tau) const { return spline(tau); }
  /// Evaluation with tau clamped into [0, kappa]; the explicit way to ask
  /// for the boundary value instead of extrapolating.
  double at_clamped(double tau) const;
  double max_lambda() const;
};

enum class FieMethod { Picard, DenseLU };

struct FieDiag {
  int iterations = 0;
  double residual = 0.0;
};

/// Solve the basic-state integral equation
///   Lambda(tau) = exp(-tau/cos0) + (omega/2) int_0^kappa Lambda(t) E_1(|tau-t|) dt
/// by Nystrom discretization with the singular part removed through the
/// closed form int_0^kappa E_1(|tau-t|) dt = 2 - E_2(tau) - E_2(kappa-tau).
/// Picard iteration contracts at rate <= omega; the dense LU route solves the
/// same discrete system directly.
IntensityProfile solve_lambda(const OpticsParams& p, int n_nodes,
                              FieMethod method = FieMethod::Picard,
                              FieDiag* diag = nullptr);

/// Closed form of int_0^kappa E_1(|tau - t|) dt.
double e1_layer_integral(double kappa, double tau);

/// Basic-state diffuse intensity, its tau-derivative, and the diffuse part of
/// the vertical radiative flux (positive = upward), all on the profile grid.
/// dId_dtau at the two wall nodes is closed with one-sided stencils since the
/// integral representation has a weak logarithmic singularity there.
struct DiffuseFields {
  std::vector<double> tau_nodes;
  std::vector<double> I_d;
  std::vector<double> dId_dtau;
  std::vector<double> q_d;
  Interpolant1D I_d_spline, dId_spline, q_d_spline;
};

DiffuseFields diffuse_fields(const IntensityProfile& profile, const OpticsParams& p);

/// Signed vertical fluxes at the profile nodes (negative = downward) and the
/// magnitude of their sum, which must stay positive on the whole layer.
struct FluxProfile {
  std::vector<double> tau_nodes;
  std::vector<double> q_collimated;
  std::vector<double> q_diffuse;
  std::vector<double> q_total_magnitude;
};

FluxProfile flux_profile(const IntensityProfile& profile, const OpticsParams& p,
                         const DiffuseFields& df);

}  // namespace biostab

#endif
