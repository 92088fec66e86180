#ifndef BIOSTAB_PERTURB_HPP
#define BIOSTAB_PERTURB_HPP

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "biostab/equilib.hpp"

namespace biostab {

using VectorXcd = Eigen::VectorXcd;
using MatrixXcd = Eigen::MatrixXcd;

/// Product grid over the unit sphere: Gauss-Legendre in mu = cos(theta) on
/// each hemisphere separately (no ray parallel to the layer), uniform in phi.
struct AngularGrid {
  std::vector<double> mu, w_mu;    // size 2*n_mu: downward block then upward
  std::vector<double> phi, w_phi;  // size n_phi
  int n_mu = 0;                    // per hemisphere
  int n_phi = 0;

  static AngularGrid make(int n_mu_per_hemisphere, int n_phi);
  double solid_angle() const;  // should be 4*pi
};

struct SourceIterDiag {
  int sweeps = 0;
  double last_delta = 0.0;
  double max_ratio = 0.0;  // max contraction ratio over the measured sweeps
};

struct DiffuseSolveResult {
  VectorXcd I_d;  // perturbed diffuse intensity on the z grid
  VectorXcd P;    // horizontal flux component along x
  VectorXcd Q;    // horizontal flux component along y (zero with m = 0)
  SourceIterDiag diag;
};

/// Single-ray march over the layer with the exact per-step integrating factor
/// and a linear-in-z source closure: mu > 0 integrates upward from zero
/// inflow at z = 0, mu < 0 downward from z = 1. tau holds the optical depth
/// at the nodes, k_xi the horizontal attenuation factor k * xi.
void sweep_ray(const std::vector<double>& tau, double h, double mu, double k_xi,
               const VectorXcd& r, VectorXcd& psi);

/// Per-direction basic-state diffuse intensity on the z grid; rows follow the
/// mu ordering of the grid. Needed in the perturbed source term.
Eigen::MatrixXd basic_diffuse_directional(const BasicState& b,
                                          const SuspensionParams& p,
                                          const AngularGrid& grid);

/// Coefficient c(z) with the perturbed collimated intensity given by
/// c(z) * Phi(z); a pure diagonal scaling of the Phi unknowns.
std::vector<double> collimated_profile(const BasicState& b, const SuspensionParams& p);

/// Source-iteration solve of the perturbed transport problem at horizontal
/// wavenumber k (convention m = 0, l = k) for a given concentration amplitude
/// N and its antiderivative Phi. Rays march with the exact integrating factor
/// per step and a linear-in-z source closure; iteration contracts at rate
/// <= omega.
DiffuseSolveResult diffuse_solve(const BasicState& b, const SuspensionParams& p,
                                 const AngularGrid& grid, double k,
                                 const VectorXcd& N, const VectorXcd& Phi,
                                 double tol = 1e-10,
                                 const Eigen::MatrixXd* gsd = nullptr);

/// Dense linear maps from the concentration amplitude N to the perturbed
/// diffuse intensity and horizontal flux components at fixed k.
struct PerturbOperators {
  double k = 0.0;
  MatrixXcd M_Id, M_P, M_Q;
  Eigen::VectorXd c_ic;  // diagonal of the collimated map acting on Phi
};

enum class Exec { Serial, Parallel };

/// Column-by-column assembly: each column is diffuse_solve applied to a unit
/// basis vector in N, paired with the matching column of the discrete
/// antiderivative. Columns are independent; Parallel runs them under OpenMP.
PerturbOperators assemble_operators(const BasicState& b, const SuspensionParams& p,
                                    const AngularGrid& grid, double k,
                                    Exec exec = Exec::Parallel);

}  // namespace biostab

#endif
