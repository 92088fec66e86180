#ifndef BIOSTAB_EQUILIB_HPP
#define BIOSTAB_EQUILIB_HPP

#include <utility>
#include <vector>

#include "biostab/interp.hpp"
#include "biostab/radlight.hpp"

namespace biostab {

/// Swimming response to light: positive below the critical intensity,
/// negative above it, zero at I_c, magnitude < 1.
struct TaxisModel {
  enum class Kind { Tanh, Table };

  Kind kind = Kind::Tanh;
  double steepness = 1.0;  // tanh kind: T(I) = tanh(s (1 - I/I_c))
  double I_c = 1.0;
  Interpolant1D table;  // Table kind: monotone cubic through (I, T) samples

  /// Returns (T, dT/dI). Table models hold their end values outside the
  /// tabulated range.
  std::pair<double, double> eval(double I) const;
  void validate() const;

  static TaxisModel tanh_model(double steepness, double I_c = 1.0);
  static TaxisModel table_model(std::vector<double> I, std::vector<double> T,
                                double I_c = 1.0);
};

std::pair<double, double> taxis_eval(const TaxisModel& m, double I);

struct SuspensionParams {
  double Sc = 20.0;
  double Ta = 0.0;
  double Vc = 0.0;
  OpticsParams optics;
  TaxisModel taxis;

  void validate() const;
};

/// Equilibrium profiles on a uniform z-grid, z = 0 at the rigid bottom.
struct BasicState {
  std::vector<double> z_nodes;
  std::vector<double> n_s;
  std::vector<double> tau;     // kappa * integral_z^1 n_s
  std::vector<double> I_s, I_s_c, I_s_d;
  std::vector<double> dIsd_dz;
  std::vector<double> q_mag;   // |vertical radiative flux|, > 0 everywhere
  std::vector<double> T_s, dT_dI;
  std::vector<double> dns_dz;
  double kappa = 0.0;
  double cos0 = 1.0;

  int size() const { return static_cast<int>(z_nodes.size()); }
  double h() const { return z_nodes[1] - z_nodes[0]; }
};

struct ShootDiag {
  double n_s0 = 0.0;       // converged bottom concentration
  double residual = 0.0;   // |nu(1) - 1|
  int evaluations = 0;
};

/// Shooting solution of dn_s/dz = V_c T(I_s) n_s with unit total mass.
/// The intensity enters through the already-solved profile, clamped to its
/// optical-depth range. N_z >= 65 nodes, classic fixed-step RK4 inside.
BasicState solve_basic_state(const SuspensionParams& p, int N_z,
                             const IntensityProfile& lam,
                             const DiffuseFields* df = nullptr,
                             ShootDiag* diag = nullptr);

/// Location of the concentration maximum, parabolic fit around the max node.
double concentration_peak(const BasicState& b);

/// Tune the tanh steepness so the concentration peak sits at mid-height for
/// vertical illumination; returns the calibrated steepness.
double calibrate_steepness(const SuspensionParams& p, int N_z, int fie_nodes);

}  // namespace biostab

#endif
