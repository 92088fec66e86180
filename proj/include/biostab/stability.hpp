#ifndef BIOSTAB_STABILITY_HPP
#define BIOSTAB_STABILITY_HPP

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "biostab/perturb.hpp"

namespace biostab {

/// Coefficient profiles multiplying Phi, D Phi and D^2 Phi in the
/// concentration equation, expanded from the collimated coupling with the
/// slant factor 1/cos(theta_i) carried through.
struct XiProfiles {
  Eigen::VectorXd xi1, xi2, xi3;
};

XiProfiles xi_profiles(const BasicState& b, const SuspensionParams& p);

/// Generalized eigenproblem A x = sigma B x for x = (W, Z, Phi), with
/// boundary rows in A and zero rows in B. A depends affinely on R.
struct DiscretizedSystem {
  double k = 0.0;
  double R = 0.0;
  int N_z = 0;
  MatrixXcd A, B;
};

/// Re-usable (A0, A_R, B) split so neutral-curve root finding can reassemble
/// A = A0 + R * A_R without touching the operators.
struct SystemTemplate {
  double k = 0.0;
  int N_z = 0;
  MatrixXcd A0, A_R, B;

  DiscretizedSystem instantiate(double R) const;
};

SystemTemplate build_template(const BasicState& b, const SuspensionParams& p,
                              const PerturbOperators& ops, double k);

DiscretizedSystem assemble(const BasicState& b, const SuspensionParams& p,
                           const PerturbOperators& ops, double k, double R);

/// Rotating Benard surrogate on the same W/Z machinery: the concentration
/// block is replaced by a uniform-gradient temperature-like equation, which
/// reduces to the textbook problem and pins the velocity blocks, boundary
/// rows and eigensolver against known critical values.
enum class Wall { Rigid, Free };
SystemTemplate build_surrogate_template(int N_z, double Sc, double Ta, double k,
                                        Wall bottom = Wall::Rigid,
                                        Wall top = Wall::Free);

struct LeadingMode {
  std::complex<double> sigma;
  Eigen::VectorXcd x;
  double residual = 0.0;  // ||A x - sigma B x|| / ||x|| after row equilibration
};

/// Eigenvalue with the largest real part among the finite spectrum; the
/// boundary rows produce infinite modes which are filtered by magnitude.
LeadingMode leading_mode(const DiscretizedSystem& sys, double spurious_cut = 1e8);
std::complex<double> leading_sigma(const DiscretizedSystem& sys,
                                   double spurious_cut = 1e8);

enum class BranchKind { Stationary, Oscillatory };

struct NeutralPoint {
  double k = 0.0;
  double R = 0.0;
  double im_sigma = 0.0;
  BranchKind branch = BranchKind::Stationary;
};

struct NeutralOptions {
  double R_guess = 500.0;
  double R_floor = 1e-6;
  double R_ceil = 1e9;
  double re_tol = 1e-6;     // |Re sigma| <= re_tol * max(1, |Im sigma|)
  double osc_im_cut = 1e-4;
};

/// Zero of Re sigma_lead(R) at fixed k: geometric bracket expansion from the
/// initial guess, then safeguarded secant. A detected monotonicity violation
/// falls back to a fine scan of the bracket.
NeutralPoint neutral_R(const SystemTemplate& tmpl, double k,
                       const NeutralOptions& opt = {});
NeutralPoint neutral_R(const BasicState& b, const SuspensionParams& p,
                       const PerturbOperators& ops, double k,
                       const NeutralOptions& opt = {});

struct CriticalResult {
  double k_c = 0.0;
  double R_c = 0.0;
  double lambda_c = 0.0;
  double im_sigma_c = 0.0;
  bool overstable = false;
  std::vector<double> branch_points;
  std::vector<NeutralPoint> scan;
};

/// Memoizes operator assembly per wavenumber for one basic state; safe to
/// share across threads, read-only once built.
class OperatorCache {
 public:
  OperatorCache(const BasicState& b, const SuspensionParams& p, AngularGrid grid,
                Exec exec = Exec::Parallel);
  const PerturbOperators& get(double k);
  const BasicState& basic_state() const { return *b_; }
  const SuspensionParams& params() const { return *p_; }

 private:
  const BasicState* b_;
  const SuspensionParams* p_;
  AngularGrid grid_;
  Exec exec_;
  std::map<double, std::unique_ptr<PerturbOperators>> cache_;
  std::mutex mu_;
};

struct CriticalOptions {
  double k_min = 0.5;
  double k_max = 10.0;
  int n_scan = 24;
  NeutralOptions neutral;
  bool refine_branch_points = true;
};

/// Log-uniform scan of the neutral curve plus golden-section refinement
/// around the discrete minimum.
CriticalResult critical_point(OperatorCache& cache, const CriticalOptions& opt = {});

/// Same driver on an arbitrary k -> template factory (used by the surrogate).
CriticalResult critical_point_generic(
    const std::function<SystemTemplate(double)>& make_template,
    const CriticalOptions& opt);

/// True when the flow-free suspension (R = 0) is linearly stable at every
/// probed wavenumber: a steep light response can destabilize the equilibrium
/// through self-shadowing alone, and then no positive onset Rayleigh number
/// exists.
bool flow_free_stable(const BasicState& b, const SuspensionParams& p,
                      const AngularGrid& grid,
                      const std::vector<double>& k_probe = {0.5, 1.0, 2.0, 4.0});

/// Mid-height calibration refined by admissibility: starting from the
/// peak-position steepness, back off geometrically until the equilibrium is
/// flow-free stable at every listed incidence angle (radians). Returns the
/// steepest admissible value; the peak stays inside the mid-height window.
double calibrate_admissible_steepness(const SuspensionParams& p, int N_z,
                                      int fie_nodes,
                                      const std::vector<double>& thetas);

}  // namespace biostab

#endif
