#include "biostab/perturb.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "biostab/errors.hpp"
#include "biostab/fd.hpp"
#include "biostab/specfun.hpp"

namespace biostab {

namespace {

using cd = std::complex<double>;

// Transmission and source moments over one step with exponent alpha
// (Re alpha >= 0 along propagation):
//   m0 = int_0^1 exp(-alpha(1-u)) du,  m1 = int_0^1 exp(-alpha(1-u)) u du.
struct StepMoments {
  cd t;   // exp(-alpha)
  cd m0;
  cd m1;
};

StepMoments step_moments(cd alpha) {
  StepMoments s;
  s.t = std::exp(-alpha);
  if (std::abs(alpha) < 1e-2) {
    const cd a = alpha;
    const cd a2 = a * a, a3 = a2 * a, a4 = a2 * a2;
    s.m0 = 1.0 - a / 2.0 + a2 / 6.0 - a3 / 24.0 + a4 / 120.0;
    s.m1 = 0.5 - a / 6.0 + a2 / 24.0 - a3 / 120.0 + a4 / 720.0;
  } else {
    s.m0 = (1.0 - s.t) / alpha;
    s.m1 = (alpha - 1.0 + s.t) / (alpha * alpha);
  }
  return s;
}

}  // namespace

void sweep_ray(const std::vector<double>& tau, double h, double mu, double k_xi,
               const VectorXcd& r, VectorXcd& psi) {
  const int n = static_cast<int>(tau.size());
  if (mu > 0.0) {
    psi[0] = 0.0;
    for (int j = 0; j < n - 1; ++j) {
      const cd alpha(( tau[j] - tau[j + 1]) / mu, k_xi * h / mu);
      const auto s = step_moments(alpha);
      psi[j + 1] = psi[j] * s.t + h * (r[j] * (s.m0 - s.m1) + r[j + 1] * s.m1);
    }
  } else {
    psi[n - 1] = 0.0;
    for (int j = n - 2; j >= 0; --j) {
      // signed step z_{j+1} -> z_j
      const cd alpha((tau[j + 1] - tau[j]) / mu, -k_xi * h / mu);
      const auto s = step_moments(alpha);
      psi[j] = psi[j + 1] * s.t - h * (r[j + 1] * (s.m0 - s.m1) + r[j] * s.m1);
    }
  }
}

AngularGrid AngularGrid::make(int n_mu_per_hemisphere, int n_phi) {
  if (n_mu_per_hemisphere < 1 || n_phi < 2)
    throw std::invalid_argument("AngularGrid: need n_mu >= 1, n_phi >= 2");
  AngularGrid g;
  g.n_mu = n_mu_per_hemisphere;
  g.n_phi = n_phi;
  const auto dn = gauss_legendre(n_mu_per_hemisphere, -1.0, 0.0);
  const auto up = gauss_legendre(n_mu_per_hemisphere, 0.0, 1.0);
  g.mu = dn.nodes;
  g.mu.insert(g.mu.end(), up.nodes.begin(), up.nodes.end());
  g.w_mu = dn.weights;
  g.w_mu.insert(g.w_mu.end(), up.weights.begin(), up.weights.end());
  g.phi.resize(n_phi);
  g.w_phi.assign(n_phi, 2.0 * M_PI / n_phi);
  for (int b = 0; b < n_phi; ++b) g.phi[b] = 2.0 * M_PI * b / n_phi;
  return g;
}

double AngularGrid::solid_angle() const {
  double s = 0.0;
  for (double w : w_mu) s += w;
  double sp = 0.0;
  for (double w : w_phi) sp += w;
  return s * sp;
}

Eigen::MatrixXd basic_diffuse_directional(const BasicState& b,
                                          const SuspensionParams& p,
                                          const AngularGrid& grid) {
  const int n = b.size();
  const int nd = static_cast<int>(grid.mu.size());
  Eigen::MatrixXd gsd = Eigen::MatrixXd::Zero(nd, n);
  if (p.optics.omega == 0.0) return gsd;

  const double h = b.h();
  const double src_pref = p.optics.omega * p.optics.kappa / (4.0 * M_PI);
  VectorXcd r(n), psi(n);
  for (int a = 0; a < nd; ++a) {
    const double mu = grid.mu[a];
    for (int j = 0; j < n; ++j) r[j] = src_pref * b.n_s[j] * b.I_s[j] / mu;
    sweep_ray(b.tau, h, mu, 0.0, r, psi);
    for (int j = 0; j < n; ++j) gsd(a, j) = psi[j].real();
  }
  return gsd;
}

std::vector<double> collimated_profile(const BasicState& b, const SuspensionParams& p) {
  const int n = b.size();
  std::vector<double> c(n);
  const double c0 = b.cos0;
  for (int j = 0; j < n; ++j) c[j] = (b.kappa / c0) * b.I_s_c[j];
  (void)p;
  return c;
}

DiffuseSolveResult diffuse_solve(const BasicState& b, const SuspensionParams& p,
                                 const AngularGrid& grid, double k,
                                 const VectorXcd& N, const VectorXcd& Phi,
                                 double tol, const Eigen::MatrixXd* gsd_in) {
  const int n = b.size();
  if (N.size() != n || Phi.size() != n)
    throw std::invalid_argument("diffuse_solve: N/Phi size mismatch");
  const double omega = p.optics.omega;
  const double kappa = p.optics.kappa;
  const double h = b.h();

  DiffuseSolveResult out;
  out.I_d = VectorXcd::Zero(n);
  out.P = VectorXcd::Zero(n);
  out.Q = VectorXcd::Zero(n);
  if (omega == 0.0) return out;

  Eigen::MatrixXd gsd_local;
  const Eigen::MatrixXd* gsd = gsd_in;
  if (!gsd) {
    gsd_local = basic_diffuse_directional(b, p, grid);
    gsd = &gsd_local;
  }

  const auto c_ic = collimated_profile(b, p);
  VectorXcd Ic(n);
  for (int j = 0; j < n; ++j) Ic[j] = c_ic[j] * Phi[j];

  const int nmu = static_cast<int>(grid.mu.size());
  const int nphi = grid.n_phi;
  const double pref = omega * kappa / (4.0 * M_PI);

  VectorXcd Id = VectorXcd::Zero(n);
  VectorXcd Id_new(n), Pn(n), Qn(n), r(n), psi(n);
  double prev_delta = -1.0;

  const int max_sweeps = 600;
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    Id_new.setZero();
    Pn.setZero();
    Qn.setZero();
    for (int a = 0; a < nmu; ++a) {
      const double mu = grid.mu[a];
      const double s_mu = std::sqrt(std::max(0.0, 1.0 - mu * mu));
      // mu-dependent part of the source; the phi dependence enters only
      // through the attenuation exponent k*xi.
      for (int j = 0; j < n; ++j) {
        r[j] = (pref * (b.n_s[j] * (Ic[j] + Id[j]) + b.I_s[j] * N[j]) -
                kappa * (*gsd)(a, j) * N[j]) /
               mu;
      }
      for (int bph = 0; bph < nphi; ++bph) {
        const double xi = s_mu * std::cos(grid.phi[bph]);
        const double eta = s_mu * std::sin(grid.phi[bph]);
        sweep_ray(b.tau, h, mu, k * xi, r, psi);
        const double w = grid.w_mu[a] * grid.w_phi[bph];
        for (int j = 0; j < n; ++j) {
          Id_new[j] += w * psi[j];
          Pn[j] += w * xi * psi[j];
          Qn[j] += w * eta * psi[j];
        }
      }
    }
    double delta = 0.0;
    for (int j = 0; j < n; ++j) delta = std::max(delta, std::abs(Id_new[j] - Id[j]));
    Id.swap(Id_new);
    out.P = Pn;
    out.Q = Qn;
    out.diag.sweeps = sweep;
    out.diag.last_delta = delta;
    if (prev_delta > 0.0 && delta > 0.0)
      out.diag.max_ratio = std::max(out.diag.max_ratio, delta / prev_delta);
    prev_delta = delta;
    if (delta <= tol) break;
    if (sweep == max_sweeps)
      throw SolverError("diffuse_solve: source iteration did not converge, delta " +
                        std::to_string(delta));
  }
  out.I_d = Id;
  return out;
}

PerturbOperators assemble_operators(const BasicState& b, const SuspensionParams& p,
                                    const AngularGrid& grid, double k, Exec exec) {
  const int n = b.size();
  PerturbOperators ops;
  ops.k = k;
  ops.M_Id = MatrixXcd::Zero(n, n);
  ops.M_P = MatrixXcd::Zero(n, n);
  ops.M_Q = MatrixXcd::Zero(n, n);
  const auto cc = collimated_profile(b, p);
  ops.c_ic = Eigen::Map<const Eigen::VectorXd>(cc.data(), n);

  if (p.optics.omega == 0.0) return ops;

  const Eigen::MatrixXd gsd = basic_diffuse_directional(b, p, grid);
  const Eigen::MatrixXd C = cumulative_integral_matrix(n, b.h());

  auto column = [&](int j) {
    VectorXcd N = VectorXcd::Zero(n);
    N[j] = 1.0;
    VectorXcd Phi = C.col(j).cast<cd>();
    const auto res = diffuse_solve(b, p, grid, k, N, Phi, 1e-10, &gsd);
    ops.M_Id.col(j) = res.I_d;
    ops.M_P.col(j) = res.P;
    ops.M_Q.col(j) = res.Q;
  };

  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int j = 0; j < n; ++j) column(j);
  } else {
    for (int j = 0; j < n; ++j) column(j);
  }
  return ops;
}

}  // namespace biostab
