#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "biostab/fd.hpp"
#include "biostab/perturb.hpp"
#include "oracles.hpp"

using namespace biostab;
using cd = std::complex<double>;

namespace {

SuspensionParams params(double kappa, double omega, double theta_deg, double Vc,
                        double steepness) {
  SuspensionParams p;
  p.Sc = 20.0;
  p.Vc = Vc;
  p.optics.kappa = kappa;
  p.optics.omega = omega;
  p.optics.theta_i = theta_deg * M_PI / 180.0;
  p.taxis = TaxisModel::tanh_model(steepness, 1.0);
  return p;
}

struct Setup {
  SuspensionParams p;
  IntensityProfile lam;
  BasicState b;
};

Setup make_setup(double kappa, double omega, double theta_deg, double Vc,
                 int N_z = 65) {
  Setup s{params(kappa, omega, theta_deg, Vc, 2.0), {}, {}};
  s.lam = solve_lambda(s.p.optics, 401);
  s.b = solve_basic_state(s.p, N_z, s.lam);
  return s;
}

VectorXcd smooth_N(int n, int mode) {
  VectorXcd v(n);
  for (int j = 0; j < n; ++j) {
    const double z = static_cast<double>(j) / (n - 1);
    v[j] = cd(std::sin(mode * M_PI * z), 0.3 * std::cos(mode * M_PI * z));
  }
  return v;
}

}  // namespace

TEST_CASE("angular grid integrates the sphere") {
  for (int nmu : {4, 8, 16}) {
    const auto g = AngularGrid::make(nmu, 8);
    CHECK(std::abs(g.solid_angle() - 4.0 * M_PI) <= 1e-10);
    for (double mu : g.mu) CHECK(mu != 0.0);
  }
}

TEST_CASE("ray sweep is exact under midpoint refinement of linear data") {
  const int n = 33;
  const double h = 1.0 / (n - 1);
  std::vector<double> tau(n);
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> U(0.5, 1.5);
  tau[n - 1] = 0.0;
  for (int j = n - 2; j >= 0; --j) tau[j] = tau[j + 1] + h * U(rng);
  VectorXcd r(n);
  for (int j = 0; j < n; ++j) r[j] = cd(U(rng) - 1.0, U(rng) - 1.0);

  // refined grid: midpoints inserted, source interpolated linearly
  const int nf = 2 * n - 1;
  std::vector<double> tauf(nf);
  VectorXcd rf(nf);
  for (int j = 0; j < n; ++j) {
    tauf[2 * j] = tau[j];
    rf[2 * j] = r[j];
  }
  for (int j = 0; j < n - 1; ++j) {
    tauf[2 * j + 1] = 0.5 * (tau[j] + tau[j + 1]);
    rf[2 * j + 1] = 0.5 * (r[j] + r[j + 1]);
  }

  VectorXcd psi(n), psif(nf);
  for (double mu : {0.9, 0.2, -0.3, -0.85}) {
    for (double kxi : {0.0, 2.4}) {
      sweep_ray(tau, h, mu, kxi, r, psi);
      sweep_ray(tauf, 0.5 * h, mu, kxi, rf, psif);
      for (int j = 0; j < n; ++j)
        CHECK(std::abs(psi[j] - psif[2 * j]) <= 1e-8);
    }
  }
}

TEST_CASE("no scattering means no diffuse response") {
  auto s = make_setup(0.5, 0.0, 0.0, 15.0);
  const auto N = smooth_N(s.b.size(), 1);
  VectorXcd Phi = VectorXcd::Zero(s.b.size());
  const auto g = AngularGrid::make(8, 8);
  const auto res = diffuse_solve(s.b, s.p, g, 2.0, N, Phi);
  CHECK(res.I_d.norm() == 0.0);
  CHECK(res.P.norm() == 0.0);
  CHECK(res.Q.norm() == 0.0);
  const auto ops = assemble_operators(s.b, s.p, g, 2.0);
  CHECK(ops.M_Id.norm() == 0.0);
  CHECK(ops.M_P.norm() == 0.0);
}

TEST_CASE("directional basic-state field integrates to the diffuse intensity") {
  auto s = make_setup(0.5, 0.475, 0.0, 15.0);
  const auto g = AngularGrid::make(24, 8);
  const auto gsd = basic_diffuse_directional(s.b, s.p, g);
  // solid-angle integral over the grid vs the scalar field carried by the state
  double worst = 0.0;
  for (int j = 0; j < s.b.size(); ++j) {
    double acc = 0.0;
    for (int a = 0; a < 2 * g.n_mu; ++a) acc += g.w_mu[a] * gsd(a, j);
    acc *= 2.0 * M_PI;
    worst = std::max(worst, std::abs(acc - s.b.I_s_d[j]));
  }
  CHECK(worst <= 2e-4);
}

TEST_CASE("superposition and homogeneity of the diffuse solve") {
  auto s = make_setup(1.0, 0.61, 40.0, 15.0);
  const auto g = AngularGrid::make(8, 8);
  const Eigen::MatrixXd C = cumulative_integral_matrix(s.b.size(), s.b.h());
  const auto N1 = smooth_N(s.b.size(), 1);
  const auto N2 = smooth_N(s.b.size(), 3);
  const VectorXcd P1 = C * N1, P2 = C * N2;
  const cd alpha(0.7, -0.4);

  const auto r1 = diffuse_solve(s.b, s.p, g, 3.0, N1, P1, 1e-13);
  const auto r2 = diffuse_solve(s.b, s.p, g, 3.0, N2, P2, 1e-13);
  const auto r12 = diffuse_solve(s.b, s.p, g, 3.0, N1 + alpha * N2,
                                 P1 + alpha * P2, 1e-13);
  CHECK((r12.I_d - r1.I_d - alpha * r2.I_d).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK((r12.P - r1.P - alpha * r2.P).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("m = 0 zeroes the transverse flux and k = 0 keeps real data real") {
  auto s = make_setup(1.0, 0.61, 40.0, 15.0);
  const auto g = AngularGrid::make(8, 8);
  const Eigen::MatrixXd C = cumulative_integral_matrix(s.b.size(), s.b.h());
  VectorXcd N(s.b.size());
  for (int j = 0; j < s.b.size(); ++j)
    N[j] = std::sin(2.3 * s.b.z_nodes[j]) + 0.2;  // real
  const VectorXcd Phi = C * N;

  const auto rk = diffuse_solve(s.b, s.p, g, 3.0, N, Phi);
  CHECK(rk.Q.lpNorm<Eigen::Infinity>() <= 1e-12);

  const auto r0 = diffuse_solve(s.b, s.p, g, 0.0, N, Phi);
  double im = 0.0;
  for (int j = 0; j < s.b.size(); ++j) im = std::max(im, std::abs(r0.I_d[j].imag()));
  CHECK(im <= 1e-12);
}

TEST_CASE("source iteration contracts at the albedo rate") {
  auto s = make_setup(1.0, 0.61, 40.0, 15.0);
  const auto g = AngularGrid::make(8, 8);
  const Eigen::MatrixXd C = cumulative_integral_matrix(s.b.size(), s.b.h());
  const auto N = smooth_N(s.b.size(), 2);
  const VectorXcd Phi = C * N;
  const auto res = diffuse_solve(s.b, s.p, g, 3.0, N, Phi);
  CHECK(res.diag.max_ratio <= s.p.optics.omega + 0.05);
  CHECK(res.diag.sweeps > 3);
}

TEST_CASE("collimated map is the attenuated antiderivative scaling") {
  // Uniform state, straight illumination: closed-form spot check.
  auto s = make_setup(0.5, 0.2, 0.0, 0.0);
  const auto cc = collimated_profile(s.b, s.p);
  const int n = s.b.size();
  // Phi(z) = z - 1 corresponds to N = 1
  for (int j : {0, n / 2, n - 1}) {
    const double z = s.b.z_nodes[j];
    const double expect = std::exp(-0.5 * (1.0 - z)) * 0.5 * (z - 1.0);
    CHECK(cc[j] * (z - 1.0) == doctest::Approx(expect).epsilon(1e-10));
  }
  CHECK(cc[0] * (0.0 - 1.0) ==
        doctest::Approx(-std::exp(-0.5) * 0.5).epsilon(1e-10));
}

TEST_CASE("operator columns replay the unit-vector solves") {
  auto s = make_setup(0.5, 0.475, 0.0, 15.0);
  const auto g = AngularGrid::make(4, 4);
  const auto ops = assemble_operators(s.b, s.p, g, 2.0, Exec::Serial);
  const Eigen::MatrixXd C = cumulative_integral_matrix(s.b.size(), s.b.h());
  const Eigen::MatrixXd gsd = basic_diffuse_directional(s.b, s.p, g);
  for (int j : {0, 17, s.b.size() - 1}) {
    VectorXcd e = VectorXcd::Zero(s.b.size());
    e[j] = 1.0;
    const auto res =
        diffuse_solve(s.b, s.p, g, 2.0, e, C.col(j).cast<cd>(), 1e-10, &gsd);
    CHECK((ops.M_Id.col(j) - res.I_d).norm() == 0.0);
    CHECK((ops.M_P.col(j) - res.P).norm() == 0.0);
  }
}

TEST_CASE("parallel and serial assembly agree bitwise") {
  auto s = make_setup(1.0, 0.61, 40.0, 15.0);
  const auto g = AngularGrid::make(4, 4);
  const auto a = assemble_operators(s.b, s.p, g, 3.0, Exec::Serial);
  const auto b = assemble_operators(s.b, s.p, g, 3.0, Exec::Parallel);
  CHECK((a.M_Id - b.M_Id).norm() == 0.0);
  CHECK((a.M_P - b.M_P).norm() == 0.0);
  CHECK((a.M_Q - b.M_Q).norm() == 0.0);
}

TEST_CASE("operator norm stays within the scattering bound") {
  auto s = make_setup(1.0, 0.61, 40.0, 15.0);
  const auto g = AngularGrid::make(8, 8);
  const auto ops = assemble_operators(s.b, s.p, g, 3.0);
  // power iteration on M_Id
  VectorXcd v = VectorXcd::Ones(s.b.size());
  double nrm = 0.0;
  for (int it = 0; it < 60; ++it) {
    v = ops.M_Id * v;
    nrm = v.norm();
    v /= nrm;
  }
  const double scale = s.p.optics.omega * s.p.optics.kappa * s.p.optics.G_t *
                       s.lam.max_lambda();
  const double c_grid = nrm / scale;
  MESSAGE("operator norm ", nrm, ", C_grid = ", c_grid);
  CHECK(c_grid > 0.0);
  CHECK(c_grid < 50.0);
}

TEST_CASE("angular refinement converges monotonically to a fixed limit") {
  // At k = 3 a ray winds k xi / (kappa n_s) radians of horizontal phase per
  // mean free path, so the product quadrature converges algebraically, not
  // spectrally; the refinement sequence must still contract onto one limit.
  auto s = make_setup(1.0, 0.61, 40.0, 15.0);
  const Eigen::MatrixXd C = cumulative_integral_matrix(s.b.size(), s.b.h());
  const auto N = smooth_N(s.b.size(), 1);
  const VectorXcd Phi = C * N;
  const auto ref = diffuse_solve(s.b, s.p, AngularGrid::make(64, 128), 3.0, N, Phi);
  const double scale = ref.I_d.lpNorm<Eigen::Infinity>();
  double prev = 1e300;
  for (int g : {8, 16, 32}) {
    const auto r = diffuse_solve(s.b, s.p, AngularGrid::make(g, g), 3.0, N, Phi);
    const double err = (r.I_d - ref.I_d).lpNorm<Eigen::Infinity>() / scale;
    MESSAGE("grid (", g, ",", g, "): relative error ", err);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev <= 0.10);  // (32,32) sits within ten percent of the limit
}
