#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "biostab/fd.hpp"
#include "biostab/stability.hpp"
#include "oracles.hpp"

using namespace biostab;
using cd = std::complex<double>;

namespace {

SuspensionParams pinned_params(double steepness = 0.0) {
  SuspensionParams p;
  p.Sc = 20.0;
  p.Ta = 0.0;
  p.Vc = 15.0;
  p.optics.kappa = 0.5;
  p.optics.omega = 0.475;
  p.optics.theta_i = 0.0;
  p.taxis = TaxisModel::tanh_model(steepness > 0 ? steepness : 2.0, 1.0);
  return p;
}

struct Pinned {
  SuspensionParams p;
  IntensityProfile lam;
  BasicState b;
};

const Pinned& pinned_state() {
  static const Pinned s = [] {
    Pinned q{pinned_params(), {}, {}};
    const double steep = calibrate_steepness(q.p, 65, 801);
    q.p.taxis = TaxisModel::tanh_model(steep, 1.0);
    q.lam = solve_lambda(q.p.optics, 801);
    q.b = solve_basic_state(q.p, 65, q.lam);
    return q;
  }();
  return s;
}

DiscretizedSystem toy_system(const MatrixXcd& A, const MatrixXcd& B) {
  DiscretizedSystem sys;
  sys.A = A;
  sys.B = B;
  sys.N_z = static_cast<int>(A.rows());
  return sys;
}

}  // namespace

TEST_CASE("derivative matrices hit polynomials exactly") {
  const int n = 21;
  const double h = 1.0 / (n - 1);
  for (int m = 1; m <= 4; ++m) {
    const Eigen::MatrixXd D = fd_matrix(n, h, m);
    Eigen::VectorXd x(n), f(n);
    for (int i = 0; i < n; ++i) {
      x[i] = i * h;
      f[i] = std::pow(x[i], 4);
    }
    const Eigen::VectorXd g = D * f;
    for (int i = 0; i < n; ++i) {
      double exact = 0.0;
      if (m == 1) exact = 4.0 * std::pow(x[i], 3);
      if (m == 2) exact = 12.0 * x[i] * x[i];
      if (m == 3) exact = 24.0 * x[i];
      if (m == 4) exact = 24.0;
      CHECK(g[i] == doctest::Approx(exact).epsilon(1e-8));
    }
  }
}

TEST_CASE("derivative matrices are 4th order on smooth data") {
  auto err_at = [](int n, int m) {
    const double h = 1.0 / (n - 1);
    const Eigen::MatrixXd D = fd_matrix(n, h, m);
    Eigen::VectorXd f(n);
    for (int i = 0; i < n; ++i) f[i] = std::sin(2.0 * M_PI * i * h);
    const Eigen::VectorXd g = D * f;
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = i * h;
      const double w = 2.0 * M_PI;
      double exact = 0.0;
      if (m == 1) exact = w * std::cos(w * x);
      if (m == 2) exact = -w * w * std::sin(w * x);
      if (m == 3) exact = -w * w * w * std::cos(w * x);
      if (m == 4) exact = w * w * w * w * std::sin(w * x);
      worst = std::max(worst, std::abs(g[i] - exact));
    }
    return worst;
  };
  for (int m = 1; m <= 4; ++m) {
    const double e1 = err_at(33, m);
    const double e2 = err_at(65, m);
    CHECK(e1 / e2 > 10.0);  // ~16x for 4th order
  }
}

TEST_CASE("antiderivative matrix inverts D1 with the top pin") {
  const int n = 65;
  const double h = 1.0 / (n - 1);
  const Eigen::MatrixXd C = cumulative_integral_matrix(n, h);
  Eigen::VectorXd N(n);
  for (int i = 0; i < n; ++i) N[i] = std::cos(M_PI * i * h);
  const Eigen::VectorXd Phi = C * N;
  CHECK(std::abs(Phi[n - 1]) <= 1e-12);
  for (int i = 0; i < n; ++i)
    CHECK(Phi[i] == doctest::Approx(std::sin(M_PI * i * h) / M_PI).epsilon(1e-7));
}

TEST_CASE("xi profiles vanish with the swimming speed") {
  const auto& s = pinned_state();
  SuspensionParams p0 = s.p;
  p0.Vc = 0.0;
  const auto b0 = solve_basic_state(p0, 65, s.lam);
  const auto xi = xi_profiles(b0, p0);
  CHECK(xi.xi1.norm() == 0.0);
  CHECK(xi.xi2.norm() == 0.0);
  CHECK(xi.xi3.norm() == 0.0);
}

TEST_CASE("xi3 is the pointwise taxis speed") {
  // Uniform state, coefficients evaluated with nonzero Vc.
  SuspensionParams p = pinned_params();
  p.Vc = 0.0;
  const auto lam = solve_lambda(p.optics, 801);
  const auto b = solve_basic_state(p, 65, lam);
  SuspensionParams ps = p;
  ps.Vc = 15.0;
  const auto xi = xi_profiles(b, ps);
  for (int j = 0; j < b.size(); ++j) {
    const double I = lam.at_clamped(0.5 * (1.0 - b.z_nodes[j]));
    const double expect = 15.0 * ps.taxis.eval(I).first;
    CHECK(xi.xi3[j] == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("leading eigenvalue on toy systems") {
  MatrixXcd A = MatrixXcd::Zero(2, 2), B = MatrixXcd::Identity(2, 2);
  A(0, 0) = 1.0;
  A(1, 1) = 2.0;
  CHECK(leading_sigma(toy_system(A, B)).real() == doctest::Approx(2.0).epsilon(1e-12));

  // complex-conjugate pair 1 +- 2i: report the +Im member
  A << cd(1, 0), cd(2, 0), cd(-2, 0), cd(1, 0);
  const cd s = leading_sigma(toy_system(A, B));
  CHECK(s.real() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.imag() == doctest::Approx(2.0).epsilon(1e-12));

  // singular B row produces an infinite mode that must be filtered
  MatrixXcd B2 = B;
  B2(1, 1) = 0.0;
  A << cd(0.5, 0), cd(0, 0), cd(0, 0), cd(1, 0);
  CHECK(leading_sigma(toy_system(A, B2)).real() == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("free-free rotating surrogate matches the closed form") {
  // Marginal R at fixed k: R = ((k^2+pi^2)^3 + pi^2 Ta) / k^2.
  for (double Ta : {0.0, 500.0}) {
    for (double k : {2.2, 3.1}) {
      const auto tmpl = build_surrogate_template(65, 20.0, Ta, k, Wall::Free, Wall::Free);
      NeutralOptions opt;
      opt.R_guess = 600.0;
      const auto np = neutral_R(tmpl, k, opt);
      const double expect =
          (std::pow(k * k + M_PI * M_PI, 3) + M_PI * M_PI * Ta) / (k * k);
      CHECK(np.R == doctest::Approx(expect).epsilon(1e-6));
      CHECK(np.branch == BranchKind::Stationary);
    }
  }
}

TEST_CASE("rigid-free surrogate reproduces the reference critical point") {
  CriticalOptions opt;
  opt.k_min = 1.6;
  opt.k_max = 4.5;
  opt.n_scan = 16;
  opt.neutral.R_guess = 1000.0;
  const auto crit = critical_point_generic(
      [&](double k) { return build_surrogate_template(65, 20.0, 0.0, k); }, opt);
  CHECK(crit.R_c == doctest::Approx(1100.65).epsilon(0.005));
  CHECK(crit.k_c == doctest::Approx(2.682).epsilon(0.01));
  CHECK(crit.lambda_c * crit.k_c == doctest::Approx(2.0 * M_PI).epsilon(1e-12));

  // independent high-resolution oracle: shooting determinant at 513 nodes
  const auto ora = oracles::benard_critical(0.0, true, true);
  CHECK(crit.R_c == doctest::Approx(ora.R_c).epsilon(2e-3));
  CHECK(crit.k_c == doctest::Approx(ora.k_c).epsilon(5e-3));
}

TEST_CASE("rotation stabilizes the surrogate at fixed wavenumber") {
  double prev = 0.0;
  for (double Ta : {0.0, 100.0, 1000.0, 10000.0}) {
    const auto tmpl = build_surrogate_template(65, 20.0, Ta, 2.68);
    NeutralOptions opt;
    opt.R_guess = std::max(1000.0, prev);
    const auto np = neutral_R(tmpl, 2.68, opt);
    CHECK(np.R > prev);
    prev = np.R;
    // oracle agreement at every Ta
    const double ref = oracles::benard_marginal_R(2.68, Ta, true, true);
    CHECK(np.R == doctest::Approx(ref).epsilon(2e-3));
  }
}

TEST_CASE("full system: Z decouples without rotation") {
  const auto& s = pinned_state();
  const auto grid = AngularGrid::make(8, 8);
  const auto ops = assemble_operators(s.b, s.p, grid, 2.8);
  const auto sys = assemble(s.b, s.p, ops, 2.8, 1500.0);
  const auto mode = leading_mode(sys);
  const int n = s.b.size();
  const double znorm = mode.x.segment(n, n).norm();
  CHECK(znorm <= 1e-8 * mode.x.norm());
  CHECK(mode.residual <= 1e-8);
}

TEST_CASE("no buoyancy forcing means decay") {
  const auto& s = pinned_state();
  const auto grid = AngularGrid::make(8, 8);
  const auto ops = assemble_operators(s.b, s.p, grid, 2.8);
  const auto sys = assemble(s.b, s.p, ops, 2.8, 0.0);
  CHECK(leading_sigma(sys).real() < 0.0);
}

TEST_CASE("scaling invariance of the leading eigenvalue") {
  const auto& s = pinned_state();
  const auto grid = AngularGrid::make(8, 8);
  const auto ops = assemble_operators(s.b, s.p, grid, 2.8);
  auto sys = assemble(s.b, s.p, ops, 2.8, 900.0);
  const cd s1 = leading_sigma(sys);
  sys.A *= 3.7;
  sys.B *= 3.7;
  const cd s2 = leading_sigma(sys);
  CHECK(std::abs(s1 - s2) <= 1e-10 * std::max(1.0, std::abs(s1)));
}

TEST_CASE("growth is monotone in R and the neutral point splits the sign") {
  const auto& s = pinned_state();
  const auto grid = AngularGrid::make(8, 8);
  const auto ops = assemble_operators(s.b, s.p, grid, 2.8);
  const auto tmpl = build_template(s.b, s.p, ops, 2.8);
  const auto np = neutral_R(tmpl, 2.8);
  CHECK(np.R > 0.0);
  CHECK(np.branch == BranchKind::Stationary);  // Im sigma = 0 on this row
  double prev = -1e300;
  for (double f : {0.2, 0.6, 1.0, 1.4, 1.8}) {
    const double re = leading_sigma(tmpl.instantiate(f * np.R)).real();
    CHECK(re > prev);
    prev = re;
  }
  const double above = leading_sigma(tmpl.instantiate(1000.0)).real();
  CHECK((above > 0.0) == (1000.0 > np.R));
}

TEST_CASE("critical point on the pinned configuration") {
  const auto& s = pinned_state();
  AngularGrid grid = AngularGrid::make(8, 8);
  OperatorCache cache(s.b, s.p, grid);
  CriticalOptions opt;
  opt.k_min = 1.0;
  opt.k_max = 8.0;
  opt.n_scan = 16;
  const auto crit = critical_point(cache, opt);
  CHECK(crit.R_c > 0.0);
  CHECK(crit.k_c > opt.k_min);
  CHECK(crit.k_c < opt.k_max);
  CHECK(crit.lambda_c * crit.k_c == doctest::Approx(2.0 * M_PI).epsilon(1e-12));
  CHECK(!crit.overstable);
  for (const auto& np : crit.scan) CHECK(crit.R_c <= np.R + 1e-9);
  MESSAGE("pinned critical: lambda_c = ", crit.lambda_c, ", R_c = ", crit.R_c,
          " (tabulated comparison target 2.23, 979.51)");
}
