#include "biostab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "biostab/errors.hpp"
#include "biostab/fd.hpp"

namespace biostab {

namespace {

using cd = std::complex<double>;

struct Blocks {
  int n;
  int W(int i) const { return i; }
  int Z(int i) const { return n + i; }
  int F(int i) const { return 2 * n + i; }
};

}  // namespace

XiProfiles xi_profiles(const BasicState& b, const SuspensionParams& p) {
  const int n = b.size();
  const Eigen::MatrixXd D1 = fd_matrix(n, b.h(), 1);
  const double slant = b.kappa / b.cos0;

  Eigen::VectorXd nIdT(n);
  for (int j = 0; j < n; ++j) nIdT[j] = b.n_s[j] * b.I_s_c[j] * b.dT_dI[j];

  XiProfiles xi;
  xi.xi1 = p.Vc * slant * (D1 * nIdT);
  xi.xi2.resize(n);
  xi.xi3.resize(n);
  for (int j = 0; j < n; ++j) {
    xi.xi2[j] = 2.0 * p.Vc * slant * nIdT[j] + p.Vc * b.dT_dI[j] * b.dIsd_dz[j];
    xi.xi3[j] = p.Vc * b.T_s[j];
  }
  return xi;
}

DiscretizedSystem SystemTemplate::instantiate(double R) const {
  DiscretizedSystem sys;
  sys.k = k;
  sys.R = R;
  sys.N_z = N_z;
  sys.A = A0 + R * A_R;
  sys.B = B;
  // Row equilibration: the same scale on a row of A and B leaves the
  // spectrum untouched and keeps residuals meaningful.
  const int m = static_cast<int>(sys.A.rows());
  for (int i = 0; i < m; ++i) {
    const double s = std::max(sys.A.row(i).cwiseAbs().maxCoeff(),
                              sys.B.row(i).cwiseAbs().maxCoeff());
    if (s > 0.0) {
      sys.A.row(i) /= s;
      sys.B.row(i) /= s;
    }
  }
  return sys;
}

SystemTemplate build_template(const BasicState& b, const SuspensionParams& p,
                              const PerturbOperators& ops, double k) {
  const int n = b.size();
  const Blocks ix{n};
  const double h = b.h();
  const double k2 = k * k;
  const double sqTa = std::sqrt(p.Ta);

  const Eigen::MatrixXd D1 = fd_matrix(n, h, 1);
  const Eigen::MatrixXd D2 = fd_matrix(n, h, 2);
  const Eigen::MatrixXd D3 = fd_matrix(n, h, 3);
  const Eigen::MatrixXd D4 = fd_matrix(n, h, 4);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);

  const XiProfiles xi = xi_profiles(b, p);

  // Radiative coupling acting on N = D1 Phi: the diffuse-intensity part is
  // differentiated after scaling by n_s dT/dI, the horizontal-flux part is
  // a pointwise factor; both close with the antiderivative through D1.
  Eigen::VectorXd nsdT(n), fluxfac(n);
  for (int j = 0; j < n; ++j) {
    nsdT[j] = b.n_s[j] * b.dT_dI[j];
    fluxfac[j] = p.Vc * b.n_s[j] * b.T_s[j] / b.q_mag[j];
  }
  const MatrixXcd Xi0 =
      (p.Vc * (D1.cast<cd>() * nsdT.asDiagonal().toDenseMatrix().cast<cd>() * ops.M_Id) -
       cd(0.0, 1.0) * k * (fluxfac.asDiagonal().toDenseMatrix().cast<cd>() * ops.M_P)) *
      D1.cast<cd>();

  SystemTemplate t;
  t.k = k;
  t.N_z = n;
  const int m = 3 * n;
  t.A0 = MatrixXcd::Zero(m, m);
  t.A_R = MatrixXcd::Zero(m, m);
  t.B = MatrixXcd::Zero(m, m);

  // W block: (sigma/Sc + k^2 - D^2)(D^2 - k^2) W + sqrt(Ta) D Z = R k^2 D Phi
  for (int i = 2; i <= n - 3; ++i) {
    const int r = ix.W(i);
    for (int j = 0; j < n; ++j) {
      t.A0(r, ix.W(j)) = D4(i, j) - 2.0 * k2 * D2(i, j) + (i == j ? k2 * k2 : 0.0);
      t.A0(r, ix.Z(j)) = -sqTa * D1(i, j);
      t.A_R(r, ix.F(j)) = k2 * D1(i, j);
      t.B(r, ix.W(j)) = (D2(i, j) - (i == j ? k2 : 0.0)) / p.Sc;
    }
  }
  // Z block: (sigma/Sc + k^2 - D^2) Z = sqrt(Ta) D W
  for (int i = 1; i <= n - 2; ++i) {
    const int r = ix.Z(i);
    for (int j = 0; j < n; ++j) {
      t.A0(r, ix.Z(j)) = D2(i, j) - (i == j ? k2 : 0.0);
      t.A0(r, ix.W(j)) = sqTa * D1(i, j);
      t.B(r, ix.Z(j)) = (i == j) ? 1.0 / p.Sc : 0.0;
    }
  }
  // Phi block: sigma D Phi = D^3 Phi - Xi3 D^2 Phi - (k^2 + Xi2) D Phi
  //                          - Xi1 Phi - Xi0[D Phi] - (D n_s) W
  for (int i = 1; i <= n - 3; ++i) {
    const int r = ix.F(i);
    for (int j = 0; j < n; ++j) {
      t.A0(r, ix.F(j)) = D3(i, j) - xi.xi3[i] * D2(i, j) - (k2 + xi.xi2[i]) * D1(i, j) -
                         (i == j ? xi.xi1[i] : 0.0);
      t.A0(r, ix.F(j)) -= Xi0(i, j);
      t.B(r, ix.F(j)) = D1(i, j);
    }
    t.A0(r, ix.W(i)) = -b.dns_dz[i];
  }

  // Boundary rows. Rigid bottom: W = DW = Z = 0; stress-free top:
  // W = D^2 W = DZ = 0; cell flux vanishes at both walls; Phi(1) = 0.
  t.A0.row(ix.W(0)).setZero();
  t.A0(ix.W(0), ix.W(0)) = 1.0;
  for (int j = 0; j < n; ++j) t.A0(ix.W(1), ix.W(j)) = D1(0, j);
  for (int j = 0; j < n; ++j) t.A0(ix.W(n - 2), ix.W(j)) = D2(n - 1, j);
  t.A0(ix.W(n - 1), ix.W(n - 1)) = 1.0;

  t.A0(ix.Z(0), ix.Z(0)) = 1.0;
  for (int j = 0; j < n; ++j) t.A0(ix.Z(n - 1), ix.Z(j)) = D1(n - 1, j);

  // Flux rows: D^2 Phi - Vc T D Phi - n_s Vc dT/dI (c_ic Phi + M_Id D1 Phi) = 0.
  const MatrixXcd MD = ops.M_Id * D1.cast<cd>();
  auto flux_row = [&](int r, int w) {
    for (int j = 0; j < n; ++j) {
      cd v = cd(D2(w, j) - p.Vc * b.T_s[w] * D1(w, j), 0.0);
      v -= b.n_s[w] * p.Vc * b.dT_dI[w] * MD(w, j);
      if (j == w) v -= b.n_s[w] * p.Vc * b.dT_dI[w] * ops.c_ic[w];
      t.A0(r, ix.F(j)) = v;
    }
  };
  flux_row(ix.F(0), 0);
  flux_row(ix.F(n - 1), n - 1);
  t.A0(ix.F(n - 2), ix.F(n - 1)) = 1.0;  // Phi(1) = 0

  return t;
}

DiscretizedSystem assemble(const BasicState& b, const SuspensionParams& p,
                           const PerturbOperators& ops, double k, double R) {
  return build_template(b, p, ops, k).instantiate(R);
}

SystemTemplate build_surrogate_template(int N_z, double Sc, double Ta, double k,
                                        Wall bottom, Wall top) {
  const int n = N_z;
  const Blocks ix{n};
  const double h = 1.0 / (n - 1);
  const double k2 = k * k;
  const double sqTa = std::sqrt(Ta);

  const Eigen::MatrixXd D1 = fd_matrix(n, h, 1);
  const Eigen::MatrixXd D2 = fd_matrix(n, h, 2);
  const Eigen::MatrixXd D4 = fd_matrix(n, h, 4);

  SystemTemplate t;
  t.k = k;
  t.N_z = n;
  const int m = 3 * n;
  t.A0 = MatrixXcd::Zero(m, m);
  t.A_R = MatrixXcd::Zero(m, m);
  t.B = MatrixXcd::Zero(m, m);

  for (int i = 2; i <= n - 3; ++i) {
    const int r = ix.W(i);
    for (int j = 0; j < n; ++j) {
      t.A0(r, ix.W(j)) = D4(i, j) - 2.0 * k2 * D2(i, j) + (i == j ? k2 * k2 : 0.0);
      t.A0(r, ix.Z(j)) = -sqTa * D1(i, j);
      t.B(r, ix.W(j)) = (D2(i, j) - (i == j ? k2 : 0.0)) / Sc;
    }
    t.A_R(r, ix.F(i)) = k2;
  }
  for (int i = 1; i <= n - 2; ++i) {
    const int r = ix.Z(i);
    for (int j = 0; j < n; ++j) {
      t.A0(r, ix.Z(j)) = D2(i, j) - (i == j ? k2 : 0.0);
      t.A0(r, ix.W(j)) = sqTa * D1(i, j);
    }
    t.B(r, ix.Z(i)) = 1.0 / Sc;
  }
  // Temperature-like block with uniform unstable gradient:
  // (sigma + k^2 - D^2) Theta = -W, Theta = 0 at both walls.
  for (int i = 1; i <= n - 2; ++i) {
    const int r = ix.F(i);
    for (int j = 0; j < n; ++j) t.A0(r, ix.F(j)) = D2(i, j) - (i == j ? k2 : 0.0);
    t.A0(r, ix.W(i)) = -1.0;
    t.B(r, ix.F(i)) = 1.0;
  }

  t.A0(ix.W(0), ix.W(0)) = 1.0;
  if (bottom == Wall::Rigid) {
    for (int j = 0; j < n; ++j) t.A0(ix.W(1), ix.W(j)) = D1(0, j);
    t.A0(ix.Z(0), ix.Z(0)) = 1.0;
  } else {
    for (int j = 0; j < n; ++j) t.A0(ix.W(1), ix.W(j)) = D2(0, j);
    for (int j = 0; j < n; ++j) t.A0(ix.Z(0), ix.Z(j)) = D1(0, j);
  }
  t.A0(ix.W(n - 1), ix.W(n - 1)) = 1.0;
  if (top == Wall::Rigid) {
    for (int j = 0; j < n; ++j) t.A0(ix.W(n - 2), ix.W(j)) = D1(n - 1, j);
    t.A0(ix.Z(n - 1), ix.Z(n - 1)) = 1.0;
  } else {
    for (int j = 0; j < n; ++j) t.A0(ix.W(n - 2), ix.W(j)) = D2(n - 1, j);
    for (int j = 0; j < n; ++j) t.A0(ix.Z(n - 1), ix.Z(j)) = D1(n - 1, j);
  }
  t.A0(ix.F(0), ix.F(0)) = 1.0;
  t.A0(ix.F(n - 1), ix.F(n - 1)) = 1.0;

  return t;
}

LeadingMode leading_mode(const DiscretizedSystem& sys, double spurious_cut) {
  const int m = static_cast<int>(sys.A.rows());
  // Shift-invert: eigen-pairs of (A - s0 B)^{-1} B give sigma = s0 + 1/mu.
  // The shift avoids the singularity of A at a stationary neutral point.
  static const cd shifts[] = {cd(5.0, 3.0), cd(8.09, 4.85), cd(13.1, 7.85),
                              cd(-2.0, 9.0)};
  for (const cd s0 : shifts) {
    const MatrixXcd M = sys.A - s0 * sys.B;
    Eigen::PartialPivLU<MatrixXcd> lu(M);
    const auto& LU = lu.matrixLU();
    double dmin = 1e300, dmax = 0.0;
    for (int i = 0; i < m; ++i) {
      const double d = std::abs(LU(i, i));
      dmin = std::min(dmin, d);
      dmax = std::max(dmax, d);
    }
    if (!(dmin > 1e-13 * dmax)) continue;  // shift too close to the spectrum

    const MatrixXcd C = lu.solve(sys.B);
    Eigen::ComplexEigenSolver<MatrixXcd> es(C, true);
    if (es.info() != Eigen::Success) continue;

    int best = -1;
    cd best_sigma(-1e300, 0.0);
    for (int i = 0; i < m; ++i) {
      const cd mu = es.eigenvalues()[i];
      if (!(std::abs(mu) > 0.0) || !std::isfinite(std::abs(mu))) continue;
      const cd sigma = s0 + 1.0 / mu;
      if (std::abs(sigma) > spurious_cut) continue;  // boundary-row artifact
      if (sigma.real() > best_sigma.real() ||
          (sigma.real() >= best_sigma.real() - 1e-9 * std::max(1.0, std::abs(best_sigma)) &&
           sigma.imag() > best_sigma.imag())) {
        best_sigma = sigma;
        best = i;
      }
    }
    if (best < 0) throw SolverError("leading_mode: all-spurious spectrum");

    LeadingMode out;
    out.sigma = best_sigma;
    out.x = es.eigenvectors().col(best);
    out.x /= out.x.norm();
    out.residual = (sys.A * out.x - best_sigma * (sys.B * out.x)).norm();
    return out;
  }
  throw SolverError("leading_mode: no usable spectral shift");
}

std::complex<double> leading_sigma(const DiscretizedSystem& sys, double spurious_cut) {
  return leading_mode(sys, spurious_cut).sigma;
}

namespace {

NeutralPoint neutral_root(const std::function<cd(double)>& sigma_at, double k,
                          const NeutralOptions& opt) {
  struct Sample {
    double R;
    cd sigma;
  };
  std::vector<Sample> trace;
  auto eval = [&](double R) {
    const cd s = sigma_at(R);
    trace.push_back({R, s});
    return s;
  };
  auto converged = [&](const cd& s) {
    return std::abs(s.real()) <= opt.re_tol * std::max(1.0, std::abs(s.imag()));
  };

  double R = opt.R_guess;
  cd s = eval(R);
  double lo = 0.0, hi = 0.0;
  cd slo, shi;
  if (s.real() == 0.0 && converged(s)) {
    // degenerate but possible on symmetric toys
    lo = hi = R;
    slo = shi = s;
  } else if (s.real() < 0.0) {
    lo = R;
    slo = s;
    for (int i = 0;; ++i) {
      R *= 3.0;
      if (R > opt.R_ceil || i > 60)
        throw SolverError("neutral_R: no sign change up to R = " + std::to_string(R / 3.0) +
                          " at k = " + std::to_string(k));
      s = eval(R);
      if (s.real() >= 0.0) {
        hi = R;
        shi = s;
        break;
      }
      lo = R;
      slo = s;
    }
  } else {
    hi = R;
    shi = s;
    for (int i = 0;; ++i) {
      R /= 3.0;
      if (R < opt.R_floor || i > 60)
        throw SolverError("neutral_R: growth persists down to R = " +
                          std::to_string(R * 3.0) + " at k = " + std::to_string(k));
      s = eval(R);
      if (s.real() <= 0.0) {
        lo = R;
        slo = s;
        break;
      }
      hi = R;
      shi = s;
    }
  }

  // Safeguarded secant inside the bracket.
  cd sm = shi;
  double Rm = hi;
  for (int it = 0; it < 80 && !converged(sm); ++it) {
    double Rn = hi - shi.real() * (hi - lo) / (shi.real() - slo.real());
    if (!(Rn > lo && Rn < hi)) Rn = 0.5 * (lo + hi);
    sm = eval(Rn);
    Rm = Rn;
    if (sm.real() < 0.0) {
      lo = Rn;
      slo = sm;
    } else {
      hi = Rn;
      shi = sm;
    }
    if (it == 79 && !converged(sm)) {
      // Monotonicity in R may have failed; fall back to a fine scan of the
      // bracket and bisect the first crossing.
      const int nf = 64;
      double prevR = lo;
      cd prevS = slo;
      bool found = false;
      for (int i2 = 1; i2 <= nf; ++i2) {
        const double Rf = lo + (hi - lo) * i2 / nf;
        const cd sf = eval(Rf);
        if (prevS.real() <= 0.0 && sf.real() >= 0.0) {
          lo = prevR;
          slo = prevS;
          hi = Rf;
          shi = sf;
          found = true;
          break;
        }
        prevR = Rf;
        prevS = sf;
      }
      if (!found)
        throw SolverError("neutral_R: lost the sign change during refinement at k = " +
                          std::to_string(k));
      for (int i2 = 0; i2 < 80 && !converged(sm); ++i2) {
        Rm = 0.5 * (lo + hi);
        sm = eval(Rm);
        if (sm.real() < 0.0)
          lo = Rm;
        else
          hi = Rm;
      }
    }
  }
  if (!converged(sm))
    throw SolverError("neutral_R: root refinement stalled at k = " + std::to_string(k));

  NeutralPoint np;
  np.k = k;
  np.R = Rm;
  np.im_sigma = sm.imag();
  np.branch = (std::abs(sm.imag()) > opt.osc_im_cut) ? BranchKind::Oscillatory
                                                     : BranchKind::Stationary;
  return np;
}

}  // namespace

NeutralPoint neutral_R(const SystemTemplate& tmpl, double k, const NeutralOptions& opt) {
  auto sigma_at = [&](double R) { return leading_sigma(tmpl.instantiate(R)); };
  return neutral_root(sigma_at, k, opt);
}

NeutralPoint neutral_R(const BasicState& b, const SuspensionParams& p,
                       const PerturbOperators& ops, double k, const NeutralOptions& opt) {
  const SystemTemplate tmpl = build_template(b, p, ops, k);
  return neutral_R(tmpl, k, opt);
}

OperatorCache::OperatorCache(const BasicState& b, const SuspensionParams& p,
                             AngularGrid grid, Exec exec)
    : b_(&b), p_(&p), grid_(std::move(grid)), exec_(exec) {}

const PerturbOperators& OperatorCache::get(double k) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(k);
    if (it != cache_.end()) return *it->second;
  }
  auto ops = std::make_unique<PerturbOperators>(
      assemble_operators(*b_, *p_, grid_, k, exec_));
  std::lock_guard<std::mutex> lock(mu_);
  auto [it, inserted] = cache_.emplace(k, std::move(ops));
  return *it->second;
}

namespace {

CriticalResult critical_driver(const std::function<NeutralPoint(double, double)>& neutral_at,
                               const CriticalOptions& opt) {
  if (!(opt.k_min > 0.0 && opt.k_min < opt.k_max))
    throw std::invalid_argument("critical_point: need 0 < k_min < k_max");
  if (opt.n_scan < 16) throw std::invalid_argument("critical_point: n_scan must be >= 16");

  CriticalResult res;
  double guess = opt.neutral.R_guess;
  for (int i = 0; i < opt.n_scan; ++i) {
    const double k = opt.k_min * std::pow(opt.k_max / opt.k_min,
                                          static_cast<double>(i) / (opt.n_scan - 1));
    try {
      const NeutralPoint np = neutral_at(k, guess);
      guess = np.R;  // warm start along the curve
      res.scan.push_back(np);
    } catch (const SolverError&) {
      // leave a gap in the scan; the sweep layer reports row-level failures
    }
  }
  if (res.scan.empty()) throw SolverError("critical_point: empty feasible set");

  int im = 0;
  for (std::size_t i = 1; i < res.scan.size(); ++i)
    if (res.scan[i].R < res.scan[im].R) im = static_cast<int>(i);

  // Golden-section refinement in log k around the scan minimizer.
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = std::log((im > 0) ? res.scan[im - 1].k : res.scan[im].k / 1.3);
  double b = std::log((im + 1 < static_cast<int>(res.scan.size())) ? res.scan[im + 1].k
                                                                   : res.scan[im].k * 1.3);
  a = std::max(a, std::log(opt.k_min));
  b = std::min(b, std::log(opt.k_max));
  NeutralPoint best = res.scan[im];
  auto probe = [&](double lk) {
    try {
      const NeutralPoint np = neutral_at(std::exp(lk), best.R);
      if (np.R < best.R) best = np;
      return np.R;
    } catch (const SolverError&) {
      return 1e300;  // treat as off-curve
    }
  };
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = probe(x1), f2 = probe(x2);
  for (int it = 0; it < 28 && (b - a) > 1e-4; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = probe(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = probe(x2);
    }
  }

  res.k_c = best.k;
  res.R_c = best.R;
  res.lambda_c = 2.0 * M_PI / best.k;
  res.im_sigma_c = best.im_sigma;
  res.overstable = (best.branch == BranchKind::Oscillatory);

  for (std::size_t i = 0; i + 1 < res.scan.size(); ++i) {
    if (res.scan[i].branch == res.scan[i + 1].branch) continue;
    double ka = res.scan[i].k, kb = res.scan[i + 1].k;
    if (opt.refine_branch_points) {
      BranchKind left = res.scan[i].branch;
      try {
        for (int it = 0; it < 8; ++it) {
          const double km = std::sqrt(ka * kb);
          const NeutralPoint np = neutral_at(km, res.scan[i].R);
          if (np.branch == left)
            ka = km;
          else
            kb = km;
        }
      } catch (const SolverError&) {
        // keep the bracket as refined so far
      }
    }
    res.branch_points.push_back(std::sqrt(ka * kb));
  }
  return res;
}

}  // namespace

CriticalResult critical_point(OperatorCache& cache, const CriticalOptions& opt) {
  auto neutral_at = [&](double k, double guess) {
    const SystemTemplate tmpl =
        build_template(cache.basic_state(), cache.params(), cache.get(k), k);
    NeutralOptions nopt = opt.neutral;
    nopt.R_guess = guess;
    return neutral_R(tmpl, k, nopt);
  };
  return critical_driver(neutral_at, opt);
}

CriticalResult critical_point_generic(
    const std::function<SystemTemplate(double)>& make_template,
    const CriticalOptions& opt) {
  auto neutral_at = [&](double k, double guess) {
    const SystemTemplate tmpl = make_template(k);
    NeutralOptions nopt = opt.neutral;
    nopt.R_guess = guess;
    return neutral_R(tmpl, k, nopt);
  };
  return critical_driver(neutral_at, opt);
}

bool flow_free_stable(const BasicState& b, const SuspensionParams& p,
                      const AngularGrid& grid, const std::vector<double>& k_probe) {
  for (double k : k_probe) {
    const auto ops = assemble_operators(b, p, grid, k);
    const auto sys = build_template(b, p, ops, k).instantiate(0.0);
    if (leading_sigma(sys).real() >= 0.0) return false;
  }
  return true;
}

double calibrate_admissible_steepness(const SuspensionParams& p, int N_z,
                                      int fie_nodes,
                                      const std::vector<double>& thetas) {
  double s = calibrate_steepness(p, N_z, fie_nodes);
  if (p.Vc == 0.0) return s;
  const AngularGrid grid = AngularGrid::make(8, 8);

  struct ThetaCtx {
    SuspensionParams q;
    IntensityProfile lam;
    DiffuseFields df;
  };
  std::vector<ThetaCtx> ctx;
  for (double th : thetas) {
    ThetaCtx c;
    c.q = p;
    c.q.optics.theta_i = th;
    c.lam = solve_lambda(c.q.optics, fie_nodes);
    c.df = diffuse_fields(c.lam, c.q.optics);
    ctx.push_back(std::move(c));
  }

  for (int attempt = 0; attempt < 16; ++attempt) {
    bool ok = true;
    for (auto& c : ctx) {
      c.q.taxis = TaxisModel::tanh_model(s, p.taxis.I_c);
      const BasicState b = solve_basic_state(c.q, N_z, c.lam, &c.df);
      if (!flow_free_stable(b, c.q, grid)) {
        ok = false;
        break;
      }
    }
    if (ok) return s;
    s *= 0.8;
  }
  throw SolverError(
      "calibrate_admissible_steepness: no flow-free-stable steepness found");
}

}  // namespace biostab
