#include "biostab/radlight.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "biostab/errors.hpp"
#include "biostab/specfun.hpp"

namespace biostab {

double OpticsParams::cos0() const { return std::cos(theta_i); }

void OpticsParams::validate() const {
  if (!(kappa > 0.0)) throw ConfigError("optics: kappa must be > 0");
  if (!(omega >= 0.0 && omega < 1.0))
    throw ConfigError("optics: omega must lie in [0, 1)");
  if (!(theta_i >= 0.0 && theta_i < M_PI / 2))
    throw ConfigError("optics: theta_i must lie in [0, pi/2)");
  if (!(G_t > 0.0)) throw ConfigError("optics: G_t must be > 0");
}

double IntensityProfile::at_clamped(double tau) const {
  return spline(std::clamp(tau, 0.0, kappa));
}

double IntensityProfile::max_lambda() const {
  return *std::max_element(lambda.begin(), lambda.end());
}

double e1_layer_integral(double kappa, double tau) {
  return 2.0 - expint(2, tau) - expint(2, kappa - tau);
}

namespace {

struct FieGrid {
  std::vector<double> tau;   // uniform nodes on [0, kappa]
  std::vector<double> w;     // composite Simpson weights
  std::vector<double> sing;  // closed-form layer integral at each node
  double h = 0.0;
};

FieGrid make_grid(const OpticsParams& p, int n_nodes) {
  if (n_nodes < 33) throw std::invalid_argument("solve_lambda: n_nodes must be >= 33");
  if (n_nodes % 2 == 0) ++n_nodes;  // keep the composite rule pure Simpson
  FieGrid g;
  g.h = p.kappa / (n_nodes - 1);
  g.tau.resize(n_nodes);
  for (int i = 0; i < n_nodes; ++i) g.tau[i] = i * g.h;
  g.tau.back() = p.kappa;
  g.w = simpson_weights(n_nodes, g.h);
  g.sing.resize(n_nodes);
  for (int i = 0; i < n_nodes; ++i) g.sing[i] = e1_layer_integral(p.kappa, g.tau[i]);
  return g;
}

// (K f)_i = int_0^kappa f(t) E_1(|tau_i - t|) dt with the singularity
// subtracted: quadrature sees only (f_j - f_i) E_1, the f_i part is analytic.
class SubtractedKernel {
 public:
  explicit SubtractedKernel(const FieGrid& g) : g_(g) {
    const int n = static_cast<int>(g.tau.size());
    e1_.assign(n, 0.0);  // e1_[d] = E_1(d*h)
    for (int d = 1; d < n; ++d) e1_[d] = expint(1, d * g.h);
  }

  double apply(const std::vector<double>& f, int i) const {
    const int n = static_cast<int>(f.size());
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      acc += g_.w[j] * e1_[std::abs(j - i)] * (f[j] - f[i]);
    }
    return acc + f[i] * g_.sing[i];
  }

  double e1(int dist) const { return e1_[dist]; }

 private:
  const FieGrid& g_;
  std::vector<double> e1_;
};

double sup_residual(const FieGrid& g, const SubtractedKernel& K,
                    const std::vector<double>& f0, const std::vector<double>& lam,
                    double half_omega) {
  double r = 0.0;
  for (std::size_t i = 0; i < lam.size(); ++i) {
    const double lhs = lam[i] - f0[i] - half_omega * K.apply(lam, static_cast<int>(i));
    r = std::max(r, std::abs(lhs));
  }
  return r;
}

}  // namespace

IntensityProfile solve_lambda(const OpticsParams& p, int n_nodes, FieMethod method,
                              FieDiag* diag) {
  p.validate();
  const FieGrid g = make_grid(p, n_nodes);
  const int n = static_cast<int>(g.tau.size());
  const double c0 = p.cos0();
  const double half_omega = 0.5 * p.omega;

  std::vector<double> f0(n);
  for (int i = 0; i < n; ++i) f0[i] = std::exp(-g.tau[i] / c0);

  SubtractedKernel K(g);
  std::vector<double> lam = f0;

  if (p.omega > 0.0) {
    if (method == FieMethod::Picard) {
      constexpr int max_iter = 2000;
      std::vector<double> next(n);
      int it = 0;
      for (; it < max_iter; ++it) {
        for (int i = 0; i < n; ++i) next[i] = f0[i] + half_omega * K.apply(lam, i);
        lam.swap(next);
        const double res = sup_residual(g, K, f0, lam, half_omega);
        if (res <= 1e-10) {
          if (diag) {
            diag->iterations = it + 1;
            diag->residual = res;
          }
          break;
        }
        if (it == max_iter - 1)
          throw SolverError("solve_lambda: Picard iteration did not reach 1e-10, last residual " +
                            std::to_string(res));
      }
    } else {
      // Same discrete operator, assembled and factored once.
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < n; ++i) {
        double diag_acc = g.sing[i];
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          const double kij = g.w[j] * K.e1(std::abs(j - i));
          A(i, j) = -half_omega * kij;
          diag_acc -= kij;
        }
        A(i, i) = 1.0 - half_omega * diag_acc;
      }
      Eigen::Map<const Eigen::VectorXd> rhs(f0.data(), n);
      Eigen::VectorXd sol = A.partialPivLu().solve(rhs);
      for (int i = 0; i < n; ++i) lam[i] = sol[i];
      if (diag) {
        diag->iterations = 1;
        diag->residual = sup_residual(g, K, f0, lam, half_omega);
      }
    }
  } else if (diag) {
    diag->iterations = 0;
    diag->residual = 0.0;
  }

  for (int i = 0; i < n; ++i) {
    if (!(lam[i] > 0.0))
      throw SolverError("solve_lambda: nonpositive intensity at tau = " +
                        std::to_string(g.tau[i]));
  }

  IntensityProfile out;
  out.tau_nodes = g.tau;
  out.lambda = lam;
  out.kappa = p.kappa;
  out.spline = Interpolant1D(out.tau_nodes, out.lambda, InterpScheme::CubicSpline);
  return out;
}

DiffuseFields diffuse_fields(const IntensityProfile& profile, const OpticsParams& p) {
  p.validate();
  const auto& tau = profile.tau_nodes;
  const auto& lam = profile.lambda;
  const int n = static_cast<int>(tau.size());
  const double h = tau[1] - tau[0];
  const double pref = 0.5 * p.omega * p.G_t;

  DiffuseFields df;
  df.tau_nodes = tau;
  df.I_d.assign(n, 0.0);
  df.dId_dtau.assign(n, 0.0);
  df.q_d.assign(n, 0.0);

  if (p.omega > 0.0) {
    std::vector<double> e1(n, 0.0), e2(n, 0.0), e0(n, 0.0);
    for (int d = 1; d < n; ++d) {
      e1[d] = expint(1, d * h);
      e0[d] = expint0(d * h);
    }
    for (int d = 0; d < n; ++d) e2[d] = expint(2, d * h);
    const auto w = simpson_weights(n, h);

    for (int i = 0; i < n; ++i) {
      // I_d: same subtracted-kernel evaluation as the solver.
      double acc = 0.0;
      for (int j = 0; j < n; ++j)
        if (j != i) acc += w[j] * e1[std::abs(j - i)] * (lam[j] - lam[i]);
      df.I_d[i] = pref * (acc + lam[i] * e1_layer_integral(p.kappa, tau[i]));

      // q_d: E_2 kernel is bounded, plain composite quadrature per side.
      // Upward contribution comes from below (t > tau_i), downward from above.
      double up = 0.0, down = 0.0;
      {
        const int m = n - i;
        if (m >= 2) {
          const auto ws = simpson_weights(m, h);
          for (int j = i; j < n; ++j) up += ws[j - i] * lam[j] * e2[j - i];
        }
        if (i + 1 >= 2) {
          const auto ws = simpson_weights(i + 1, h);
          for (int j = 0; j <= i; ++j) down += ws[j] * lam[j] * e2[i - j];
        }
      }
      df.q_d[i] = pref * (up - down);

      // dI_d/dtau: differentiating the representation turns E_1 into E_0;
      // after subtracting Lambda(tau_i) the remainder is bounded, with the
      // removable value +-Lambda'(tau_i) at the diagonal.
      if (i > 0 && i < n - 1) {
        const double dlam = profile.spline.derivative(tau[i]);
        double dup = 0.0, ddown = 0.0;
        const int m = n - i;
        {
          const auto ws = simpson_weights(m, h);
          dup += ws[0] * dlam;
          for (int j = i + 1; j < n; ++j) dup += ws[j - i] * (lam[j] - lam[i]) * e0[j - i];
        }
        {
          const auto ws = simpson_weights(i + 1, h);
          ddown += ws[i] * (-dlam);
          for (int j = 0; j < i; ++j) ddown += ws[j] * (lam[j] - lam[i]) * e0[i - j];
        }
        df.dId_dtau[i] =
            pref * (dup - ddown + lam[i] * (e1[i] - e1[n - 1 - i]));
      }
    }
    // Wall nodes: the representation is weakly (logarithmically) singular
    // there. Close the grid with cubic extrapolation from the four nearest
    // interior nodes; the log feature is mild at grid distance h.
    auto extrap = [&](int w0, int d1, int d2, int d3, int d4) {
      df.dId_dtau[w0] = 4.0 * df.dId_dtau[d1] - 6.0 * df.dId_dtau[d2] +
                        4.0 * df.dId_dtau[d3] - df.dId_dtau[d4];
    };
    extrap(0, 1, 2, 3, 4);
    extrap(n - 1, n - 2, n - 3, n - 4, n - 5);
  }

  df.I_d_spline = Interpolant1D(df.tau_nodes, df.I_d, InterpScheme::CubicSpline);
  df.dId_spline = Interpolant1D(df.tau_nodes, df.dId_dtau, InterpScheme::CubicSpline);
  df.q_d_spline = Interpolant1D(df.tau_nodes, df.q_d, InterpScheme::CubicSpline);
  return df;
}

FluxProfile flux_profile(const IntensityProfile& profile, const OpticsParams& p,
                         const DiffuseFields& df) {
  const int n = static_cast<int>(profile.tau_nodes.size());
  FluxProfile fp;
  fp.tau_nodes = profile.tau_nodes;
  fp.q_collimated.resize(n);
  fp.q_diffuse = df.q_d;
  fp.q_total_magnitude.resize(n);
  const double c0 = p.cos0();
  for (int i = 0; i < n; ++i) {
    fp.q_collimated[i] = -p.G_t * c0 * std::exp(-fp.tau_nodes[i] / c0);
    const double q = fp.q_collimated[i] + fp.q_diffuse[i];
    fp.q_total_magnitude[i] = std::abs(q);
    if (!(fp.q_total_magnitude[i] > 0.0))
      throw SolverError("flux_profile: vanishing total radiative flux at tau = " +
                        std::to_string(fp.tau_nodes[i]));
  }
  return fp;
}

}  // namespace biostab
