#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "tdzsim/crossbar.hpp"
#include "tdzsim/errors.hpp"

namespace tdzsim {

// Inverse of the crossbar forward model: recover element resistances from a
// frame of sneak-path-contaminated measurements. fixed_point is the cheap
// default; gauss_newton works in log-conductance with a finite-difference
// Jacobian for accuracy benchmarks on small grids.
struct ReconSpec {
  enum class Method { fixed_point, gauss_newton } method = Method::fixed_point;
  int max_iters = 50;
  double tol = 1e-4;        // relative convergence tolerance on the update
  double damping = 1e-3;    // initial Levenberg damping
  double r_min = 20.0;      // ohms
  double r_max = 500e3;     // ohms
  double fd_step = 1e-3;    // relative step in log-conductance
};

struct ReconResult {
  std::vector<double> estimate;  // row-major ohms
  int iters = 0;
  double residual = 0.0;  // final max relative forward mismatch
  bool converged = false;
  bool fell_back = false;  // gauss_newton degenerated to fixed_point
};

namespace detail {

// Element-wise equivalent resistance of a candidate grid.
inline std::vector<double> recon_forward(const std::vector<double>& r,
                                         int rows, int cols,
                                         TerminationPolicy pol, double f_hz,
                                         double mux_r_on, double line_cap) {
  SensorGrid g;
  g.rows = rows;
  g.cols = cols;
  g.r = r;
  g.mux_r_on = mux_r_on;
  g.line_cap = line_cap;
  std::vector<double> out(r.size());
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      out[static_cast<std::size_t>(i) * cols + j] =
          resistance_from_z(equivalent_impedance(g, i, j, pol, f_hz));
  return out;
}

inline double max_rel_mismatch(const std::vector<double>& a,
                               const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    m = std::max(m, std::abs(a[k] - b[k]) / b[k]);
  return m;
}

}  // namespace detail

inline ReconResult reconstruct(const std::vector<double>& meas, int rows,
                               int cols, const ReconSpec& spec,
                               TerminationPolicy pol, double f_hz = 125e3,
                               double mux_r_on = 50.0, double line_cap = 0.0) {
  if (meas.size() != static_cast<std::size_t>(rows) * cols)
    throw config_error("reconstruct: measurement shape mismatch");
  for (double v : meas)
    if (!(v > 0) || !std::isfinite(v))
      throw config_error("reconstruct: measurements must be positive finite");
  if (!(spec.tol > 0) || spec.r_min >= spec.r_max)
    throw config_error("reconstruct: bad tolerance or bounds");

  const auto clampr = [&](double v) {
    return std::clamp(v, spec.r_min, spec.r_max);
  };
  const auto forward = [&](const std::vector<double>& r) {
    return detail::recon_forward(r, rows, cols, pol, f_hz, mux_r_on, line_cap);
  };

  const auto run_fixed_point = [&](ReconResult& res) {
    std::vector<double> r(meas.size());
    for (std::size_t k = 0; k < meas.size(); ++k) r[k] = clampr(meas[k]);
    std::vector<double> f = forward(r);
    double resid = detail::max_rel_mismatch(f, meas);
    double gamma = 1.0;
    for (int it = 1; it <= spec.max_iters; ++it) {
      res.iters = it;
      std::vector<double> cand(r.size());
      double upd = 0.0;
      for (std::size_t k = 0; k < r.size(); ++k) {
        cand[k] = clampr(r[k] * std::pow(meas[k] / f[k], gamma));
        upd = std::max(upd, std::abs(cand[k] / r[k] - 1.0));
      }
      const std::vector<double> f_cand = forward(cand);
      const double resid_cand = detail::max_rel_mismatch(f_cand, meas);
      if (resid_cand <= resid * (1.0 + 1e-12)) {
        r = cand;
        f = f_cand;
        resid = resid_cand;
        gamma = std::min(1.0, gamma * 1.5);
        if (upd < spec.tol) {
          res.converged = true;
          break;
        }
      } else {
        gamma *= 0.5;  // reject the step, damp
        if (gamma < 1e-4) break;
      }
    }
    res.estimate = r;
    res.residual = resid;
  };

  ReconResult res;
  if (spec.method == ReconSpec::Method::fixed_point) {
    run_fixed_point(res);
    return res;
  }

  // Gauss-Newton in x = log conductance, residual log F(x) - log meas.
  const int n = static_cast<int>(meas.size());
  const double x_lo = std::log(1.0 / spec.r_max);
  const double x_hi = std::log(1.0 / spec.r_min);
  Eigen::VectorXd x(n);
  for (int k = 0; k < n; ++k)
    x(k) = std::clamp(std::log(1.0 / meas[k]), x_lo, x_hi);
  const auto to_r = [&](const Eigen::VectorXd& xv) {
    std::vector<double> r(meas.size());
    for (int k = 0; k < n; ++k) r[k] = 1.0 / std::exp(xv(k));
    return r;
  };
  const auto residual_vec = [&](const Eigen::VectorXd& xv) {
    const std::vector<double> f = forward(to_r(xv));
    Eigen::VectorXd rv(n);
    for (int k = 0; k < n; ++k) rv(k) = std::log(f[k]) - std::log(meas[k]);
    return rv;
  };

  double lambda = spec.damping;
  Eigen::VectorXd r0 = residual_vec(x);
  bool singular = false;
  for (int it = 1; it <= spec.max_iters && !singular; ++it) {
    res.iters = it;
    Eigen::MatrixXd J(n, n);
    for (int k = 0; k < n; ++k) {
      Eigen::VectorXd xp = x;
      const double h = spec.fd_step * std::max(1.0, std::abs(x(k)));
      xp(k) += h;
      J.col(k) = (residual_vec(xp) - r0) / h;
    }
    if (!J.allFinite()) {
      singular = true;
      break;
    }
    const Eigen::MatrixXd jtj = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r0;
    bool accepted = false;
    for (int inner = 0; inner < 8; ++inner) {
      Eigen::MatrixXd a = jtj;
      a.diagonal().array() += lambda;
      const Eigen::VectorXd dx = a.ldlt().solve(-g);
      if (!dx.allFinite() || (a * dx + g).norm() > 1e-6 * std::max(1.0, g.norm())) {
        singular = true;
        break;
      }
      Eigen::VectorXd xc = x + dx;
      for (int k = 0; k < n; ++k) xc(k) = std::clamp(xc(k), x_lo, x_hi);
      const Eigen::VectorXd rc = residual_vec(xc);
      if (rc.squaredNorm() < r0.squaredNorm()) {
        double upd = 0.0;
        for (int k = 0; k < n; ++k)
          upd = std::max(upd, std::abs(std::expm1(x(k) - xc(k))));
        x = xc;
        r0 = rc;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (upd < spec.tol) {
          res.converged = true;
        }
        break;
      }
      lambda *= 10.0;
    }
    if (res.converged || (!accepted && !singular)) break;
  }

  if (singular) {
    ReconResult fb;
    run_fixed_point(fb);
    fb.fell_back = true;
    return fb;
  }
  res.estimate = to_r(x);
  const std::vector<double> f = forward(res.estimate);
  res.residual = detail::max_rel_mismatch(f, meas);
  return res;
}

// Element-wise pressure index from a strictly decreasing resistance->
// pressure transfer, normalized to [0, 1] by the frame maximum.
template <typename TransferFn>
std::vector<double> pressure_map(const std::vector<double>& estimate,
                                 TransferFn&& transfer) {
  std::vector<double> p(estimate.size());
  double mx = 0.0;
  for (std::size_t k = 0; k < estimate.size(); ++k) {
    p[k] = transfer(estimate[k]);
    mx = std::max(mx, p[k]);
  }
  if (mx > 0)
    for (auto& v : p) v /= mx;
  return p;
}

}  // namespace tdzsim
