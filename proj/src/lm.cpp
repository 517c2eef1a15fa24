#include "armpose/lm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

namespace armpose {

namespace {

void clip(Eigen::VectorXd& x, const LmOptions& opts) {
  if (opts.lower.size() == x.size()) x = x.cwiseMax(opts.lower);
  if (opts.upper.size() == x.size()) x = x.cwiseMin(opts.upper);
}

// Parameters pinned at a bound with the gradient pushing them further out.
std::vector<bool> active_set(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                             const LmOptions& opts) {
  std::vector<bool> active(x.size(), false);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (opts.lower.size() == x.size() && x[i] <= opts.lower[i] && g[i] > 0.0) active[i] = true;
    if (opts.upper.size() == x.size() && x[i] >= opts.upper[i] && g[i] < 0.0) active[i] = true;
  }
  return active;
}

}  // namespace

LmResult levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd x0,
                             const LmOptions& opts, const ProjectFn& project) {
  LmResult res;
  if (project) project(x0);
  clip(x0, opts);
  res.x = std::move(x0);

  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  if (!fn(res.x, r, &jac)) {
    res.loss = res.initial_loss = std::numeric_limits<double>::infinity();
    res.stop = LmStop::Infeasible;
    return res;
  }
  res.loss = res.initial_loss = r.squaredNorm();
  res.loss_trace.push_back(res.loss);

  double lambda = opts.initial_lambda;
  Eigen::VectorXd r_try;
  while (true) {
    if (res.loss <= opts.absolute_tol) {
      res.stop = LmStop::Converged;
      return res;
    }
    if (res.iterations >= opts.max_iterations) {
      res.stop = LmStop::MaxIterations;
      return res;
    }
    Eigen::MatrixXd a = jac.transpose() * jac;
    Eigen::VectorXd g = jac.transpose() * r;
    const std::vector<bool> active = active_set(res.x, g, opts);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      if (!active[i]) continue;
      a.row(i).setZero();
      a.col(i).setZero();
      a(i, i) = 1.0;
      g[i] = 0.0;
    }
    if (g.lpNorm<Eigen::Infinity>() == 0.0) {
      res.stop = LmStop::Converged;
      return res;
    }
    // Parameters the residuals do not depend on still get a little damping so
    // the system stays positive definite.
    Eigen::VectorXd d = a.diagonal();
    const double floor = std::max(d.maxCoeff(), 1.0) * 1e-12;
    d = d.cwiseMax(floor);

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd damped = a;
      damped.diagonal() += lambda * d;
      const Eigen::VectorXd step = damped.ldlt().solve(-g);
      Eigen::VectorXd x_try = res.x + step;
      if (project) project(x_try);
      clip(x_try, opts);

      if (step.allFinite() && fn(x_try, r_try, nullptr)) {
        const double loss_try = r_try.squaredNorm();
        if (loss_try < res.loss) {
          const double rel = (res.loss - loss_try) / res.loss;
          res.x = std::move(x_try);
          res.loss = loss_try;
          res.loss_trace.push_back(loss_try);
          ++res.iterations;
          lambda = std::max(lambda * opts.lambda_down, 1e-15);
          fn(res.x, r, &jac);
          if (rel < opts.relative_tol) {
            res.stop = LmStop::Converged;
            return res;
          }
          accepted = true;
          continue;
        }
      }
      lambda *= opts.lambda_up;
      if (lambda > opts.max_lambda) {
        res.stop = LmStop::Stalled;
        return res;
      }
    }
  }
}

bool rank_deficient(const Eigen::MatrixXd& jac, double max_condition) {
  if (jac.rows() < jac.cols()) return true;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return true;
  return s(0) / s(s.size() - 1) > max_condition;
}

}  // namespace armpose
