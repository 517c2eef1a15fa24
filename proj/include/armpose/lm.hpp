#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace armpose {

/// Evaluates residuals at x (and the Jacobian when `jac` is non-null).
/// Returns false when x is infeasible, e.g. a point falls behind the camera.
using ResidualFn =
    std::function<bool(const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* jac)>;
/// Projects x back onto the feasible box in place.
using ProjectFn = std::function<void(Eigen::VectorXd& x)>;

struct LmOptions {
  int max_iterations = 200;
  /// Stop once an accepted step changes the loss by less than this fraction.
  double relative_tol = 1e-12;
  /// Stop once the loss itself falls below this.
  double absolute_tol = 1e-22;
  double initial_lambda = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 0.1;
  double max_lambda = 1e12;
  /// Optional box bounds (empty = unbounded). Steps are clipped to the box and
  /// parameters sitting on a bound whose descent direction points outwards
  /// are held fixed for that step.
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

enum class LmStop {
  Converged,      // tolerance reached
  Stalled,        // damping saturated without progress: a local minimum
  MaxIterations,  // ran out of iterations before either of the above
  Infeasible,     // the starting point itself could not be evaluated
};

struct LmResult {
  Eigen::VectorXd x;
  double loss = 0.0;
  double initial_loss = 0.0;
  int iterations = 0;  // accepted steps
  LmStop stop = LmStop::Infeasible;
  /// Loss after every accepted step, starting with the initial loss.
  std::vector<double> loss_trace;

  bool converged() const { return stop == LmStop::Converged || stop == LmStop::Stalled; }
};

/// Damped Gauss-Newton with Marquardt diagonal scaling. Loss is the sum of
/// squared residuals. Every accepted step strictly decreases the loss; a
/// rejected step raises the damping and retries from the same point.
LmResult levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd x0,
                             const LmOptions& opts, const ProjectFn& project = {});

/// True when the Jacobian's condition number exceeds `max_condition`.
bool rank_deficient(const Eigen::MatrixXd& jac, double max_condition = 1e10);

}  // namespace armpose
