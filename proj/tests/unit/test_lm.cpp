#include <doctest.h>

#include "armpose/lm.hpp"

using namespace armpose;

namespace {

// Rosenbrock as least squares: r = (10 (y - x^2), 1 - x).
bool rosenbrock(const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* j) {
  r.resize(2);
  r << 10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0];
  if (j) {
    j->resize(2, 2);
    *j << -20.0 * x[0], 10.0, -1.0, 0.0;
  }
  return true;
}

}  // namespace

TEST_CASE("finds the Rosenbrock minimum with a monotone loss trace") {
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  const LmResult r = levenberg_marquardt(rosenbrock, x0, {});
  CHECK(r.converged());
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.initial_loss == doctest::Approx(24.2));
  for (std::size_t i = 1; i < r.loss_trace.size(); ++i)
    CHECK(r.loss_trace[i] < r.loss_trace[i - 1]);
  CHECK(r.loss_trace.size() == static_cast<std::size_t>(r.iterations) + 1);
}

TEST_CASE("box bounds hold and the constrained optimum sits on the bound") {
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  LmOptions o;
  o.lower = Eigen::Vector2d(-2.0, -2.0);
  o.upper = Eigen::Vector2d(0.5, 2.0);
  const LmResult r = levenberg_marquardt(rosenbrock, x0, o);
  CHECK(r.converged());
  CHECK(r.x[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(r.x[1] == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("iteration cap and infeasible start") {
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  LmOptions o;
  o.max_iterations = 2;
  const LmResult capped = levenberg_marquardt(rosenbrock, x0, o);
  CHECK(capped.stop == LmStop::MaxIterations);
  CHECK(capped.iterations == 2);

  const ResidualFn never = [](const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd*) {
    return false;
  };
  CHECK(levenberg_marquardt(never, x0, {}).stop == LmStop::Infeasible);
}

TEST_CASE("rank deficiency") {
  Eigen::MatrixXd j(3, 2);
  j << 1, 2, 2, 4, 3, 6;
  CHECK(rank_deficient(j));
  j << 1, 0, 0, 1, 1, 1;
  CHECK_FALSE(rank_deficient(j));
  CHECK(rank_deficient(Eigen::MatrixXd::Ones(1, 2)));
}
