#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace cavopt {

using Residual = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct NewtonOptions {
  double tol = 1e-10;     // max-norm residual target
  int max_iter = 100;
  double fd_step = 1e-7;  // relative forward-difference step
};

struct NewtonResult {
  Eigen::VectorXd x;
  double residual = 0.0;  // max-norm at x
  int iterations = 0;
  bool converged = false;
};

/// Damped Newton with a forward-difference Jacobian and Armijo backtracking
/// on ||F||^2. Residual evaluations that throw or return non-finite values
/// count as failed trial steps.
NewtonResult damped_newton(const Residual& f, Eigen::VectorXd x0, const NewtonOptions& opt = {});

/// Runs damped_newton from each start in order and returns the first
/// converged result accepted by `accept`; otherwise the smallest residual.
NewtonResult multi_start_newton(const Residual& f, const std::vector<Eigen::VectorXd>& starts,
                                const NewtonOptions& opt = {},
                                const std::function<bool(const Eigen::VectorXd&)>& accept = {});

/// Sign changes of g on a uniform grid of n intervals over [lo, hi], each
/// refined by bisection. Points where g throws are skipped.
std::vector<double> bracket_roots(const std::function<double(double)>& g, double lo, double hi,
                                  int n, double xtol = 1e-13);

/// Brent's minimizer on [lo, hi].
double brent_minimize(const std::function<double(double)>& f, double lo, double hi,
                      double xtol = 1e-10, int max_iter = 200);

}  // namespace cavopt
