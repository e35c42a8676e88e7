#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "terrabench/objective.hpp"
#include "terrabench/rng.hpp"

namespace terrabench {

struct CmaEsParams {
  /// Initial step size in meters.
  double sigma0 = 1.2e5;
  /// Offspring per generation (lambda).
  int population_size = 6;
  /// 0 means no limit.
  std::size_t max_generations = 0;

  void validate() const {
    if (!(sigma0 > 0.0)) throw ConfigError("cma_es: sigma0 must be > 0");
    if (population_size < 4) throw ConfigError("cma_es: population_size must be >= 4");
  }
};

/// (mu/mu_w, lambda)-CMA-ES maximising the height, with the default strategy
/// parameters of Hansen's tutorial.
///
/// Candidates are clipped to the bounds before evaluation and enter the update
/// in their clipped form. Stops when the best heights of the last
/// 10 + ceil(30 n / lambda) generations, together with the current generation,
/// span less than f_tol, or when sigma * sqrt(max diag C) falls below x_tol.
inline OptimizeResult cma_es(Objective& objective, const Bounds& bounds, std::span<const double> start,
                             const CmaEsParams& params, const LocalTolerances& tolerances, std::uint64_t seed) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  params.validate();
  tolerances.validate();
  bounds.validate();
  const auto n = static_cast<Eigen::Index>(bounds.dim());
  if (start.size() != bounds.dim()) throw ConfigError("start point dimension does not match bounds");
  const double nd = static_cast<double>(n);
  const auto lambda = static_cast<std::size_t>(params.population_size);
  const std::size_t mu = lambda / 2;

  VectorXd weights(static_cast<Eigen::Index>(mu));
  for (std::size_t i = 0; i < mu; ++i) {
    weights(static_cast<Eigen::Index>(i)) =
        std::log((static_cast<double>(lambda) + 1.0) / 2.0) - std::log(static_cast<double>(i) + 1.0);
  }
  weights /= weights.sum();
  const double mueff = 1.0 / weights.squaredNorm();

  const double cc = (4.0 + mueff / nd) / (nd + 4.0 + 2.0 * mueff / nd);
  const double cs = (mueff + 2.0) / (nd + mueff + 5.0);
  const double c1 = 2.0 / ((nd + 1.3) * (nd + 1.3) + mueff);
  const double cmu = std::min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nd + 2.0) * (nd + 2.0) + mueff));
  const double damps = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff - 1.0) / (nd + 1.0)) - 1.0) + cs;
  const double chi_n = std::sqrt(nd) * (1.0 - 1.0 / (4.0 * nd) + 1.0 / (21.0 * nd * nd));
  const std::size_t history_length =
      10 + static_cast<std::size_t>(std::ceil(30.0 * nd / static_cast<double>(lambda)));

  Rng rng(seed);
  detail::Evaluator eval(objective, bounds);

  VectorXd mean = Eigen::Map<const VectorXd>(start.data(), n);
  for (Eigen::Index k = 0; k < n; ++k) {
    mean(k) = std::clamp(mean(k), bounds.lower[static_cast<std::size_t>(k)], bounds.upper[static_cast<std::size_t>(k)]);
  }
  double sigma = params.sigma0;
  MatrixXd C = MatrixXd::Identity(n, n);
  MatrixXd B = MatrixXd::Identity(n, n);
  VectorXd D = VectorXd::Ones(n);
  VectorXd pc = VectorXd::Zero(n);
  VectorXd ps = VectorXd::Zero(n);
  std::deque<double> best_history;

  std::vector<VectorXd> xs(lambda, VectorXd(n));
  std::vector<double> h(lambda);
  std::vector<std::size_t> order(lambda);
  std::vector<double> point(bounds.dim());

  for (std::size_t gen = 0; params.max_generations == 0 || gen < params.max_generations; ++gen) {
    for (std::size_t i = 0; i < lambda; ++i) {
      VectorXd z(n);
      for (Eigen::Index k = 0; k < n; ++k) z(k) = rng.normal();
      VectorXd x = mean + sigma * (B * D.asDiagonal() * z);
      for (Eigen::Index k = 0; k < n; ++k) point[static_cast<std::size_t>(k)] = x(k);
      h[i] = eval(point);
      if (eval.stop()) return eval.result(StopReason::external);
      xs[i] = Eigen::Map<const VectorXd>(point.data(), n);
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return h[a] > h[b]; });

    const VectorXd old_mean = mean;
    mean.setZero();
    for (std::size_t i = 0; i < mu; ++i) mean += weights(static_cast<Eigen::Index>(i)) * xs[order[i]];

    const VectorXd step = (mean - old_mean) / sigma;
    const MatrixXd inv_sqrt_c = B * D.cwiseInverse().asDiagonal() * B.transpose();
    ps = (1.0 - cs) * ps + std::sqrt(cs * (2.0 - cs) * mueff) * (inv_sqrt_c * step);
    const double ps_norm = ps.norm();
    const double gen_factor = 1.0 - std::pow(1.0 - cs, 2.0 * static_cast<double>(gen + 1));
    const bool hsig = ps_norm / std::sqrt(gen_factor) / chi_n < 1.4 + 2.0 / (nd + 1.0);
    pc = (1.0 - cc) * pc + (hsig ? std::sqrt(cc * (2.0 - cc) * mueff) : 0.0) * step;

    MatrixXd rank_mu = MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < mu; ++i) {
      const VectorXd y = (xs[order[i]] - old_mean) / sigma;
      rank_mu += weights(static_cast<Eigen::Index>(i)) * y * y.transpose();
    }
    C = (1.0 - c1 - cmu) * C + c1 * (pc * pc.transpose() + (hsig ? 0.0 : cc * (2.0 - cc)) * C) + cmu * rank_mu;
    sigma *= std::exp((cs / damps) * (ps_norm / chi_n - 1.0));

    C = 0.5 * (C + C.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(C);
    if (eig.info() != Eigen::Success) return eval.result(StopReason::converged);
    B = eig.eigenvectors();
    D = eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt();
    if (D.maxCoeff() > 1e7 * D.minCoeff()) return eval.result(StopReason::converged);

    const auto [lo, hi] = std::minmax_element(h.begin(), h.end());
    best_history.push_back(h[order[0]]);
    if (best_history.size() > history_length) best_history.pop_front();
    if (best_history.size() == history_length) {
      const auto [blo, bhi] = std::minmax_element(best_history.begin(), best_history.end());
      if (std::max(*bhi, *hi) - std::min(*blo, *lo) < tolerances.f_tol) return eval.result(StopReason::f_tol);
    }
    if (sigma * std::sqrt(C.diagonal().maxCoeff()) < tolerances.x_tol) return eval.result(StopReason::x_tol);
  }
  return eval.result(StopReason::max_iterations);
}

}  // namespace terrabench
