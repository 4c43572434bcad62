#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "hfr/types.hpp"

namespace hfr {

/// A smooth payoff f(x, y) of a sequential game: x minimizes, y maximizes.
///
/// Implementations must be read-only after construction: every method is
/// const and may be called concurrently from several threads.
///
/// The Hessian-vector products default to central differences of the
/// gradients; problems with closed-form second derivatives override them.
class MinimaxProblem {
 public:
  virtual ~MinimaxProblem() = default;

  virtual Index dim_x() const = 0;
  virtual Index dim_y() const = 0;

  virtual double value(const PointXY& p) const = 0;
  virtual Vec grad_x(const PointXY& p) const = 0;
  virtual Vec grad_y(const PointXY& p) const = 0;

  /// H_yy v  (v in R^d2).
  virtual Vec hvp_yy(const PointXY& p, const Vec& v) const;
  /// H_yx u  (u in R^d1, result in R^d2).
  virtual Vec hvp_yx(const PointXY& p, const Vec& u) const;
  /// H_xy v  (v in R^d2, result in R^d1).
  virtual Vec hvp_xy(const PointXY& p, const Vec& v) const;
  /// H_xx u.
  virtual Vec hvp_xx(const PointXY& p, const Vec& u) const;

  /// Dense blocks, when the problem is small enough to form them.
  virtual std::optional<HessianBlocks> hessian_blocks(const PointXY& /*p*/) const {
    return std::nullopt;
  }

  /// True when hvp_* are closed-form rather than finite differences.
  virtual bool analytic_hvp() const { return false; }
};

/// f = (1/n) sum_i f_i with a cheap view onto any minibatch average.
class FiniteSumProblem {
 public:
  virtual ~FiniteSumProblem() = default;

  virtual std::size_t size() const = 0;

  /// Average of the components listed in `indices` (ascending, unique,
  /// zero-based). The view may reference *this and must not outlive it.
  virtual std::unique_ptr<MinimaxProblem> batch_view(
      std::span<const std::size_t> indices) const = 0;

  /// The deterministic average over all n components.
  virtual const MinimaxProblem& full() const = 0;

  std::unique_ptr<MinimaxProblem> component(std::size_t i) const {
    return batch_view(std::span<const std::size_t>(&i, 1));
  }
};

/// Explicit list of component problems averaged in ascending index order.
class ComponentSumProblem final : public FiniteSumProblem {
 public:
  explicit ComponentSumProblem(std::vector<std::shared_ptr<const MinimaxProblem>> components);

  std::size_t size() const override { return components_.size(); }
  std::unique_ptr<MinimaxProblem> batch_view(std::span<const std::size_t> indices) const override;
  const MinimaxProblem& full() const override { return *full_; }

  const MinimaxProblem& term(std::size_t i) const { return *components_.at(i); }

 private:
  std::vector<std::shared_ptr<const MinimaxProblem>> components_;
  std::unique_ptr<MinimaxProblem> full_;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  Index worst_coordinate = -1;  // stacked (x, y) index
};

/// Compares analytic gradients with central differences of value().
/// Error measure per coordinate: |analytic - fd| / (1 + |analytic|).
GradCheckReport grad_check(const MinimaxProblem& problem, const PointXY& point, double h = 1e-5);

/// Compares the averaged problem with batch_view over every index.
bool full_batch_equivalence(const FiniteSumProblem& fs, const PointXY& point,
                            double rel_tol = 1e-12);

/// All indices 0..n-1.
std::vector<std::size_t> all_indices(std::size_t n);

}  // namespace hfr
