#include "hfr/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hfr/trajectory.hpp"

namespace hfr {

namespace {

// Central-difference step for directional derivatives of a gradient field.
double DirectionalStep(const PointXY& p, const Vec& dir) {
  const double scale = 1.0 + std::sqrt(p.x.squaredNorm() + p.y.squaredNorm());
  const double dn = dir.norm();
  return dn > 0.0 ? 1e-5 * scale / dn : 1.0;
}

template <typename GradFn>
Vec CentralDifference(const PointXY& p, const Vec& dir, bool perturb_x, GradFn grad) {
  if (dir.size() == 0 || dir.isZero(0.0)) {
    Vec zero = grad(p);
    zero.setZero();
    return zero;
  }
  const double h = DirectionalStep(p, dir);
  PointXY plus = p, minus = p;
  if (perturb_x) {
    plus.x += h * dir;
    minus.x -= h * dir;
  } else {
    plus.y += h * dir;
    minus.y -= h * dir;
  }
  return (grad(plus) - grad(minus)) / (2.0 * h);
}

// Average of a subset of component problems, summed in the given order.
class AveragedProblem final : public MinimaxProblem {
 public:
  explicit AveragedProblem(std::vector<const MinimaxProblem*> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) throw ConfigError("empty minibatch");
    inv_n_ = 1.0 / static_cast<double>(terms_.size());
  }

  Index dim_x() const override { return terms_.front()->dim_x(); }
  Index dim_y() const override { return terms_.front()->dim_y(); }

  double value(const PointXY& p) const override {
    double s = 0.0;
    for (const auto* t : terms_) s += t->value(p);
    return s * inv_n_;
  }
  Vec grad_x(const PointXY& p) const override {
    return Sum([&](const MinimaxProblem& t) { return t.grad_x(p); });
  }
  Vec grad_y(const PointXY& p) const override {
    return Sum([&](const MinimaxProblem& t) { return t.grad_y(p); });
  }
  Vec hvp_yy(const PointXY& p, const Vec& v) const override {
    return Sum([&](const MinimaxProblem& t) { return t.hvp_yy(p, v); });
  }
  Vec hvp_yx(const PointXY& p, const Vec& u) const override {
    return Sum([&](const MinimaxProblem& t) { return t.hvp_yx(p, u); });
  }
  Vec hvp_xy(const PointXY& p, const Vec& v) const override {
    return Sum([&](const MinimaxProblem& t) { return t.hvp_xy(p, v); });
  }
  Vec hvp_xx(const PointXY& p, const Vec& u) const override {
    return Sum([&](const MinimaxProblem& t) { return t.hvp_xx(p, u); });
  }

  std::optional<HessianBlocks> hessian_blocks(const PointXY& p) const override {
    std::optional<HessianBlocks> acc;
    for (const auto* t : terms_) {
      auto h = t->hessian_blocks(p);
      if (!h) return std::nullopt;
      if (!acc) {
        acc = std::move(h);
      } else {
        acc->hxx += h->hxx;
        acc->hxy += h->hxy;
        acc->hyx += h->hyx;
        acc->hyy += h->hyy;
      }
    }
    acc->hxx *= inv_n_;
    acc->hxy *= inv_n_;
    acc->hyx *= inv_n_;
    acc->hyy *= inv_n_;
    return acc;
  }

  bool analytic_hvp() const override {
    return std::all_of(terms_.begin(), terms_.end(),
                       [](const MinimaxProblem* t) { return t->analytic_hvp(); });
  }

 private:
  template <typename F>
  Vec Sum(F f) const {
    Vec acc = f(*terms_.front());
    for (std::size_t i = 1; i < terms_.size(); ++i) acc += f(*terms_[i]);
    return acc * inv_n_;
  }

  std::vector<const MinimaxProblem*> terms_;
  double inv_n_ = 1.0;
};

}  // namespace

Vec MinimaxProblem::hvp_yy(const PointXY& p, const Vec& v) const {
  return CentralDifference(p, v, false, [this](const PointXY& q) { return grad_y(q); });
}

Vec MinimaxProblem::hvp_yx(const PointXY& p, const Vec& u) const {
  if (u.isZero(0.0)) return Vec::Zero(dim_y());
  return CentralDifference(p, u, true, [this](const PointXY& q) { return grad_y(q); });
}

Vec MinimaxProblem::hvp_xy(const PointXY& p, const Vec& v) const {
  if (v.isZero(0.0)) return Vec::Zero(dim_x());
  return CentralDifference(p, v, false, [this](const PointXY& q) { return grad_x(q); });
}

Vec MinimaxProblem::hvp_xx(const PointXY& p, const Vec& u) const {
  return CentralDifference(p, u, true, [this](const PointXY& q) { return grad_x(q); });
}

ComponentSumProblem::ComponentSumProblem(
    std::vector<std::shared_ptr<const MinimaxProblem>> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw ConfigError("finite-sum problem needs at least one component");
  for (const auto& c : components_) {
    if (!c) throw ConfigError("null component");
    if (c->dim_x() != components_.front()->dim_x() || c->dim_y() != components_.front()->dim_y())
      throw ConfigError("finite-sum components disagree on dimensions");
  }
  full_ = batch_view(all_indices(components_.size()));
}

std::unique_ptr<MinimaxProblem> ComponentSumProblem::batch_view(
    std::span<const std::size_t> indices) const {
  std::vector<const MinimaxProblem*> terms;
  terms.reserve(indices.size());
  for (std::size_t i : indices) terms.push_back(components_.at(i).get());
  return std::make_unique<AveragedProblem>(std::move(terms));
}

GradCheckReport grad_check(const MinimaxProblem& problem, const PointXY& point, double h) {
  if (!(h > 0.0)) throw ConfigError("grad_check step must be positive");
  point.validate();
  const Vec gx = problem.grad_x(point);
  const Vec gy = problem.grad_y(point);
  GradCheckReport report;
  const Index d1 = point.dim_x();
  const Index n = d1 + point.dim_y();
  for (Index i = 0; i < n; ++i) {
    PointXY plus = point, minus = point;
    if (i < d1) {
      plus.x[i] += h;
      minus.x[i] -= h;
    } else {
      plus.y[i - d1] += h;
      minus.y[i - d1] -= h;
    }
    const double fp = problem.value(plus);
    const double fm = problem.value(minus);
    if (!std::isfinite(fp) || !std::isfinite(fm)) throw NumericalError("non-evaluable region");
    const double fd = (fp - fm) / (2.0 * h);
    const double analytic = i < d1 ? gx[i] : gy[i - d1];
    const double err = std::abs(analytic - fd) / (1.0 + std::abs(analytic));
    if (err > report.max_rel_error || report.worst_coordinate < 0) {
      report.max_rel_error = std::max(report.max_rel_error, err);
      report.worst_coordinate = i;
    }
  }
  return report;
}

bool full_batch_equivalence(const FiniteSumProblem& fs, const PointXY& point, double rel_tol) {
  const auto idx = all_indices(fs.size());
  const auto view = fs.batch_view(idx);
  const MinimaxProblem& avg = fs.full();
  auto close = [rel_tol](double a, double b) {
    return std::abs(a - b) <= rel_tol * std::max({1.0, std::abs(a), std::abs(b)});
  };
  auto close_vec = [&](const Vec& a, const Vec& b) {
    if (a.size() != b.size()) return false;
    for (Index i = 0; i < a.size(); ++i)
      if (!close(a[i], b[i])) return false;
    return true;
  };
  return close(view->value(point), avg.value(point)) &&
         close_vec(view->grad_x(point), avg.grad_x(point)) &&
         close_vec(view->grad_y(point), avg.grad_y(point));
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

void Trajectory::append(TrajectoryRecord record) {
  if (!records_.empty()) {
    if (record.step <= records_.back().step)
      throw ConfigError("trajectory steps must strictly increase");
    if (record.wall_time < records_.back().wall_time) record.wall_time = records_.back().wall_time;
  } else if (record.step != 0) {
    throw ConfigError("trajectory must start at step 0");
  }
  records_.push_back(std::move(record));
}

}  // namespace hfr
