#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hfr/problem.hpp"

namespace hfr::problems {

enum class ToyTag { kG1, kG2, kG3 };

/// Two-dimensional closed-form payoffs (d1 = d2 = 1).
///   g1 = -3x^2 - y^2 + 4xy
///   g2 =  3x^2 + y^2 + 4xy
///   g3 = (4x^2 - (y - 3x + 0.05x^3)^2 - 0.1y^4) exp(-0.01(x^2 + y^2))
class ToyProblem final : public MinimaxProblem {
 public:
  explicit ToyProblem(ToyTag tag) : tag_(tag) {}

  ToyTag tag() const { return tag_; }

  Index dim_x() const override { return 1; }
  Index dim_y() const override { return 1; }
  double value(const PointXY& p) const override;
  Vec grad_x(const PointXY& p) const override;
  Vec grad_y(const PointXY& p) const override;
  Vec hvp_yy(const PointXY& p, const Vec& v) const override;
  Vec hvp_yx(const PointXY& p, const Vec& u) const override;
  Vec hvp_xy(const PointXY& p, const Vec& v) const override;
  Vec hvp_xx(const PointXY& p, const Vec& u) const override;
  std::optional<HessianBlocks> hessian_blocks(const PointXY& p) const override;
  bool analytic_hvp() const override { return true; }

 private:
  struct Derivs {
    double f, fx, fy, fxx, fxy, fyy;
  };
  Derivs Evaluate(double x, double y) const;

  ToyTag tag_;
};

std::shared_ptr<ToyProblem> make_g1();
std::shared_ptr<ToyProblem> make_g2();
std::shared_ptr<ToyProblem> make_g3();

/// f = 1/2 x'Ax + x'By + 1/2 y'Cy + a'x + b'y  with A, C symmetric.
class QuadraticGame final : public MinimaxProblem {
 public:
  QuadraticGame(Mat a, Mat b, Mat c);
  QuadraticGame(Mat a, Mat b, Mat c, Vec lin_x, Vec lin_y);

  const Mat& a() const { return a_; }
  const Mat& b() const { return b_; }
  const Mat& c() const { return c_; }
  const Vec& lin_x() const { return lin_x_; }
  const Vec& lin_y() const { return lin_y_; }

  Index dim_x() const override { return a_.rows(); }
  Index dim_y() const override { return c_.rows(); }
  double value(const PointXY& p) const override;
  Vec grad_x(const PointXY& p) const override;
  Vec grad_y(const PointXY& p) const override;
  Vec hvp_yy(const PointXY&, const Vec& v) const override { return c_ * v; }
  Vec hvp_yx(const PointXY&, const Vec& u) const override { return b_.transpose() * u; }
  Vec hvp_xy(const PointXY&, const Vec& v) const override { return b_ * v; }
  Vec hvp_xx(const PointXY&, const Vec& u) const override { return a_ * u; }
  std::optional<HessianBlocks> hessian_blocks(const PointXY& p) const override;
  bool analytic_hvp() const override { return true; }

  HessianBlocks blocks() const;

  /// Stationary point of the full quadratic (requires an invertible Hessian).
  PointXY critical_point() const;

 private:
  Mat a_, b_, c_;
  Vec lin_x_, lin_y_;
};

std::shared_ptr<QuadraticGame> make_quadratic(Mat a, Mat b, Mat c);

/// Quadratic game with prescribed blocks at the origin: Schur complement
/// `schur` (d1 x d1, SPD), follower block `hyy` (d2 x d2, negative definite)
/// and coupling `hxy`. H_xx is solved for.
std::shared_ptr<QuadraticGame> make_quadratic_from_schur(const Mat& schur, const Mat& hxy,
                                                         const Mat& hyy);

/// Random strict-minimax quadratic: Schur and -H_yy eigenvalues drawn from
/// [eig_lo, eig_hi], orthogonal eigenbases, Gaussian coupling.
std::shared_ptr<QuadraticGame> make_random_strict_minimax(Index d1, Index d2, std::uint64_t seed,
                                                          double eig_lo = 0.5,
                                                          double eig_hi = 3.0);

struct FiniteSumQuadraticOptions {
  std::size_t n = 100;
  Index d1 = 2;
  Index d2 = 2;
  std::uint64_t seed = 0;
  double perturbation = 0.3;  // scale of per-component deviations
  double linear_scale = 1.0;  // scale of per-component linear terms (zero mean)
  double eig_lo = 0.5;        // spectrum range of Schur and -H_yy of the average
  double eig_hi = 2.0;
};

/// Smoothness constants over a ball around the average game's critical point.
struct SmoothnessBounds {
  double rho_x = 0.0;
  double rho_y = 0.0;
  double rho_xy = 0.0;
  double rho_yy = 0.0;
};

class FiniteSumQuadratic final : public FiniteSumProblem {
 public:
  FiniteSumQuadratic(std::vector<std::shared_ptr<const QuadraticGame>> terms,
                     std::shared_ptr<const QuadraticGame> average);

  std::size_t size() const override { return sum_.size(); }
  std::unique_ptr<MinimaxProblem> batch_view(std::span<const std::size_t> idx) const override {
    return sum_.batch_view(idx);
  }
  const MinimaxProblem& full() const override { return sum_.full(); }

  const QuadraticGame& term(std::size_t i) const { return *terms_.at(i); }
  /// The designed average (equal to full() up to rounding).
  const QuadraticGame& average() const { return *average_; }

  /// Gradient bounds over the ball of `radius` around the origin plus the
  /// exact block norms.
  SmoothnessBounds bounds(double radius) const;

 private:
  std::vector<std::shared_ptr<const QuadraticGame>> terms_;
  std::shared_ptr<const QuadraticGame> average_;
  ComponentSumProblem sum_;
};

/// n quadratic components whose mean is a strict-minimax game with its
/// critical point at the origin. perturbation = 0 and linear_scale = 0 give
/// identical components.
std::shared_ptr<FiniteSumQuadratic> make_finite_sum_quadratic(const FiniteSumQuadraticOptions& opt);

/// Fully connected tanh network with an affine output layer.
class Mlp {
 public:
  explicit Mlp(std::vector<int> layer_sizes);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  Index num_params() const { return num_params_; }
  const std::vector<int>& sizes() const { return sizes_; }

  /// Output for one input column.
  Vec forward(const Vec& params, const Vec& input) const;

  /// Accumulates w * d(out . seed)/d(params) into `param_grad` and returns the
  /// gradient with respect to the input.
  Vec backward(const Vec& params, const Vec& input, const Vec& out_seed, double w,
               Vec& param_grad) const;

  /// Glorot-style random initialization.
  Vec init_params(std::uint64_t seed) const;

  /// Outputs for a batch of input columns. `tape` receives every layer's
  /// activations (input first) for a later BackwardBatch.
  Mat ForwardBatch(const Vec& params, const Mat& inputs, std::vector<Mat>* tape = nullptr) const;

  /// Accumulates d(sum of out_seed .* outputs)/d(params) into `param_grad`
  /// and returns the gradient with respect to the inputs.
  Mat BackwardBatch(const Vec& params, const std::vector<Mat>& tape, const Mat& out_seed,
                    Vec& param_grad) const;

 private:
  std::vector<int> sizes_;
  std::vector<Index> offsets_;  // start of each layer's weights
  Index num_params_ = 0;
};

struct MixtureGanOptions {
  std::vector<int> generator_hidden = {16, 16};
  std::vector<int> discriminator_hidden = {16, 16};
  int noise_dim = 3;
  std::size_t n_data = 512;
  std::size_t m_noise = 512;
  std::uint64_t seed = 0;
  double l2_reg = 1e-4;
};

/// JS-GAN on the 1-d mixture (1/3)N(-4, .3^2) + (1/3)N(0, .3^2) + (1/3)N(4, .3^2).
///
/// Leader x = generator weights, follower y = discriminator weights. Component
/// i = j * n_data + k pairs noise draw j with data sample k:
///   f_i = log sigmoid(D(X_k)) + log(1 - sigmoid(D(G(Z_j)))) - l2_reg ||y||^2.
class MixtureGan final : public FiniteSumProblem {
 public:
  explicit MixtureGan(const MixtureGanOptions& opt);

  std::size_t size() const override { return data_.size() * noise_.size(); }
  std::unique_ptr<MinimaxProblem> batch_view(std::span<const std::size_t> idx) const override;
  const MinimaxProblem& full() const override { return *full_; }

  const Mlp& generator() const { return generator_; }
  const Mlp& discriminator() const { return discriminator_; }
  const std::vector<double>& data() const { return data_; }
  const std::vector<Vec>& noise() const { return noise_; }
  double l2_reg() const { return l2_reg_; }

  /// Random initial parameters.
  PointXY initial_point(std::uint64_t seed) const;

 private:
  Mlp generator_;
  Mlp discriminator_;
  std::vector<double> data_;
  std::vector<Vec> noise_;
  double l2_reg_;
  std::unique_ptr<MinimaxProblem> full_;
};

std::shared_ptr<MixtureGan> make_mixture_gan(const MixtureGanOptions& opt);

}  // namespace hfr::problems
