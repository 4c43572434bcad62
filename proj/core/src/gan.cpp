#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "hfr/problems.hpp"

namespace hfr::problems {

// ---------------------------------------------------------------------------
// Mlp

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw ConfigError("network needs an input and an output layer");
  for (int s : sizes_)
    if (s < 1) throw ConfigError("layer widths must be >= 1");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(num_params_);
    num_params_ += static_cast<Index>(sizes_[l + 1]) * sizes_[l] + sizes_[l + 1];
  }
}

namespace {

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                   Eigen::RowMajor>>;
using RowMajorMutMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Numerically stable log(1 + exp(t)).
double Softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

double Sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

Vec Mlp::forward(const Vec& params, const Vec& input) const {
  Mat in = input;
  return ForwardBatch(params, in).col(0);
}

Mat Mlp::ForwardBatch(const Vec& params, const Mat& inputs, std::vector<Mat>* tape) const {
  if (params.size() != num_params_) throw ConfigError("parameter vector has the wrong size");
  if (inputs.rows() != sizes_.front()) throw ConfigError("network input has the wrong size");
  Mat act = inputs;
  if (tape) {
    tape->clear();
    tape->push_back(act);
  }
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    RowMajorMap w(params.data() + offsets_[l], out, in);
    Eigen::Map<const Vec> b(params.data() + offsets_[l] + static_cast<Index>(out) * in, out);
    Mat z = w * act;
    z.colwise() += b;
    if (l + 1 < layers) z = z.array().tanh().matrix();
    act = std::move(z);
    if (tape) tape->push_back(act);
  }
  return act;
}

Mat Mlp::BackwardBatch(const Vec& params, const std::vector<Mat>& tape, const Mat& out_seed,
                       Vec& param_grad) const {
  const std::size_t layers = sizes_.size() - 1;
  Mat delta = out_seed;
  for (std::size_t l = layers; l-- > 0;) {
    const int in = sizes_[l], out = sizes_[l + 1];
    const Mat& a_in = tape[l];
    RowMajorMap w(params.data() + offsets_[l], out, in);
    RowMajorMutMap gw(param_grad.data() + offsets_[l], out, in);
    Eigen::Map<Vec> gb(param_grad.data() + offsets_[l] + static_cast<Index>(out) * in, out);
    gw.noalias() += delta * a_in.transpose();
    gb += delta.rowwise().sum();
    Mat back = w.transpose() * delta;
    if (l > 0) back.array() *= (1.0 - a_in.array().square());
    delta = std::move(back);
  }
  return delta;
}

Vec Mlp::backward(const Vec& params, const Vec& input, const Vec& out_seed, double w,
                  Vec& param_grad) const {
  std::vector<Mat> tape;
  Mat in = input;
  ForwardBatch(params, in, &tape);
  Mat seed = w * out_seed;
  return BackwardBatch(params, tape, seed, param_grad).col(0);
}

Vec Mlp::init_params(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  Vec p = Vec::Zero(num_params_);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const int in = sizes_[l], out = sizes_[l + 1];
    const double bound = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> uni(-bound, bound);
    for (Index k = 0; k < static_cast<Index>(out) * in; ++k) p[offsets_[l] + k] = uni(rng);
  }
  return p;
}

// ---------------------------------------------------------------------------
// MixtureGan

namespace {

// Weighted view: value = sum_k wd_k log s(D(X_k)) + sum_j wn_j log(1 - s(D(G(Z_j)))) - l2 ||y||^2.
class GanBatch final : public MinimaxProblem {
 public:
  GanBatch(const MixtureGan& gan, Mat data, Vec data_w, Mat noise, Vec noise_w)
      : gan_(gan),
        data_(std::move(data)),
        data_w_(std::move(data_w)),
        noise_(std::move(noise)),
        noise_w_(std::move(noise_w)) {}

  Index dim_x() const override { return gan_.generator().num_params(); }
  Index dim_y() const override { return gan_.discriminator().num_params(); }

  double value(const PointXY& p) const override {
    const Mat fake = gan_.generator().ForwardBatch(p.x, noise_);
    const Mat d_real = gan_.discriminator().ForwardBatch(p.y, data_);
    const Mat d_fake = gan_.discriminator().ForwardBatch(p.y, fake);
    double v = 0.0;
    for (Index k = 0; k < d_real.cols(); ++k) v -= data_w_[k] * Softplus(-d_real(0, k));
    for (Index j = 0; j < d_fake.cols(); ++j) v -= noise_w_[j] * Softplus(d_fake(0, j));
    return v - gan_.l2_reg() * p.y.squaredNorm();
  }

  Vec grad_x(const PointXY& p) const override {
    std::vector<Mat> g_tape, d_tape;
    const Mat fake = gan_.generator().ForwardBatch(p.x, noise_, &g_tape);
    const Mat d_fake = gan_.discriminator().ForwardBatch(p.y, fake, &d_tape);
    // d/dD of log(1 - s(D)) is -s(D).
    Mat seed(1, d_fake.cols());
    for (Index j = 0; j < d_fake.cols(); ++j) seed(0, j) = -noise_w_[j] * Sigmoid(d_fake(0, j));
    Vec unused = Vec::Zero(dim_y());
    const Mat d_input = gan_.discriminator().BackwardBatch(p.y, d_tape, seed, unused);
    Vec gx = Vec::Zero(dim_x());
    gan_.generator().BackwardBatch(p.x, g_tape, d_input, gx);
    return gx;
  }

  Vec grad_y(const PointXY& p) const override {
    const Mat fake = gan_.generator().ForwardBatch(p.x, noise_);
    Vec gy = -2.0 * gan_.l2_reg() * p.y;
    std::vector<Mat> tape;
    const Mat d_real = gan_.discriminator().ForwardBatch(p.y, data_, &tape);
    // d/dD of log s(D) is s(-D).
    Mat seed(1, d_real.cols());
    for (Index k = 0; k < d_real.cols(); ++k) seed(0, k) = data_w_[k] * Sigmoid(-d_real(0, k));
    gan_.discriminator().BackwardBatch(p.y, tape, seed, gy);
    const Mat d_fake = gan_.discriminator().ForwardBatch(p.y, fake, &tape);
    Mat seed_fake(1, d_fake.cols());
    for (Index j = 0; j < d_fake.cols(); ++j)
      seed_fake(0, j) = -noise_w_[j] * Sigmoid(d_fake(0, j));
    gan_.discriminator().BackwardBatch(p.y, tape, seed_fake, gy);
    return gy;
  }

 private:
  const MixtureGan& gan_;
  Mat data_;
  Vec data_w_;
  Mat noise_;
  Vec noise_w_;
};

}  // namespace

MixtureGan::MixtureGan(const MixtureGanOptions& opt)
    : generator_([&] {
        std::vector<int> s{opt.noise_dim};
        s.insert(s.end(), opt.generator_hidden.begin(), opt.generator_hidden.end());
        s.push_back(1);
        return s;
      }()),
      discriminator_([&] {
        std::vector<int> s{1};
        s.insert(s.end(), opt.discriminator_hidden.begin(), opt.discriminator_hidden.end());
        s.push_back(1);
        return s;
      }()),
      l2_reg_(opt.l2_reg) {
  if (opt.n_data < 1 || opt.m_noise < 1) throw ConfigError("GAN needs data and noise samples");
  if (opt.noise_dim < 1) throw ConfigError("noise dimension must be >= 1");
  if (!(opt.l2_reg >= 0.0)) throw ConfigError("l2_reg must be >= 0");
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<int> mode(0, 2);
  std::normal_distribution<double> normal;
  data_.reserve(opt.n_data);
  for (std::size_t k = 0; k < opt.n_data; ++k) {
    const double center = -4.0 + 4.0 * mode(rng);
    data_.push_back(center + 0.3 * normal(rng));
  }
  noise_.reserve(opt.m_noise);
  for (std::size_t j = 0; j < opt.m_noise; ++j) {
    Vec z(opt.noise_dim);
    for (int c = 0; c < opt.noise_dim; ++c) z[c] = normal(rng);
    noise_.push_back(std::move(z));
  }
  full_ = batch_view(all_indices(size()));
}

std::unique_ptr<MinimaxProblem> MixtureGan::batch_view(std::span<const std::size_t> idx) const {
  if (idx.empty()) throw ConfigError("empty minibatch");
  const std::size_t n = data_.size();
  // Multiplicity of each data sample and noise draw among the selected pairs.
  std::map<std::size_t, double> data_count, noise_count;
  for (std::size_t i : idx) {
    if (i >= size()) throw ConfigError("minibatch index out of range");
    noise_count[i / n] += 1.0;
    data_count[i % n] += 1.0;
  }
  const double inv = 1.0 / static_cast<double>(idx.size());
  Mat data(1, static_cast<Index>(data_count.size()));
  Vec data_w(data.cols());
  Index c = 0;
  for (const auto& [k, cnt] : data_count) {
    data(0, c) = data_[k];
    data_w[c++] = cnt * inv;
  }
  Mat noise(generator_.input_dim(), static_cast<Index>(noise_count.size()));
  Vec noise_w(noise.cols());
  c = 0;
  for (const auto& [j, cnt] : noise_count) {
    noise.col(c) = noise_[j];
    noise_w[c++] = cnt * inv;
  }
  return std::make_unique<GanBatch>(*this, std::move(data), std::move(data_w), std::move(noise),
                                    std::move(noise_w));
}

PointXY MixtureGan::initial_point(std::uint64_t seed) const {
  return PointXY(generator_.init_params(seed), discriminator_.init_params(seed + 1));
}

std::shared_ptr<MixtureGan> make_mixture_gan(const MixtureGanOptions& opt) {
  return std::make_shared<MixtureGan>(opt);
}

}  // namespace hfr::problems
