#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "hfr/problem.hpp"
#include "hfr/types.hpp"

namespace hfr::analysis {

enum class Verdict { kStrict, kNonStrictNecessaryOnly, kNo, kDegenerate };

std::string to_string(Verdict v);

struct EigenEvidence {
  Vec hxx;    // ascending
  Vec hyy;    // ascending
  Vec schur;  // ascending; empty when H_yy is singular within tolerance
};

struct CriticalPointReport {
  bool is_critical = false;
  double grad_norm_x = 0.0;
  double grad_norm_y = 0.0;
  Verdict nash = Verdict::kDegenerate;
  Verdict minimax = Verdict::kDegenerate;
  double tau = 0.0;
  EigenEvidence evidence;
};

/// 1e-8 (1 + ||H||_2) for the full Hessian.
double default_tau(const HessianBlocks& h);

/// Schur complement H_xx - H_xy H_yy^{-1} H_yx (symmetrized). Throws
/// NumericalError("follower Hessian singular") when H_yy is not invertible.
Mat schur_complement(const HessianBlocks& h);

/// Local Nash test. Strict: H_xx > tau and H_yy < -tau. No: an eigenvalue of
/// H_xx below -tau or of H_yy above tau. Degenerate otherwise.
/// Throws ConfigError("not a critical point") when either gradient norm
/// exceeds grad_tol.
Verdict classify_nash(const HessianBlocks& h, const Vec& grad_x, const Vec& grad_y,
                      double grad_tol = 1e-8, std::optional<double> tau = std::nullopt);

/// Local minimax test on H_yy and the Schur complement, same conventions.
Verdict classify_minimax(const HessianBlocks& h, const Vec& grad_x, const Vec& grad_y,
                         double grad_tol = 1e-8, std::optional<double> tau = std::nullopt);

/// Both verdicts plus eigen-evidence. Uses the problem's dense blocks, or
/// central differences when it has none.
CriticalPointReport classify_point(const MinimaxProblem& f, const PointXY& p,
                                   double grad_tol = 1e-8);

struct SpectralReport {
  std::string algorithm;
  Mat jacobian;
  double spectral_radius = 0.0;
  bool converges = false;  // spectral_radius < 1
  // HessianFR family: |rho(J) - rho(M)| / max(1, rho(M)) for the similar
  // block-triangular M, whose spectrum gives spectral_radius.
  double similarity_gap = 0.0;
};

/// J = I - eta_x [[I, 0], [-H_yy^{-1} H_yx, -c1 I + c2 H_yy^{-1}]] H.
/// spectral_radius comes from the diagonal blocks of similar_hessianfr();
/// similarity_gap compares it with a dense eigensolve of J.
SpectralReport jacobian_hessianfr(const HessianBlocks& h, double eta_x, double c1, double c2);

/// I - eta_x [[Schur, H_xy], [0, -c1 H_yy + c2 I]].
Mat similar_hessianfr(const HessianBlocks& h, double eta_x, double c1, double c2);

/// jacobian_hessianfr with c2 = 0.
SpectralReport jacobian_fr(const HessianBlocks& h, double eta_x, double c1);

/// jacobian_hessianfr with c1 = 0, c2 = 1 / eta_x.
SpectralReport jacobian_gdn(const HessianBlocks& h, double eta_x);

/// HessianFR with diagonal preconditioners P1 = diag(p1), P2 = diag(p2):
/// J = I - eta_x [[P1, 0], [-H_yy^{-1} H_yx P1, (-c1 I + c2 H_yy^{-1}) P2]] H.
/// Checks that P1 Schur and (-c1 H_yy + c2 I) P2 have real positive spectra
/// (through their symmetric similar forms); throws NumericalError otherwise.
SpectralReport jacobian_hessianfr_preconditioned(const HessianBlocks& h, double eta_x, double c1,
                                                 double c2, const Vec& p1, const Vec& p2);

/// U = [[H_xx, H_xy], [-c H_yx, -c H_yy]].
Mat ttsgda_u(const HessianBlocks& h, double c);

/// I - eta_x U.
SpectralReport jacobian_ttsgda(const HessianBlocks& h, double eta_x, double c);
SpectralReport jacobian_ttsgda_u(const Mat& u, double eta_x);

/// I - eta_x U + eta_x^2 U^2.
SpectralReport jacobian_eg(const HessianBlocks& h, double eta_x, double c);
SpectralReport jacobian_eg_u(const Mat& u, double eta_x);

struct RateBounds {
  double kappa_hfr = 0.0;
  double kappa_fr = 0.0;   // with the same c1 and c2 = 0
  double kappa_gdn = 0.0;
  double eta_x_max_hfr = 0.0;
};

/// kappa = min{lmin(Schur), lmin(B)} / max{lmax(Schur), lmax(B)} with
/// B = -c1 H_yy + c2 I, and eta_x_max = 2 / max{lmax(Schur), lmax(B)}.
/// Requires a strict local minimax (ConfigError otherwise).
RateBounds rate_bounds(const HessianBlocks& h, double c1, double c2);

/// (c1, c2) placing the spectrum of -c1 H_yy + c2 I inside the Schur
/// spectrum's range, so HessianFR attains GDN's kappa.
std::pair<double, double> match_gdn_rate(const HessianBlocks& h);

struct SampleSizeInputs {
  double rho_x = 1.0;
  double rho_y = 1.0;
  double rho_xy = 1.0;
  double rho_yy = 1.0;
  double epsilon = 0.1;
  double delta = 0.05;
  long d1 = 1;
  long d2 = 1;
  long horizon = 1;  // T

  void validate() const;
};

/// The four unrounded terms of the minibatch-size requirement.
struct SampleSizeTerms {
  double hessian_yy = 0.0;
  double hessian_xy = 0.0;
  double grad_x = 0.0;
  double grad_y = 0.0;

  double max() const;
};

SampleSizeTerms sample_size_terms(const SampleSizeInputs& in);

/// Smallest integer batch size meeting every term (natural logarithms).
long sample_size_bound(const SampleSizeInputs& in);

enum class LemmaKind { kHermitian, kRectangular, kVector };

/// Standalone bounds:
///   hermitian    16 rho^2 / eps^2 ln(2 d2 / delta)
///   rectangular  16 rho^2 / eps^2 ln((d1 + d2) / delta),  eps <= rho
///   vector       32 rho^2 / eps^2 (1/4 - ln delta)
long lemma_bound(LemmaKind kind, double rho, double epsilon, double delta, long d1 = 1,
                 long d2 = 1);

/// The eps at which lemma_bound equals `batch` (inverse of the unrounded formula).
double lemma_epsilon(LemmaKind kind, double rho, std::size_t batch, double delta, long d1 = 1,
                     long d2 = 1);

struct DeviationStats {
  double epsilon = 0.0;        // implied by the lemma at the given batch size
  double rho = 0.0;            // per-component bound at the point
  double max_deviation = 0.0;  // over trials
  double p95_deviation = 0.0;
  double fraction_within = 0.0;
};

struct ConcentrationReport {
  DeviationStats hessian_yy;  // spectral norm
  DeviationStats hessian_xy;
  DeviationStats grad_x;      // Euclidean norm
  DeviationStats grad_y;
  double max_deviation = 0.0;  // largest over the four quantities
};

/// Monte-Carlo check of minibatch deviations from the full average at
/// `point`, for uniform sampling without replacement. Needs dense Hessian
/// blocks (or central differences) for every component.
ConcentrationReport empirical_concentration_check(const FiniteSumProblem& fs, const PointXY& point,
                                                  std::size_t batch_size, int trials,
                                                  std::uint64_t seed, double delta = 0.05);

}  // namespace hfr::analysis
