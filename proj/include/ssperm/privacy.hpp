#pragma once

#include <string>
#include <vector>

#include "ssperm/prg.hpp"

namespace ssperm {

// n samples of dimension d, row-major.
struct SampleMatrix {
  size_t n = 0, d = 0;
  std::vector<double> rows;

  SampleMatrix() = default;
  SampleMatrix(size_t n_, size_t d_) : n(n_), d(d_), rows(n_ * d_, 0.0) {}
  double* row(size_t i) { return &rows[i * d]; }
  const double* row(size_t i) const { return &rows[i * d]; }
};

struct DcorEstimate {
  double value = 0.0;  // V^2 ratio as in the estimator (squared convention)
  size_t n = 0;
  size_t repeats = 1;

  double sqrt_value() const;
};

std::vector<double> pairwise_distances(const SampleMatrix& x);  // n*n

// A_kl = d_kl - rowmean_k - colmean_l + grandmean; rows/cols sum to zero.
std::vector<double> double_center(const std::vector<double>& dist, size_t n);

// Empirical distance correlation: V2(X,Y)/sqrt(V2(X,X) V2(Y,Y)) with
// V2 = (1/n^2) sum A_kl B_kl. Degenerate inputs give 0.
DcorEstimate dcor(const SampleMatrix& x, const SampleMatrix& y);

// Same with one side pre-centered (X fixed across Monte Carlo repeats).
struct CenteredSide {
  std::vector<double> a;  // centered distance matrix
  double v2 = 0.0;        // V2(X,X)
  size_t n = 0;
};
CenteredSide center_side(const SampleMatrix& x);
DcorEstimate dcor_with_centered(const CenteredSide& xc, const SampleMatrix& y);

// Bias-corrected route: U-centered distances with an unbiased distance
// covariance. The plain estimator above carries an O((E|X-X'|)^2 / n) bias
// under independence, which swamps weak signals when distances concentrate
// (large d, moderate n); this one is centered at zero there and may go
// slightly negative. Requires n >= 4.
std::vector<double> u_center(const std::vector<double>& dist, size_t n);
CenteredSide u_center_side(const SampleMatrix& x);
DcorEstimate dcor_unbiased(const SampleMatrix& x, const SampleMatrix& y);
DcorEstimate dcor_unbiased_with_centered(const CenteredSide& xc,
                                         const SampleMatrix& y);

// Gaussian random projection d -> h with entry stddev sigma.
SampleMatrix project_gaussian(const SampleMatrix& x, size_t h, double sigma,
                              CommonPrg& prg);

// Whole-batch flatten-permute-reshape, mirroring the protocol's treatment
// of a batch of hidden rows.
SampleMatrix permute_flat(const SampleMatrix& x, CommonPrg& prg);

// Per-batch flatten-permute (rows grouped in batches of `batch`).
SampleMatrix permute_in_batches(const SampleMatrix& x, size_t batch,
                                CommonPrg& prg);

struct DcorStats {
  double mean = 0.0;
  double ci_low = 0.0;   // 95% interval over repeats
  double ci_high = 0.0;
  size_t repeats = 0;
};

// Mean of dcor(X, pi[Y]) over fresh permutations of a fixed projection Y.
DcorStats dcor_permuted_hidden(const SampleMatrix& x,
                               const SampleMatrix& projected, size_t repeats,
                               CommonPrg& prg);

// Fresh Gaussian projection (and permutation) per repeat; the simulated
// leakage comparison. h = 1 with permute = false gives the
// compress-to-one-dimension baseline. `unbiased` selects the
// bias-corrected estimator.
DcorStats dcor_sim(const SampleMatrix& x, size_t h, double sigma,
                   size_t repeats, bool permute, CommonPrg& prg,
                   bool unbiased = false);

// Two Gaussian clusters with unequal sizes; labels out-param gives cluster
// membership. Demo data for the histogram attack.
SampleMatrix two_cluster_data(size_t n, size_t d, double frac_major,
                              double shift, CommonPrg& prg,
                              std::vector<int>* labels);

// Closed-form-plus-Monte-Carlo expectation of dcor between X and a Gaussian
// random linear map of X (entries N(0, sigma^2), output dim h).
double expected_dcor_linear(const SampleMatrix& x, size_t h, double sigma,
                            size_t mc_samples, CommonPrg& prg);

// g(theta) = E |A u||A v| over Gaussian A for unit u,v at angle theta.
struct GEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};
GEstimate g_theta_mc(size_t d, size_t h, double sigma, double theta,
                     size_t mc_samples, CommonPrg& prg);

// Exact permutation statistics of e_x . y over all n! permutations
// (enumerate, n <= 8) or by sampling.
struct PermErrorStats {
  double mean = 0.0;
  double variance = 0.0;
  double err_norm_sq = 0.0;  // |e_x|^2, invariant of the permutation
  u64 count = 0;
};
PermErrorStats perm_error_stats_enumerate(const std::vector<double>& x,
                                          const std::vector<double>& y);
PermErrorStats perm_error_stats_sample(const std::vector<double>& x,
                                       const std::vector<double>& y,
                                       size_t samples, CommonPrg& prg);

enum class SimKind : u8 { Normal = 0, Uniform = 1, Sparse = 2, Subspace = 3 };
const char* sim_kind_name(SimKind k);
SampleMatrix simulate_distribution(SimKind kind, size_t n, size_t d,
                                   CommonPrg& prg);

// Fraction of negative entries after random sign flipping.
double flipping_negative_rate(const std::vector<double>& values,
                              size_t samples, CommonPrg& prg);

// --- histogram attack ------------------------------------------------------

struct HistogramAttackResult {
  // top-k candidate indices into aux, one row per target
  std::vector<std::vector<size_t>> topk;
};

// Histogram of a sample's distances to all other rows, normalized by their
// mean; fixed bin count over [0, 3].
std::vector<double> distance_histogram(const SampleMatrix& m, size_t row,
                                       size_t bins);

// 1-D earth mover's distance between two equal-length histograms
// (L1 distance between CDFs times bin width).
double emd_1d(const std::vector<double>& h1, const std::vector<double>& h2,
              double bin_width);

HistogramAttackResult histogram_attack(const SampleMatrix& leaked,
                                       const SampleMatrix& aux, size_t bins,
                                       size_t k);

}  // namespace ssperm
