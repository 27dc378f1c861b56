#include "ssperm/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ssperm {

double DcorEstimate::sqrt_value() const { return std::sqrt(value); }

std::vector<double> pairwise_distances(const SampleMatrix& x) {
  size_t n = x.n;
  std::vector<double> d(n * n, 0.0);
  for (size_t i = 0; i < n; i++) {
    const double* ri = x.row(i);
    for (size_t j = i + 1; j < n; j++) {
      const double* rj = x.row(j);
      double s = 0.0;
      for (size_t k = 0; k < x.d; k++) {
        double diff = ri[k] - rj[k];
        s += diff * diff;
      }
      double dist = std::sqrt(s);
      d[i * n + j] = dist;
      d[j * n + i] = dist;
    }
  }
  return d;
}

std::vector<double> double_center(const std::vector<double>& dist, size_t n) {
  std::vector<double> rowmean(n, 0.0);
  double grand = 0.0;
  for (size_t i = 0; i < n; i++) {
    double s = 0.0;
    for (size_t j = 0; j < n; j++) s += dist[i * n + j];
    rowmean[i] = s / static_cast<double>(n);
    grand += s;
  }
  grand /= static_cast<double>(n) * static_cast<double>(n);
  std::vector<double> a(n * n);
  for (size_t i = 0; i < n; i++)
    for (size_t j = 0; j < n; j++)
      a[i * n + j] = dist[i * n + j] - rowmean[i] - rowmean[j] + grand;
  return a;
}

CenteredSide center_side(const SampleMatrix& x) {
  CenteredSide side;
  side.n = x.n;
  side.a = double_center(pairwise_distances(x), x.n);
  double v2 = 0.0;
  for (double v : side.a) v2 += v * v;
  side.v2 = v2 / (static_cast<double>(x.n) * static_cast<double>(x.n));
  return side;
}

DcorEstimate dcor_with_centered(const CenteredSide& xc,
                                const SampleMatrix& y) {
  if (xc.n != y.n) throw ShapeMismatchError("dcor: sample counts differ");
  if (xc.n < 2) throw ShapeMismatchError("dcor needs n >= 2");
  size_t n = y.n;
  std::vector<double> b = double_center(pairwise_distances(y), n);
  double v2xy = 0.0, v2yy = 0.0;
  for (size_t i = 0; i < b.size(); i++) {
    v2xy += xc.a[i] * b[i];
    v2yy += b[i] * b[i];
  }
  double n2 = static_cast<double>(n) * static_cast<double>(n);
  v2xy /= n2;
  v2yy /= n2;
  DcorEstimate est;
  est.n = n;
  if (xc.v2 <= 0.0 || v2yy <= 0.0) {
    est.value = 0.0;  // degenerate: zero distance variance
    return est;
  }
  est.value = std::max(0.0, v2xy) / std::sqrt(xc.v2 * v2yy);
  return est;
}

DcorEstimate dcor(const SampleMatrix& x, const SampleMatrix& y) {
  return dcor_with_centered(center_side(x), y);
}

// U-centering (zero diagonal, row/col sums corrected by n-2, grand term by
// (n-1)(n-2)); paired with the 1/(n(n-3)) sum this gives an unbiased
// distance covariance.
std::vector<double> u_center(const std::vector<double>& dist, size_t n) {
  if (n < 4) throw ShapeMismatchError("unbiased centering needs n >= 4");
  std::vector<double> rowsum(n, 0.0);
  double total = 0.0;
  for (size_t i = 0; i < n; i++) {
    double s = 0.0;
    for (size_t j = 0; j < n; j++) s += dist[i * n + j];
    rowsum[i] = s;
    total += s;
  }
  double nd = static_cast<double>(n);
  std::vector<double> a(n * n, 0.0);
  for (size_t i = 0; i < n; i++)
    for (size_t j = 0; j < n; j++) {
      if (i == j) continue;
      a[i * n + j] = dist[i * n + j] - rowsum[i] / (nd - 2) -
                     rowsum[j] / (nd - 2) + total / ((nd - 1) * (nd - 2));
    }
  return a;
}

static double u_inner(const std::vector<double>& a,
                      const std::vector<double>& b, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); i++) s += a[i] * b[i];
  double nd = static_cast<double>(n);
  return s / (nd * (nd - 3));
}

CenteredSide u_center_side(const SampleMatrix& x) {
  CenteredSide side;
  side.n = x.n;
  side.a = u_center(pairwise_distances(x), x.n);
  side.v2 = u_inner(side.a, side.a, x.n);
  return side;
}

DcorEstimate dcor_unbiased_with_centered(const CenteredSide& xc,
                                         const SampleMatrix& y) {
  if (xc.n != y.n) throw ShapeMismatchError("dcor: sample counts differ");
  std::vector<double> b = u_center(pairwise_distances(y), y.n);
  DcorEstimate est;
  est.n = y.n;
  double v2yy = u_inner(b, b, y.n);
  if (xc.v2 <= 0.0 || v2yy <= 0.0) return est;
  est.value = u_inner(xc.a, b, y.n) / std::sqrt(xc.v2 * v2yy);
  return est;
}

DcorEstimate dcor_unbiased(const SampleMatrix& x, const SampleMatrix& y) {
  return dcor_unbiased_with_centered(u_center_side(x), y);
}

SampleMatrix project_gaussian(const SampleMatrix& x, size_t h, double sigma,
                              CommonPrg& prg) {
  GaussianSampler g(prg);
  std::vector<double> a(h * x.d);
  for (auto& v : a) v = g.next(0.0, sigma);
  SampleMatrix y(x.n, h);
  for (size_t i = 0; i < x.n; i++) {
    const double* xi = x.row(i);
    double* yi = y.row(i);
    for (size_t j = 0; j < h; j++) {
      const double* aj = &a[j * x.d];
      double s = 0.0;
      for (size_t k = 0; k < x.d; k++) s += aj[k] * xi[k];
      yi[j] = s;
    }
  }
  return y;
}

SampleMatrix permute_flat(const SampleMatrix& x, CommonPrg& prg) {
  size_t total = x.n * x.d;
  std::vector<u64> perm = gen_permutation(prg, total);
  SampleMatrix y(x.n, x.d);
  for (size_t i = 0; i < total; i++) y.rows[i] = x.rows[perm[i]];
  return y;
}

SampleMatrix permute_in_batches(const SampleMatrix& x, size_t batch,
                                CommonPrg& prg) {
  if (batch == 0) throw ConfigError("batch must be >= 1");
  SampleMatrix y(x.n, x.d);
  for (size_t start = 0; start < x.n; start += batch) {
    size_t rows = std::min(batch, x.n - start);
    size_t total = rows * x.d;
    std::vector<u64> perm = gen_permutation(prg, total);
    const double* src = x.row(start);
    double* dst = y.row(start);
    for (size_t i = 0; i < total; i++) dst[i] = src[perm[i]];
  }
  return y;
}

static DcorStats stats_from(const std::vector<double>& vals) {
  DcorStats st;
  st.repeats = vals.size();
  double mean = std::accumulate(vals.begin(), vals.end(), 0.0) /
                static_cast<double>(vals.size());
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var = vals.size() > 1 ? var / static_cast<double>(vals.size() - 1) : 0.0;
  double half = 1.96 * std::sqrt(var / static_cast<double>(vals.size()));
  st.mean = mean;
  st.ci_low = mean - half;
  st.ci_high = mean + half;
  return st;
}

DcorStats dcor_permuted_hidden(const SampleMatrix& x,
                               const SampleMatrix& projected, size_t repeats,
                               CommonPrg& prg) {
  CenteredSide xc = center_side(x);
  std::vector<double> vals;
  vals.reserve(repeats);
  for (size_t r = 0; r < repeats; r++) {
    SampleMatrix y = permute_flat(projected, prg);
    vals.push_back(dcor_with_centered(xc, y).value);
  }
  return stats_from(vals);
}

DcorStats dcor_sim(const SampleMatrix& x, size_t h, double sigma,
                   size_t repeats, bool permute, CommonPrg& prg,
                   bool unbiased) {
  CenteredSide xc = unbiased ? u_center_side(x) : center_side(x);
  std::vector<double> vals;
  vals.reserve(repeats);
  for (size_t r = 0; r < repeats; r++) {
    SampleMatrix y = project_gaussian(x, h, sigma, prg);
    if (permute) y = permute_flat(y, prg);
    vals.push_back(unbiased ? dcor_unbiased_with_centered(xc, y).value
                            : dcor_with_centered(xc, y).value);
  }
  return stats_from(vals);
}

SampleMatrix two_cluster_data(size_t n, size_t d, double frac_major,
                              double shift, CommonPrg& prg,
                              std::vector<int>* labels) {
  GaussianSampler g(prg);
  SampleMatrix x(n, d);
  if (labels) labels->assign(n, 0);
  size_t major = static_cast<size_t>(frac_major * static_cast<double>(n));
  for (size_t i = 0; i < n; i++) {
    int cls = i < major ? 0 : 1;
    if (labels) (*labels)[i] = cls;
    double mu = cls ? shift : -shift;
    for (size_t j = 0; j < d; j++) x.row(i)[j] = mu + g.next();
  }
  return x;
}

// --- linear transformation expectation ----------------------------------------

double expected_dcor_linear(const SampleMatrix& x, size_t h, double sigma,
                            size_t mc_samples, CommonPrg& prg) {
  if (x.n < 3) throw ShapeMismatchError("need n >= 3");
  GaussianSampler g(prg);
  auto row_diff_norm = [&](size_t i, size_t j, std::vector<double>* out) {
    const double* a = x.row(i);
    const double* b = x.row(j);
    double s = 0.0;
    for (size_t k = 0; k < x.d; k++) {
      double d = a[k] - b[k];
      if (out) (*out)[k] = d;
      s += d * d;
    }
    return std::sqrt(s);
  };

  double s1 = 0.0, s2m = 0.0, s3 = 0.0, s3p = 0.0;
  std::vector<double> d1(x.d), d2(x.d), u(h), v(h);
  size_t used = 0;
  for (size_t it = 0; it < mc_samples; it++) {
    u64 i = g.prg().next_below(x.n);
    u64 j = g.prg().next_below(x.n);
    u64 k = g.prg().next_below(x.n);
    if (i == j || i == k || j == k) continue;
    used++;
    double n1 = row_diff_norm(i, j, &d1);
    double n2 = row_diff_norm(i, k, &d2);
    s1 += n1 * n1;
    s2m += n1;
    s3 += n1 * n2;
    // S'3 = E_A |A(X-X')| |A(X-X'')| with one shared A. Only the plane of
    // (d1, d2) matters: with e1 = d1/|d1| and e2 the orthogonal component
    // of d2, A e1 and A e2 are independent N(0, sigma^2 I_h).
    double ct = 0.0;
    if (n1 > 0 && n2 > 0) {
      double dot = 0.0;
      for (size_t t = 0; t < x.d; t++) dot += d1[t] * d2[t];
      ct = dot / (n1 * n2);
      ct = std::clamp(ct, -1.0, 1.0);
    }
    double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    double na = 0.0, nb = 0.0;
    for (size_t t = 0; t < h; t++) {
      u[t] = g.next(0.0, sigma);
      v[t] = g.next(0.0, sigma);
      double au = n1 * u[t];
      double av = n2 * (ct * u[t] + st * v[t]);
      na += au * au;
      nb += av * av;
    }
    s3p += std::sqrt(na) * std::sqrt(nb);
  }
  if (used == 0) throw ShapeMismatchError("degenerate sample for dcor mc");
  double inv = 1.0 / static_cast<double>(used);
  s1 *= inv;
  double s2 = (s2m * inv) * (s2m * inv);
  s3 *= inv;
  s3p *= inv;
  double lg = std::lgamma((static_cast<double>(h) + 1.0) / 2.0) -
              std::lgamma(static_cast<double>(h) / 2.0);
  double a = sigma * std::sqrt(2.0) * std::exp(lg);
  double b = sigma * std::sqrt(static_cast<double>(h));
  double num = a * a * (s1 + s2 - 2.0 * s3);
  double den = a * a * s1 + b * b * s2 - 2.0 * s3p;
  if (den <= 0.0 || num <= 0.0) return 0.0;
  return std::sqrt(num / den);
}

GEstimate g_theta_mc(size_t d, size_t h, double sigma, double theta,
                     size_t mc_samples, CommonPrg& prg) {
  if (d < 2) throw ShapeMismatchError("g_theta needs d >= 2");
  // Rotation invariance: only the 2-plane of (x, y) matters, so sample
  // A e1, A e2 directly as independent N(0, sigma^2 I_h) columns.
  GaussianSampler g(prg);
  double c = std::cos(theta), s = std::sin(theta);
  double sum = 0.0, sumsq = 0.0;
  for (size_t it = 0; it < mc_samples; it++) {
    double na = 0.0, nb = 0.0;
    for (size_t t = 0; t < h; t++) {
      double u = g.next(0.0, sigma);
      double v = g.next(0.0, sigma);
      double ax = u;
      double ay = c * u + s * v;
      na += ax * ax;
      nb += ay * ay;
    }
    double val = std::sqrt(na) * std::sqrt(nb);
    sum += val;
    sumsq += val * val;
  }
  GEstimate est;
  double n = static_cast<double>(mc_samples);
  est.mean = sum / n;
  double var = std::max(0.0, sumsq / n - est.mean * est.mean);
  est.stderr_ = std::sqrt(var / n);
  return est;
}

// --- permutation statistics -----------------------------------------------------

static PermErrorStats finish_stats(double sum, double sumsq, u64 count,
                                   double err_norm_sq) {
  PermErrorStats st;
  st.count = count;
  double n = static_cast<double>(count);
  st.mean = sum / n;
  st.variance = std::max(0.0, sumsq / n - st.mean * st.mean);
  st.err_norm_sq = err_norm_sq;
  return st;
}

PermErrorStats perm_error_stats_enumerate(const std::vector<double>& x,
                                          const std::vector<double>& y) {
  size_t n = x.size();
  if (n == 0 || y.size() != n) throw ShapeMismatchError("perm stats inputs");
  if (n > 8)
    throw OutOfRangeError("enumeration limited to n <= 8 permutations");
  double mean_x = std::accumulate(x.begin(), x.end(), 0.0) /
                  static_cast<double>(n);
  double err_norm_sq = 0.0;
  for (double v : x) err_norm_sq += (v - mean_x) * (v - mean_x);
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  double sum = 0.0, sumsq = 0.0;
  u64 count = 0;
  do {
    double dot = 0.0;
    for (size_t i = 0; i < n; i++) dot += (x[idx[i]] - mean_x) * y[i];
    sum += dot;
    sumsq += dot * dot;
    count++;
  } while (std::next_permutation(idx.begin(), idx.end()));
  return finish_stats(sum, sumsq, count, err_norm_sq);
}

PermErrorStats perm_error_stats_sample(const std::vector<double>& x,
                                       const std::vector<double>& y,
                                       size_t samples, CommonPrg& prg) {
  size_t n = x.size();
  if (n == 0 || y.size() != n) throw ShapeMismatchError("perm stats inputs");
  double mean_x = std::accumulate(x.begin(), x.end(), 0.0) /
                  static_cast<double>(n);
  double err_norm_sq = 0.0;
  for (double v : x) err_norm_sq += (v - mean_x) * (v - mean_x);
  double sum = 0.0, sumsq = 0.0;
  for (size_t it = 0; it < samples; it++) {
    std::vector<u64> perm = gen_permutation(prg, n);
    double dot = 0.0;
    for (size_t i = 0; i < n; i++) dot += (x[perm[i]] - mean_x) * y[i];
    sum += dot;
    sumsq += dot * dot;
  }
  return finish_stats(sum, sumsq, samples, err_norm_sq);
}

// --- simulated distributions ------------------------------------------------------

const char* sim_kind_name(SimKind k) {
  switch (k) {
    case SimKind::Normal: return "normal";
    case SimKind::Uniform: return "uniform";
    case SimKind::Sparse: return "sparse";
    case SimKind::Subspace: return "subspace";
  }
  return "?";
}

SampleMatrix simulate_distribution(SimKind kind, size_t n, size_t d,
                                   CommonPrg& prg) {
  SampleMatrix m(n, d);
  switch (kind) {
    case SimKind::Normal: {
      GaussianSampler g(prg);
      for (auto& v : m.rows) v = g.next();
      break;
    }
    case SimKind::Uniform: {
      for (auto& v : m.rows) v = prg.next_double();
      break;
    }
    case SimKind::Sparse: {
      for (auto& v : m.rows) v = prg.next_double() < 0.1 ? 1.0 : 0.0;
      break;
    }
    case SimKind::Subspace: {
      // X = H A + E with H in R^rank, A entries N(0, 1/rank^2), noise
      // variance 0.1.
      size_t rank = std::max<size_t>(1, d / 5);
      GaussianSampler g(prg);
      double a_std = 1.0 / static_cast<double>(rank);
      double e_std = std::sqrt(0.1);
      std::vector<double> a(rank * d);
      for (auto& v : a) v = g.next(0.0, a_std);
      std::vector<double> hvec(rank);
      for (size_t i = 0; i < n; i++) {
        for (auto& v : hvec) v = g.next();
        double* row = m.row(i);
        for (size_t j = 0; j < d; j++) {
          double s = 0.0;
          for (size_t k = 0; k < rank; k++) s += hvec[k] * a[k * d + j];
          row[j] = s + g.next(0.0, e_std);
        }
      }
      break;
    }
  }
  return m;
}

double flipping_negative_rate(const std::vector<double>& values,
                              size_t samples, CommonPrg& prg) {
  if (values.empty()) throw ShapeMismatchError("flip test needs values");
  size_t neg = 0;
  for (size_t i = 0; i < samples; i++) {
    double v = values[i % values.size()];
    if (prg.next_bit()) v = -v;
    if (v < 0.0) neg++;
  }
  return static_cast<double>(neg) / static_cast<double>(samples);
}

// --- histogram attack ---------------------------------------------------------------

std::vector<double> distance_histogram(const SampleMatrix& m, size_t row,
                                       size_t bins) {
  std::vector<double> hist(bins, 0.0);
  if (m.n < 2) return hist;
  std::vector<double> dists;
  dists.reserve(m.n - 1);
  const double* r = m.row(row);
  double mean = 0.0;
  for (size_t i = 0; i < m.n; i++) {
    if (i == row) continue;
    const double* o = m.row(i);
    double s = 0.0;
    for (size_t k = 0; k < m.d; k++) {
      double d = r[k] - o[k];
      s += d * d;
    }
    double dist = std::sqrt(s);
    dists.push_back(dist);
    mean += dist;
  }
  mean /= static_cast<double>(dists.size());
  if (mean <= 0.0) {
    hist[0] = 1.0;
    return hist;
  }
  // scale-normalized distances binned over [0, 3]
  double w = 3.0 / static_cast<double>(bins);
  for (double dist : dists) {
    double dn = dist / mean;
    size_t b = std::min<size_t>(bins - 1, static_cast<size_t>(dn / w));
    hist[b] += 1.0;
  }
  for (auto& v : hist) v /= static_cast<double>(dists.size());
  return hist;
}

double emd_1d(const std::vector<double>& h1, const std::vector<double>& h2,
              double bin_width) {
  if (h1.size() != h2.size()) throw ShapeMismatchError("emd: bin counts");
  double cdf = 0.0, total = 0.0;
  for (size_t i = 0; i < h1.size(); i++) {
    cdf += h1[i] - h2[i];
    total += std::fabs(cdf) * bin_width;
  }
  return total;
}

HistogramAttackResult histogram_attack(const SampleMatrix& leaked,
                                       const SampleMatrix& aux, size_t bins,
                                       size_t k) {
  if (aux.n == 0) throw ShapeMismatchError("attack: empty auxiliary set");
  if (aux.n < k) throw ShapeMismatchError("attack: aux smaller than k");
  double w = 3.0 / static_cast<double>(bins);
  std::vector<std::vector<double>> aux_hists(aux.n);
  for (size_t i = 0; i < aux.n; i++)
    aux_hists[i] = distance_histogram(aux, i, bins);
  HistogramAttackResult res;
  res.topk.resize(leaked.n);
  std::vector<std::pair<double, size_t>> scored(aux.n);
  for (size_t t = 0; t < leaked.n; t++) {
    std::vector<double> h = distance_histogram(leaked, t, bins);
    for (size_t i = 0; i < aux.n; i++)
      scored[i] = {emd_1d(h, aux_hists[i], w), i};
    std::partial_sort(scored.begin(), scored.begin() + k, scored.end());
    res.topk[t].resize(k);
    for (size_t i = 0; i < k; i++) res.topk[t][i] = scored[i].second;
  }
  return res;
}

}  // namespace ssperm
