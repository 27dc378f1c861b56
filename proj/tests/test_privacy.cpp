#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ssperm/privacy.hpp"

using namespace ssperm;

static SampleMatrix gaussian_matrix(size_t n, size_t d, u64 seed) {
  SampleMatrix m(n, d);
  GaussianSampler g(seed);
  for (auto& v : m.rows) v = g.next();
  return m;
}

TEST_CASE("pairwise distances on a hand example") {
  SampleMatrix x(3, 1);
  x.rows = {0.0, 3.0, 4.0};
  auto d = pairwise_distances(x);
  std::vector<double> want = {0, 3, 4, 3, 0, 1, 4, 1, 0};
  REQUIRE(d.size() == 9);
  for (size_t i = 0; i < 9; i++) CHECK(d[i] == doctest::Approx(want[i]));

  SampleMatrix single(1, 1);
  single.rows = {5.0};
  auto ds = pairwise_distances(single);
  CHECK(ds == std::vector<double>{0.0});
}

TEST_CASE("triangle inequality holds on random data") {
  auto x = gaussian_matrix(40, 5, 60);
  auto d = pairwise_distances(x);
  for (size_t i = 0; i < 40; i++)
    for (size_t j = 0; j < 40; j++)
      for (size_t k = 0; k < 40; k++)
        REQUIRE(d[i * 40 + j] <= d[i * 40 + k] + d[k * 40 + j] + 1e-9);
}

TEST_CASE("double centering zeroes rows and columns") {
  SUBCASE("constant matrix centers to zero") {
    std::vector<double> dist(16, 3.0);
    auto a = double_center(dist, 4);
    for (double v : a) CHECK(v == doctest::Approx(0.0));
  }
  SUBCASE("2x2 against the direct formula") {
    double c = 7.5;
    std::vector<double> dist = {0, c, c, 0};
    auto a = double_center(dist, 2);
    // rowmean = colmean = c/2, grand = c/2: diag -> -c/2, offdiag -> c/2
    CHECK(a[0] == doctest::Approx(-c / 2));
    CHECK(a[1] == doctest::Approx(c / 2));
    CHECK(a[2] == doctest::Approx(c / 2));
    CHECK(a[3] == doctest::Approx(-c / 2));
  }
  SUBCASE("random matrix row/col sums vanish") {
    auto x = gaussian_matrix(30, 4, 61);
    auto a = double_center(pairwise_distances(x), 30);
    for (size_t i = 0; i < 30; i++) {
      double rs = 0, cs = 0;
      for (size_t j = 0; j < 30; j++) {
        rs += a[i * 30 + j];
        cs += a[j * 30 + i];
      }
      REQUIRE(std::fabs(rs) < 1e-7);
      REQUIRE(std::fabs(cs) < 1e-7);
    }
  }
}

TEST_CASE("dcor fixed points and invariances") {
  auto x = gaussian_matrix(150, 4, 62);
  CHECK(dcor(x, x).value == doctest::Approx(1.0).epsilon(1e-9));

  // uniform scale plus shift: distances scale, dcor unchanged
  SampleMatrix y(150, 4);
  for (size_t i = 0; i < y.rows.size(); i++) y.rows[i] = 3.0 * x.rows[i] + 11.0;
  CHECK(dcor(x, y).value == doctest::Approx(1.0).epsilon(1e-9));

  // orthogonal transform of one side (rotation in coords 0,1)
  SampleMatrix z = x;
  double c = std::cos(0.7), s = std::sin(0.7);
  for (size_t i = 0; i < z.n; i++) {
    double a = x.row(i)[0], b = x.row(i)[1];
    z.row(i)[0] = c * a - s * b;
    z.row(i)[1] = s * a + c * b;
  }
  CHECK(dcor(x, z).value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("independent samples give near-zero dcor") {
  auto x = gaussian_matrix(2000, 5, 63);
  auto y = gaussian_matrix(2000, 5, 64);
  CHECK(dcor(x, y).value < 0.05);
}

TEST_CASE("degenerate input gives zero dcor") {
  SampleMatrix x(5, 2);  // all points identical
  auto y = gaussian_matrix(5, 2, 65);
  CHECK(dcor(x, y).value == 0.0);
  CHECK_THROWS_AS(dcor(gaussian_matrix(3, 2, 1), gaussian_matrix(4, 2, 2)),
                  ShapeMismatchError);
}

TEST_CASE("permutation error statistics by exact enumeration") {
  SUBCASE("mean is exactly zero") {
    std::vector<double> x = {1, 2, 3};
    std::vector<double> y = {1 / std::sqrt(2.0), -1 / std::sqrt(2.0), 0};
    auto st = perm_error_stats_enumerate(x, y);
    CHECK(st.count == 6);
    CHECK(std::fabs(st.mean) <= 1e-12);
    // exact pair counting: Var = |e|^2 / (n-1)
    CHECK(st.variance == doctest::Approx(st.err_norm_sq / 2.0).epsilon(1e-9));
  }
  SUBCASE("enumerated variance vs the 1/n approximation") {
    GaussianSampler g(66);
    for (size_t n = 4; n <= 8; n++) {
      std::vector<double> x(n), y(n);
      for (auto& v : x) v = g.next();
      double mean = 0;
      for (auto& v : y) {
        v = g.next();
        mean += v;
      }
      mean /= static_cast<double>(n);
      double norm = 0;
      for (auto& v : y) {
        v -= mean;
        norm += v * v;
      }
      norm = std::sqrt(norm);
      for (auto& v : y) v /= norm;
      auto st = perm_error_stats_enumerate(x, y);
      REQUIRE(std::fabs(st.mean) <= 1e-12);
      double approx = st.err_norm_sq / static_cast<double>(n);
      double ratio = st.variance / approx;
      REQUIRE(ratio >= 0.9);
      REQUIRE(ratio <= 1.5);
      // and exactly n/(n-1) against the pair-counting value
      REQUIRE(ratio == doctest::Approx(static_cast<double>(n) /
                                       static_cast<double>(n - 1))
                           .epsilon(1e-9));
    }
  }
  SUBCASE("enumeration rejects large n") {
    std::vector<double> x(9, 1.0), y(9, 0.0);
    CHECK_THROWS_AS(perm_error_stats_enumerate(x, y), OutOfRangeError);
  }
  SUBCASE("sampling mode approaches the enumerated variance") {
    std::vector<double> x = {0.3, -1.2, 2.2, 0.7, -0.4};
    std::vector<double> y = {0.5, -0.5, 0.5, -0.5, 0.0};
    double mean = 0.0;
    for (double v : y) mean += v;
    for (auto& v : y) v -= mean / 5.0;
    double norm = 0;
    for (double v : y) norm += v * v;
    for (auto& v : y) v /= std::sqrt(norm);
    auto exact = perm_error_stats_enumerate(x, y);
    CommonPrg prg(seed_from_u64(67));
    auto sampled = perm_error_stats_sample(x, y, 40000, prg);
    CHECK(std::fabs(sampled.mean) < 0.02);
    CHECK(sampled.variance == doctest::Approx(exact.variance).epsilon(0.05));
  }
}

TEST_CASE("simulated distributions have the declared shape") {
  CommonPrg prg(seed_from_u64(68));
  SUBCASE("sparse activation rate near 0.1") {
    auto m = simulate_distribution(SimKind::Sparse, 2000, 100, prg);
    double mean = 0;
    for (double v : m.rows) mean += v;
    mean /= static_cast<double>(m.rows.size());
    double sigma = std::sqrt(0.1 * 0.9 / static_cast<double>(m.rows.size()));
    CHECK(std::fabs(mean - 0.1) < 3 * sigma);
  }
  SUBCASE("normal columns have unit variance") {
    auto m = simulate_distribution(SimKind::Normal, 5000, 20, prg);
    for (size_t j = 0; j < 5; j++) {
      double s = 0, ss = 0;
      for (size_t i = 0; i < m.n; i++) {
        s += m.row(i)[j];
        ss += m.row(i)[j] * m.row(i)[j];
      }
      double mean = s / static_cast<double>(m.n);
      double var = ss / static_cast<double>(m.n) - mean * mean;
      REQUIRE(std::fabs(var - 1.0) < 0.1);
    }
  }
  SUBCASE("uniform values stay in [0,1)") {
    auto m = simulate_distribution(SimKind::Uniform, 100, 10, prg);
    for (double v : m.rows) {
      REQUIRE(v >= 0.0);
      REQUIRE(v < 1.0);
    }
  }
}

// Jacobi eigenvalues of the sample covariance; test-only oracle for the
// subspace spectrum.
static std::vector<double> covariance_eigenvalues(const SampleMatrix& m) {
  size_t d = m.d;
  std::vector<double> mean(d, 0.0), cov(d * d, 0.0);
  for (size_t i = 0; i < m.n; i++)
    for (size_t j = 0; j < d; j++) mean[j] += m.row(i)[j];
  for (auto& v : mean) v /= static_cast<double>(m.n);
  for (size_t i = 0; i < m.n; i++)
    for (size_t a = 0; a < d; a++)
      for (size_t b = a; b < d; b++)
        cov[a * d + b] += (m.row(i)[a] - mean[a]) * (m.row(i)[b] - mean[b]);
  for (size_t a = 0; a < d; a++)
    for (size_t b = a; b < d; b++) {
      cov[a * d + b] /= static_cast<double>(m.n - 1);
      cov[b * d + a] = cov[a * d + b];
    }
  for (int sweep = 0; sweep < 30; sweep++) {
    double off = 0.0;
    for (size_t p = 0; p < d; p++)
      for (size_t q = p + 1; q < d; q++) off += cov[p * d + q] * cov[p * d + q];
    if (off < 1e-12) break;
    for (size_t p = 0; p < d; p++)
      for (size_t q = p + 1; q < d; q++) {
        double apq = cov[p * d + q];
        if (std::fabs(apq) < 1e-14) continue;
        double app = cov[p * d + p], aqq = cov[q * d + q];
        double phi = 0.5 * std::atan2(2 * apq, aqq - app);
        double c = std::cos(phi), s = std::sin(phi);
        for (size_t k = 0; k < d; k++) {
          double akp = cov[k * d + p], akq = cov[k * d + q];
          cov[k * d + p] = c * akp - s * akq;
          cov[k * d + q] = s * akp + c * akq;
        }
        for (size_t k = 0; k < d; k++) {
          double apk = cov[p * d + k], aqk = cov[q * d + k];
          cov[p * d + k] = c * apk - s * aqk;
          cov[q * d + k] = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> eig(d);
  for (size_t i = 0; i < d; i++) eig[i] = cov[i * d + i];
  std::sort(eig.rbegin(), eig.rend());
  return eig;
}

TEST_CASE("subspace distribution concentrates on ~20 directions") {
  CommonPrg prg(seed_from_u64(69));
  auto m = simulate_distribution(SimKind::Subspace, 2000, 100, prg);
  auto eig = covariance_eigenvalues(m);
  double top = 0, rest = 0;
  for (size_t i = 0; i < 20; i++) top += eig[i];
  for (size_t i = 20; i < 100; i++) rest += eig[i];
  double top_mean = top / 20.0, rest_mean = rest / 80.0;
  CHECK(top_mean / rest_mean > 2.0);  // clear spectral separation
  CHECK(eig[19] / eig[20] > 1.3);     // gap right at rank 20
}

TEST_CASE("flipping makes any sign pattern look balanced") {
  CommonPrg prg(seed_from_u64(70));
  std::vector<double> pos(64), neg(64);
  GaussianSampler g(71);
  for (auto& v : pos) v = std::fabs(g.next()) + 0.001;
  for (auto& v : neg) v = -std::fabs(g.next()) - 0.001;
  const size_t samples = 100000;
  double sigma = 0.5 / std::sqrt(static_cast<double>(samples));
  CHECK(std::fabs(flipping_negative_rate(pos, samples, prg) - 0.5) <
        3 * sigma);
  CHECK(std::fabs(flipping_negative_rate(neg, samples, prg) - 0.5) <
        3 * sigma);
  std::vector<double> zeros(8, 0.0);
  CHECK(flipping_negative_rate(zeros, 1000, prg) == 0.0);
}

TEST_CASE("g_theta: second moment, monotonicity, sigma scaling") {
  CommonPrg prg(seed_from_u64(72));
  size_t h = 10;
  auto g0 = g_theta_mc(2, h, 1.0, 0.0, 200000, prg);
  CHECK(std::fabs(g0.mean - static_cast<double>(h)) <
        std::max(0.05 * h, 4 * g0.stderr_));

  double prev = 1e300;
  for (double theta : {0.0, 0.39269908, 0.78539816, 1.17809725, 1.57079633}) {
    auto est = g_theta_mc(2, h, 1.0, theta, 120000, prg);
    REQUIRE(est.mean <= prev + 3 * est.stderr_);
    prev = est.mean;
  }

  CommonPrg prg_a(seed_from_u64(73)), prg_b(seed_from_u64(73));
  auto unit = g_theta_mc(2, h, 1.0, 0.6, 50000, prg_a);
  auto scaled = g_theta_mc(2, h, 2.0, 0.6, 50000, prg_b);
  CHECK(scaled.mean == doctest::Approx(4.0 * unit.mean).epsilon(1e-9));
}

TEST_CASE("expected dcor formula matches direct simulation") {
  SampleMatrix x = gaussian_matrix(500, 20, 74);
  CenteredSide xc = center_side(x);
  CommonPrg prg(seed_from_u64(75));

  for (size_t h : {size_t(100), size_t(1)}) {
    CommonPrg fprg(seed_from_u64(76 + h));
    double formula = expected_dcor_linear(x, h, 1.0, 150000, fprg);
    double mc = 0;
    const int reps = 25;
    for (int r = 0; r < reps; r++) {
      SampleMatrix y = project_gaussian(x, h, 1.0, prg);
      mc += dcor_with_centered(xc, y).value;
    }
    mc /= reps;
    CHECK(std::fabs(formula - mc) < 0.05);
  }
}

TEST_CASE("coefficient a at h=1 is sqrt(2/pi) and a/b -> 1") {
  double a1 = std::sqrt(2.0) * std::exp(std::lgamma(1.0) - std::lgamma(0.5));
  CHECK(a1 == doctest::Approx(0.7978845608).epsilon(1e-6));
  double h = 1000.0;
  double ab = std::sqrt(2.0) *
              std::exp(std::lgamma((h + 1) / 2) - std::lgamma(h / 2)) /
              std::sqrt(h);
  CHECK(std::fabs(ab - 1.0) < 1e-3);
}

TEST_CASE("unbiased estimator agrees at fixed points and kills the bias") {
  auto x = gaussian_matrix(150, 4, 57);
  CHECK(dcor_unbiased(x, x).value == doctest::Approx(1.0).epsilon(1e-9));

  // high-dimensional independent data: the plain ratio carries a strong
  // positive bias, the u-centered one sits at zero
  auto a = gaussian_matrix(300, 80, 58);
  auto b = gaussian_matrix(300, 80, 59);
  double plain = dcor(a, b).value;
  double corrected = dcor_unbiased(a, b).value;
  CHECK(plain > 0.15);
  CHECK(std::fabs(corrected) < 0.05);
  CHECK_THROWS_AS(dcor_unbiased(gaussian_matrix(3, 2, 1),
                                gaussian_matrix(3, 2, 2)),
                  ShapeMismatchError);
}

TEST_CASE("permuted projections lose the dependence signal") {
  CommonPrg prg(seed_from_u64(78));
  SampleMatrix x = gaussian_matrix(300, 50, 79);
  DcorStats permuted =
      dcor_sim(x, 50, 1.0, 30, /*permute=*/true, prg, /*unbiased=*/true);
  DcorStats onedim =
      dcor_sim(x, 1, 1.0, 30, /*permute=*/false, prg, /*unbiased=*/true);
  CHECK(permuted.mean < onedim.mean);
  CHECK(permuted.ci_high < onedim.ci_low);
}

TEST_CASE("dcor_permuted_hidden variance shrinks with repeats") {
  CommonPrg prg(seed_from_u64(80));
  SampleMatrix x = gaussian_matrix(200, 30, 81);
  SampleMatrix y = project_gaussian(x, 30, 1.0, prg);
  auto few = dcor_permuted_hidden(x, y, 10, prg);
  auto many = dcor_permuted_hidden(x, y, 160, prg);
  CHECK((many.ci_high - many.ci_low) < (few.ci_high - few.ci_low));
}

TEST_CASE("emd basics") {
  std::vector<double> h1 = {1, 0}, h2 = {0, 1};
  CHECK(emd_1d(h1, h1, 1.0) == doctest::Approx(0.0));
  CHECK(emd_1d(h1, h2, 1.0) == doctest::Approx(1.0));
  CHECK(emd_1d(h1, h2, 1.0) == doctest::Approx(emd_1d(h2, h1, 1.0)));
  CHECK_THROWS_AS(emd_1d({1, 0}, {1, 0, 0}, 1.0), ShapeMismatchError);
}

TEST_CASE("attack on unprojected data finds the sample itself") {
  SampleMatrix x = gaussian_matrix(60, 8, 82);
  auto res = histogram_attack(x, x, 50, 1);
  for (size_t i = 0; i < x.n; i++) REQUIRE(res.topk[i][0] == i);
  CHECK_THROWS_AS(histogram_attack(x, SampleMatrix(0, 8), 50, 1),
                  ShapeMismatchError);
  CHECK_THROWS_AS(histogram_attack(x, gaussian_matrix(3, 8, 83), 50, 5),
                  ShapeMismatchError);
}

TEST_CASE("batch permutation scrambles attack targets") {
  // unequal cluster sizes: the share of short vs long distances is what the
  // histograms discriminate on
  CommonPrg prg(seed_from_u64(84));
  const size_t n = 200, d = 50, h = 16;
  std::vector<int> cluster;
  SampleMatrix x = two_cluster_data(n, d, 0.7, 2.0, prg, &cluster);
  SampleMatrix hidden = project_gaussian(x, h, 1.0, prg);
  auto rate = [&](const SampleMatrix& leaked) {
    auto res = histogram_attack(leaked, x, 50, 10);
    double same = 0;
    for (size_t t = 0; t < n; t++)
      for (size_t j = 0; j < 10; j++)
        if (cluster[res.topk[t][j]] == cluster[t]) same += 1.0;
    return same / static_cast<double>(n * 10);
  };
  double chance = 0.7 * 0.7 + 0.3 * 0.3;
  double plain_rate = rate(hidden);
  double permuted_rate = rate(permute_in_batches(hidden, 4, prg));
  CHECK(plain_rate >= 0.6);
  CHECK(permuted_rate <= chance + 0.1);
  CHECK(plain_rate > permuted_rate + 0.1);
}
