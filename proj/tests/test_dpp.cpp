#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <map>

#include "lvdd/dpp.hpp"
#include "oracles.hpp"

using namespace lvdd;

TEST_CASE("rbf kernel of two identical points is all ones") {
  SimilarityKernel k = rbf_kernel({{1.0, 2.0}, {1.0, 2.0}}, 1.5);
  CHECK(k.l()(0, 1) == 1.0);
  CHECK(k.l()(1, 0) == 1.0);
  CHECK(k.l()(0, 0) == 1.0);
}

TEST_CASE("rbf kernel matches the closed form at distance 2 with sigma sqrt(2)") {
  SimilarityKernel k = rbf_kernel({{0.0, 0.0}, {2.0, 0.0}}, std::sqrt(2.0));
  CHECK(k.l()(0, 1) == Catch::Approx(std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("rbf kernel agrees with the naive double loop") {
  Rng rng(5);
  auto pts = oracle::random_points(rng, 10, 3, 2.0);
  const double sigma = 1.3;
  SimilarityKernel k = rbf_kernel(pts, sigma);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j) {
      double d2 = 0;
      for (std::size_t f = 0; f < 3; ++f)
        d2 += (pts[i][f] - pts[j][f]) * (pts[i][f] - pts[j][f]);
      const double want = std::exp(-d2 / (2 * sigma * sigma));
      CHECK(std::abs(k.l()(i, j) - want) <= 1e-14);
    }
}

TEST_CASE("rbf kernel is invariant under rigid motion of the points") {
  Rng rng(6);
  auto pts = oracle::random_points(rng, 8, 2, 1.0);
  const double c = std::cos(0.7), s = std::sin(0.7);
  std::vector<std::vector<double>> moved;
  for (const auto& p : pts)
    moved.push_back({c * p[0] - s * p[1] + 5.0, s * p[0] + c * p[1] - 3.0});
  SimilarityKernel a = rbf_kernel(pts, 1.1), b = rbf_kernel(moved, 1.1);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j)
      CHECK(std::abs(a.l()(i, j) - b.l()(i, j)) <= 1e-12);
}

TEST_CASE("rbf kernel rejects bad input") {
  CHECK_THROWS_AS(rbf_kernel({}, 1.0), ValueError);
  CHECK_THROWS_AS(rbf_kernel({{1.0}, {1.0, 2.0}}, 1.0), ShapeError);
  CHECK_THROWS_AS(rbf_kernel({{1.0}, {2.0}}, 0.0), ValueError);
}

TEST_CASE("median heuristic on three collinear points") {
  CHECK(median_heuristic_sigma({{0.0}, {1.0}, {2.0}}) == 1.0);
}

TEST_CASE("median heuristic of two points is their distance") {
  CHECK(median_heuristic_sigma({{0.0, 0.0}, {3.0, 4.0}}) == Catch::Approx(5.0));
}

TEST_CASE("median heuristic equals the full-sort oracle") {
  Rng rng(7);
  auto pts = oracle::random_points(rng, 50, 4, 1.7);
  std::vector<double> dists;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      double d2 = 0;
      for (std::size_t f = 0; f < 4; ++f)
        d2 += (pts[i][f] - pts[j][f]) * (pts[i][f] - pts[j][f]);
      dists.push_back(std::sqrt(d2));
    }
  std::sort(dists.begin(), dists.end());
  const std::size_t m = dists.size();
  const double want = m % 2 ? dists[m / 2] : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
  CHECK(median_heuristic_sigma(pts) == want);
}

TEST_CASE("median heuristic rejects degenerate point sets") {
  CHECK_THROWS_AS(median_heuristic_sigma({{1.0, 1.0}}), ValueError);
  CHECK_THROWS_AS(median_heuristic_sigma({{1.0}, {1.0}, {1.0}}), ValueError);
}

TEST_CASE("subset log prob on the trivial 1x1 kernel") {
  SimilarityKernel k(Matrix(1, 1, {1.0}), 1.0);
  CHECK(subset_log_prob(k, {}) == Catch::Approx(std::log(0.5)).epsilon(1e-12));
  CHECK(subset_log_prob(k, {0}) == Catch::Approx(std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("subset probabilities sum to one over all subsets") {
  Rng rng(9);
  auto pts = oracle::random_points(rng, 4, 2, 1.0);
  SimilarityKernel k = rbf_kernel(pts, median_heuristic_sigma(pts));
  double total = 0;
  for (const auto& s : oracle::all_subsets(4)) total += std::exp(subset_log_prob(k, s));
  CHECK(total == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("minor determinants sum to det(L + I)") {
  Rng rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 3 + rng.next_u64() % 6;  // up to 8
    auto pts = oracle::random_points(rng, n, 3, 1.0);
    SimilarityKernel k = rbf_kernel(pts, median_heuristic_sigma(pts));
    const auto lm = oracle::from_matrix(k.l());
    double sum = 0;
    for (const auto& s : oracle::all_subsets(n)) sum += oracle::det_minor(lm, s);
    auto lpi = lm;
    for (std::size_t i = 0; i < n; ++i) lpi[i][i] += 1.0;
    const double want = oracle::det(lpi);
    CHECK(sum == Catch::Approx(want).epsilon(1e-8));
  }
}

TEST_CASE("a subset containing duplicated points has probability zero") {
  SimilarityKernel k = rbf_kernel({{0.0}, {0.0}, {3.0}}, 1.0);
  CHECK(std::isinf(subset_log_prob(k, {0, 1})));
  CHECK(subset_log_prob(k, {0, 1}) < 0);
  CHECK(std::isfinite(subset_log_prob(k, {0, 2})));
}

TEST_CASE("singleton log prob is log L_ii minus the normalizer") {
  Rng rng(12);
  auto pts = oracle::random_points(rng, 5, 2, 1.0);
  SimilarityKernel k = rbf_kernel(pts, 1.0);
  const double norm = subset_log_prob(k, {});
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(subset_log_prob(k, {i}) == Catch::Approx(std::log(k.l()(i, i)) + norm));
}

TEST_CASE("subset log prob validates indices") {
  SimilarityKernel k = rbf_kernel({{0.0}, {1.0}}, 1.0);
  CHECK_THROWS_AS(subset_log_prob(k, {2}), IndexError);
  CHECK_THROWS_AS(subset_log_prob(k, {0, 0}), ValueError);
}

TEST_CASE("kdpp sample of size zero is the empty selection") {
  SimilarityKernel k = rbf_kernel({{0.0}, {1.0}}, 1.0);
  Rng rng(1);
  Selection s = sample_kdpp(k, 0, rng);
  CHECK(s.indices.empty());
  CHECK(s.log_prob == Catch::Approx(-detail::logdet_l_plus_i(k.l())));
}

TEST_CASE("kdpp on the identity kernel is uniform over pairs") {
  SimilarityKernel k(Matrix::identity(3), 1.0);
  Rng rng(123);
  std::map<std::pair<std::size_t, std::size_t>, int> counts;
  const int draws = 30000;
  for (int i = 0; i < draws; ++i) {
    Selection s = sample_kdpp(k, 2, rng);
    REQUIRE(s.indices.size() == 2);
    counts[{s.indices[0], s.indices[1]}]++;
  }
  REQUIRE(counts.size() == 3);
  for (const auto& [pair, c] : counts)
    CHECK(std::abs(static_cast<double>(c) / draws - 1.0 / 3.0) < 0.02);
}

TEST_CASE("kdpp empirical frequencies match brute-force subset probabilities") {
  Rng data_rng(15);
  auto pts = oracle::random_points(data_rng, 5, 2, 1.2);
  SimilarityKernel k = rbf_kernel(pts, median_heuristic_sigma(pts));
  const auto lm = oracle::from_matrix(k.l());

  std::map<std::vector<std::size_t>, double> want;
  double z = 0;
  for (const auto& s : oracle::all_subsets(5))
    if (s.size() == 2) {
      const double d = oracle::det_minor(lm, s);
      want[s] = d;
      z += d;
    }
  for (auto& [s, p] : want) p /= z;

  Rng rng(77);
  std::map<std::vector<std::size_t>, int> counts;
  const int draws = 50000;
  for (int i = 0; i < draws; ++i) counts[sample_kdpp(k, 2, rng).indices]++;
  double tv = 0;
  for (const auto& [s, p] : want)
    tv += std::abs(p - static_cast<double>(counts[s]) / draws);
  tv *= 0.5;
  CHECK(tv < 0.02);
}

TEST_CASE("kdpp draws are reproducible bit for bit") {
  Rng data_rng(16);
  auto pts = oracle::random_points(data_rng, 6, 3, 1.0);
  SimilarityKernel k = rbf_kernel(pts, median_heuristic_sigma(pts));
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    Selection sa = sample_kdpp(k, 3, a);
    Selection sb = sample_kdpp(k, 3, b);
    REQUIRE(sa.indices == sb.indices);
    REQUIRE(sa.log_prob == sb.log_prob);
  }
}

TEST_CASE("kdpp rejects sizes above the numerical rank") {
  // two duplicated points: rank 2 kernel of size 3
  SimilarityKernel k = rbf_kernel({{0.0}, {0.0}, {2.0}}, 1.0);
  Rng rng(3);
  CHECK_THROWS_AS(sample_kdpp(k, 3, rng), InfeasibleSizeError);
  CHECK_THROWS_AS(sample_kdpp(k, 4, rng), InfeasibleSizeError);
  CHECK_NOTHROW(sample_kdpp(k, 2, rng));
}

TEST_CASE("greedy of size one picks the lowest max-diagonal index") {
  SimilarityKernel k(Matrix::identity(4), 1.0);
  Selection s = greedy_map(k, 1);
  REQUIRE(s.indices.size() == 1);
  CHECK(s.indices[0] == 0);
}

TEST_CASE("greedy never picks the duplicate of a chosen point early") {
  // points 0 and 1 coincide; 2 and 3 are distinct
  SimilarityKernel k = rbf_kernel({{0.0}, {0.0}, {4.0}, {9.0}}, 2.0);
  Selection s = greedy_map(k, 3);
  // the duplicate pair contributes exactly one index among the first three
  const bool has0 = std::count(s.indices.begin(), s.indices.end(), 0) > 0;
  const bool has1 = std::count(s.indices.begin(), s.indices.end(), 1) > 0;
  CHECK(has0 != has1);
  CHECK(std::count(s.indices.begin(), s.indices.end(), 2) == 1);
  CHECK(std::count(s.indices.begin(), s.indices.end(), 3) == 1);
}

namespace {

// Step-by-step greedy by brute-force log det evaluation.
std::vector<std::size_t> brute_greedy(const oracle::Mat& l, std::size_t size) {
  std::vector<std::size_t> chosen;
  const std::size_t n = l.size();
  for (std::size_t step = 0; step < size; ++step) {
    double best_gain = -std::numeric_limits<double>::infinity();
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::count(chosen.begin(), chosen.end(), i)) continue;
      auto cand = chosen;
      cand.push_back(i);
      std::sort(cand.begin(), cand.end());
      const double d = oracle::det_minor(l, cand);
      const double gain = d > 0 ? std::log(d) : -std::numeric_limits<double>::infinity();
      if (gain > best_gain) {
        best_gain = gain;
        best = i;
      }
    }
    if (best == n)
      for (std::size_t i = 0; i < n && best == n; ++i)
        if (!std::count(chosen.begin(), chosen.end(), i)) best = i;
    chosen.push_back(best);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

}  // namespace

TEST_CASE("greedy matches the brute-force greedy oracle") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(100 + seed);
    auto pts = oracle::random_points(rng, 6, 3, 1.0);
    SimilarityKernel k = rbf_kernel(pts, median_heuristic_sigma(pts));
    Selection s = greedy_map(k, 3);
    CHECK(s.indices == brute_greedy(oracle::from_matrix(k.l()), 3));
  }
}

TEST_CASE("greedy log det beats the best of many random subsets") {
  Rng rng(55);
  auto pts = oracle::random_points(rng, 6, 3, 1.0);
  SimilarityKernel k = rbf_kernel(pts, median_heuristic_sigma(pts));
  Selection s = greedy_map(k, 3);
  const auto lm = oracle::from_matrix(k.l());
  double best_random = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < 1000; ++t) {
    std::vector<std::size_t> idx{rng.next_u64() % 6, 0, 0};
    do idx[1] = rng.next_u64() % 6;
    while (idx[1] == idx[0]);
    do idx[2] = rng.next_u64() % 6;
    while (idx[2] == idx[0] || idx[2] == idx[1]);
    std::sort(idx.begin(), idx.end());
    const double d = oracle::det_minor(lm, idx);
    if (d > 0) best_random = std::max(best_random, std::log(d));
  }
  const double greedy_logdet = std::log(oracle::det_minor(lm, s.indices));
  // greedy is near-optimal for log det; random subsets never beat it by much
  CHECK(greedy_logdet >= best_random - 0.5);
}

TEST_CASE("greedy selection is invariant under positive rescaling of L") {
  Rng rng(18);
  auto pts = oracle::random_points(rng, 7, 2, 1.0);
  SimilarityKernel k = rbf_kernel(pts, 1.0);
  Selection base = greedy_map(k, 4);
  for (double c : {0.3, 2.0, 17.5}) {
    std::vector<double> scaled = k.l().data();
    for (double& v : scaled) v *= c;
    Selection s = greedy_map(Matrix(7, 7, std::move(scaled)), 4);
    CHECK(s.indices == base.indices);
  }
}

TEST_CASE("greedy rejects sizes outside [1, n]") {
  SimilarityKernel k(Matrix::identity(3), 1.0);
  CHECK_THROWS_AS(greedy_map(k, 0), ValueError);
  CHECK_THROWS_AS(greedy_map(k, 4), ValueError);
}

TEST_CASE("similarity kernel validates its invariants") {
  CHECK_THROWS_AS(SimilarityKernel(Matrix(2, 2, {1, 0.5, 0.5, 0.9}), 1.0), ValueError);
  CHECK_THROWS_AS(SimilarityKernel(Matrix(2, 2, {1, 0.5, 0.4, 1}), 1.0), ValueError);
  CHECK_THROWS_AS(SimilarityKernel(Matrix(2, 2, {1, 1.5, 1.5, 1}), 1.0), ValueError);
  CHECK_THROWS_AS(SimilarityKernel(Matrix::identity(2), -1.0), ValueError);
}
