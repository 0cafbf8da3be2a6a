#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "phmm/simulation.hpp"

using namespace phmm;

TEST_CASE("degenerate generator produces constant sequences") {
  Matrix eye = Matrix::identity(3);
  HmmParams params(Simplex({0.0, 1.0, 0.0}), StochasticMatrix::normalized(eye),
                   StochasticMatrix::normalized(eye));
  auto [ds, latents] = generate(params, 10, 8, RngStream(1, 0));
  for (int i = 0; i < 10; ++i) {
    for (int v : ds.sequence(i).entries()) CHECK(v == 1);
    for (int z : latents[i]) CHECK(z == 1);
  }
}

TEST_CASE("initial-state and transition frequencies match the generator") {
  auto params = benchmark_params();
  const int n = 5000, t_len = 20;
  auto [ds, latents] = generate(params, n, t_len, RngStream(2, 0));

  std::vector<double> first(3, 0.0);
  for (const auto& z : latents) first[z[0]] += 1.0 / n;
  for (int z = 0; z < 3; ++z) {
    double p = params.pi[z];
    CHECK(std::abs(first[z] - p) <= 3.0 * std::sqrt(p * (1 - p) / n));
  }

  Matrix trans(3, 3);
  std::vector<double> row_totals(3, 0.0);
  for (const auto& z : latents)
    for (int t = 0; t + 1 < t_len; ++t) {
      trans(z[t], z[t + 1]) += 1.0;
      row_totals[z[t]] += 1.0;
    }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double p = params.A(i, j);
      double se = std::sqrt(p * (1 - p) / row_totals[i]);
      CHECK(std::abs(trans(i, j) / row_totals[i] - p) <= 3.0 * se);
    }

  // emissions follow B as well
  Matrix emis(3, 3);
  std::vector<double> emis_totals(3, 0.0);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < t_len; ++t) {
      emis(latents[i][t], ds.sequence(i).entries()[t]) += 1.0;
      emis_totals[latents[i][t]] += 1.0;
    }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(std::abs(emis(i, j) / emis_totals[i] - params.B(i, j)) <=
            3.0 * std::sqrt(params.B(i, j) * (1 - params.B(i, j)) / emis_totals[i]));
}

TEST_CASE("random masking endpoints") {
  auto params = benchmark_params();
  auto [ds, latents] = generate(params, 20, 10, RngStream(3, 0));

  Dataset none = apply_random_missing(ds, 0.0, RngStream(4, 0));
  for (int i = 0; i < 20; ++i) CHECK(none.sequence(i).entries() == ds.sequence(i).entries());

  Dataset all = apply_random_missing(ds, 1.0, RngStream(4, 0));
  CHECK(missing_rate(all) == 1.0);

  CHECK_THROWS_AS(apply_random_missing(ds, 1.5, RngStream(4, 0)), std::invalid_argument);
}

TEST_CASE("random masking concentrates around p") {
  auto params = benchmark_params();
  auto [ds, latents] = generate(params, 500, 20, RngStream(5, 0));  // n*T = 1e4
  Dataset masked = apply_random_missing(ds, 0.5, RngStream(6, 0));
  double rate = missing_rate(masked);
  CHECK(rate > 0.47);
  CHECK(rate < 0.53);
}

TEST_CASE("masks reuse the data stream-independently") {
  auto params = benchmark_params();
  auto [ds1, lat1] = generate(params, 50, 12, RngStream(7, 1));
  auto [ds2, lat2] = generate(params, 50, 12, RngStream(7, 1));
  for (int i = 0; i < 50; ++i) CHECK(ds1.sequence(i).entries() == ds2.sequence(i).entries());

  Dataset m1 = apply_random_missing(ds1, 0.3, RngStream(7, 2));
  Dataset m2 = apply_random_missing(ds2, 0.3, RngStream(7, 2));
  for (int i = 0; i < 50; ++i) CHECK(m1.sequence(i).entries() == m2.sequence(i).entries());

  // a different mask stream leaves the underlying values intact
  Dataset m3 = apply_random_missing(ds1, 0.3, RngStream(7, 3));
  for (int i = 0; i < 50; ++i)
    for (int t = 0; t < 12; ++t)
      if (m3.sequence(i).entries()[t] != kMissing)
        CHECK(m3.sequence(i).entries()[t] == ds1.sequence(i).entries()[t]);
}

TEST_CASE("blockwise masking") {
  auto params = benchmark_params();
  auto [ds, latents] = generate(params, 2000, 20, RngStream(8, 0));

  Dataset none = apply_blockwise_missing(ds, 0.0, RngStream(9, 0));
  for (int i = 0; i < 5; ++i) CHECK(none.sequence(i).entries() == ds.sequence(i).entries());

  Dataset half = apply_blockwise_missing(ds, 0.5, RngStream(9, 0));
  std::vector<double> start_counts(11, 0.0);
  for (int i = 0; i < half.num_sequences(); ++i) {
    const auto& e = half.sequence(i).entries();
    int missing = 0, first = -1, last = -1;
    for (int t = 0; t < 20; ++t)
      if (e[t] == kMissing) {
        ++missing;
        if (first < 0) first = t;
        last = t;
      }
    CHECK(missing == 10);                // exactly round(T*p) masked
    CHECK(last - first + 1 == missing);  // one contiguous block
    start_counts[first] += 1.0;
  }

  // block start approximately uniform on {0..10}
  double expected = half.num_sequences() / 11.0;
  double chi2 = 0.0;
  for (double c : start_counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(oracles::chi2_sf(chi2, 10.0) > 0.01);

  CHECK_THROWS_AS(apply_blockwise_missing(ds, 0.99, RngStream(9, 0)), std::domain_error);
  CHECK_THROWS_AS(apply_blockwise_missing(ds, 1.0, RngStream(9, 0)), std::invalid_argument);
}
