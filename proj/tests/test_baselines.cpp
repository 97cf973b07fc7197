#include <cmath>
#include <vector>

#include "contcount/analysis.hpp"
#include "contcount/baselines.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace contcount;

TEST_SUITE("baselines") {

TEST_CASE("naive variance formulas") {
  CHECK(naive_output_variance(100, 0.5) == doctest::Approx(100.0));
  CHECK(naive_input_variance(1, 0.5) == doctest::Approx(1.0));
  CHECK(naive_input_variance(64, 2.0) == doctest::Approx(16.0));
  CHECK_THROWS_AS(naive_output_variance(10, 0.0), std::invalid_argument);
}

TEST_CASE("naive mechanisms stream exactly in zero-noise mode") {
  auto out = NaiveOutputMechanism::zero_noise(10);
  auto in = NaiveInputMechanism::zero_noise(10);
  double est = 0.0;
  double expected = 0.0;
  for (int t = 1; t <= 10; ++t) {
    const double x = (t % 3 == 0) ? 1.0 : 0.25;
    expected += x;
    out.step_into(std::span<const double>(&x, 1), std::span<double>(&est, 1));
    CHECK(est == expected);
    in.step_into(std::span<const double>(&x, 1), std::span<double>(&est, 1));
    CHECK(est == expected);
  }
  CHECK(out.live_noise_values() == 0);
  CHECK(in.live_noise_values() == 1);
  const double x = 0.0;
  CHECK_THROWS_AS(out.step_into(std::span<const double>(&x, 1),
                                std::span<double>(&est, 1)),
                  CapacityError);
}

TEST_CASE("naive mechanism analytic variances track t and T") {
  NaiveOutputMechanism out(20, PrivacyBudget(0.5));
  NaiveInputMechanism in(20, PrivacyBudget(0.5));
  for (std::uint64_t t = 1; t <= 20; ++t) {
    CHECK(out.analytic_variance(t) == doctest::Approx(20.0));
    CHECK(in.analytic_variance(t) == doctest::Approx(static_cast<double>(t)));
  }
}

TEST_CASE("toeplitz coefficients match the square-root oracle") {
  const auto c = toeplitz_coeffs(256);
  CHECK(c[0] == 1.0);
  CHECK(c[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(c[2] == doctest::Approx(0.375).epsilon(1e-15));

  // Independent oracle: forward-substitution square root of the all-ones
  // lower-triangular matrix. Its first column must be our recurrence.
  const auto b = oracles::ones_sqrt_forward_substitution(256);
  for (std::size_t j = 0; j < 256; ++j) {
    CHECK(std::abs(c[j] - b[j][0]) <= 1e-9);
  }
  // And the factor is Toeplitz: every diagonal is constant.
  for (std::size_t i = 1; i < 256; ++i) {
    for (std::size_t j = 1; j <= i; ++j) {
      CHECK(std::abs(b[i][j] - b[i - 1][j - 1]) <= 1e-9);
    }
  }
}

TEST_CASE("self-convolution of the coefficients is all ones") {
  const auto c = toeplitz_coeffs(256);
  for (std::size_t j = 0; j < 256; ++j) {
    double conv = 0.0;
    for (std::size_t m = 0; m <= j; ++m) conv += c[m] * c[j - m];
    CHECK(conv == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("L times R reconstructs the all-ones lower triangle") {
  const std::size_t n = 64;
  const auto c = toeplitz_coeffs(n);
  // Both factors are the same lower-triangular Toeplitz matrix with
  // B[i][j] = c[i-j]; every lower-triangular entry of B*B must be 1.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double entry = 0.0;
      for (std::size_t m = j; m <= i; ++m) {
        entry += c[i - m] * c[m - j];
      }
      CHECK(std::abs(entry - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("matrix variance formula") {
  CHECK(matrix_variance(1, 0.5, 1) == doctest::Approx(1.0));
  // Frozen against the forward-substitution oracle: with coefficients
  // {1, 0.5, 0.375}, (1 + 0.25 + 0.140625)^2 = 1.933837890625.
  CHECK(matrix_variance(3, 0.5, 3) ==
        doctest::Approx(1.933837890625).epsilon(1e-12));
  for (std::uint64_t t = 1; t < 40; ++t) {
    CHECK(matrix_variance(40, 1.0, t) < matrix_variance(40, 1.0, t + 1));
  }
  CHECK_THROWS_AS(matrix_variance(5, 0.5, 6), std::out_of_range);
}

TEST_CASE("toeplitz mechanism streams exactly in zero-noise mode") {
  auto mech = ToeplitzMechanism::zero_noise(12);
  double est = 0.0;
  double expected = 0.0;
  for (int t = 1; t <= 12; ++t) {
    const double x = (t % 2) ? 1.0 : 0.0;
    expected += x;
    mech.step_into(std::span<const double>(&x, 1), std::span<double>(&est, 1));
    CHECK(est == expected);
  }
}

TEST_CASE("toeplitz mechanism retains linear noise history") {
  ToeplitzMechanism mech(16, PrivacyBudget(1.0), 2, make_seeded_source(5));
  std::vector<double> est(2);
  const std::vector<double> x = {0.5, 0.5};
  for (std::uint64_t t = 1; t <= 16; ++t) {
    mech.step_into(x, est);
    CHECK(mech.live_noise_values() == t * 2);
  }
  CHECK(mech.analytic_variance(16) ==
        doctest::Approx(matrix_variance(16, 1.0, 16)).epsilon(1e-12));
}

TEST_CASE("toeplitz simulator matches its analytic variance") {
  // Statistical cross-check of the correlated-noise convolution against the
  // closed form, on a small horizon where trials are cheap.
  const std::uint64_t T = 8;
  const auto report =
      empirical_variance(MechanismKind::matrix, T, 0.5, 30000, 424242);
  for (std::uint64_t t = 1; t <= T; ++t) {
    const auto band =
        sample_variance_band(matrix_variance(T, 0.5, t), report.trials, 0.99);
    CHECK(band.contains(report.per_step[t - 1]));
  }
}

TEST_CASE("variance ordering: matrix <= smooth <= binary worst case") {
  for (int m = 4; m <= 12; ++m) {
    const std::uint64_t T = std::uint64_t{1} << m;
    const double rho = 0.5;
    const double mat = matrix_variance(T, rho, T);
    const double smo = smooth_variance(T, rho);
    const double bin = binary_max_variance(T, rho);
    CHECK(mat <= smo);
    CHECK(smo <= bin);
  }
}

}  // TEST_SUITE
