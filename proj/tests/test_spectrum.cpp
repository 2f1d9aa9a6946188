// Copyright 2026 The omtc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <complex>
#include <numbers>
#include <algorithm>

#include <gtest/gtest.h>

#include "omtc/spectrum.hpp"

namespace omtc {
namespace {

/// C(t', t'') = e^{-kappa (t' + t'')/2}.
CorrelationGrid analytic_cavity_grid(double kappa, double dt, Index n) {
  CorrelationGrid g(n, dt);
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k <= j; ++k) g.lower(j, k) = std::exp(-0.5 * kappa * (j + k) * dt);
  return g;
}

/// kappa Gamma^2 |int_0^T e^{-(Gamma - i Delta)(T - s)} e^{-kappa s/2} ds|^2.
double closed_form(double kappa, double Gamma, double Delta, double T) {
  const std::complex<double> w(Gamma, -Delta);
  const std::complex<double> c = w - 0.5 * kappa;
  const std::complex<double> integral = std::exp(-w * T) * (std::exp(c * T) - 1.0) / c;
  return kappa * Gamma * Gamma * std::norm(integral);
}

/// Two decaying modes, C = sum_i p_i e^{-i w_i (t' - t'')} e^{-g (t' + t'')/2}.
CorrelationGrid doublet_grid(double w, double g, double dt, Index n) {
  CorrelationGrid c(n, dt);
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k <= j; ++k) {
      const double tau = (j - k) * dt;
      const double decay = std::exp(-0.5 * g * (j + k) * dt);
      c.lower(j, k) = decay * 0.5 * (std::exp(Complex(0.0, -w * tau)) + std::exp(Complex(0.0, w * tau)));
    }
  return c;
}

TEST(FilteredRate, ZeroGridGivesZero) {
  const CorrelationGrid g(50, 0.1);
  for (double d : {-2.0, 0.0, 3.0}) EXPECT_EQ(filtered_counting_rate(g, 0.2, d, 0.5, 4.9), 0.0);
}

TEST(FilteredRate, DampedCavityClosedForm) {
  const double kappa = 1.0, dt = 0.01, T = 30.0;
  const auto g = analytic_cavity_grid(kappa, dt, 3001);
  const double Gamma = 0.01 * kappa;
  const double got = filtered_counting_rate(g, kappa, 0.0, Gamma, T);
  const double want = closed_form(kappa, Gamma, 0.0, T);
  EXPECT_LT(std::abs(got / want - 1.0), 1e-3);
  for (double d : {0.3, 1.0}) {
    const double off = filtered_counting_rate(g, kappa, d, 0.2, T);
    EXPECT_LT(std::abs(off / closed_form(kappa, 0.2, d, T) - 1.0), 1e-3);
  }
}

TEST(FilteredRate, BareLineIsSymmetricWithMaximumAtZero) {
  const auto g = analytic_cavity_grid(1.0, 0.02, 1001);
  const std::vector<double> deltas = {-1.5, -0.5, -0.1, 0.0, 0.1, 0.5, 1.5};
  const auto r = filtered_counting_rates(g, 1.0, 0.3, deltas, 20.0);
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    EXPECT_NEAR(r[i].at_T, r[deltas.size() - 1 - i].at_T, 1e-12 * r[3].at_T);
    EXPECT_LE(r[i].at_T, r[3].at_T);
  }
}

TEST(FilteredRate, IntegralIsTrapezoidOfRate) {
  const auto g = analytic_cavity_grid(1.0, 0.05, 201);
  const double d[] = {0.4};
  double trap = 0.0, prev = 0.0;
  for (Index n = 0; n < 201; ++n) {
    const double v = filtered_counting_rates(g, 1.0, 0.5, d, n * 0.05)[0].at_T;
    if (n > 0) trap += 0.025 * (prev + v);
    prev = v;
  }
  EXPECT_NEAR(filtered_counting_rates(g, 1.0, 0.5, d, 10.0)[0].integrated, trap, 1e-12);
}

TEST(FilteredRate, MatchesDirectDoubleSum) {
  const auto g = doublet_grid(1.3, 0.4, 0.05, 120);
  const double T = 119 * 0.05, Gamma = 0.35, kappa = 0.4;
  for (double delta : {-1.3, 0.2, 2.0}) {
    const std::complex<double> z(Gamma, delta);
    Complex sum = 0.0;
    for (Index j = 0; j < g.size(); ++j)
      for (Index k = 0; k < g.size(); ++k) {
        const double wj = (j == 0 || j == g.size() - 1) ? 0.025 : 0.05;
        const double wk = (k == 0 || k == g.size() - 1) ? 0.025 : 0.05;
        const double tj = j * 0.05, tk = k * 0.05;
        sum += wj * wk * std::exp(-std::conj(z) * (T - tj)) * std::exp(-z * (T - tk)) * g(j, k);
      }
    const double want = kappa * Gamma * Gamma * sum.real();
    EXPECT_LT(std::abs(sum.imag()), 1e-12);
    EXPECT_NEAR(filtered_counting_rate(g, kappa, delta, Gamma, T), want, 1e-12 * std::abs(want) + 1e-16);
  }
}

TEST(FilteredRate, LongHorizonsStayFinite) {
  // Gamma * T far beyond the exponent range of a single anchor.
  const auto g = analytic_cavity_grid(0.5, 0.5, 4001);
  const double d[] = {0.0, 0.7};
  const auto r = filtered_counting_rates(g, 0.5, 1.0, d, 2000.0);
  for (const auto& x : r) {
    EXPECT_TRUE(std::isfinite(x.at_T));
    EXPECT_TRUE(std::isfinite(x.integrated));
    EXPECT_GE(x.at_T, 0.0);
  }
  EXPECT_NEAR(r[0].integrated, filtered_counting_rates(g, 0.5, 1.0, d, 200.0)[0].integrated,
              1e-9 * r[0].integrated);
}

TEST(FilteredRate, ConjugatedGridGivesSameValues) {
  const auto g = doublet_grid(0.8, 0.3, 0.05, 300);
  CorrelationGrid h(g.size(), g.dt());
  for (Index j = 0; j < g.size(); ++j)
    for (Index k = 0; k <= j; ++k) h.lower(j, k) = std::conj(g(k, j));
  const std::vector<double> d = {-1.0, -0.8, 0.0, 0.8, 1.3};
  const auto a = filtered_counting_rates(g, 0.3, 0.1, d, 14.95);
  const auto b = filtered_counting_rates(h, 0.3, 0.1, d, 14.95);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(a[i].at_T, b[i].at_T, 1e-10);
}

TEST(FilteredRate, ThreadCountDoesNotChangeBits) {
  const auto g = doublet_grid(0.8, 0.3, 0.05, 700);
  std::vector<double> d;
  for (int i = 0; i < 300; ++i) d.push_back(-3.0 + 0.02 * i);
  const auto a = filtered_counting_rates(g, 0.3, 0.1, d, 34.95, 1);
  const auto b = filtered_counting_rates(g, 0.3, 0.1, d, 34.95, 3);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(a[i].at_T, b[i].at_T);
    EXPECT_EQ(a[i].integrated, b[i].integrated);
  }
}

TEST(FilteredRate, EvaluationTimeMustBeANode) {
  const auto g = analytic_cavity_grid(1.0, 0.1, 11);
  EXPECT_NO_THROW(filtered_counting_rate(g, 1.0, 0.0, 0.1, 0.5));
  EXPECT_THROW(filtered_counting_rate(g, 1.0, 0.0, 0.1, 0.53), NumericalError);
  EXPECT_THROW(filtered_counting_rate(g, 1.0, 0.0, 0.1, 1.1), NumericalError);
  EXPECT_THROW(filtered_counting_rate(g, 1.0, 0.0, 0.1, -0.1), NumericalError);
  EXPECT_THROW(filtered_counting_rate(g, 1.0, 0.0, 0.0, 0.5), ConfigError);
}

TEST(SpectrumFromGrid, NegativeIntensityIsReported) {
  CorrelationGrid g(20, 0.1);
  for (Index j = 0; j < 20; ++j) g.lower(j, j) = -1.0;
  ModelParams m;
  FilterParams f;
  f.n_points = 5;
  EXPECT_THROW(spectrum_from_grid(g, m, f, 1.9), NumericalError);
}

TEST(SpectrumFromGrid, SweepMetadata) {
  const auto g = analytic_cavity_grid(0.2, 0.05, 401);
  ModelParams m;
  m.kappa = 0.2;
  FilterParams f;
  f.Gamma = 0.05;
  const auto r = spectrum_from_grid(g, m, f, 20.0);
  ASSERT_EQ(r.points.size(), 321u);
  EXPECT_EQ(r.points.front().delta, -8.0);
  EXPECT_EQ(r.points.back().delta, 8.0);
  for (std::size_t i = 1; i < r.points.size(); ++i) EXPECT_GT(r.points[i].delta, r.points[i - 1].delta);
  EXPECT_EQ(r.n_t, 401);
  EXPECT_EQ(r.grid_bytes, g.memory_bytes());
  // Finite-window ripples add small side peaks; the line itself is the tallest.
  ASSERT_FALSE(r.peaks.empty());
  const auto top = std::max_element(r.peaks.begin(), r.peaks.end(),
                                    [](const Peak& a, const Peak& b) { return a.height < b.height; });
  EXPECT_NEAR(top->position, 0.0, 1e-9);
}

TEST(FilterParams, Validation) {
  FilterParams f;
  EXPECT_NO_THROW(f.validate());
  f.Gamma = 0.0;
  EXPECT_THROW(f.validate(), ConfigError);
  f = {};
  f.delta_min = 1.0;
  f.delta_max = 1.0;
  EXPECT_THROW(f.validate(), ConfigError);
  f = {};
  f.n_points = 1;
  EXPECT_THROW(f.validate(), ConfigError);
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = a + (b - a) * i / (n - 1);
  return x;
}

double lorentz(double x, double c, double w) { return 1.0 / (1.0 + std::pow((x - c) / (0.5 * w), 2)); }

TEST(FindPeaks, SingleLorentzian) {
  const auto x = linspace(-5.0, 5.0, 201);
  std::vector<double> y;
  for (double v : x) y.push_back(lorentz(v, 0.737, 0.6));
  const auto p = find_peaks(x, y, 0.01);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_NEAR(p[0].position, 0.737, 0.05);
  EXPECT_NEAR(p[0].width, 0.6, 0.05);
  EXPECT_NEAR(p[0].height, 1.0, 0.01);
}

TEST(FindPeaks, SymmetricDoublet) {
  const auto x = linspace(-5.0, 5.0, 321);
  std::vector<double> y;
  for (double v : x) y.push_back(lorentz(v, -2.1, 0.3) + lorentz(v, 2.1, 0.3));
  const auto p = find_peaks(x, y, 0.05);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_LT(p[0].position, p[1].position);
  EXPECT_NEAR(p[0].height / p[1].height, 1.0, 0.01);
  EXPECT_NEAR(p[0].position, -p[1].position, 1e-9);
}

TEST(FindPeaks, ThresholdAndErrors) {
  const auto x = linspace(-5.0, 5.0, 201);
  std::vector<double> y;
  for (double v : x) y.push_back(lorentz(v, -1.0, 0.3) + 0.02 * lorentz(v, 3.0, 0.3));
  EXPECT_EQ(find_peaks(x, y, 0.01).size(), 2u);
  EXPECT_EQ(find_peaks(x, y, 0.05).size(), 1u);
  const std::vector<double> two = {0.0, 1.0};
  EXPECT_THROW(find_peaks(two, two, 0.1), ConfigError);
  EXPECT_THROW(find_peaks(x, y, 0.0), ConfigError);
  EXPECT_THROW(find_peaks(x, y, 1.0), ConfigError);
  const std::vector<double> flat(x.size(), 0.0);
  EXPECT_TRUE(find_peaks(x, flat, 0.1).empty());
}

TEST(FindPeaks, RefinementIsStableUnderResolutionDoubling) {
  const auto g = doublet_grid(2.0, 0.2, 0.05, 1201);
  ModelParams m;
  FilterParams coarse;
  coarse.Gamma = 0.05;
  coarse.delta_min = -4.0;
  coarse.delta_max = 4.0;
  coarse.n_points = 81;
  FilterParams fine = coarse;
  fine.n_points = 161;
  const auto a = spectrum_from_grid(g, m, coarse, 60.0);
  const auto b = spectrum_from_grid(g, m, fine, 60.0);
  ASSERT_EQ(a.peaks.size(), b.peaks.size());
  for (std::size_t i = 0; i < a.peaks.size(); ++i) {
    EXPECT_LE(std::abs(a.peaks[i].position - b.peaks[i].position), 0.1);
  }
}

}  // namespace
}  // namespace omtc
