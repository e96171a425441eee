#include "ddspc/pce_basis.hpp"

#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>

#include <cmath>
#include <memory>

namespace ddspc {
namespace {

BasisPtr make_basis(const std::optional<GermFamily>& init, const GermFamily& noise, Index N) {
  return std::make_shared<const JointBasis>(JointBasis::build_horizon_basis(init, noise, N));
}

TEST(PceBasis, TermCounts) {
  const auto scalar = make_basis(GermFamily::uniform(Vec::Constant(1, 0.6), Vec::Constant(1, 1.4)),
                                 GermFamily::gaussian(Vec::Zero(1), Vec::Constant(1, 0.5)), 25);
  EXPECT_EQ(scalar->last_index(), 26);
  EXPECT_EQ(scalar->total_terms(), 27);
  EXPECT_EQ(scalar->initial_terms(), 1);
  EXPECT_EQ(scalar->noise_block_offset(3), 5);

  const auto aircraft = make_basis(std::nullopt, GermFamily::gaussian(Vec::Zero(4), Vec::Ones(4)), 10);
  EXPECT_EQ(aircraft->last_index(), 40);

  const auto degenerate = make_basis(std::nullopt, GermFamily::gaussian(Vec::Zero(1), Vec::Zero(1)), 5);
  EXPECT_EQ(degenerate->last_index(), 0);
  EXPECT_EQ(degenerate->total_terms(), 1);
}

TEST(PceBasis, NormsMatchQuadrature) {
  const auto b = make_basis(GermFamily::uniform(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)),
                            GermFamily::gaussian(Vec::Zero(1), Vec::Ones(1)), 2);
  EXPECT_DOUBLE_EQ(b->norm_squared(0), 1.0);
  EXPECT_NEAR(b->norm_squared(1), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(b->norm_squared(2), 1.0, 1e-15);

  // E[x^2] under U(-1, 1) and N(0, 1).
  using boost::math::quadrature::gauss;
  const double legendre = gauss<double, 10>::integrate([](double x) { return 0.5 * x * x; }, -1.0, 1.0);
  EXPECT_NEAR(legendre, b->norm_squared(1), 1e-12);
  const double hermite = boost::math::quadrature::sinh_sinh<double>().integrate(
      [](double x) { return x * x * std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); });
  EXPECT_NEAR(hermite, b->norm_squared(2), 1e-10);
}

TEST(PceBasis, OrthogonalityByQuadrature) {
  const auto b = make_basis(GermFamily::uniform(Vec::Constant(1, 0.6), Vec::Constant(1, 1.4)),
                            GermFamily::gaussian(Vec::Zero(2), Vec::Ones(2)), 3);
  using boost::math::quadrature::gauss;
  for (Index j = 1; j <= b->last_index(); ++j) {
    for (Index k = j + 1; k <= b->last_index(); ++k) {
      // Independent germs: E[phi^j phi^k] = E[phi^j] E[phi^k].
      const auto mean_of = [&](Index idx) {
        if (b->function(idx).kind == GermKind::LegendreUniform) {
          return gauss<double, 10>::integrate([](double x) { return 0.5 * x; }, -1.0, 1.0);
        }
        return boost::math::quadrature::sinh_sinh<double>().integrate(
            [](double x) { return x * std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); });
      };
      EXPECT_LE(std::abs(mean_of(j) * mean_of(k)), 1e-10);
    }
  }
}

TEST(PceBasis, CanonicalNoiseExpansions) {
  const GermFamily g = GermFamily::gaussian(Vec::Zero(1), Vec::Constant(1, 0.5));
  const auto b = make_basis(std::nullopt, g, 5);
  const PceVector w0 = canonical_noise_pce(g, b, 0);
  EXPECT_DOUBLE_EQ(w0.coefficients(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(w0.coefficients(b->noise_block_offset(0), 0), 0.5);
  EXPECT_DOUBLE_EQ(w0.coefficients.col(0).cwiseAbs().sum(), 0.5);
  const auto [m, v] = moments(w0);
  EXPECT_DOUBLE_EQ(m(0), 0.0);
  EXPECT_NEAR(v(0), 0.25, 1e-15);

  const GermFamily u = GermFamily::uniform(Vec::Constant(1, -0.866), Vec::Constant(1, 0.866));
  const auto bu = make_basis(std::nullopt, u, 5);
  const PceVector w3 = canonical_noise_pce(u, bu, 3);
  EXPECT_NEAR(w3.coefficients(bu->noise_block_offset(3), 0), 0.866, 1e-15);
  EXPECT_NEAR(moments(w3).second(0), 0.866 * 0.866 / 3.0, 1e-15);

  const GermFamily det = GermFamily::gaussian(Vec::Constant(1, 5.0), Vec::Zero(1));
  const auto bd = make_basis(std::nullopt, det, 4);
  const PceVector wd = canonical_noise_pce(det, bd, 2);
  ASSERT_EQ(wd.coefficients.rows(), 1);
  EXPECT_DOUBLE_EQ(wd.coefficients(0, 0), 5.0);
}

TEST(PceBasis, ConstantMoments) {
  const auto b = make_basis(std::nullopt, GermFamily::gaussian(Vec::Zero(1), Vec::Ones(1)), 3);
  Mat c = Mat::Zero(b->total_terms(), 2);
  c(0, 0) = 1.5;
  c(0, 1) = -2.0;
  const auto [m, v] = moments(PceVector(c, b));
  EXPECT_DOUBLE_EQ(m(0), 1.5);
  EXPECT_DOUBLE_EQ(m(1), -2.0);
  EXPECT_DOUBLE_EQ(v.cwiseAbs().maxCoeff(), 0.0);
}

TEST(PceBasis, EvaluateAndSampleMean) {
  const GermFamily g = GermFamily::gaussian(Vec::Zero(1), Vec::Constant(1, 0.5));
  const auto b = make_basis(GermFamily::uniform(Vec::Constant(1, 0.6), Vec::Constant(1, 1.4)), g, 4);
  Rng rng(3);
  const Vec germ = b->sample_germ(rng);
  const Vec phi = b->evaluate(germ);
  ASSERT_EQ(phi.size(), b->total_terms());
  EXPECT_DOUBLE_EQ(phi(0), 1.0);
  EXPECT_DOUBLE_EQ(phi(b->noise_block_offset(1)), germ(b->noise_block_offset(1) - 1));

  const PceVector x0 = canonical_initial_pce(b);
  const auto [m, v] = moments(x0);
  const int S = 100000;
  double sum = 0.0;
  for (int s = 0; s < S; ++s) sum += x0.realize(b->evaluate(b->sample_germ(rng)))(0);
  const double se = std::sqrt(v(0) / S);
  EXPECT_NEAR(sum / S, m(0), 4.0 * se);
  EXPECT_NEAR(m(0), 1.0, 1e-15);
  EXPECT_NEAR(v(0), 0.8 * 0.8 / 12.0, 1e-15);
}

TEST(PceBasis, SampleGermDeterministicPerSeed) {
  const auto b = make_basis(std::nullopt, GermFamily::gaussian(Vec::Zero(2), Vec::Ones(2)), 3);
  Rng a(42), c(42);
  EXPECT_EQ(b->sample_germ(a), b->sample_germ(c));
}

}  // namespace
}  // namespace ddspc
