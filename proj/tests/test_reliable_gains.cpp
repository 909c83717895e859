#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "redunquant/reliable_gains.hpp"

using namespace redunquant;

TEST(Reliability, TwinScalarIsReliable) {
  const auto rep = verify_reliable(fixture::twin_scalar_system(), fixture::twin_scalar_gains());
  ASSERT_EQ(rep.abscissae.size(), 3u);
  EXPECT_NEAR(rep.abscissae[0], -3.0, 1e-12);
  EXPECT_NEAR(rep.abscissae[1], -1.0, 1e-12);
  EXPECT_NEAR(rep.margin, 1.0, 1e-12);
  EXPECT_TRUE(rep.reliable);
}

TEST(Reliability, SingleOutageCanBreakIt) {
  GainSet K{{Matrix::Constant(1, 1, -4.0), Matrix::Constant(1, 1, -0.5)}};
  const auto rep = verify_reliable(fixture::twin_scalar_system(), K);
  EXPECT_FALSE(rep.reliable);
  EXPECT_NEAR(rep.abscissae[1], 0.5, 1e-12);
}

TEST(Reliability, MarginalLoopIsNotReliable) {
  GainSet K{{Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, -1.0)}};
  EXPECT_FALSE(verify_reliable(fixture::twin_scalar_system(), K).reliable);
}

TEST(Reliability, AgreesWithRouthHurwitz) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    auto inst = fixture::random_instance(rng, 1 + trial % 4, 1 + trial % 3);
    bool all = true;
    for (std::size_t j = 0; j <= inst.sys.channels(); ++j) {
      all = all && oracle::routh_hurwitz_stable(oracle::charpoly(
                       closed_loop_matrix(inst.sys, inst.gains, FailureMode(j))));
    }
    EXPECT_EQ(verify_reliable(inst.sys, inst.gains).reliable, all);
  }
}

TEST(Care, ScalarClosedForm) {
  // a = 1, b = 1, q = 1, r = 1: p = 1 + sqrt(2).
  const Matrix P = solve_care(Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0),
                              Matrix::Identity(1, 1), Matrix::Identity(1, 1));
  EXPECT_NEAR(P(0, 0), 1.0 + std::sqrt(2.0), 1e-12);
}

TEST(Care, ResidualAndStabilization) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 1 + trial % 5;
    const Matrix A = fixture::uniform_matrix(rng, d, d, -2, 2);
    const Matrix B = fixture::uniform_matrix(rng, d, 2, -2, 2);
    const Matrix Q = Matrix::Identity(d, d), R = Matrix::Identity(2, 2);
    const Matrix P = solve_care(A, B, Q, R);
    EXPECT_LT(care_residual(A, B, Q, R, P), 1e-8);
    EXPECT_LT(spectral_abscissa(A - B * B.transpose() * P), 0.0);
  }
}

TEST(Care, UncontrollableUnstableModeFails) {
  Matrix A(2, 2);
  A << 1, 0, 0, -1;
  Matrix B(2, 1);
  B << 0, 1;
  EXPECT_THROW(solve_care(A, B, Matrix::Identity(2, 2), Matrix::Identity(1, 1)),
               NumericalError);
}

TEST(Synthesis, SuccessIsReliable) {
  const auto res = synthesize_gains(fixture::twin_scalar_system());
  EXPECT_TRUE(res.report.reliable);
  EXPECT_EQ(verify_reliable(fixture::twin_scalar_system(), res.gains), res.report);
  EXPECT_GE(res.theta, 1.0);
}

TEST(Synthesis, ImpossibleInstanceReportsBestAttempt) {
  MultiChannelSystem sys(Matrix::Constant(1, 1, 1.0),
                         {Matrix::Constant(1, 1, 1.0), Matrix::Zero(1, 1)},
                         DiffusionSpec::constant(Matrix::Identity(1, 1)));
  try {
    synthesize_gains(sys);
    FAIL() << "expected failure";
  } catch (const SynthesisFailedError& e) {
    EXPECT_FALSE(e.best_report().reliable);
    EXPECT_NE(std::string(e.what()).find("no certificate"), std::string::npos);
  }
}
