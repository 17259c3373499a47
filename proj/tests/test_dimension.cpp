#include <cmath>

#include <gtest/gtest.h>

#include "support.hpp"
#include "zlab/dimension.hpp"
#include "zlab/error.hpp"

using namespace zlab;
using namespace zlab::dimension;
namespace ts = testing_support;

TEST(CylinderOracle, BracketsTwoLetterDimension) {
  const double covering = ts::cylinder_dimension({1, 2}, 12);
  EXPECT_NEAR(covering, 0.5313, 0.01);
  EXPECT_GT(covering, 0.4);
  EXPECT_LT(covering, 0.7);
}

TEST(TransferEigenvalue, UnitAtTwoLetterDimension) {
  EXPECT_NEAR(transfer_eigenvalue({1, 2}, 0.5312805, 32), 1.0, 1e-4);
  EXPECT_GT(transfer_eigenvalue({1, 2}, 0.4, 32), 1.0);
  EXPECT_LT(transfer_eigenvalue({1, 2}, 0.7, 32), 1.0);
}

TEST(TransferEigenvalue, SingleLetterIsFixedPointDerivative) {
  // One branch: the eigenvalue is |T'(x*)|^s = (5 + x*)^(-2s) with x* = [5,5,...].
  const double xs = (std::sqrt(29.0) - 5) / 2;
  for (double s : {0.25, 0.5, 1.0}) {
    EXPECT_NEAR(transfer_eigenvalue({5}, s, 16), std::pow(5 + xs, -2 * s), 1e-10) << s;
  }
}

TEST(TransferEigenvalue, DecreasingInS) {
  const Alphabet a{1, 2, 3};
  double previous = transfer_eigenvalue(a, 0.05, 32);
  for (double s = 0.1; s <= 1.0; s += 0.05) {
    const double now = transfer_eigenvalue(a, s, 32);
    ASSERT_LT(now, previous) << s;
    ASSERT_GT(now, 0);
    previous = now;
  }
}

TEST(TransferEigenvalue, RejectsBadArguments) {
  EXPECT_THROW(transfer_eigenvalue({1, 2}, 0.0, 32), InputError);
  EXPECT_THROW(transfer_eigenvalue({1, 2}, 1.5, 32), InputError);
  EXPECT_THROW(transfer_eigenvalue({1, 2}, 0.5, 4), InputError);
}

TEST(TransferEigenvalue, NonConvergenceReportsDiagnostics) {
  try {
    transfer_eigenvalue({1, 2}, 0.5, 32, 1);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("iterations=1"), std::string::npos) << e.what();
  }
}

TEST(HausdorffDimension, TwoLetters) {
  const DimensionEstimate e = hausdorff_dimension({1, 2}, 1e-8);
  EXPECT_NEAR(e.delta, 0.5313, 1e-3);
  EXPECT_NEAR(e.delta, ts::cylinder_dimension({1, 2}, 12), 1e-6);
  EXPECT_LE(e.residual, 1e-8);
  EXPECT_LT(e.mesh_drift, 5e-9);
  EXPECT_DOUBLE_EQ(e.gamma(), 1 - e.delta);
}

TEST(HausdorffDimension, SingletonIsZero) {
  const DimensionEstimate e = hausdorff_dimension({5}, 1e-8);
  EXPECT_EQ(e.delta, 0.0);
}

TEST(HausdorffDimension, Thresholds) {
  EXPECT_GT(hausdorff_dimension({1, 2, 3, 4, 5}, 1e-8).delta, 5.0 / 6.0);
  for (Letter n = 6; n <= 10; ++n) {
    EXPECT_GT(hausdorff_dimension({1, 2, 3, 4, n}, 1e-8).delta, 0.8) << n;
  }
}

TEST(HausdorffDimension, MonotoneInAlphabet) {
  const double d12 = hausdorff_dimension({1, 2}, 1e-8).delta;
  const double d123 = hausdorff_dimension({1, 2, 3}, 1e-8).delta;
  const double d1234 = hausdorff_dimension({1, 2, 3, 4}, 1e-8).delta;
  EXPECT_LT(d12, d123);
  EXPECT_LT(d123, d1234);
  double previous = 1;
  for (Letter n = 5; n <= 10; ++n) {
    const double d = hausdorff_dimension({1, 2, 3, 4, n}, 1e-8).delta;
    EXPECT_LT(d, previous) << n;  // {1,2,3,4,n} shrinks as n grows
    EXPECT_GT(d, d1234) << n;
    previous = d;
  }
}

TEST(HausdorffDimension, AgreesWithCoveringOnOtherAlphabets) {
  for (const auto& letters : {std::vector<Letter>{1, 3}, std::vector<Letter>{2, 3}}) {
    const double d = hausdorff_dimension(Alphabet(letters), 1e-8).delta;
    EXPECT_NEAR(d, ts::cylinder_dimension(letters, 14), 1e-4) << Alphabet(letters).to_string();
  }
}

TEST(HausdorffDimension, MeshDriftShrinks) {
  const Alphabet a{1, 2, 3, 4, 10};
  std::vector<double> deltas;
  for (int mesh : {8, 16, 32, 64}) {
    DimensionOptions opt;
    opt.initial_mesh = opt.max_mesh = mesh;
    deltas.push_back(hausdorff_dimension(a, 1e-12, opt).delta);
  }
  for (std::size_t i = 2; i < deltas.size(); ++i) {
    EXPECT_LE(std::abs(deltas[i] - deltas[i - 1]), std::abs(deltas[i - 1] - deltas[i - 2]) + 1e-13);
  }
}

TEST(HausdorffDimension, RejectsBadArguments) {
  EXPECT_THROW(hausdorff_dimension({1, 2}, 0), InputError);
  DimensionOptions opt;
  opt.initial_mesh = 4;
  EXPECT_THROW(hausdorff_dimension({1, 2}, 1e-8, opt), InputError);
}

TEST(HausdorffDimension, SweepCsv) {
  const std::vector<DimensionEstimate> rows{hausdorff_dimension({1, 2}, 1e-6)};
  const std::string csv = sweep_csv(rows);
  EXPECT_EQ(csv.rfind("alphabet,delta,residual,mesh\n\"1,2\",0.5312", 0), 0U) << csv;
}
