#pragma once

#include <span>
#include <string>
#include <vector>

#include "zlab/cf.hpp"

namespace zlab::dimension {

struct DimensionOptions {
  int initial_mesh = 32;
  int max_mesh = 256;
  int max_power_iterations = 20000;
};

struct DimensionEstimate {
  Alphabet alphabet{1};
  double delta = 0;
  double residual = 0;    // |lambda(delta) - 1| at the final mesh
  int mesh_size = 0;
  double tolerance = 0;
  double mesh_drift = 0;  // |delta(mesh) - delta(mesh / 2)|
  int eigen_solves = 0;

  double gamma() const noexcept { return 1.0 - delta; }
};

/// Leading eigenvalue of the collocation discretization of
/// (L_s f)(x) = sum_d (d + x)^(-2s) f(1 / (d + x)) on [0, 1].
double transfer_eigenvalue(const Alphabet& alphabet, double s, int mesh_size,
                           int max_iterations = 20000);

/// Root of lambda(s) = 1 on [0, 1], refined over mesh doublings.
DimensionEstimate hausdorff_dimension(const Alphabet& alphabet, double tolerance,
                                      const DimensionOptions& options = {});

/// Header `alphabet,delta,residual,mesh`; the alphabet field is quoted.
std::string sweep_csv(std::span<const DimensionEstimate> rows);

}  // namespace zlab::dimension
