#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "compsnn/layers.hpp"
#include "compsnn/model.hpp"
#include "compsnn/spectrum.hpp"

namespace compsnn {

struct GradCheckEntry {
  std::string name;
  nn::GradCheckResult result;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  [[nodiscard]] double max_error() const noexcept;
  [[nodiscard]] bool passed(double tolerance) const noexcept { return max_error() < tolerance; }
};

/// Small fixture shared by the model-level checks: a 4-node path graph,
/// trajectories of 6 samples, kernel 3, 2 filters of degree 3.
struct TinyProblem {
  CompSnnConfig config;
  Spectrum spectrum;
  ModelInput input;
  std::vector<double> target;
};

TinyProblem make_tiny_problem(std::uint64_t seed);

/// Central-difference check of every layer and of loss(forward(.)) for all
/// four model kinds, probing every parameter coordinate.
GradCheckReport run_gradcheck_suite(std::uint64_t seed = 7);

}  // namespace compsnn
