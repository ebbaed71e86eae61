#pragma once

#include "selfattn/gradcheck.hpp"
#include "selfattn/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace selfattn::cli {

struct NamedCheck {
  std::string name;
  ScalarFn fn;
  std::vector<Tensor<double>> inputs;
  double floor = 1e-8;  // denominator floor of the relative error
};

struct CheckReport {
  std::string name;
  GradCheckResult result;
  double floor = 1e-8;
  bool passed = false;
};

/// Small model used when no sizes are given: d = u = d_a = 8, r = 4.
ModelConfig toy_gradcheck_config();

/**
 * One check per differentiable op, per encoder/attention/head stage, and
 * the full batch loss of a dense, a pruned and a gated-pair model on a
 * padded two-sentence batch. Each op output is reduced by a fixed random
 * weighting so that every output coordinate contributes.
 *
 * Op checks use a relative-error floor of 1e-8, the full-model checks 1e-5.
 */
std::vector<NamedCheck> standard_checks(const ModelConfig& sizes, std::uint64_t seed);

std::vector<CheckReport> run_checks(const std::vector<NamedCheck>& checks, double tolerance = 1e-4);

/// One "PASS"/"FAIL" line per check and a summary; returns true when all passed.
bool print_reports(std::ostream& out, const std::vector<CheckReport>& reports, double tolerance = 1e-4);

}  // namespace selfattn::cli
