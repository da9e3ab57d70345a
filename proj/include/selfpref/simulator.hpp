#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "selfpref/records.hpp"

namespace selfpref {

// Generative model: a record with outcome Y gets
//   s = logistic(mu_Y + beta * [self] + eps),  mu_1 = base_quality, mu_0 = -base_quality,
// eps ~ Normal(0, noise_sd), drawn per record (or once per example in shared mode).
struct SimConfig {
  std::size_t n_examples = 1000;
  double judge_acc = 0.5;
  std::size_t n_proxies = 3;
  // Per-proxy P(outcome = 1); empty means every proxy uses judge_acc.
  std::vector<double> proxy_acc;
  double beta = 0.0;
  double noise_sd = 1.0;
  double base_quality = 1.0;
  bool shared_noise = false;
  // Off: every proxy carries the example's outcome. On: each proxy outcome is
  // drawn from its own accuracy and matching has to filter.
  bool independent_proxy_outcomes = false;
  std::string dataset = "sim";
  std::string judge = "judge";
  std::string reference = "reference";
  // Family tags in model order: judge, reference, proxy-1 .. proxy-k.
  // Missing entries default to one distinct family per model.
  std::vector<std::string> families;
  std::uint64_t seed = 0;
};

/// Throws Error(kConfig) on an invalid configuration.
void validate(const SimConfig& config);

std::string proxy_id(const SimConfig& config, std::size_t index);

RecordSet generate(const SimConfig& config);

double logistic(double x);

/// E[logistic(mu_0 + beta + eps)] - E[logistic(mu_0 + eps)], by composite Simpson
/// quadrature against the normal density.
double analytic_target(const SimConfig& config);

struct RecoverySummary {
  std::size_t trials = 0;
  double target = 0.0;
  double alpha = 0.05;
  std::vector<double> estimates;
  std::vector<double> standard_errors;
  std::vector<double> p_values;
  std::size_t n_rejections = 0;
  std::size_t n_within_3se = 0;
  std::size_t n_degenerate = 0;

  double rejection_rate() const;
  double mean_estimate() const;
  double estimate_bias() const { return mean_estimate() - target; }
  double within_3se_fraction() const;
};

/// Runs generate -> match -> paired test on the loss cell for `trials` seeds
/// derived from config.seed. Throws Error(kConfig) when no loss cell can exist.
RecoverySummary recovery_experiment(const SimConfig& config, std::size_t trials, double alpha = 0.05);

}  // namespace selfpref
