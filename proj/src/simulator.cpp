#include "selfpref/simulator.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "selfpref/error.hpp"
#include "selfpref/matching.hpp"
#include "selfpref/random.hpp"
#include "selfpref/stats.hpp"

namespace selfpref {
namespace {

enum Stream : std::uint64_t { kOutcome = 1, kSharedNoise = 2, kRecordNoise = 3, kProxyOutcome = 4 };

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

std::string family_at(const SimConfig& config, std::size_t index, const std::string& fallback) {
  if (index < config.families.size() && !config.families[index].empty()) return config.families[index];
  return fallback;
}

double proxy_accuracy(const SimConfig& config, std::size_t k) {
  return config.proxy_acc.empty() ? config.judge_acc : config.proxy_acc[k];
}

// E[g(eps)], eps ~ Normal(0, sd^2).
template <typename F>
double normal_expectation(F g, double sd) {
  if (sd == 0.0) return g(0.0);
  constexpr int kIntervals = 4000;  // even
  constexpr double kHalfWidth = 12.0;
  const double h = 2.0 * kHalfWidth / kIntervals;
  double sum = 0.0;
  for (int i = 0; i <= kIntervals; ++i) {
    const double z = -kHalfWidth + i * h;
    const double weight = (i == 0 || i == kIntervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    sum += weight * g(sd * z) * std::exp(-0.5 * z * z);
  }
  return sum * h / 3.0 / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void validate(const SimConfig& config) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kConfig, "simulator: " + msg); };
  if (config.n_examples < 1) fail("n_examples must be >= 1");
  if (config.n_proxies < 1) fail("n_proxies must be >= 1");
  if (!is_probability(config.judge_acc)) fail("judge_acc must lie in [0,1]");
  if (!config.proxy_acc.empty() && config.proxy_acc.size() != config.n_proxies)
    fail(fmt::format("proxy_acc has {} entries for {} proxies", config.proxy_acc.size(), config.n_proxies));
  for (double p : config.proxy_acc)
    if (!is_probability(p)) fail("proxy_acc entries must lie in [0,1]");
  if (!(config.noise_sd >= 0.0) || !std::isfinite(config.noise_sd)) fail("noise_sd must be finite and >= 0");
  if (std::isnan(config.beta)) fail("beta is NaN");
  if (!std::isfinite(config.base_quality)) fail("base_quality must be finite");
  if (config.dataset.empty() || config.judge.empty() || config.reference.empty())
    fail("dataset, judge and reference names must be non-empty");
  if (config.judge == config.reference) fail("judge and reference must differ");
}

std::string proxy_id(const SimConfig& config, std::size_t index) {
  return fmt::format("{}-proxy-{}", config.judge, index + 1);
}

RecordSet generate(const SimConfig& config) {
  validate(config);
  const CounterRng rng(config.seed);
  const ModelId judge{config.judge, family_at(config, 0, "fam-" + config.judge)};
  const ModelId reference{config.reference, family_at(config, 1, "fam-" + config.reference)};
  std::vector<ModelId> proxies;
  for (std::size_t k = 0; k < config.n_proxies; ++k) {
    const auto id = proxy_id(config, k);
    proxies.push_back({id, family_at(config, 2 + k, "fam-" + id)});
  }
  const double mu[2] = {-config.base_quality, config.base_quality};

  std::vector<EvalRecord> records;
  records.reserve(config.n_examples * (1 + config.n_proxies));
  const int width = static_cast<int>(fmt::formatted_size("{}", config.n_examples - 1));
  for (std::size_t i = 0; i < config.n_examples; ++i) {
    const QueryKey query{config.dataset, fmt::format("ex-{:0{}}", i, width)};
    const int y = rng.bernoulli(config.judge_acc, {kOutcome, i}) ? 1 : 0;
    const double shared = config.noise_sd * rng.normal({kSharedNoise, i});
    auto noise = [&](std::uint64_t slot) {
      return config.shared_noise ? shared : config.noise_sd * rng.normal({kRecordNoise, i, slot});
    };

    const double s_self = logistic(mu[y] + config.beta + noise(0));
    records.push_back(make_record(query, judge, reference, judge, s_self, s_self, y));
    for (std::size_t k = 0; k < config.n_proxies; ++k) {
      const int yk = config.independent_proxy_outcomes
                         ? (rng.bernoulli(proxy_accuracy(config, k), {kProxyOutcome, i, k}) ? 1 : 0)
                         : y;
      const double s_proxy = logistic(mu[yk] + noise(k + 1));
      records.push_back(make_record(query, judge, reference, proxies[k], s_proxy, s_proxy, yk));
    }
  }
  Provenance provenance{{fmt::format("simulator:seed={}", config.seed)}, ""};
  return RecordSet(std::move(records), std::move(provenance));
}

double analytic_target(const SimConfig& config) {
  const double mu0 = -config.base_quality;
  const double self = normal_expectation([&](double e) { return logistic(mu0 + config.beta + e); }, config.noise_sd);
  const double proxy = normal_expectation([&](double e) { return logistic(mu0 + e); }, config.noise_sd);
  return self - proxy;
}

double RecoverySummary::rejection_rate() const {
  return trials == 0 ? 0.0 : static_cast<double>(n_rejections) / static_cast<double>(trials);
}

double RecoverySummary::mean_estimate() const { return estimates.empty() ? 0.0 : mean(estimates); }

double RecoverySummary::within_3se_fraction() const {
  return trials == 0 ? 0.0 : static_cast<double>(n_within_3se) / static_cast<double>(trials);
}

RecoverySummary recovery_experiment(const SimConfig& config, std::size_t trials, double alpha) {
  validate(config);
  if (trials < 1) throw Error(ErrorCode::kConfig, "recovery_experiment: trials must be >= 1");
  if (config.judge_acc >= 1.0)
    throw Error(ErrorCode::kConfig, "recovery_experiment: judge_acc = 1 leaves no outcome-0 examples");

  RecoverySummary out;
  out.trials = trials;
  out.alpha = alpha;
  out.target = analytic_target(config);
  out.estimates.assign(trials, 0.0);
  out.standard_errors.assign(trials, 0.0);
  out.p_values.assign(trials, 1.0);
  std::vector<char> degenerate(trials, 0);

  auto run_trial = [&](std::size_t t) {
    SimConfig trial = config;
    trial.seed = derive_seed(config.seed, t);
    const auto records = generate(trial);
    const auto groups = partition(records);
    const auto& group = groups.begin()->second;
    const auto matched = match(group);
    try {
      const auto result = quality_test(matched.matched, group.self_records(), OutcomeCell::kLoss);
      out.estimates[t] = result.mean_delta;
      out.standard_errors[t] = result.se.value_or(0.0);
      out.p_values[t] = result.p;
      degenerate[t] = result.degenerate;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateStatistic && e.code() != ErrorCode::kEmptyInput) throw;
      degenerate[t] = 1;
    }
  };

  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::min<std::size_t>(trials, 16));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t t = w; t < trials; t += workers) run_trial(t);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (std::size_t t = 0; t < trials; ++t) {
    out.n_degenerate += degenerate[t] != 0;
    out.n_rejections += out.p_values[t] < alpha;
    if (std::abs(out.estimates[t] - out.target) <= 3.0 * out.standard_errors[t]) ++out.n_within_3se;
  }
  return out;
}

}  // namespace selfpref
