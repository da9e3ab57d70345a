#include "selfpref/cli.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "selfpref/audit.hpp"
#include "selfpref/collector.hpp"
#include "selfpref/error.hpp"
#include "selfpref/fixtures.hpp"
#include "selfpref/ingest.hpp"
#include "selfpref/metrics.hpp"
#include "selfpref/random.hpp"
#include "selfpref/report.hpp"
#include "selfpref/simulator.hpp"

namespace selfpref::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct Options {
  std::vector<std::string> records;
  std::string out;
  std::string format = "table";
  double alpha = 0.05;
  bool exclude_same_family = false;
  std::string y_cell = "0";
  double max_reject_fraction = 0.0;
  bool no_diagnostics = false;
  std::string log_level = "warn";

  // simulate
  SimConfig sim;
  std::size_t groups = 1;
  std::size_t trials = 0;

  // collect
  std::string pairs;
  std::string endpoint_url;
  std::string template_name;
  std::string failures;
  std::string api_key_env = "SELFPREF_API_KEY";
  CollectorConfig collector;
  int timeout_s = 60;

  // fixtures
  std::string table = "ilsp";
};

// Emits diagnostics as one JSON object per line.
class Diagnostics {
 public:
  explicit Diagnostics(std::ostream& err) : err_(err) {}

  void error(std::string_view code, int exit_code, std::string_view message) {
    json j{{"level", "error"}, {"code", code}, {"exit", exit_code}, {"message", message}};
    err_ << j.dump() << '\n';
  }
  void warning(std::string_view kind, json detail) {
    json j{{"level", "warning"}, {"kind", kind}};
    for (auto& [k, v] : detail.items()) j[k] = v;
    err_ << j.dump() << '\n';
  }

 private:
  std::ostream& err_;
};

// Collects output documents and publishes them only once everything succeeded.
class OutputSet {
 public:
  explicit OutputSet(std::ostream& stdout_stream) : stdout_(stdout_stream) {}

  void add(const std::string& path, std::string content) { docs_.emplace_back(path, std::move(content)); }

  void commit() {
    std::vector<std::pair<fs::path, fs::path>> staged;
    try {
      for (const auto& [path, content] : docs_) {
        if (path.empty() || path == "-") continue;
        fs::path target(path);
        fs::path tmp = target;
        tmp += fmt::format(".tmp-{}", ::getpid());
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        staged.emplace_back(tmp, target);
        if (!f) throw Error(ErrorCode::kConfig, fmt::format("cannot write '{}'", target.string()));
        f << content;
        f.close();
        if (!f) throw Error(ErrorCode::kConfig, fmt::format("failed writing '{}'", target.string()));
      }
    } catch (...) {
      for (const auto& [tmp, target] : staged) {
        std::error_code ec;
        fs::remove(tmp, ec);
      }
      throw;
    }
    for (const auto& [tmp, target] : staged) fs::rename(tmp, target);
    for (const auto& [path, content] : docs_)
      if (path.empty() || path == "-") stdout_ << content;
  }

 private:
  std::ostream& stdout_;
  std::vector<std::pair<std::string, std::string>> docs_;
};

OutcomeCell parse_cell(const std::string& s) {
  if (s == "0") return OutcomeCell::kLoss;
  if (s == "1") return OutcomeCell::kWin;
  if (s == "all") return OutcomeCell::kAll;
  throw Error(ErrorCode::kConfig, fmt::format("--y-cell must be 0, 1 or all, got '{}'", s));
}

RecordSet load(const Options& o, Diagnostics& diag) {
  std::vector<fs::path> paths(o.records.begin(), o.records.end());
  IngestOptions io;
  io.max_reject_fraction = o.max_reject_fraction;
  auto result = ingest(paths, io);
  for (const auto& r : result.rejections)
    diag.warning("rejection", {{"path", r.path}, {"line", r.line}, {"code", to_string(r.code)}, {"reason", r.reason}});
  return std::move(result.records);
}

void cmd_audit(const Options& o, Diagnostics& diag, OutputSet& outputs) {
  const auto records = load(o, diag);
  AuditOptions ao;
  ao.alpha = o.alpha;
  ao.cell = parse_cell(o.y_cell);
  ao.matching.exclude_same_family = o.exclude_same_family;
  ao.diagnostics = !o.no_diagnostics;
  const auto format = parse_report_format(o.format);
  auto result = audit(records, ao);
  for (const auto& s : result.skipped)
    diag.warning("skipped_row", {{"dataset", s.dataset}, {"judge", s.judge}, {"reason", s.reason}});
  if (result.report.rows.empty())
    throw Error(ErrorCode::kDegenerateStatistic, "no (dataset, judge) row could be tested");
  outputs.add(o.out, render(result.report, format));
}

SimConfig group_config(const Options& o, std::size_t g) {
  SimConfig cfg = o.sim;
  if (o.groups > 1) {
    cfg.judge = fmt::format("{}-{}", o.sim.judge, g);
    cfg.seed = derive_seed(o.sim.seed, g);
  }
  return cfg;
}

void cmd_simulate(const Options& o, OutputSet& outputs) {
  if (o.groups == 0) throw Error(ErrorCode::kConfig, "--groups must be >= 1");
  if (o.trials == 0) {
    std::vector<RecordSet> sets;
    for (std::size_t g = 0; g < o.groups; ++g) sets.push_back(generate(group_config(o, g)));
    outputs.add(o.out, serialize_records(merge(sets)));
    return;
  }
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw Error(ErrorCode::kConfig, "alpha must lie in (0, 1)");
  const auto s = recovery_experiment(o.sim, o.trials, o.alpha);
  const auto format = parse_report_format(o.format);
  const double fpr_or_power = s.rejection_rate();
  if (format == ReportFormat::kTable) {
    std::string text;
    text += fmt::format("trials                {}\n", s.trials);
    text += fmt::format("analytic target       {:.6f}\n", s.target);
    text += fmt::format("mean estimate         {:.6f}\n", s.mean_estimate());
    text += fmt::format("estimate bias         {:.6f}\n", s.estimate_bias());
    text += fmt::format("rejection rate        {:.4f} (alpha {})\n", fpr_or_power, s.alpha);
    text += fmt::format("within 3 SE of target {:.4f}\n", s.within_3se_fraction());
    text += fmt::format("degenerate trials     {}\n", s.n_degenerate);
    outputs.add(o.out, text);
  } else {
    json j{{"kind", "recovery"},
           {"trials", s.trials},
           {"target", s.target},
           {"alpha", s.alpha},
           {"mean_estimate", s.mean_estimate()},
           {"estimate_bias", s.estimate_bias()},
           {"rejection_rate", fpr_or_power},
           {"within_3se_fraction", s.within_3se_fraction()},
           {"n_degenerate", s.n_degenerate},
           {"p_values", s.p_values}};
    outputs.add(o.out, j.dump() + "\n");
  }
}

void cmd_collect(const Options& o, Diagnostics& diag, OutputSet& outputs) {
  const auto& tmpl = builtin_template(o.template_name);
  const auto tasks = read_pair_tasks(o.pairs);
  EndpointConfig ec;
  ec.url = o.endpoint_url;
  ec.api_key_env = o.api_key_env;
  ec.timeout = std::chrono::seconds(o.timeout_s);
  HttpChatEndpoint endpoint(ec);
  auto result = collect_all(endpoint, o.collector, tmpl, tasks);
  for (const auto& f : result.failures)
    diag.warning("collection_failure", {{"dataset", f.query.dataset},
                                        {"example_id", f.query.example_id},
                                        {"subject", f.subject},
                                        {"partial", f.partial},
                                        {"reason", f.reason}});
  if (result.records.empty() && !tasks.empty())
    throw Error(ErrorCode::kCollection, fmt::format("all {} pairs failed", tasks.size()));
  outputs.add(o.out, serialize_records(result.records));
  const auto failures_path = o.failures.empty() ? o.out + ".failures.jsonl" : o.failures;
  outputs.add(failures_path, serialize_failures(result.failures));
}

void cmd_validate_proxies(const Options& o, Diagnostics& diag, OutputSet& outputs) {
  const auto records = load(o, diag);
  const auto format = parse_report_format(o.format);
  auto diags = group_diagnostics(records, {o.exclude_same_family});
  std::vector<double> xs, ys;
  for (auto& d : diags) {
    d.decomposition.reset();
    d.entropy.reset();
    if (d.validity) {
      xs.push_back(d.validity->judge_winrate);
      ys.push_back(d.validity->weighted_proxy_winrate);
    }
  }
  std::optional<double> r;
  if (xs.size() >= 3) {
    try {
      r = pearson(xs, ys);
    } catch (const Error&) {
    }
  }
  auto report = make_report({}, std::move(diags), o.alpha);
  auto text = render(report, format);
  if (format == ReportFormat::kStructured) {
    json j{{"kind", "validity_summary"}, {"groups", xs.size()}, {"pearson_r", r ? json(*r) : json(nullptr)}};
    text += j.dump() + "\n";
  } else if (format == ReportFormat::kTable) {
    text += fmt::format("\njudge vs proxy winrate over {} groups: pearson r = {}\n", xs.size(),
                        r ? fmt::format("{:.4f}", *r) : std::string("-"));
  }
  outputs.add(o.out, text);
}

void cmd_entropy(const Options& o, Diagnostics& diag, OutputSet& outputs) {
  const auto records = load(o, diag);
  const auto format = parse_report_format(o.format);
  auto diags = group_diagnostics(records, {o.exclude_same_family});
  std::size_t with_gap = 0, positive = 0;
  for (auto& d : diags) {
    d.decomposition.reset();
    d.validity.reset();
    d.proxy_counts.reset();
    if (d.entropy && d.entropy->gap) {
      ++with_gap;
      if (*d.entropy->gap > 0.0) ++positive;
    }
  }
  auto text = render(make_report({}, std::move(diags), o.alpha), format);
  if (format == ReportFormat::kStructured) {
    text += json{{"kind", "entropy_summary"}, {"groups_with_gap", with_gap}, {"positive_gaps", positive}}.dump() + "\n";
  } else if (format == ReportFormat::kTable) {
    text += fmt::format("\npositive entropy gaps: {}/{}\n", positive, with_gap);
  }
  outputs.add(o.out, text);
}

void cmd_fixtures(const Options& o, OutputSet& outputs) {
  const auto format = parse_report_format(o.format);
  if (o.table == "entropy") {
    const auto rows = entropy_gap_fixture();
    std::string text;
    if (format == ReportFormat::kStructured) {
      for (const auto& r : rows)
        text += json{{"kind", "entropy_gap"},  {"dataset", r.dataset},   {"n", r.n},
                     {"positive", r.positive}, {"negative", r.negative}, {"pct_positive", r.pct_positive},
                     {"mean_gap", r.mean_gap}}
                    .dump() +
                "\n";
    } else {
      const bool csv = format == ReportFormat::kDelimited;
      text +=
          csv ? "dataset,n,positive,negative,pct_positive,mean_gap\n"
              : fmt::format("{:<14} {:>4} {:>4} {:>4} {:>7} {:>9}\n", "dataset", "N", "pos", "neg", "%pos", "mean gap");
      for (const auto& r : rows)
        text += csv ? fmt::format("{},{},{},{},{},{:.3f}\n", r.dataset, r.n, r.positive, r.negative,
                                  format_percent(100.0 * r.positive / r.n), r.mean_gap)
                    : fmt::format("{:<14} {:>4} {:>4} {:>4} {:>7} {:>9.3f}\n", r.dataset, r.n, r.positive, r.negative,
                                  format_percent(100.0 * r.positive / r.n), r.mean_gap);
    }
    outputs.add(o.out, text);
    return;
  }
  std::vector<PublishedRow> rows;
  if (o.table == "ilsp")
    rows = ilsp_summary_fixture();
  else if (o.table == "cot")
    rows = cot_summary_fixture();
  else
    throw Error(ErrorCode::kConfig, fmt::format("unknown fixture table '{}'", o.table));
  const auto result_rows = to_result_rows(rows);
  auto text = render(make_report(result_rows, {}, o.alpha), format);
  if (format == ReportFormat::kTable) {
    const auto v = aggregate(result_rows, o.alpha).variants;
    text += "\nheadline reduction readings\n";
    text += fmt::format("  mean |RelDelta|                 {}\n", format_percent(v.mean_abs_rel_delta));
    text += fmt::format("  mean RelDelta                   {}\n", format_percent(v.mean_rel_delta));
    text += fmt::format("  mean RelDelta floored at -100   {}\n", format_percent(v.mean_rel_delta_capped));
    text += fmt::format("  mean of dataset means           {}\n", format_percent(v.mean_of_dataset_means));
    text += fmt::format("  rows with ILSP_upd <= 0         {}/{}\n", v.n_rows_nonpositive_upd, result_rows.size());
  }
  outputs.add(o.out, text);
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kTemplate: return kConfigError;
    case ErrorCode::kIngestion:
    case ErrorCode::kInvalidRecord: return kIngestionError;
    case ErrorCode::kCollection: return kCollectionError;
    case ErrorCode::kDegenerateStatistic:
    case ErrorCode::kEmptyInput: return kDegenerateStatistics;
    default: return kFailure;
  }
}

void add_records_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--records", o.records, "Line-delimited record files")->required()->check(CLI::ExistingFile);
  cmd->add_option("--max-reject-fraction", o.max_reject_fraction,
                  "Share of lines that may fail validation before ingestion aborts")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_flag("--exclude-same-family", o.exclude_same_family, "Drop proxies from the judge's model family");
}

void add_output_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--out", o.out, "Output path (default: standard output)");
  cmd->add_option("--format", o.format, "table, delimited or structured")
      ->check(CLI::IsMember({"table", "delimited", "csv", "structured", "jsonl"}));
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Diagnostics diag(err);
  Options o;
  CLI::App app{"Self-preference audit toolkit"};
  app.require_subcommand(1, 1);
  app.add_option("--log-level", o.log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  auto* audit_cmd = app.add_subcommand("audit", "Paired self-vs-proxy test per dataset and judge");
  add_records_options(audit_cmd, o);
  add_output_options(audit_cmd, o);
  audit_cmd->add_option("--alpha", o.alpha, "Significance level");
  audit_cmd->add_option("--y-cell", o.y_cell, "Outcome cell to test: 0, 1 or all");
  audit_cmd->add_flag("--no-diagnostics", o.no_diagnostics, "Omit per-group diagnostics");

  auto* sim_cmd = app.add_subcommand("simulate", "Generate synthetic records or run a recovery experiment");
  add_output_options(sim_cmd, o);
  sim_cmd->add_option("--n", o.sim.n_examples, "Examples per group");
  sim_cmd->add_option("--beta", o.sim.beta, "Self-preference shift on the logit scale");
  sim_cmd->add_option("--seed", o.sim.seed, "Random seed");
  sim_cmd->add_option("--trials", o.trials, "Recovery trials (0: emit records)");
  sim_cmd->add_option("--alpha", o.alpha, "Significance level for recovery trials");
  sim_cmd->add_option("--judge-acc", o.sim.judge_acc, "P(judge's response is better)");
  sim_cmd->add_option("--proxies", o.sim.n_proxies, "Proxy models per group");
  sim_cmd->add_option("--proxy-acc", o.sim.proxy_acc, "Per-proxy accuracy");
  sim_cmd->add_option("--noise-sd", o.sim.noise_sd, "Logit noise standard deviation");
  sim_cmd->add_option("--base-quality", o.sim.base_quality, "Logit offset of the better response");
  sim_cmd->add_flag("--shared-noise", o.sim.shared_noise, "One noise draw per example");
  sim_cmd->add_flag("--independent-proxy-outcomes", o.sim.independent_proxy_outcomes,
                    "Draw proxy outcomes from their own accuracy");
  sim_cmd->add_option("--groups", o.groups, "Independent judges to simulate");
  sim_cmd->add_option("--dataset", o.sim.dataset, "Dataset name");

  auto* collect_cmd = app.add_subcommand("collect", "Query a judge endpoint for vote probabilities");
  collect_cmd->add_option("--pairs", o.pairs, "Line-delimited pair tasks")->required()->check(CLI::ExistingFile);
  collect_cmd->add_option("--endpoint-url", o.endpoint_url, "Chat completions URL")->required();
  collect_cmd->add_option("--template", o.template_name, "Built-in prompt template")
      ->required()
      ->check(CLI::IsMember(builtin_template_names()));
  collect_cmd->add_option("--out", o.out, "Record output path")->required();
  collect_cmd->add_option("--failures", o.failures, "Failure sidecar path (default: <out>.failures.jsonl)");
  collect_cmd->add_option("--model", o.collector.model, "Model name sent to the endpoint (default: judge id)");
  collect_cmd->add_option("--max-in-flight", o.collector.max_in_flight, "Concurrent requests")
      ->check(CLI::PositiveNumber);
  collect_cmd->add_option("--max-retries", o.collector.retry.max_retries, "Retries per request")
      ->check(CLI::NonNegativeNumber);
  collect_cmd->add_option("--cot-max-tokens", o.collector.cot_max_tokens, "Token budget for reasoning templates");
  collect_cmd->add_option("--top-logprobs", o.collector.top_logprobs, "Alternatives requested per token");
  collect_cmd->add_option("--timeout", o.timeout_s, "Request timeout in seconds")->check(CLI::PositiveNumber);
  collect_cmd->add_option("--api-key-env", o.api_key_env, "Environment variable holding the API key");

  auto* validity_cmd = app.add_subcommand("validate-proxies", "Proxy winrates and proxy-count strata per group");
  add_records_options(validity_cmd, o);
  add_output_options(validity_cmd, o);

  auto* entropy_cmd = app.add_subcommand("entropy", "Vote entropy on hard and easy examples per group");
  add_records_options(entropy_cmd, o);
  add_output_options(entropy_cmd, o);

  auto* fixtures_cmd = app.add_subcommand("fixtures", "Render the bundled published tables");
  add_output_options(fixtures_cmd, o);
  fixtures_cmd->add_option("--table", o.table, "ilsp, cot or entropy")
      ->check(CLI::IsMember({"ilsp", "cot", "entropy"}));
  fixtures_cmd->add_option("--alpha", o.alpha, "Significance level");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    diag.error("config", kConfigError, e.what());
    return kConfigError;
  }

  spdlog::set_level(spdlog::level::from_str(o.log_level));
  OutputSet outputs(out);
  try {
    if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw Error(ErrorCode::kConfig, "--alpha must lie in (0, 1)");
    if (*audit_cmd)
      cmd_audit(o, diag, outputs);
    else if (*sim_cmd)
      cmd_simulate(o, outputs);
    else if (*collect_cmd)
      cmd_collect(o, diag, outputs);
    else if (*validity_cmd)
      cmd_validate_proxies(o, diag, outputs);
    else if (*entropy_cmd)
      cmd_entropy(o, diag, outputs);
    else if (*fixtures_cmd)
      cmd_fixtures(o, outputs);
    outputs.commit();
  } catch (const IngestError& e) {
    for (const auto& r : e.rejections())
      diag.warning("rejection",
                   {{"path", r.path}, {"line", r.line}, {"code", to_string(r.code)}, {"reason", r.reason}});
    diag.error(to_string(e.code()), kIngestionError, e.what());
    return kIngestionError;
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    diag.error(to_string(e.code()), code, e.what());
    return code;
  } catch (const std::exception& e) {
    diag.error("internal", kFailure, e.what());
    return kFailure;
  }
  return kOk;
}

int run(int argc, const char* const* argv) { return run(argc, argv, std::cout, std::cerr); }

}  // namespace selfpref::cli
