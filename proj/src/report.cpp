#include "selfpref/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <json.hpp>
#include <sstream>

#include "selfpref/error.hpp"

namespace selfpref {
namespace {

using json = nlohmann::ordered_json;

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> get_opt(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

json to_json(const QualityTestResult& r) {
  json j;
  j["n"] = r.n;
  j["mean_delta"] = r.mean_delta;
  j["se"] = opt(r.se);
  j["t"] = opt(r.t);
  j["p"] = r.p;
  j["degenerate"] = r.degenerate;
  j["p_censored"] = r.p_censored;
  j["ilsp_orig"] = opt(r.ilsp_orig);
  j["ilsp_upd"] = opt(r.ilsp_upd);
  j["rel_delta"] = opt(r.rel_delta);
  return j;
}

QualityTestResult result_from_json(const json& j) {
  QualityTestResult r;
  r.n = j.at("n").get<std::size_t>();
  r.mean_delta = j.at("mean_delta").get<double>();
  r.se = get_opt(j, "se");
  r.t = get_opt(j, "t");
  r.p = j.at("p").get<double>();
  r.degenerate = j.at("degenerate").get<bool>();
  r.p_censored = j.at("p_censored").get<bool>();
  r.ilsp_orig = get_opt(j, "ilsp_orig");
  r.ilsp_upd = get_opt(j, "ilsp_upd");
  r.rel_delta = get_opt(j, "rel_delta");
  return r;
}

json to_json(const DecompositionSummary& d) {
  return {{"sp", d.sp},        {"acc", d.acc},       {"bias", d.bias},  {"ilsp", opt(d.ilsp)},
          {"lsp", opt(d.lsp)}, {"n_loss", d.n_loss}, {"n_win", d.n_win}};
}

DecompositionSummary decomposition_from_json(const json& j) {
  DecompositionSummary d;
  d.sp = j.at("sp").get<double>();
  d.acc = j.at("acc").get<double>();
  d.bias = j.at("bias").get<double>();
  d.ilsp = get_opt(j, "ilsp");
  d.lsp = get_opt(j, "lsp");
  d.n_loss = j.at("n_loss").get<std::size_t>();
  d.n_win = j.at("n_win").get<std::size_t>();
  return d;
}

json to_json(const ProxyValidity& v) {
  json counts = json::object();
  for (const auto& [k, c] : v.per_proxy_counts) counts[k] = c;
  json rates = json::object();
  for (const auto& [k, w] : v.per_proxy_winrate) rates[k] = w;
  return {{"judge_winrate", v.judge_winrate},
          {"weighted_proxy_winrate", v.weighted_proxy_winrate},
          {"per_proxy_counts", counts},
          {"per_proxy_winrate", rates}};
}

ProxyValidity validity_from_json(const json& j) {
  ProxyValidity v;
  v.judge_winrate = j.at("judge_winrate").get<double>();
  v.weighted_proxy_winrate = j.at("weighted_proxy_winrate").get<double>();
  for (const auto& [k, c] : j.at("per_proxy_counts").items()) v.per_proxy_counts[k] = c.get<std::size_t>();
  for (const auto& [k, w] : j.at("per_proxy_winrate").items()) v.per_proxy_winrate[k] = w.get<double>();
  return v;
}

json to_json(const EntropyReport& e) {
  return {{"h_self_loss", e.h_self_loss},
          {"h_proxy_loss", e.h_proxy_loss},
          {"h_self_win", opt(e.h_self_win)},
          {"gap", opt(e.gap)},
          {"n_loss", e.n_loss},
          {"n_win", e.n_win}};
}

EntropyReport entropy_from_json(const json& j) {
  EntropyReport e;
  e.h_self_loss = j.at("h_self_loss").get<double>();
  e.h_proxy_loss = j.at("h_proxy_loss").get<double>();
  e.h_self_win = get_opt(j, "h_self_win");
  e.gap = get_opt(j, "gap");
  e.n_loss = j.at("n_loss").get<std::size_t>();
  e.n_win = j.at("n_win").get<std::size_t>();
  return e;
}

json to_json(const ProxyCountProfile& p) {
  json strata = json::array();
  for (const auto& s : p.strata)
    strata.push_back({{"proxies", s.proxies},
                      {"n_exact", s.n_exact},
                      {"fraction_at_least", s.fraction_at_least},
                      {"mean_delta", opt(s.mean_delta)},
                      {"se", opt(s.se)}});
  return {{"strata", strata}, {"slope", opt(p.slope)}, {"slope_se", opt(p.slope_se)}};
}

ProxyCountProfile profile_from_json(const json& j) {
  ProxyCountProfile p;
  for (const auto& s : j.at("strata")) {
    ProxyCountStratum st;
    st.proxies = s.at("proxies").get<std::size_t>();
    st.n_exact = s.at("n_exact").get<std::size_t>();
    st.fraction_at_least = s.at("fraction_at_least").get<double>();
    st.mean_delta = get_opt(s, "mean_delta");
    st.se = get_opt(s, "se");
    p.strata.push_back(st);
  }
  p.slope = get_opt(j, "slope");
  p.slope_se = get_opt(j, "slope_se");
  return p;
}

template <class T, class F>
json opt_section(const std::optional<T>& v, F&& f) {
  return v ? f(*v) : json(nullptr);
}

std::string dash_or(const std::optional<double>& v) { return v ? format_percent(*v) : std::string("-"); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string opt_fixed(const std::optional<double>& v, int digits = 4) {
  return v ? fmt::format("{:.{}f}", *v, digits) : std::string("-");
}

void render_table(const AuditReport& report, std::string& out) {
  constexpr auto kRowFmt = "{:<16} {:<28} {:>10} {:>10} {:>7} {:>8} {:>9} {:>4}\n";
  out += fmt::format(kRowFmt, "dataset", "judge", "ILSP_orig", "ILSP_upd", "N", "RelDelta", "p", "sig");
  for (const auto& row : report.rows) {
    const auto& r = row.result;
    out += fmt::format(kRowFmt, row.dataset, row.judge, dash_or(r.ilsp_orig), dash_or(r.ilsp_upd), r.n,
                       dash_or(r.rel_delta), format_p(r.p, r.p_censored), r.significant(report.alpha) ? "*" : "");
  }
  if (!report.rows.empty()) {
    out += fmt::format("\nsignificant at p < {}: {}/{} ({}%)\n", report.alpha, report.n_significant, report.rows.size(),
                       format_percent(100.0 * report.significance_fraction));
    out += "\nper-dataset mean RelDelta\n";
    for (const auto& agg : report.dataset_aggregates)
      out += fmt::format("  {:<16} {:>8}  rows={} significant={}\n", agg.dataset, dash_or(agg.mean_rel_delta),
                         agg.n_rows, agg.n_significant);
  }

  if (report.diagnostics.empty()) return;
  out += "\ndiagnostics\n";
  for (const auto& d : report.diagnostics) {
    out += fmt::format("  [{} / {} vs {}] self={} matched={} unmatched={}\n", d.dataset, d.judge, d.reference, d.n_self,
                       d.n_matched, d.n_unmatched);
    if (d.decomposition) {
      const auto& x = *d.decomposition;
      out += fmt::format("    SP={:.4f} Acc={:.4f} Bias={:.4f} ILSP={} LSP={}\n", x.sp, x.acc, x.bias,
                         opt_fixed(x.ilsp), opt_fixed(x.lsp));
    }
    if (d.validity)
      out += fmt::format("    judge winrate={:.4f} weighted proxy winrate={:.4f}\n", d.validity->judge_winrate,
                         d.validity->weighted_proxy_winrate);
    if (d.entropy)
      out += fmt::format("    H(self|Y=0)={:.4f} H(proxy|Y=0)={:.4f} H(self|Y=1)={} gap={}\n", d.entropy->h_self_loss,
                         d.entropy->h_proxy_loss, opt_fixed(d.entropy->h_self_win), opt_fixed(d.entropy->gap));
    if (d.proxy_counts) {
      for (const auto& s : d.proxy_counts->strata)
        out += fmt::format("    proxies={} n={} share>={:.3f} mean delta={} se={}\n", s.proxies, s.n_exact,
                           s.fraction_at_least, opt_fixed(s.mean_delta), opt_fixed(s.se));
      out += fmt::format("    slope={} se={}\n", opt_fixed(d.proxy_counts->slope), opt_fixed(d.proxy_counts->slope_se));
    }
  }
}

void render_delimited(const AuditReport& report, std::string& out) {
  out += "dataset,judge,ilsp_orig,ilsp_upd,n,rel_delta,mean_delta,t,p,significant\n";
  for (const auto& row : report.rows) {
    const auto& r = row.result;
    auto pct = [](const std::optional<double>& v) { return v ? format_percent(*v) : std::string(); };
    out += fmt::format("{},{},{},{},{},{},{:.6f},{},{},{}\n", csv_field(row.dataset), csv_field(row.judge),
                       pct(r.ilsp_orig), pct(r.ilsp_upd), r.n, pct(r.rel_delta), r.mean_delta,
                       r.t ? fmt::format("{:.4f}", *r.t) : std::string(), format_p(r.p, r.p_censored),
                       r.significant(report.alpha) ? 1 : 0);
  }
}

void render_structured(const AuditReport& report, std::string& out) {
  json header{{"kind", "header"},
              {"alpha", report.alpha},
              {"n_rows", report.rows.size()},
              {"n_significant", report.n_significant},
              {"significance_fraction", report.significance_fraction}};
  out += header.dump() + "\n";
  for (const auto& row : report.rows) {
    json j{{"kind", "row"}, {"dataset", row.dataset}, {"judge", row.judge}};
    j["result"] = to_json(row.result);
    out += j.dump() + "\n";
  }
  for (const auto& agg : report.dataset_aggregates) {
    json j{{"kind", "aggregate"},
           {"dataset", agg.dataset},
           {"n_rows", agg.n_rows},
           {"mean_rel_delta", opt(agg.mean_rel_delta)},
           {"n_significant", agg.n_significant}};
    out += j.dump() + "\n";
  }
  for (const auto& d : report.diagnostics) {
    json j{{"kind", "diagnostics"},       {"dataset", d.dataset}, {"judge", d.judge},
           {"reference", d.reference},    {"n_self", d.n_self},   {"n_matched", d.n_matched},
           {"n_unmatched", d.n_unmatched}};
    j["decomposition"] = opt_section(d.decomposition, [](const auto& x) { return to_json(x); });
    j["validity"] = opt_section(d.validity, [](const auto& x) { return to_json(x); });
    j["entropy"] = opt_section(d.entropy, [](const auto& x) { return to_json(x); });
    j["proxy_counts"] = opt_section(d.proxy_counts, [](const auto& x) { return to_json(x); });
    out += j.dump() + "\n";
  }
}

}  // namespace

AuditReport make_report(std::vector<ResultRow> rows, std::vector<GroupDiagnostics> diagnostics, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must lie in (0, 1)");
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.dataset, a.judge) < std::tie(b.dataset, b.judge);
  });
  std::stable_sort(diagnostics.begin(), diagnostics.end(), [](const auto& a, const auto& b) {
    return std::tie(a.dataset, a.judge, a.reference) < std::tie(b.dataset, b.judge, b.reference);
  });
  AuditReport report;
  report.alpha = alpha;
  const auto summary = aggregate(rows, alpha);
  report.dataset_aggregates = summary.datasets;
  report.n_significant = summary.n_significant;
  report.significance_fraction = summary.significance_fraction;
  report.rows = std::move(rows);
  report.diagnostics = std::move(diagnostics);
  return report;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "table") return ReportFormat::kTable;
  if (name == "delimited" || name == "csv") return ReportFormat::kDelimited;
  if (name == "structured" || name == "jsonl") return ReportFormat::kStructured;
  throw Error(ErrorCode::kConfig, fmt::format("unknown report format '{}'", name));
}

std::string render(const AuditReport& report, ReportFormat format) {
  std::string out;
  switch (format) {
    case ReportFormat::kTable: render_table(report, out); break;
    case ReportFormat::kDelimited: render_delimited(report, out); break;
    case ReportFormat::kStructured: render_structured(report, out); break;
  }
  return out;
}

AuditReport parse_structured(std::string_view text) {
  AuditReport report;
  bool have_header = false;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto j = json::parse(line);
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "header") {
        report.alpha = j.at("alpha").get<double>();
        report.n_significant = j.at("n_significant").get<std::size_t>();
        report.significance_fraction = j.at("significance_fraction").get<double>();
        have_header = true;
      } else if (kind == "row") {
        report.rows.push_back(
            {j.at("dataset").get<std::string>(), j.at("judge").get<std::string>(), result_from_json(j.at("result"))});
      } else if (kind == "aggregate") {
        report.dataset_aggregates.push_back({j.at("dataset").get<std::string>(), j.at("n_rows").get<std::size_t>(),
                                             get_opt(j, "mean_rel_delta"), j.at("n_significant").get<std::size_t>()});
      } else if (kind == "diagnostics") {
        GroupDiagnostics d;
        d.dataset = j.at("dataset").get<std::string>();
        d.judge = j.at("judge").get<std::string>();
        d.reference = j.at("reference").get<std::string>();
        d.n_self = j.at("n_self").get<std::size_t>();
        d.n_matched = j.at("n_matched").get<std::size_t>();
        d.n_unmatched = j.at("n_unmatched").get<std::size_t>();
        if (!j.at("decomposition").is_null()) d.decomposition = decomposition_from_json(j.at("decomposition"));
        if (!j.at("validity").is_null()) d.validity = validity_from_json(j.at("validity"));
        if (!j.at("entropy").is_null()) d.entropy = entropy_from_json(j.at("entropy"));
        if (!j.at("proxy_counts").is_null()) d.proxy_counts = profile_from_json(j.at("proxy_counts"));
        report.diagnostics.push_back(std::move(d));
      }
      // Other kinds are extra sections that carry no report state.
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("line {}: {}", line_no, e.what()));
  }
  if (!have_header) throw Error(ErrorCode::kInvalidArgument, "structured report has no header line");
  return report;
}

std::string format_percent(double value) {
  auto s = fmt::format("{:.1f}", value);
  if (s == "-0.0") s = "0.0";
  return s;
}

std::string format_p(double p, bool censored) {
  if (censored || p < 1e-4) return "<10^-4";
  return fmt::format("{:#.3g}", p);
}

}  // namespace selfpref
