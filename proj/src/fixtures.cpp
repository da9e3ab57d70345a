#include "selfpref/fixtures.hpp"

#include <fmt/format.h>

#include <charconv>
#include <sstream>

#include "selfpref/error.hpp"
#include "selfpref_fixture_data.hpp"

namespace selfpref {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorCode::kFixture, fmt::format("line {}: '{}' is not a number", line_no, s));
  return v;
}

std::size_t to_count(const std::string& s, std::size_t line_no) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorCode::kFixture, fmt::format("line {}: '{}' is not a count", line_no, s));
  return v;
}

// Calls f(fields, line_no) for every data line, after checking the header.
template <class F>
void for_each_row(const std::string& csv, const std::string& header, F&& f) {
  std::istringstream in(csv);
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  const auto width = split(header).size();
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!seen_header) {
      if (line != header)
        throw Error(ErrorCode::kFixture, fmt::format("line {}: expected header '{}'", line_no, header));
      seen_header = true;
      continue;
    }
    auto fields = split(line);
    if (fields.size() != width)
      throw Error(ErrorCode::kFixture,
                  fmt::format("line {}: expected {} fields, got {}", line_no, width, fields.size()));
    f(fields, line_no);
  }
  if (!seen_header) throw Error(ErrorCode::kFixture, "fixture has no header line");
}

}  // namespace

std::vector<PublishedRow> parse_published_rows(const std::string& csv) {
  std::vector<PublishedRow> rows;
  for_each_row(csv, "dataset,model,ilsp_orig,ilsp_upd,n,rel_delta,p,bold", [&](const auto& f, std::size_t ln) {
    PublishedRow r;
    r.dataset = f[0];
    r.model = f[1];
    r.ilsp_orig = to_double(f[2], ln);
    r.ilsp_upd = to_double(f[3], ln);
    r.n = to_count(f[4], ln);
    r.rel_delta_printed = to_double(f[5], ln);
    if (f[6].starts_with("<")) {
      r.p = to_double(f[6].substr(1), ln);
      r.p_censored = true;
    } else {
      r.p = to_double(f[6], ln);
    }
    if (f[7] != "0" && f[7] != "1") throw Error(ErrorCode::kFixture, fmt::format("line {}: bold must be 0 or 1", ln));
    r.bold = f[7] == "1";
    rows.push_back(std::move(r));
  });
  return rows;
}

std::vector<EntropyGapRow> parse_entropy_gap_rows(const std::string& csv) {
  std::vector<EntropyGapRow> rows;
  for_each_row(csv, "dataset,n,pos,neg,pct_pos,mean_gap", [&](const auto& f, std::size_t ln) {
    EntropyGapRow r;
    r.dataset = f[0];
    r.n = to_count(f[1], ln);
    r.positive = to_count(f[2], ln);
    r.negative = to_count(f[3], ln);
    r.pct_positive = to_double(f[4], ln);
    r.mean_gap = to_double(f[5], ln);
    rows.push_back(std::move(r));
  });
  return rows;
}

std::vector<PublishedRow> ilsp_summary_fixture() { return parse_published_rows(fixture_data::kIlspSummary); }
std::vector<PublishedRow> cot_summary_fixture() { return parse_published_rows(fixture_data::kCotSummary); }
std::vector<EntropyGapRow> entropy_gap_fixture() { return parse_entropy_gap_rows(fixture_data::kEntropyGap); }

std::vector<ResultRow> to_result_rows(const std::vector<PublishedRow>& rows) {
  std::vector<ResultRow> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    QualityTestResult q;
    q.n = r.n;
    q.p = r.p;
    q.p_censored = r.p_censored;
    q.ilsp_orig = r.ilsp_orig;
    q.ilsp_upd = r.ilsp_upd;
    q.mean_delta = r.ilsp_upd / 100.0;
    if (r.ilsp_orig != 0.0) q.rel_delta = relative_delta(r.ilsp_orig, r.ilsp_upd);
    out.push_back({r.dataset, r.model, q});
  }
  return out;
}

}  // namespace selfpref
