#include "selfpref/records.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "selfpref/error.hpp"

namespace selfpref {
namespace {

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

void require_model(const ModelId& model, const char* role) {
  if (model.id.empty()) throw Error(ErrorCode::kInvalidRecord, fmt::format("{} id is empty", role));
  if (model.family.empty())
    throw Error(ErrorCode::kInvalidRecord, fmt::format("{} '{}' has no family tag", role, model.id));
}

}  // namespace

double positional_average(double p_first, double p_second) {
  if (!is_probability(p_first) || !is_probability(p_second))
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("positional_average: inputs must lie in [0,1], got ({}, {})", p_first, p_second));
  return (p_first + p_second) / 2.0;
}

EvalRecord make_record(QueryKey query, ModelId judge, ModelId reference, ModelId subject,
                       std::optional<double> p_subject_first, std::optional<double> p_subject_second, int outcome) {
  if (query.dataset.empty() || query.example_id.empty())
    throw Error(ErrorCode::kInvalidRecord, "dataset and example_id must be non-empty");
  require_model(judge, "judge");
  require_model(reference, "reference");
  require_model(subject, "subject");
  if (outcome != 0 && outcome != 1)
    throw Error(ErrorCode::kInvalidRecord, fmt::format("outcome must be 0 or 1, got {}", outcome));
  for (const auto& p : {p_subject_first, p_subject_second}) {
    if (p && !is_probability(*p))
      throw Error(ErrorCode::kInvalidRecord, fmt::format("probability {} outside [0,1]", *p));
  }

  EvalRecord record;
  if (p_subject_first && p_subject_second) {
    record.s = positional_average(*p_subject_first, *p_subject_second);
  } else if (p_subject_first) {
    record.s = *p_subject_first;
  } else if (p_subject_second) {
    record.s = *p_subject_second;
  } else {
    throw Error(ErrorCode::kInvalidRecord, "record has neither p_subject_first nor p_subject_second");
  }
  record.query = std::move(query);
  record.judge = std::move(judge);
  record.reference = std::move(reference);
  record.subject = std::move(subject);
  record.p_subject_first = p_subject_first;
  record.p_subject_second = p_subject_second;
  record.outcome = outcome;
  return record;
}

RecordKey key_of(const EvalRecord& record) {
  return {record.query, record.judge.id, record.reference.id, record.subject.id};
}

RecordSet::RecordSet(std::vector<EvalRecord> records, Provenance provenance)
    : records_(std::move(records)), provenance_(std::move(provenance)) {
  std::set<RecordKey> seen;
  for (const auto& record : records_) {
    if (!seen.insert(key_of(record)).second)
      throw Error(ErrorCode::kInvalidRecord,
                  fmt::format("duplicate record ({}/{}, judge={}, reference={}, subject={})", record.query.dataset,
                              record.query.example_id, record.judge.id, record.reference.id, record.subject.id));
  }
}

RecordSet merge(std::span<const RecordSet> sets) {
  std::vector<EvalRecord> all;
  Provenance provenance;
  for (const auto& set : sets) {
    all.insert(all.end(), set.begin(), set.end());
    const auto& sources = set.provenance().sources;
    provenance.sources.insert(provenance.sources.end(), sources.begin(), sources.end());
    if (provenance.ingested_at.empty()) provenance.ingested_at = set.provenance().ingested_at;
  }
  return RecordSet(std::move(all), std::move(provenance));
}

GroupKey group_of(const EvalRecord& record) { return {record.judge.id, record.reference.id, record.query.dataset}; }

std::vector<EvalRecord> RecordGroup::self_records() const {
  std::vector<EvalRecord> out(self[0]);
  out.insert(out.end(), self[1].begin(), self[1].end());
  return out;
}

std::vector<EvalRecord> RecordGroup::proxy_records() const {
  std::vector<EvalRecord> out(proxy[0]);
  out.insert(out.end(), proxy[1].begin(), proxy[1].end());
  return out;
}

std::size_t RecordGroup::size() const { return self[0].size() + self[1].size() + proxy[0].size() + proxy[1].size(); }

Partition partition(const RecordSet& records) {
  Partition groups;
  for (const auto& record : records) {
    auto key = group_of(record);
    auto& group = groups[key];
    group.key = std::move(key);
    auto& cells = record.is_self() ? group.self : group.proxy;
    cells[record.outcome].push_back(record);
  }
  return groups;
}

}  // namespace selfpref
