#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace selfpref {

struct ModelId {
  std::string id;
  std::string family;

  bool same_family(const ModelId& other) const { return family == other.family; }

  friend bool operator==(const ModelId&, const ModelId&) = default;
  friend auto operator<=>(const ModelId&, const ModelId&) = default;
};

struct QueryKey {
  std::string dataset;
  std::string example_id;

  friend bool operator==(const QueryKey&, const QueryKey&) = default;
  friend auto operator<=>(const QueryKey&, const QueryKey&) = default;
};

// One pairwise judgment. Probabilities are always "the subject wins"; the
// collector remaps vote tokens before a record is built.
struct EvalRecord {
  QueryKey query;
  ModelId judge;
  ModelId reference;
  ModelId subject;
  std::optional<double> p_subject_first;
  std::optional<double> p_subject_second;
  double s = 0.0;
  int outcome = 0;

  bool is_self() const { return subject.id == judge.id; }
  bool is_proxy() const { return !is_self(); }

  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

/// Builds a validated record; `s` is the positional average of the orders
/// present. Throws Error(kInvalidRecord) on any invariant violation.
EvalRecord make_record(QueryKey query, ModelId judge, ModelId reference, ModelId subject,
                       std::optional<double> p_subject_first, std::optional<double> p_subject_second, int outcome);

/// Mean of the two order-specific subject-win probabilities.
double positional_average(double p_first, double p_second);

struct Provenance {
  std::vector<std::string> sources;
  std::string ingested_at;
};

// Uniqueness key of a record: (query, judge, reference, subject).
struct RecordKey {
  QueryKey query;
  std::string judge;
  std::string reference;
  std::string subject;

  friend auto operator<=>(const RecordKey&, const RecordKey&) = default;
};

RecordKey key_of(const EvalRecord& record);

/// Immutable, duplicate-free collection of records.
class RecordSet {
 public:
  RecordSet() = default;
  /// Throws Error(kInvalidRecord) when two records share a RecordKey.
  explicit RecordSet(std::vector<EvalRecord> records, Provenance provenance = {});

  std::span<const EvalRecord> records() const { return records_; }
  const Provenance& provenance() const { return provenance_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  auto begin() const { return records_.cbegin(); }
  auto end() const { return records_.cend(); }

  /// Field-for-field comparison of the records; provenance is ignored.
  bool same_records(const RecordSet& other) const { return records_ == other.records_; }

 private:
  std::vector<EvalRecord> records_;
  Provenance provenance_;
};

/// Concatenates record sets; throws on cross-set duplicates.
RecordSet merge(std::span<const RecordSet> sets);

struct GroupKey {
  std::string judge;
  std::string reference;
  std::string dataset;

  friend bool operator==(const GroupKey&, const GroupKey&) = default;
  friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
};

GroupKey group_of(const EvalRecord& record);

// Records of one (judge, reference, dataset) group split by role and outcome.
struct RecordGroup {
  GroupKey key;
  std::vector<EvalRecord> self[2];
  std::vector<EvalRecord> proxy[2];

  std::vector<EvalRecord> self_records() const;
  std::vector<EvalRecord> proxy_records() const;
  std::size_t size() const;
};

using Partition = std::map<GroupKey, RecordGroup>;

Partition partition(const RecordSet& records);

}  // namespace selfpref
