#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "storsim/sim_time.hpp"

namespace storsim {

enum class MemoryTag : std::uint8_t {
  formative = 1 << 0,
  observation = 1 << 1,
  platform = 1 << 2,
  survey = 1 << 3,
};

inline std::uint8_t operator|(MemoryTag a, MemoryTag b) {
  return static_cast<std::uint8_t>(a) | static_cast<std::uint8_t>(b);
}

struct MemoryRecord {
  SimTime timestamp = 0;
  std::string text;
  std::uint8_t tags = 0;
  double importance = 0.0;  // reserved; unused by the default scorer

  bool has_tag(MemoryTag t) const {
    return (tags & static_cast<std::uint8_t>(t)) != 0;
  }
};

/// Append-only memory store. Records are never mutated or removed during a
/// run; insertion order is part of the retrieval tie-break contract.
class MemoryStore {
 public:
  void append(MemoryRecord record) { records_.push_back(std::move(record)); }
  const std::vector<MemoryRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  /// The most recent n records carrying any of `tag_mask` (0 = any), oldest
  /// first.
  std::vector<MemoryRecord> recent(std::size_t n, std::uint8_t tag_mask = 0) const;

 private:
  std::vector<MemoryRecord> records_;
};

struct RetrievalParams {
  double lambda_recency = 0.25;
  double lambda_relevance = 1.0;
  double recency_halflife_hours = 24.0;
};

/// Recency+relevance score of one record against a query at time `now`:
///   lambda_rec * 2^(-age_hours/halflife) + lambda_rel * token_set_cosine.
double memory_score(const MemoryRecord& record, const std::string& query,
                    SimTime now, const RetrievalParams& params = {});

/// Top-k records by score; ties broken by newer timestamp, then later
/// insertion. Deterministic.
std::vector<MemoryRecord> retrieve_memories(const MemoryStore& store,
                                            const std::string& query,
                                            std::size_t k, SimTime now,
                                            const RetrievalParams& params = {});

/// Lowercased alphanumeric token set cosine similarity, the default lexical
/// relevance measure.
double token_set_cosine(const std::string& a, const std::string& b);

}  // namespace storsim
