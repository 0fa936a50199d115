#include "storsim/memory.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <string>

namespace storsim {

std::vector<MemoryRecord> MemoryStore::recent(std::size_t n,
                                              std::uint8_t tag_mask) const {
  std::vector<MemoryRecord> out;
  for (auto it = records_.rbegin(); it != records_.rend() && out.size() < n;
       ++it) {
    if (tag_mask == 0 || (it->tags & tag_mask) != 0) out.push_back(*it);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

namespace {

std::set<std::string> tokenize(const std::string& text) {
  std::set<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      current.push_back(
          static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!current.empty()) {
      tokens.insert(current);
      current.clear();
    }
  }
  if (!current.empty()) tokens.insert(current);
  return tokens;
}

}  // namespace

double token_set_cosine(const std::string& a, const std::string& b) {
  auto ta = tokenize(a);
  auto tb = tokenize(b);
  if (ta.empty() || tb.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& t : ta) {
    if (tb.count(t)) ++common;
  }
  return static_cast<double>(common) /
         std::sqrt(static_cast<double>(ta.size()) *
                   static_cast<double>(tb.size()));
}

double memory_score(const MemoryRecord& record, const std::string& query,
                    SimTime now, const RetrievalParams& params) {
  double age_hours =
      std::max(0.0, static_cast<double>(now - record.timestamp) / 60.0);
  double recency = std::exp2(-age_hours / params.recency_halflife_hours);
  double relevance = token_set_cosine(query, record.text);
  return params.lambda_recency * recency + params.lambda_relevance * relevance;
}

std::vector<MemoryRecord> retrieve_memories(const MemoryStore& store,
                                            const std::string& query,
                                            std::size_t k, SimTime now,
                                            const RetrievalParams& params) {
  const auto& records = store.records();
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> scores(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    scores[i] = memory_score(records[i], query, now, params);

  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (scores[a] != scores[b]) return scores[a] > scores[b];
                     if (records[a].timestamp != records[b].timestamp)
                       return records[a].timestamp > records[b].timestamp;
                     return a > b;  // later insertion wins ties
                   });

  if (k < order.size()) order.resize(k);
  std::vector<MemoryRecord> out;
  out.reserve(order.size());
  for (std::size_t i : order) out.push_back(records[i]);
  return out;
}

}  // namespace storsim
