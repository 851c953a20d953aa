#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include "ppknn/records.hpp"

namespace ppknn::oracle {

/// Which entry wins when comparison keys tie.
enum class TieRule {
  first_index,        // earliest occurrence wins
  smallest_class_id,  // smallest label value wins
};

struct OracleConfig {
  TieRule distance_tie = TieRule::first_index;
  TieRule majority_tie = TieRule::smallest_class_id;
  unsigned l = 32;
};

/// Least-significant-first bits of x, exactly bit_count of them.
/// Requires 0 <= x < 2^bit_count.
std::vector<int> binary_decompose(uint64_t x, unsigned bit_count);

uint64_t recompose_bits(std::span<const int> bits);

/// Sum of squared coordinate differences. Vectors must have equal length.
uint64_t squared_distance(std::span<const uint64_t> x, std::span<const uint64_t> y);

/// Minimum with its payload; ties keep the first occurrence.
std::pair<uint64_t, uint64_t> min_n_plain(
    std::span<const std::pair<uint64_t, uint64_t>> entries);

/// Most frequent label among [0, class_count); frequency ties resolve to the
/// smallest label.
uint64_t majority_label_plain(std::span<const uint64_t> labels, unsigned class_count);

/// Reference k-NN classification: majority label over the k records nearest
/// to the query, with the configured tie rules.
uint64_t knn_classify_plain(std::span<const PlainRecord> records,
                            std::span<const uint64_t> query, unsigned k,
                            const OracleConfig& config = {});

/// Every label reachable by some tie-consistent choice of the k nearest
/// records (the boundary distance group may be filled in any combination).
std::set<uint64_t> knn_achievable_labels(std::span<const PlainRecord> records,
                                         std::span<const uint64_t> query, unsigned k,
                                         const OracleConfig& config = {});

}  // namespace ppknn::oracle
