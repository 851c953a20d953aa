#include "ppknn/oracle.hpp"

#include <algorithm>
#include <functional>
#include <map>

#include "ppknn/errors.hpp"

namespace ppknn::oracle {

std::vector<int> binary_decompose(uint64_t x, unsigned bit_count) {
  if (bit_count == 0 || bit_count > 63) {
    fail(Errc::dimension_error, "bit count outside [1, 63]");
  }
  if (x >= (uint64_t{1} << bit_count)) {
    fail(Errc::attribute_out_of_range, "value does not fit the bit count");
  }
  std::vector<int> bits(bit_count);
  for (unsigned i = 0; i < bit_count; ++i) {
    bits[i] = static_cast<int>(x % 2);
    x /= 2;
  }
  return bits;
}

uint64_t recompose_bits(std::span<const int> bits) {
  uint64_t value = 0;
  for (size_t i = bits.size(); i-- > 0;) {
    value = value * 2 + static_cast<uint64_t>(bits[i]);
  }
  return value;
}

uint64_t squared_distance(std::span<const uint64_t> x, std::span<const uint64_t> y) {
  if (x.size() != y.size()) fail(Errc::dimension_error, "vectors of different length");
  uint64_t total = 0;
  for (size_t j = 0; j < x.size(); ++j) {
    uint64_t diff = x[j] > y[j] ? x[j] - y[j] : y[j] - x[j];
    total += diff * diff;
  }
  return total;
}

std::pair<uint64_t, uint64_t> min_n_plain(
    std::span<const std::pair<uint64_t, uint64_t>> entries) {
  if (entries.empty()) fail(Errc::empty_input, "minimum over an empty list");
  std::pair<uint64_t, uint64_t> best = entries.front();
  for (const auto& entry : entries.subspan(1)) {
    if (entry.first < best.first) best = entry;
  }
  return best;
}

uint64_t majority_label_plain(std::span<const uint64_t> labels, unsigned class_count) {
  if (labels.empty()) fail(Errc::empty_input, "majority over an empty list");
  std::vector<uint64_t> counts(class_count, 0);
  for (uint64_t label : labels) {
    if (label >= class_count) fail(Errc::w_out_of_range, "label outside the class set");
    ++counts[label];
  }
  uint64_t best = 0;
  for (unsigned c = 1; c < class_count; ++c) {
    if (counts[c] > counts[best]) best = c;  // ties keep the smaller id
  }
  return best;
}

namespace {

struct Neighbor {
  uint64_t distance;
  size_t index;
};

std::vector<Neighbor> distances_to(std::span<const PlainRecord> records,
                                   std::span<const uint64_t> query) {
  std::vector<Neighbor> out;
  out.reserve(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    out.push_back({squared_distance(records[i].attributes, query), i});
  }
  return out;
}

unsigned class_count_of(std::span<const PlainRecord> records) {
  uint64_t max_label = 0;
  for (const PlainRecord& r : records) max_label = std::max(max_label, r.label);
  return static_cast<unsigned>(max_label) + 1;
}

}  // namespace

uint64_t knn_classify_plain(std::span<const PlainRecord> records,
                            std::span<const uint64_t> query, unsigned k,
                            const OracleConfig& config) {
  if (k == 0 || k > records.size()) fail(Errc::k_out_of_range, "need 1 <= k <= n");

  // Selection by repeated minimum extraction, mirroring the protocol's
  // k extraction rounds.
  std::vector<Neighbor> pool = distances_to(records, query);
  std::vector<uint64_t> labels;
  labels.reserve(k);
  for (unsigned round = 0; round < k; ++round) {
    size_t best = 0;
    for (size_t i = 1; i < pool.size(); ++i) {
      bool closer = pool[i].distance < pool[best].distance;
      if (!closer && pool[i].distance == pool[best].distance &&
          config.distance_tie == TieRule::smallest_class_id) {
        closer = records[pool[i].index].label < records[pool[best].index].label;
      }
      if (closer) best = i;
    }
    labels.push_back(records[pool[best].index].label);
    pool.erase(pool.begin() + static_cast<ptrdiff_t>(best));
  }

  if (config.majority_tie == TieRule::first_index) {
    std::map<uint64_t, unsigned> counts;
    for (uint64_t label : labels) ++counts[label];
    uint64_t best = labels.front();
    for (uint64_t label : labels) {
      if (counts[label] > counts[best]) best = label;
    }
    return best;
  }
  return majority_label_plain(labels, class_count_of(records));
}

std::set<uint64_t> knn_achievable_labels(std::span<const PlainRecord> records,
                                         std::span<const uint64_t> query, unsigned k,
                                         const OracleConfig& config) {
  if (k == 0 || k > records.size()) fail(Errc::k_out_of_range, "need 1 <= k <= n");

  std::vector<Neighbor> sorted = distances_to(records, query);
  std::stable_sort(sorted.begin(), sorted.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance;
  });

  // Records strictly inside the k-th distance are always chosen; the boundary
  // distance group may contribute any combination of the remaining slots.
  uint64_t boundary = sorted[k - 1].distance;
  std::vector<uint64_t> fixed_labels;
  std::vector<uint64_t> boundary_labels;
  for (const Neighbor& nb : sorted) {
    if (nb.distance < boundary) {
      fixed_labels.push_back(records[nb.index].label);
    } else if (nb.distance == boundary) {
      boundary_labels.push_back(records[nb.index].label);
    }
  }
  size_t slots = k - fixed_labels.size();

  // Enumerate how many boundary records of each label fill the open slots.
  std::map<uint64_t, size_t> boundary_by_label;
  for (uint64_t label : boundary_labels) ++boundary_by_label[label];
  std::vector<std::pair<uint64_t, size_t>> groups(boundary_by_label.begin(),
                                                  boundary_by_label.end());

  (void)config;
  std::set<uint64_t> achievable;
  unsigned classes = class_count_of(records);
  std::vector<uint64_t> working = fixed_labels;
  std::function<void(size_t, size_t)> enumerate = [&](size_t group, size_t remaining) {
    if (group == groups.size()) {
      if (remaining == 0) achievable.insert(majority_label_plain(working, classes));
      return;
    }
    size_t limit = std::min(remaining, groups[group].second);
    for (size_t take = 0; take <= limit; ++take) {
      for (size_t i = 0; i < take; ++i) working.push_back(groups[group].first);
      enumerate(group + 1, remaining - take);
      working.resize(working.size() - take);
    }
  };
  enumerate(0, slots);
  return achievable;
}

}  // namespace ppknn::oracle
