#include <algorithm>
#include <map>
#include <random>

#include "doctest.h"
#include "ppknn/errors.hpp"
#include "ppknn/oracle.hpp"

using namespace ppknn;
using namespace ppknn::oracle;

namespace {

// Independent reference: full stable sort by (distance, index), then count.
uint64_t knn_by_sorting(const std::vector<PlainRecord>& records,
                        const std::vector<uint64_t>& query, unsigned k) {
  std::vector<std::pair<uint64_t, size_t>> order;
  for (size_t i = 0; i < records.size(); ++i) {
    order.push_back({squared_distance(records[i].attributes, query), i});
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::map<uint64_t, unsigned> counts;
  for (unsigned i = 0; i < k; ++i) ++counts[records[order[i].second].label];
  uint64_t best = 0;
  unsigned best_count = 0;
  for (auto [label, count] : counts) {
    if (count > best_count) {  // map iterates labels in increasing order
      best = label;
      best_count = count;
    }
  }
  return best;
}

std::vector<PlainRecord> make_records(std::mt19937_64& gen, size_t n, size_t m,
                                      unsigned w, uint64_t mask) {
  std::vector<PlainRecord> records(n);
  for (size_t i = 0; i < n; ++i) {
    records[i].attributes.resize(m);
    for (size_t j = 0; j < m; ++j) records[i].attributes[j] = gen() & mask;
    records[i].label = i < w ? i : gen() % w;
  }
  return records;
}

}  // namespace

TEST_CASE("binary_decompose follows the halving loop") {
  CHECK(binary_decompose(5, 3) == std::vector<int>{1, 0, 1});
  CHECK(binary_decompose(0, 4) == std::vector<int>{0, 0, 0, 0});
  CHECK(binary_decompose(15, 4) == std::vector<int>{1, 1, 1, 1});
  CHECK_THROWS_AS(binary_decompose(8, 3), Error);
  CHECK_THROWS_AS(binary_decompose(1, 0), Error);

  std::mt19937_64 gen(71);
  for (int t = 0; t < 64; ++t) {
    unsigned bits = 1 + gen() % 63;
    uint64_t x = gen() & ((bits == 63 ? ~uint64_t{0} >> 1 : (uint64_t{1} << bits) - 1));
    CHECK(recompose_bits(binary_decompose(x, bits)) == x);
  }
}

TEST_CASE("squared_distance") {
  std::vector<uint64_t> x = {1, 2, 3};
  CHECK(squared_distance(x, x) == 0);
  CHECK(squared_distance(std::vector<uint64_t>{0, 0}, std::vector<uint64_t>{3, 4}) == 25);
  CHECK_THROWS_AS(squared_distance(x, std::vector<uint64_t>{1}), Error);
}

TEST_CASE("min_n_plain") {
  using E = std::pair<uint64_t, uint64_t>;
  std::vector<E> values = {{7, 0}, {2, 1}, {9, 2}, {4, 3}};
  CHECK(min_n_plain(values) == E{2, 1});
  std::vector<E> single = {{5, 9}};
  CHECK(min_n_plain(single) == E{5, 9});
  std::vector<E> ties = {{3, 100}, {3, 200}};
  CHECK(min_n_plain(ties) == E{3, 100});
  std::vector<E> empty;
  CHECK_THROWS_AS(min_n_plain(empty), Error);
}

TEST_CASE("majority_label_plain") {
  CHECK(majority_label_plain(std::vector<uint64_t>{2, 2, 5}, 6) == 2);
  CHECK(majority_label_plain(std::vector<uint64_t>{4}, 5) == 4);
  CHECK(majority_label_plain(std::vector<uint64_t>{1, 1, 2, 2}, 3) == 1);  // tie rule
  CHECK_THROWS_AS(majority_label_plain(std::vector<uint64_t>{3}, 2), Error);
  CHECK_THROWS_AS(majority_label_plain(std::vector<uint64_t>{}, 2), Error);
}

TEST_CASE("knn_classify_plain basics") {
  std::vector<PlainRecord> records = {
      {{0, 0}, 0}, {{10, 0}, 1}, {{0, 10}, 1}, {{10, 10}, 2}, {{5, 5}, 2},
  };
  std::vector<uint64_t> query = {0, 0};
  CHECK(knn_classify_plain(records, query, 1) == 0);
  CHECK(knn_classify_plain(records, query, 5) == 1);  // global: two 1s, two 2s, one 0
  CHECK_THROWS_AS(knn_classify_plain(records, query, 0), Error);
  CHECK_THROWS_AS(knn_classify_plain(records, query, 6), Error);
}

TEST_CASE("knn_classify_plain agrees with an independent sort-based version") {
  std::mt19937_64 gen(72);
  for (int t = 0; t < 100; ++t) {
    size_t n = 4 + gen() % 12;
    std::vector<PlainRecord> records = make_records(gen, n, 3, 3, 0xf);  // ties likely
    std::vector<uint64_t> query = {gen() & 0xf, gen() & 0xf, gen() & 0xf};
    unsigned k = 1 + gen() % n;
    CHECK(knn_classify_plain(records, query, k) == knn_by_sorting(records, query, k));
  }
}

TEST_CASE("achievable labels cover boundary ties") {
  std::vector<PlainRecord> records = {
      {{0}, 0},   // distance 1 to query 1
      {{2}, 1},   // distance 1
      {{5}, 2},   // distance 16
  };
  std::vector<uint64_t> query = {1};
  // k=1: records 0 and 1 tie at the boundary; either label is achievable
  auto achievable = knn_achievable_labels(records, query, 1);
  CHECK(achievable == std::set<uint64_t>{0, 1});
  // k=2: both boundary records are taken; majority ties resolve to label 0
  achievable = knn_achievable_labels(records, query, 2);
  CHECK(achievable == std::set<uint64_t>{0});
  // k=3 adds the singleton class 2; counts 1,1,1 tie to the smallest id
  achievable = knn_achievable_labels(records, query, 3);
  CHECK(achievable == std::set<uint64_t>{0});

  // the classifier's answer is always achievable
  std::mt19937_64 gen(73);
  for (int t = 0; t < 50; ++t) {
    std::vector<PlainRecord> random_records = make_records(gen, 8, 2, 3, 0x7);
    std::vector<uint64_t> q = {gen() & 0x7, gen() & 0x7};
    unsigned k = 1 + gen() % 8;
    auto options = knn_achievable_labels(random_records, q, k);
    CHECK(options.contains(knn_classify_plain(random_records, q, k)));
  }
}
