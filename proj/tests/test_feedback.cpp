#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <vector>

#include "rade/feedback.hpp"

namespace {

rade::FeedbackSample sample(int id) {
  return {0, {static_cast<double>(id), 0.5}, id % 2 == 0, id};
}

std::vector<rade::FeedbackSample> samples(std::initializer_list<int> ids) {
  std::vector<rade::FeedbackSample> out;
  for (int id : ids) out.push_back(sample(id));
  return out;
}

}  // namespace

TEST_CASE("push evicts the oldest items once capacity is reached") {
  rade::FifoBuffer buf(3);
  buf = push_batch(std::move(buf), samples({1, 2}));
  buf = push_batch(std::move(buf), samples({3, 4}));
  CHECK(buf.snapshot() == samples({2, 3, 4}));

  rade::FifoBuffer fresh(3);
  fresh = push_batch(std::move(fresh), samples({1, 2, 3, 4, 5}));
  CHECK(fresh.snapshot() == samples({3, 4, 5}));
}

TEST_CASE("pushing an empty batch changes nothing") {
  rade::FifoBuffer buf(3);
  buf = push_batch(std::move(buf), samples({1, 2}));
  buf = push_batch(std::move(buf), samples({}));
  CHECK(buf.snapshot() == samples({1, 2}));
}

TEST_CASE("snapshots are ordered copies") {
  rade::FifoBuffer buf(8);
  CHECK(buf.snapshot().empty());
  buf = push_batch(std::move(buf), samples({1, 2, 3}));
  const std::vector<rade::FeedbackSample> first = buf.snapshot();
  CHECK(first == samples({1, 2, 3}));
  buf = push_batch(std::move(buf), samples({4}));
  CHECK(buf.snapshot() == samples({1, 2, 3, 4}));
  CHECK(first == samples({1, 2, 3}));  // the earlier copy is unaffected
}

TEST_CASE("capacity must be positive") {
  CHECK_THROWS_AS(rade::FifoBuffer(0), std::invalid_argument);
}

TEST_CASE("buffer contents match an unbounded list truncated to capacity") {
  std::mt19937_64 eng(20240229);
  for (int sequence = 0; sequence < 10000; ++sequence) {
    const std::size_t capacity = 1 + eng() % 16;
    rade::FifoBuffer buf(capacity);
    std::vector<rade::FeedbackSample> reference;
    int next_id = 0;

    const int pushes = 1 + static_cast<int>(eng() % 8);
    for (int p = 0; p < pushes; ++p) {
      std::vector<rade::FeedbackSample> batch;
      const int batch_size = static_cast<int>(eng() % 9);
      for (int i = 0; i < batch_size; ++i) batch.push_back(sample(next_id++));
      buf = push_batch(std::move(buf), batch);
      reference.insert(reference.end(), batch.begin(), batch.end());

      const std::size_t keep = std::min(reference.size(), capacity);
      const std::vector<rade::FeedbackSample> expected(reference.end() - keep, reference.end());
      REQUIRE(buf.snapshot() == expected);
      REQUIRE(buf.size() <= capacity);
    }
  }
}

TEST_CASE("every sample of the newest batch survives when it fits") {
  std::mt19937_64 eng(424242);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t capacity = 2 + eng() % 16;
    rade::FifoBuffer buf(capacity);
    int next_id = 0;
    for (int p = 0; p < 4; ++p) {
      std::vector<rade::FeedbackSample> batch;
      const std::size_t batch_size = eng() % (capacity + 1);
      for (std::size_t i = 0; i < batch_size; ++i) batch.push_back(sample(next_id++));
      buf = push_batch(std::move(buf), batch);
      const std::vector<rade::FeedbackSample> snap = buf.snapshot();
      REQUIRE(snap.size() >= batch.size());
      CHECK(std::equal(batch.begin(), batch.end(), snap.end() - batch.size()));
    }
  }
}
