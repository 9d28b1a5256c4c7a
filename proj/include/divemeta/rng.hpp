#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>

namespace divemeta {

// Philox4x32-10 block function (Salmon et al., SC'11).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

// Role of a stream within one (replicate, study) cell.
enum class Lane : std::uint32_t {
  Group1 = 0,
  Group2 = 1,
  RandomEffect = 2,
  Allocation = 3,
};

// Identifies one independent stream. Two distinct keys never share a counter
// block, so streams can be created in any order on any thread.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint32_t replicate = 0;
  std::uint32_t study = 0;
  Lane lane = Lane::Group1;
};

// Counter-based random stream. Satisfies UniformRandomBitGenerator.
// A stream is owned by one thread at a time; it may be moved, never shared.
class CounterStream {
 public:
  using result_type = std::uint64_t;

  explicit CounterStream(const StreamKey& key);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // Uniform on (0, 1), never exactly 0 or 1.
  double uniform();
  double standard_normal();
  double standard_exponential();

  std::uint64_t blocks_consumed() const { return block_index_; }

 private:
  void refill();

  PhiloxKey key_{};
  std::uint32_t word2_ = 0;
  std::uint32_t word3_ = 0;
  std::uint64_t block_index_ = 0;
  PhiloxCounter buffer_{};
  int cursor_ = 4;
  std::optional<double> spare_normal_;
};

}  // namespace divemeta
