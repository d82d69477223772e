#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace lrukit {

// Counter-based generator: output i of a stream is splitmix64's finalizer applied
// to key + (i + 1) * golden. A stream is fully described by (key, counter), so
// children derived with split() are independent of how much the parent has drawn.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Child generator for stream `id`. Does not advance this generator.
    Rng split(std::uint64_t id) const;

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform on (0, 1].
    double uniform_open_zero();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal(double mean = 0.0, double stddev = 1.0);

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::normal_distribution<double> normal_{};
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace lrukit
