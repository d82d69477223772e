#include "lrukit/rng.hpp"

namespace lrukit {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : key_(mix64(seed + kGolden) ^ mix64(stream * kGolden + 1)) {}

Rng::result_type Rng::operator()() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

Rng Rng::split(std::uint64_t id) const {
    Rng child(0);
    child.key_ = mix64(key_ ^ mix64((id + 1) * 0x632be59bd9b4e019ULL));
    return child;
}

double Rng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double Rng::uniform_open_zero() { return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53; }

double Rng::normal(double mean, double stddev) {
    return normal_(*this, std::normal_distribution<double>::param_type(mean, stddev));
}

}  // namespace lrukit
