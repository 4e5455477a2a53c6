#pragma once

#include <cstdint>
#include <random>

namespace fiberlab {

// splitmix64 mixing step; used to derive independent per-block seeds from a
// single user seed. Blocks indexed by a counter, so results do not depend on
// how blocks are distributed over threads.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// One sequential random stream for one sample block.
class BlockRng {
  public:
    BlockRng(std::uint64_t seed, std::uint64_t block)
        : engine_(splitmix64(seed ^ splitmix64(block + 1))) {}

    // uniform in [0, 1)
    double uniform() {
        return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
    }

    // standard normal
    double normal() {
        return std::normal_distribution<double>(0.0, 1.0)(engine_);
    }

  private:
    std::mt19937_64 engine_;
};

// Number of samples drawn from one BlockRng stream.  Fixed so that Monte
// Carlo results are a function of (seed, n_samples) only, independent of the
// thread count.
inline constexpr std::int64_t kSamplesPerBlock = 4096;

}  // namespace fiberlab
