#pragma once

#include <cstdint>

namespace hmw {

// splitmix64; used to derive independent stream seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Stream seed for (master, point, scan)-style hierarchies.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

// xoshiro256**. Kept in-tree so that seeded sequences are identical on every
// platform and standard library (std::*_distribution sequences are not).
class Rng {
public:
    explicit Rng(std::uint64_t seed = 1);

    std::uint64_t next_u64();
    double uniform();                       // [0, 1)
    double normal(double mean = 0.0, double sigma = 1.0);
    std::uint64_t poisson(double mean);

private:
    std::uint64_t s_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace hmw
