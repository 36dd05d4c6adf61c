#pragma once

#include <cstdint>
#include <random>

namespace heavytails {

/// Deterministic random stream. Wraps mt19937_64 but draws uniforms by
/// explicit bit manipulation so the exact sample sequence is fixed by the
/// seed alone, independent of standard-library distribution internals.
///
/// Parallel callers split substreams from a master seed: substream(i) is
/// decorrelated from substream(j) via splitmix64 mixing, so results never
/// depend on worker count or scheduling.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix_(seed)) {}

    /// Uniform on (0, 1): 53-bit mantissa, never exactly 0 or 1.
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    std::uint64_t bits() { return engine_(); }

    /// Independent child stream for grid point / replication `index`.
    /// Derived from the original seed, not from the current engine state,
    /// so the substream layout is stable regardless of draws already made.
    Rng substream(std::uint64_t index) const {
        return Rng(mix_(seed_ + 0x9e3779b97f4a7c15ULL * (index + 1)));
    }

private:
    static std::uint64_t mix_(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}
