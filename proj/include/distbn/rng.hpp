#pragma once

#include <cstdint>
#include <cstddef>

namespace distbn {

// splitmix64 step: advances state and returns a mixed 64-bit value.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Derives an independent child seed from (base, tag). Chain calls to mix in
// several tags. Used so every counter / stream / replica gets its own
// reproducible random stream from one master seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
    std::uint64_t s = base ^ (tag * 0xd1342543de82ef95ull + 0x632be59bd9b4e019ull);
    std::uint64_t first = splitmix64(s);
    return first ^ splitmix64(s);
}

// Small fast deterministic generator (splitmix64 stream). One per consumer;
// never shared between components so draw order stays stable.
class SmallRng {
public:
    explicit SmallRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform double in [0, 1).
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t next_below(std::uint64_t bound) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
    }

private:
    std::uint64_t state_;
};

} // namespace distbn
