#pragma once

#include <cstdint>
#include <random>

namespace acir {

/// splitmix64 finalizer; used only to derive engine seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

using Engine = std::mt19937_64;

/// Which noise source of a path an engine feeds. Brownian and jump
/// increments of the same path come from different engines.
enum class Substream : std::uint64_t { brownian = 0, jump = 1, aux = 2 };

/// Identifies one reproducible random stream. Monte Carlo paths use
/// stream_id = path index, so results never depend on worker scheduling.
struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;

    std::uint64_t engine_seed(Substream sub) const noexcept {
        return mix64(mix64(mix64(seed) ^ stream_id) ^ static_cast<std::uint64_t>(sub));
    }

    Engine engine(Substream sub) const { return Engine(engine_seed(sub)); }

    friend bool operator==(const RngStream&, const RngStream&) = default;
};

}  // namespace acir
