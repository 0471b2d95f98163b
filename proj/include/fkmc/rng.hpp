#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fkmc {

/// Deterministic substream derivation.
///
/// All randomness in the project flows from one root seed. Independent
/// substreams are derived by hashing (root, label...) tuples through
/// splitmix64 (Steele, Lea & Flood's SplitMix generator, the standard
/// 64-bit finalizer), so a stream's identity depends only on its labels —
/// never on scheduling or worker count.
namespace rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Collapse a root seed and a list of labels into one 64-bit stream key.
/// Each label is absorbed through the mixer, so (a,b) and (b,a) differ.
inline std::uint64_t derive_key(std::uint64_t root,
                                std::initializer_list<std::uint64_t> labels) {
    std::uint64_t s = root ^ 0x6a09e667f3bcc908ull;  // offset so root=0 is usable
    std::uint64_t key = splitmix64(s);
    for (std::uint64_t label : labels) {
        s ^= label + 0x9e3779b97f4a7c15ull + (s << 6) + (s >> 2);
        key = splitmix64(s);
    }
    return key;
}

/// Mersenne Twister stream for a derived substream key.
inline std::mt19937_64 make_stream(std::uint64_t root,
                                   std::initializer_list<std::uint64_t> labels) {
    return std::mt19937_64(derive_key(root, labels));
}

/// Stable labels for the operations that fan out substreams. Values are
/// frozen: changing them would silently re-randomize every experiment.
enum OpLabel : std::uint64_t {
    kKernel = 1,
    kTrace = 2,
    kHsNorm = 3,
    kSemigroup = 4,
    kLaplace = 5,
    kNoiseSample = 6,
    kEquivalence = 7,
    kValidate = 8,
};

}  // namespace rng
}  // namespace fkmc
