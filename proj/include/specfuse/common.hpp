#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace specfuse {

namespace detail {
inline void cat_into(std::ostringstream&) {}
template <typename T, typename... Rest>
void cat_into(std::ostringstream& os, T&& head, Rest&&... rest) {
    os << head;
    cat_into(os, std::forward<Rest>(rest)...);
}
}  // namespace detail

/// Builds a message from mixed parts, e.g. cat("got ", n, " rows").
template <typename... Parts>
std::string cat(Parts&&... parts) {
    std::ostringstream os;
    detail::cat_into(os, std::forward<Parts>(parts)...);
    return os.str();
}

template <typename... Parts>
[[noreturn]] void raise(Parts&&... parts) {
    throw std::runtime_error(cat(std::forward<Parts>(parts)...));
}

template <typename... Parts>
void require(bool ok, Parts&&... parts) {
    if (!ok) raise(std::forward<Parts>(parts)...);
}

/// Deterministic RNG with hand-rolled distributions so that sequences are
/// reproducible independent of the standard library implementation.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    /// splitmix64 step.
    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    uint64_t below(uint64_t n) { return n ? next_u64() % n : 0; }

    /// Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace specfuse
