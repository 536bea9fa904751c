#include "cmpairs/random.hpp"

#include <cmath>
#include <numbers>

namespace cmpairs {

double CounterRng::uniform01() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double CounterRng::uniform_open0() noexcept {
    return (static_cast<double>((*this)() >> 11) + 1.0) * 0x1.0p-53;
}

double CounterRng::uniform(double low, double high) noexcept {
    return low + (high - low) * uniform01();
}

std::int64_t CounterRng::uniform_int(std::int64_t low, std::int64_t high) noexcept {
    const auto range = static_cast<std::uint64_t>(high - low) + 1;
    if (range == 0) {
        return static_cast<std::int64_t>((*this)());
    }
    // Rejection sampling on the largest multiple of `range`.
    const std::uint64_t limit = max() - max() % range;
    std::uint64_t draw = (*this)();
    while (draw >= limit) {
        draw = (*this)();
    }
    return low + static_cast<std::int64_t>(draw % range);
}

double CounterRng::normal() noexcept {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    const double u1 = uniform_open0();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_normal_ = radius * std::sin(angle);
    has_cached_normal_ = true;
    return radius * std::cos(angle);
}

}  // namespace cmpairs
