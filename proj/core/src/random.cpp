#include "lbm/random.hpp"

namespace lbm {
namespace {

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

Seed derive_seed(Seed parent, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = mix(parent);
    for (std::uint64_t p : path) {
        h = mix(h ^ mix(p + 0x632be59bd9b4e019ULL));
    }
    return h;
}

double sample_beta(Rng& rng, double a, double b) {
    std::gamma_distribution<double> ga(a, 1.0);
    std::gamma_distribution<double> gb(b, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    const double s = x + y;
    // both draws can underflow to zero for tiny shape parameters
    if (s <= 0.0) {
        return a / (a + b);
    }
    return x / s;
}

} // namespace lbm
