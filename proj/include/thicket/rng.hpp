#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace thicket::rng {

// Counter-based generator: value i of the stream keyed by `seed` depends only
// on (seed, i), never on call order or thread schedule. The word function is
// the splitmix64 finalizer evaluated at seed + (i+1)*golden.
inline std::uint64_t mix64(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t counter_word(std::uint64_t seed, std::uint64_t counter) {
    return mix64(seed + (counter + 1) * 0x9E3779B97F4A7C15ULL);
}

// Keyed combine for deriving sub-seeds (candidate i of a run, row r of a
// projection matrix, ...). Injective in b for fixed a.
inline std::uint64_t hash64(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ mix64(b + 0xD1B54A32D192ED03ULL));
}

// Map a 64-bit word to the open interval (0,1); 53-bit resolution, never 0 or 1.
inline double to_unit_open(std::uint64_t word) {
    return (static_cast<double>(word >> 11) + 0.5) * 0x1.0p-53;
}

// Unbiased bounded integer via 128-bit multiply (Lemire reduction; the tiny
// modulo bias of the plain method would be fine here, but this is just as cheap).
inline std::uint64_t bounded(std::uint64_t word, std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(word) * static_cast<unsigned __int128>(n)) >> 64);
}

// Inverse of the standard normal CDF (Wichura's PPND16, AS 241).
// Accurate to ~1e-15 relative over (0,1); pure polynomial/log/sqrt arithmetic,
// so the result is a deterministic function of the input bits.
inline double inverse_normal_cdf(double p) {
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                   1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
                 1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                   5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
                 4.2313330701600911252e+1) * r + 1.0);
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    if (r <= 0.0) {  // p outside (0,1); callers never hit this
        return (q < 0.0) ? -std::numeric_limits<double>::infinity()
                         : std::numeric_limits<double>::infinity();
    }
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                      2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                    3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
                  4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
                (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                      1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                    6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
                  2.05319162663775882187e+0) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                      1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                    2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
                  5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
                (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                      1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                    1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                  5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -value : value;
}

// Standard-normal draw i of the stream keyed by seed.
inline double normal(std::uint64_t seed, std::uint64_t counter) {
    return inverse_normal_cdf(to_unit_open(counter_word(seed, counter)));
}

// Uniform(0,1) draw i of the stream keyed by seed.
inline double uniform(std::uint64_t seed, std::uint64_t counter) {
    return to_unit_open(counter_word(seed, counter));
}

}  // namespace thicket::rng
