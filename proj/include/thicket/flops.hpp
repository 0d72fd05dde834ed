#pragma once

#include <cstdint>
#include <string>

#include "thicket/errors.hpp"

namespace thicket::flops {

enum class Method { Grpo, Ppo, Es, Randopt };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::Grpo: return "grpo";
        case Method::Ppo: return "ppo";
        case Method::Es: return "es";
        case Method::Randopt: return "randopt";
    }
    throw config_error("unknown method");
}

inline Method method_from_string(const std::string& name) {
    if (name == "grpo") return Method::Grpo;
    if (name == "ppo") return Method::Ppo;
    if (name == "es") return Method::Es;
    if (name == "randopt") return Method::Randopt;
    throw config_error("unknown method: " + name);
}

using U128 = unsigned __int128;

inline std::string u128_to_string(U128 v) {
    if (v == 0) return "0";
    std::string out;
    while (v > 0) {
        out.insert(out.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
        v /= 10;
    }
    return out;
}

struct FlopsArgs {
    std::uint64_t steps = 1;       // T (iterations; fixed to 1 for randopt)
    std::uint64_t batch = 1;       // B (questions per step)
    std::uint64_t group = 1;       // G (responses per question)
    std::uint64_t population = 1;  // N
    std::uint64_t dataset = 1;     // D (evaluation set size)
    std::uint64_t params = 1;      // P
    std::uint64_t seq_len = 1;     // L
};

namespace detail {

inline void require_positive(std::uint64_t v, const char* name) {
    if (v == 0) throw config_error(std::string("flops: ") + name + " must be positive");
}

}  // namespace detail

// Closed-form training compute:
//   GRPO:       8 * T * B * G * P * L   (policy fwd + reference fwd + policy bwd)
//   PPO:       14 * T * B * G * P * L   (adds critic fwd + bwd)
//   ES:         2 * T * N * D * P * L   (forward-only evaluation)
//   RandOpt:    2 * 1 * N * D * P * L
inline U128 total_flops(Method method, const FlopsArgs& a) {
    detail::require_positive(a.params, "P");
    detail::require_positive(a.seq_len, "L");
    const U128 pl = static_cast<U128>(a.params) * a.seq_len;
    switch (method) {
        case Method::Grpo:
            detail::require_positive(a.steps, "T");
            detail::require_positive(a.batch, "B");
            detail::require_positive(a.group, "G");
            return static_cast<U128>(8) * a.steps * a.batch * a.group * pl;
        case Method::Ppo:
            detail::require_positive(a.steps, "T");
            detail::require_positive(a.batch, "B");
            detail::require_positive(a.group, "G");
            return static_cast<U128>(14) * a.steps * a.batch * a.group * pl;
        case Method::Es:
            detail::require_positive(a.steps, "T");
            detail::require_positive(a.population, "N");
            detail::require_positive(a.dataset, "D");
            return static_cast<U128>(2) * a.steps * a.population * a.dataset * pl;
        case Method::Randopt:
            detail::require_positive(a.population, "N");
            detail::require_positive(a.dataset, "D");
            return static_cast<U128>(2) * a.population * a.dataset * pl;
    }
    throw config_error("unknown method");
}

}  // namespace thicket::flops
