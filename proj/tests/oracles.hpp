// Test-only oracles, independent of the library implementation paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "thicket/nnet.hpp"

namespace oracles {

// Central finite differences of the batch MSE through the public forward path.
inline std::vector<double> finite_difference_grad(const thicket::nnet::ParamVector& params,
                                                  const thicket::nnet::MlpConfig& config,
                                                  std::span<const thicket::nnet::Sample> batch,
                                                  double h = 1e-5) {
    auto loss_at = [&](const thicket::nnet::ParamVector& p) {
        double loss = 0.0;
        for (const auto& s : batch) {
            const double r = thicket::nnet::forward(p, config, s.context) - s.target;
            loss += r * r;
        }
        return loss / static_cast<double>(batch.size());
    };
    std::vector<double> g(params.values.size());
    thicket::nnet::ParamVector work = params;
    for (std::size_t i = 0; i < params.values.size(); ++i) {
        const double orig = params.values[i];
        work.values[i] = orig + h;
        const double up = loss_at(work);
        work.values[i] = orig - h;
        const double down = loss_at(work);
        work.values[i] = orig;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

// Statistical mode by naive counting; ties resolved by the best (lowest) rank
// among the tied answers' voters.
inline int counting_mode(const std::vector<std::pair<int, int>>& answer_rank) {
    std::map<int, int> counts;
    std::map<int, int> best_rank;
    for (const auto& [a, r] : answer_rank) {
        counts[a] += 1;
        if (!best_rank.count(a) || r < best_rank[a]) best_rank[a] = r;
    }
    int best = answer_rank[0].first;
    int best_count = -1;
    int best_best_rank = 1 << 30;
    for (const auto& [a, c] : counts) {
        if (c > best_count || (c == best_count && best_rank[a] < best_best_rank)) {
            best = a;
            best_count = c;
            best_best_rank = best_rank[a];
        }
    }
    return best;
}

// One-pass covariance/correlation in long double.
inline std::vector<double> one_pass_corr(std::span<const double> data, int n, int m) {
    std::vector<long double> sum(static_cast<std::size_t>(m), 0.0L);
    std::vector<long double> cross(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0.0L);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            const long double vj = data[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
                                        static_cast<std::size_t>(j)];
            sum[static_cast<std::size_t>(j)] += vj;
            for (int k = 0; k < m; ++k)
                cross[static_cast<std::size_t>(j) * static_cast<std::size_t>(m) +
                      static_cast<std::size_t>(k)] +=
                    vj * static_cast<long double>(
                             data[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
                                  static_cast<std::size_t>(k)]);
        }
    std::vector<double> corr(static_cast<std::size_t>(m) * static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k) {
            const long double cjk =
                cross[static_cast<std::size_t>(j) * static_cast<std::size_t>(m) +
                      static_cast<std::size_t>(k)] -
                sum[static_cast<std::size_t>(j)] * sum[static_cast<std::size_t>(k)] /
                    static_cast<long double>(n);
            const long double cjj =
                cross[static_cast<std::size_t>(j) * static_cast<std::size_t>(m) +
                      static_cast<std::size_t>(j)] -
                sum[static_cast<std::size_t>(j)] * sum[static_cast<std::size_t>(j)] /
                    static_cast<long double>(n);
            const long double ckk =
                cross[static_cast<std::size_t>(k) * static_cast<std::size_t>(m) +
                      static_cast<std::size_t>(k)] -
                sum[static_cast<std::size_t>(k)] * sum[static_cast<std::size_t>(k)] /
                    static_cast<long double>(n);
            corr[static_cast<std::size_t>(j) * static_cast<std::size_t>(m) +
                 static_cast<std::size_t>(k)] =
                static_cast<double>(cjk / std::sqrt(cjj * ckk));
        }
    return corr;
}

}  // namespace oracles
