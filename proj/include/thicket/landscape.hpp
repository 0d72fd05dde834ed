#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "thicket/errors.hpp"
#include "thicket/perturb.hpp"
#include "thicket/rng.hpp"

namespace thicket::landscape {

// N seeds x M tasks performance table.
struct ScoreMatrix {
    int n = 0;  // seeds (rows)
    int m = 0;  // tasks (columns)
    std::vector<double> scores;  // row-major n x m
    std::vector<perturb::PerturbationSpec> seed_specs;
    std::vector<std::string> task_names;
    std::vector<double> base_scores;

    double at(int i, int j) const {
        return scores[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
                      static_cast<std::size_t>(j)];
    }
    double& at(int i, int j) {
        return scores[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
                      static_cast<std::size_t>(j)];
    }

    void validate() const {
        if (n < 2 || m < 1) throw config_error("ScoreMatrix: need N >= 2 and M >= 1");
        if (scores.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(m))
            throw config_error("ScoreMatrix: size mismatch");
        for (double s : scores)
            if (!std::isfinite(s)) throw config_error("ScoreMatrix: non-finite score");
    }
};

// Empirical estimate of the fraction of perturbations that beat the base
// score by at least margin m.
inline double solution_density(double base_score, std::span<const double> perturbed, double margin) {
    if (perturbed.empty()) throw config_error("solution_density: need at least one score");
    const double threshold = base_score + margin;
    std::size_t hits = 0;
    for (double s : perturbed)
        if (s >= threshold) ++hits;
    return static_cast<double>(hits) / static_cast<double>(perturbed.size());
}

inline std::vector<std::pair<double, double>> density_profile(double base_score,
                                                              std::span<const double> perturbed,
                                                              std::span<const double> margins) {
    for (std::size_t i = 1; i < margins.size(); ++i)
        if (margins[i] < margins[i - 1])
            throw config_error("density_profile: margins must be sorted ascending");
    std::vector<std::pair<double, double>> profile;
    profile.reserve(margins.size());
    for (double m : margins) profile.emplace_back(m, solution_density(base_score, perturbed, m));
    return profile;
}

// Per column: average rank (ties share the mean rank, ranks counted from 0)
// divided by N-1, so every column of P lands in [0,1] with mean 1/2.
inline std::vector<double> percentile_ranks(const ScoreMatrix& scores) {
    scores.validate();
    const int n = scores.n;
    const int m = scores.m;
    std::vector<double> p(static_cast<std::size_t>(n) * static_cast<std::size_t>(m));
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int j = 0; j < m; ++j) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double sa = scores.at(a, j);
            const double sb = scores.at(b, j);
            if (sa != sb) return sa < sb;
            return a < b;
        });
        int pos = 0;
        while (pos < n) {
            int end = pos;
            while (end + 1 < n && scores.at(order[static_cast<std::size_t>(end + 1)], j) ==
                                      scores.at(order[static_cast<std::size_t>(pos)], j))
                ++end;
            const double mean_rank = 0.5 * (pos + end);
            for (int t = pos; t <= end; ++t)
                p[static_cast<std::size_t>(order[static_cast<std::size_t>(t)]) *
                      static_cast<std::size_t>(m) +
                  static_cast<std::size_t>(j)] = mean_rank / static_cast<double>(n - 1);
            pos = end + 1;
        }
    }
    return p;
}

// Pearson correlation of all column pairs; zero-variance columns are hard
// errors because silently zeroing them would corrupt the discordance.
inline std::vector<double> pearson_corr(std::span<const double> p, int n, int m,
                                        const std::vector<std::string>& task_names = {}) {
    if (n < 2 || m < 1 || p.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(m))
        throw config_error("pearson_corr: bad dimensions");
    std::vector<double> mean(static_cast<std::size_t>(m), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            mean[static_cast<std::size_t>(j)] +=
                p[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
                  static_cast<std::size_t>(j)];
    for (double& v : mean) v /= static_cast<double>(n);

    std::vector<double> cov(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            const double dj = p[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
                                static_cast<std::size_t>(j)] -
                              mean[static_cast<std::size_t>(j)];
            for (int k = j; k < m; ++k) {
                const double dk = p[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
                                    static_cast<std::size_t>(k)] -
                                  mean[static_cast<std::size_t>(k)];
                cov[static_cast<std::size_t>(j) * static_cast<std::size_t>(m) +
                    static_cast<std::size_t>(k)] += dj * dk;
            }
        }
    }
    for (int j = 0; j < m; ++j) {
        const double var = cov[static_cast<std::size_t>(j) * static_cast<std::size_t>(m) +
                               static_cast<std::size_t>(j)];
        if (var <= 0.0) {
            const std::string name = static_cast<std::size_t>(j) < task_names.size()
                                         ? task_names[static_cast<std::size_t>(j)]
                                         : ("column " + std::to_string(j));
            throw config_error("pearson_corr: zero-variance task: " + name);
        }
    }
    std::vector<double> corr(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0.0);
    for (int j = 0; j < m; ++j) {
        corr[static_cast<std::size_t>(j) * static_cast<std::size_t>(m) +
             static_cast<std::size_t>(j)] = 1.0;
        for (int k = j + 1; k < m; ++k) {
            const double c =
                cov[static_cast<std::size_t>(j) * static_cast<std::size_t>(m) +
                    static_cast<std::size_t>(k)] /
                std::sqrt(cov[static_cast<std::size_t>(j) * static_cast<std::size_t>(m) +
                              static_cast<std::size_t>(j)] *
                          cov[static_cast<std::size_t>(k) * static_cast<std::size_t>(m) +
                              static_cast<std::size_t>(k)]);
            corr[static_cast<std::size_t>(j) * static_cast<std::size_t>(m) +
                 static_cast<std::size_t>(k)] = c;
            corr[static_cast<std::size_t>(k) * static_cast<std::size_t>(m) +
                 static_cast<std::size_t>(j)] = c;
        }
    }
    return corr;
}

// 1 minus the mean off-diagonal correlation; 0 for parallel rankings, up to
// M/(M-1) in the anti-correlated limit.
inline double spectral_discordance(std::span<const double> corr, int m) {
    if (m < 2) throw config_error("spectral_discordance: need M >= 2");
    if (corr.size() != static_cast<std::size_t>(m) * static_cast<std::size_t>(m))
        throw config_error("spectral_discordance: bad dimensions");
    double sum = 0.0;
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k)
            if (j != k)
                sum += corr[static_cast<std::size_t>(j) * static_cast<std::size_t>(m) +
                            static_cast<std::size_t>(k)];
    return 1.0 - sum / (static_cast<double>(m) * static_cast<double>(m - 1));
}

struct DiscordanceReport {
    int n = 0;
    int m = 0;
    std::vector<double> percentiles;   // n x m
    std::vector<double> correlation;   // m x m
    std::vector<std::string> task_names;
    double discordance = 0.0;
    double bound_hi = 0.0;  // M/(M-1)
};

inline DiscordanceReport discordance_report(const ScoreMatrix& scores) {
    DiscordanceReport report;
    report.n = scores.n;
    report.m = scores.m;
    report.task_names = scores.task_names;
    report.percentiles = percentile_ranks(scores);
    report.correlation = pearson_corr(report.percentiles, scores.n, scores.m, scores.task_names);
    report.discordance = spectral_discordance(report.correlation, scores.m);
    report.bound_hi = static_cast<double>(scores.m) / static_cast<double>(scores.m - 1);
    return report;
}

// Row r of the fixed 2 x d Gaussian projection matrix is keyed by
// hash64(proj_seed, r) and scaled by 1/sqrt(d).
inline std::pair<double, double> project_2d_vector(std::span<const double> v,
                                                   std::uint64_t proj_seed) {
    const std::uint64_t row0 = rng::hash64(proj_seed, 0);
    const std::uint64_t row1 = rng::hash64(proj_seed, 1);
    double x = 0.0;
    double y = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
        x += rng::normal(row0, j) * v[j];
        y += rng::normal(row1, j) * v[j];
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(v.size()));
    return {x * scale, y * scale};
}

// Project each perturbation vector sigma * eps(seed); the base model maps to
// the origin by construction.
inline std::vector<std::pair<double, double>> project_2d(
    const std::vector<perturb::PerturbationSpec>& specs, std::size_t dim,
    std::uint64_t proj_seed) {
    if (specs.empty()) throw config_error("project_2d: no specs");
    if (dim < 1) throw config_error("project_2d: dim must be >= 1");
    const std::uint64_t row0 = rng::hash64(proj_seed, 0);
    const std::uint64_t row1 = rng::hash64(proj_seed, 1);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    std::vector<std::pair<double, double>> coords;
    coords.reserve(specs.size());
    for (const auto& spec : specs) {
        double x = 0.0;
        double y = 0.0;
        if (spec.sigma != 0.0) {
            for (std::size_t j = 0; j < dim; ++j) {
                const double vj = spec.sigma * rng::normal(spec.seed, j);
                x += rng::normal(row0, j) * vj;
                y += rng::normal(row1, j) * vj;
            }
        }
        coords.emplace_back(x * scale, y * scale);
    }
    return coords;
}

namespace detail {

// Cyclic Jacobi sweeps on a symmetric matrix; plenty for the M <= 7 covariances
// this module sees.
inline void jacobi_eigen(std::vector<double>& a, int m, std::vector<double>& eigenvalues,
                         std::vector<double>& eigenvectors) {
    eigenvectors.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0.0);
    for (int i = 0; i < m; ++i)
        eigenvectors[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
                     static_cast<std::size_t>(i)] = 1.0;
    auto at = [&](std::vector<double>& mat, int r, int c) -> double& {
        return mat[static_cast<std::size_t>(r) * static_cast<std::size_t>(m) +
                   static_cast<std::size_t>(c)];
    };
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < m; ++p)
            for (int q = p + 1; q < m; ++q) off += at(a, p, q) * at(a, p, q);
        if (off < 1e-30) break;
        for (int p = 0; p < m; ++p) {
            for (int q = p + 1; q < m; ++q) {
                const double apq = at(a, p, q);
                if (apq == 0.0) continue;
                const double theta = (at(a, q, q) - at(a, p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int i = 0; i < m; ++i) {
                    const double aip = at(a, i, p);
                    const double aiq = at(a, i, q);
                    at(a, i, p) = c * aip - s * aiq;
                    at(a, i, q) = s * aip + c * aiq;
                }
                for (int i = 0; i < m; ++i) {
                    const double api = at(a, p, i);
                    const double aqi = at(a, q, i);
                    at(a, p, i) = c * api - s * aqi;
                    at(a, q, i) = s * api + c * aqi;
                }
                for (int i = 0; i < m; ++i) {
                    const double vip = at(eigenvectors, i, p);
                    const double viq = at(eigenvectors, i, q);
                    at(eigenvectors, i, p) = c * vip - s * viq;
                    at(eigenvectors, i, q) = s * vip + c * viq;
                }
            }
        }
    }
    eigenvalues.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) eigenvalues[static_cast<std::size_t>(i)] = at(a, i, i);
}

}  // namespace detail

struct Pca2d {
    std::vector<std::pair<double, double>> coords;
    double explained_variance_1 = 0.0;
    double explained_variance_2 = 0.0;
    std::vector<double> axis_1;  // M loadings
    std::vector<double> axis_2;
};

// Mean-centered projection onto the top-2 principal axes, eigenvalues in
// descending order, the largest-magnitude loading of each axis made positive.
inline Pca2d pca_2d(std::span<const double> vectors, int n, int m) {
    if (n < 3) throw config_error("pca_2d: need N >= 3");
    if (m < 1 || vectors.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(m))
        throw config_error("pca_2d: bad dimensions");

    std::vector<double> mean(static_cast<std::size_t>(m), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            mean[static_cast<std::size_t>(j)] +=
                vectors[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
                        static_cast<std::size_t>(j)];
    for (double& v : mean) v /= static_cast<double>(n);

    std::vector<double> centered(vectors.begin(), vectors.end());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            centered[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
                     static_cast<std::size_t>(j)] -= mean[static_cast<std::size_t>(j)];

    std::vector<double> cov(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = j; k < m; ++k)
                cov[static_cast<std::size_t>(j) * static_cast<std::size_t>(m) +
                    static_cast<std::size_t>(k)] +=
                    centered[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
                             static_cast<std::size_t>(j)] *
                    centered[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
                             static_cast<std::size_t>(k)];
    for (int j = 0; j < m; ++j)
        for (int k = j; k < m; ++k) {
            const double v = cov[static_cast<std::size_t>(j) * static_cast<std::size_t>(m) +
                                 static_cast<std::size_t>(k)] /
                             static_cast<double>(n - 1);
            cov[static_cast<std::size_t>(j) * static_cast<std::size_t>(m) +
                static_cast<std::size_t>(k)] = v;
            cov[static_cast<std::size_t>(k) * static_cast<std::size_t>(m) +
                static_cast<std::size_t>(j)] = v;
        }

    double trace = 0.0;
    for (int j = 0; j < m; ++j)
        trace += cov[static_cast<std::size_t>(j) * static_cast<std::size_t>(m) +
                     static_cast<std::size_t>(j)];
    if (!(trace > 0.0)) throw config_error("pca_2d: rank-0 data");

    std::vector<double> eigenvalues;
    std::vector<double> eigenvectors;
    detail::jacobi_eigen(cov, m, eigenvalues, eigenvectors);

    std::vector<int> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (eigenvalues[static_cast<std::size_t>(a)] != eigenvalues[static_cast<std::size_t>(b)])
            return eigenvalues[static_cast<std::size_t>(a)] >
                   eigenvalues[static_cast<std::size_t>(b)];
        return a < b;
    });

    Pca2d out;
    out.axis_1.resize(static_cast<std::size_t>(m));
    out.axis_2.resize(static_cast<std::size_t>(m), 0.0);
    const int top1 = order[0];
    const int top2 = m >= 2 ? order[1] : -1;
    out.explained_variance_1 = std::max(0.0, eigenvalues[static_cast<std::size_t>(top1)]);
    out.explained_variance_2 =
        top2 >= 0 ? std::max(0.0, eigenvalues[static_cast<std::size_t>(top2)]) : 0.0;
    for (int j = 0; j < m; ++j) {
        out.axis_1[static_cast<std::size_t>(j)] =
            eigenvectors[static_cast<std::size_t>(j) * static_cast<std::size_t>(m) +
                         static_cast<std::size_t>(top1)];
        if (top2 >= 0)
            out.axis_2[static_cast<std::size_t>(j)] =
                eigenvectors[static_cast<std::size_t>(j) * static_cast<std::size_t>(m) +
                             static_cast<std::size_t>(top2)];
    }
    for (auto* axis : {&out.axis_1, &out.axis_2}) {
        double best = 0.0;
        for (double v : *axis)
            if (std::fabs(v) > std::fabs(best)) best = v;
        if (best < 0.0)
            for (double& v : *axis) v = -v;
    }

    out.coords.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double x = 0.0;
        double y = 0.0;
        for (int j = 0; j < m; ++j) {
            const double c = centered[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
                                      static_cast<std::size_t>(j)];
            x += c * out.axis_1[static_cast<std::size_t>(j)];
            y += c * out.axis_2[static_cast<std::size_t>(j)];
        }
        out.coords.emplace_back(x, y);
    }
    return out;
}

struct KMeansResult {
    std::vector<int> labels;
    std::vector<std::pair<double, double>> centroids;
    std::vector<double> inertia_trace;  // non-increasing across Lloyd iterations
};

// Seeded k-means++ initialization followed by Lloyd iterations; an emptied
// cluster is reseeded to the point farthest from its assigned centroid.
inline KMeansResult kmeans(const std::vector<std::pair<double, double>>& points, int k,
                           std::uint64_t seed, int max_iters = 100) {
    const int n = static_cast<int>(points.size());
    if (k < 1) throw config_error("kmeans: k must be >= 1");
    if (k > n) throw config_error("kmeans: k must not exceed the number of points");

    auto dist2 = [&](const std::pair<double, double>& a, const std::pair<double, double>& b) {
        const double dx = a.first - b.first;
        const double dy = a.second - b.second;
        return dx * dx + dy * dy;
    };

    KMeansResult result;
    result.centroids.reserve(static_cast<std::size_t>(k));
    std::uint64_t counter = 0;

    // k-means++: first centroid uniform, then proportional to squared distance.
    result.centroids.push_back(
        points[static_cast<std::size_t>(rng::bounded(rng::counter_word(seed, counter++), n))]);
    std::vector<double> d2(static_cast<std::size_t>(n));
    while (static_cast<int>(result.centroids.size()) < k) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : result.centroids)
                best = std::min(best, dist2(points[static_cast<std::size_t>(i)], c));
            d2[static_cast<std::size_t>(i)] = best;
            total += best;
        }
        int chosen = -1;
        if (total > 0.0) {
            const double r = rng::uniform(seed, counter++) * total;
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                acc += d2[static_cast<std::size_t>(i)];
                if (acc >= r) {
                    chosen = i;
                    break;
                }
            }
            if (chosen < 0) chosen = n - 1;
        } else {
            // all remaining points coincide with existing centroids
            chosen = static_cast<int>(rng::bounded(rng::counter_word(seed, counter++), n));
        }
        result.centroids.push_back(points[static_cast<std::size_t>(chosen)]);
    }

    result.labels.assign(static_cast<std::size_t>(n), 0);
    std::vector<int> prev_labels;
    for (int iter = 0; iter < max_iters; ++iter) {
        double inertia = 0.0;
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int best_c = 0;
            for (int c = 0; c < k; ++c) {
                const double d = dist2(points[static_cast<std::size_t>(i)],
                                       result.centroids[static_cast<std::size_t>(c)]);
                if (d < best) {
                    best = d;
                    best_c = c;
                }
            }
            result.labels[static_cast<std::size_t>(i)] = best_c;
            inertia += best;
        }
        result.inertia_trace.push_back(inertia);
        if (result.labels == prev_labels) break;
        prev_labels = result.labels;

        std::vector<double> sx(static_cast<std::size_t>(k), 0.0);
        std::vector<double> sy(static_cast<std::size_t>(k), 0.0);
        std::vector<int> count(static_cast<std::size_t>(k), 0);
        for (int i = 0; i < n; ++i) {
            const int c = result.labels[static_cast<std::size_t>(i)];
            sx[static_cast<std::size_t>(c)] += points[static_cast<std::size_t>(i)].first;
            sy[static_cast<std::size_t>(c)] += points[static_cast<std::size_t>(i)].second;
            count[static_cast<std::size_t>(c)] += 1;
        }
        for (int c = 0; c < k; ++c) {
            if (count[static_cast<std::size_t>(c)] > 0) {
                result.centroids[static_cast<std::size_t>(c)] = {
                    sx[static_cast<std::size_t>(c)] / count[static_cast<std::size_t>(c)],
                    sy[static_cast<std::size_t>(c)] / count[static_cast<std::size_t>(c)]};
            } else {
                // reseed to the point currently farthest from its centroid
                int farthest = 0;
                double far_d = -1.0;
                for (int i = 0; i < n; ++i) {
                    const double d =
                        dist2(points[static_cast<std::size_t>(i)],
                              result.centroids[static_cast<std::size_t>(
                                  result.labels[static_cast<std::size_t>(i)])]);
                    if (d > far_d) {
                        far_d = d;
                        farthest = i;
                    }
                }
                result.centroids[static_cast<std::size_t>(c)] =
                    points[static_cast<std::size_t>(farthest)];
            }
        }
    }
    return result;
}

}  // namespace thicket::landscape
