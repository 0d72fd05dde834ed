#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "thicket/errors.hpp"
#include "thicket/nnet.hpp"
#include "thicket/perturb.hpp"
#include "thicket/rng.hpp"

namespace thicket::search {

using Scorer = std::function<double(const nnet::ParamVector&)>;

struct Candidate {
    int index = 0;
    perturb::PerturbationSpec spec;
    double score = 0.0;
    bool failed = false;  // scorer returned a non-finite value; score forced to -inf
};

// Descending score, ties broken by ascending index.
struct TopKSelection {
    std::vector<Candidate> selected;
    int n_total = 0;
    int k = 0;
};

struct GuessCheckResult {
    std::vector<Candidate> population;  // all N candidates, by index
    TopKSelection selection;
};

inline std::uint64_t candidate_seed(std::uint64_t run_seed, int index) {
    return rng::hash64(run_seed, static_cast<std::uint64_t>(index));
}

namespace detail {

inline bool better(const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.index < b.index;
}

// Evaluate fn(i) for i in [0, n) on n_workers threads. Each result lands in
// its own slot, so the gathered output is identical for any worker count.
template <typename Fn>
inline void parallel_for(int n, int n_workers, Fn&& fn) {
    if (n_workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    auto work = [&] {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    };
    std::vector<std::thread> pool;
    const int spawn = std::min(n_workers, n);
    pool.reserve(static_cast<std::size_t>(spawn));
    for (int w = 0; w < spawn; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
}

}  // namespace detail

inline TopKSelection select_top_k(const std::vector<Candidate>& population, int k) {
    if (k < 1 || static_cast<std::size_t>(k) > population.size())
        throw config_error("select_top_k: need 1 <= K <= N");
    std::vector<Candidate> sorted = population;
    std::sort(sorted.begin(), sorted.end(), detail::better);
    TopKSelection sel;
    sel.n_total = static_cast<int>(population.size());
    sel.k = k;
    sel.selected.assign(sorted.begin(), sorted.begin() + k);
    return sel;
}

// Random guessing + checking: score theta + sigma_i * eps(s_i) for
// s_i = hash64(run_seed, i) and sigma_i from the block assignment, then keep
// the top K. A non-finite score marks the candidate failed at -inf rather
// than aborting the sweep. Output is independent of worker count.
inline GuessCheckResult guess_and_check(const nnet::ParamVector& base,
                                        const nnet::MlpConfig& config, const Scorer& scorer,
                                        int n, const perturb::SigmaSet& sigmas, int k,
                                        std::uint64_t run_seed, int n_workers = 1) {
    nnet::check_match(base, config);
    if (n < 1) throw config_error("guess_and_check: N must be >= 1");
    if (k < 1 || k > n) throw config_error("guess_and_check: need 1 <= K <= N");
    const std::vector<double> sigma_per_seed = perturb::assign_sigmas(n, sigmas);

    GuessCheckResult result;
    result.population.resize(static_cast<std::size_t>(n));
    detail::parallel_for(n, n_workers, [&](int i) {
        Candidate c;
        c.index = i;
        c.spec = {candidate_seed(run_seed, i), sigma_per_seed[static_cast<std::size_t>(i)]};
        const nnet::ParamVector theta = perturb::apply(base, c.spec);
        const double s = scorer(theta);
        if (std::isfinite(s)) {
            c.score = s;
        } else {
            c.score = -std::numeric_limits<double>::infinity();
            c.failed = true;
        }
        result.population[static_cast<std::size_t>(i)] = std::move(c);
    });
    result.selection = select_top_k(result.population, k);
    return result;
}

// Mode of the answers; ties go to the tied answer with the best-ranked voter.
inline int majority_vote(const std::vector<std::pair<int, int>>& answer_rank) {
    if (answer_rank.empty()) throw config_error("majority_vote: empty vote list");
    std::map<int, std::pair<int, int>> tally;  // answer -> (count, best rank)
    for (const auto& [answer, rank] : answer_rank) {
        auto [it, inserted] = tally.try_emplace(answer, 0, rank);
        it->second.first += 1;
        it->second.second = std::min(it->second.second, rank);
    }
    int best_answer = tally.begin()->first;
    std::pair<int, int> best{-1, 0};
    for (const auto& [answer, counts] : tally) {
        const bool wins = counts.first > best.first ||
                          (counts.first == best.first && counts.second < best.second);
        if (wins) {
            best = counts;
            best_answer = answer;
        }
    }
    return best_answer;
}

// Discrete stand-in task: classify the direction of the next step relative to
// the end of the context, with a dead band around "flat".
struct DiscreteTask {
    struct Item {
        std::vector<double> context;
        int label = 0;
    };
    std::vector<Item> items;
    int n_classes = 3;
    double dead_band = 0.05;

    void validate() const {
        if (n_classes < 2) throw config_error("DiscreteTask: need n_classes >= 2");
        for (const auto& item : items)
            if (item.label < 0 || item.label >= n_classes)
                throw config_error("DiscreteTask: label out of range");
    }
};

inline int change_class(double next, double last, double dead_band) {
    const double delta = next - last;
    if (delta < -dead_band) return 0;  // down
    if (delta > dead_band) return 2;   // up
    return 1;                          // flat
}

inline DiscreteTask make_change_task(const std::vector<nnet::Sample>& samples,
                                     double dead_band = 0.05) {
    DiscreteTask task;
    task.dead_band = dead_band;
    task.items.reserve(samples.size());
    for (const auto& s : samples) {
        DiscreteTask::Item item;
        item.context = s.context;
        item.label = change_class(s.target, s.context.back(), dead_band);
        task.items.push_back(std::move(item));
    }
    return task;
}

// Majority vote over the selected models' predicted classes, per item.
inline double ensemble_classify(const TopKSelection& selection, const nnet::ParamVector& base,
                                const nnet::MlpConfig& config, const DiscreteTask& task) {
    task.validate();
    if (selection.selected.empty()) throw config_error("ensemble_classify: empty selection");
    if (task.items.empty()) return 0.0;
    std::vector<nnet::ParamVector> members;
    members.reserve(selection.selected.size());
    for (const auto& c : selection.selected) members.push_back(perturb::apply(base, c.spec));

    nnet::Workspace ws;
    int correct = 0;
    std::vector<std::pair<int, int>> votes;
    for (const auto& item : task.items) {
        votes.clear();
        for (std::size_t m = 0; m < members.size(); ++m) {
            const double pred = nnet::forward(members[m], config, item.context, ws);
            votes.emplace_back(change_class(pred, item.context.back(), task.dead_band),
                               static_cast<int>(m));
        }
        if (majority_vote(votes) == item.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(task.items.size());
}

// Independent rollouts, pointwise mean; permutation-invariant in the selection.
inline std::vector<double> ensemble_rollout(const TopKSelection& selection,
                                            const nnet::ParamVector& base,
                                            const nnet::MlpConfig& config,
                                            std::span<const double> context, int horizon) {
    if (selection.selected.empty()) throw config_error("ensemble_rollout: empty selection");
    std::vector<double> mean(static_cast<std::size_t>(horizon), 0.0);
    const double inv_k = 1.0 / static_cast<double>(selection.selected.size());
    for (const auto& c : selection.selected) {
        const nnet::ParamVector member = perturb::apply(base, c.spec);
        const std::vector<double> r = nnet::rollout(member, config, context, horizon);
        for (std::size_t t = 0; t < mean.size(); ++t) mean[t] += r[t] * inv_k;
    }
    return mean;
}

struct EsResult {
    nnet::ParamVector params;
    std::vector<double> score_curve;  // score of the updated params per iteration
};

// Iterative baseline: rank-normalized fitness weights (zero-mean, unit-range)
// over a fresh Gaussian population each step,
// theta += alpha / (population * sigma) * sum_i w_i * eps_i.
inline EsResult es_baseline(const nnet::ParamVector& base, const nnet::MlpConfig& config,
                            const Scorer& scorer, int population, int iterations, double alpha,
                            double sigma, std::uint64_t seed, int n_workers = 1) {
    nnet::check_match(base, config);
    if (population < 2) throw config_error("es_baseline: population must be >= 2");
    if (iterations < 1) throw config_error("es_baseline: iterations must be >= 1");
    if (!(sigma > 0.0)) throw config_error("es_baseline: sigma must be > 0");

    EsResult result;
    result.params = base;
    const std::size_t d = base.values.size();

    std::vector<double> scores(static_cast<std::size_t>(population));
    std::vector<std::uint64_t> eps_seeds(static_cast<std::size_t>(population));
    std::vector<int> order(static_cast<std::size_t>(population));

    for (int t = 0; t < iterations; ++t) {
        const std::uint64_t iter_seed = rng::hash64(seed, static_cast<std::uint64_t>(t));
        for (int i = 0; i < population; ++i)
            eps_seeds[static_cast<std::size_t>(i)] =
                rng::hash64(iter_seed, static_cast<std::uint64_t>(i));

        detail::parallel_for(population, n_workers, [&](int i) {
            nnet::ParamVector candidate = result.params;
            const std::uint64_t es = eps_seeds[static_cast<std::size_t>(i)];
            for (std::size_t j = 0; j < d; ++j)
                candidate.values[j] += sigma * rng::normal(es, j);
            scores[static_cast<std::size_t>(i)] = scorer(candidate);
        });
        for (int i = 0; i < population; ++i)
            if (!std::isfinite(scores[static_cast<std::size_t>(i)]))
                throw numerical_error("es_baseline: non-finite score at iteration " +
                                      std::to_string(t));

        // ascending score, ties by index, so ranks are a permutation of 0..P-1
        for (int i = 0; i < population; ++i) order[static_cast<std::size_t>(i)] = i;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double sa = scores[static_cast<std::size_t>(a)];
            const double sb = scores[static_cast<std::size_t>(b)];
            if (sa != sb) return sa < sb;
            return a < b;
        });
        std::vector<double> weight(static_cast<std::size_t>(population));
        for (int r = 0; r < population; ++r)
            weight[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] =
                static_cast<double>(r) / static_cast<double>(population - 1) - 0.5;

        const double step_scale = alpha / (static_cast<double>(population) * sigma);
        for (int i = 0; i < population; ++i) {
            const double w = weight[static_cast<std::size_t>(i)] * step_scale;
            if (w == 0.0) continue;
            const std::uint64_t es = eps_seeds[static_cast<std::size_t>(i)];
            for (std::size_t j = 0; j < d; ++j)
                result.params.values[j] += w * rng::normal(es, j);
        }
        result.score_curve.push_back(scorer(result.params));
    }
    return result;
}

// Regression distillation: train a fresh copy of base to match the selected
// ensemble's mean prediction on the given inputs.
inline nnet::ParamVector distill(const TopKSelection& selection, const nnet::ParamVector& base,
                                 const nnet::MlpConfig& config,
                                 const std::vector<std::vector<double>>& inputs,
                                 const nnet::OptHparams& hparams) {
    if (selection.selected.empty()) throw config_error("distill: empty selection");
    if (inputs.empty()) throw config_error("distill: no inputs");

    std::vector<nnet::ParamVector> members;
    members.reserve(selection.selected.size());
    for (const auto& c : selection.selected) members.push_back(perturb::apply(base, c.spec));

    nnet::Workspace ws;
    std::vector<nnet::Sample> dataset;
    dataset.reserve(inputs.size());
    const double inv_k = 1.0 / static_cast<double>(members.size());
    for (const auto& context : inputs) {
        nnet::Sample s;
        s.context = context;
        double target = 0.0;
        for (const auto& member : members)
            target += nnet::forward(member, config, s.context, ws) * inv_k;
        s.target = target;
        dataset.push_back(std::move(s));
    }
    return nnet::train(base, config, dataset, hparams).params;
}

}  // namespace thicket::search
