#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "thicket/nnet.hpp"
#include "thicket/perturb.hpp"
#include "thicket/rng.hpp"
#include "thicket/search.hpp"
#include "thicket/signals.hpp"

using namespace thicket;
using search::Candidate;
using search::TopKSelection;

namespace {

nnet::MlpConfig small_config() {
    nnet::MlpConfig c;
    c.context_len = 4;
    c.hidden = {8};
    return c;
}

signals::ContinuationTask small_task() {
    signals::Grid grid{0.0, 0.1, 40};
    return signals::continuation_task({signals::Family::Linear, {0.4, -0.2}}, grid, 4, 12);
}

search::Scorer task_scorer(const nnet::MlpConfig& config, const signals::ContinuationTask& task) {
    return [config, task](const nnet::ParamVector& p) {
        return task.score(nnet::rollout(p, config, task.context, static_cast<int>(task.truth.size())));
    };
}

TopKSelection manual_selection(const std::vector<perturb::PerturbationSpec>& specs) {
    TopKSelection sel;
    sel.n_total = static_cast<int>(specs.size());
    sel.k = static_cast<int>(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i)
        sel.selected.push_back({static_cast<int>(i), specs[i], 0.0, false});
    return sel;
}

}  // namespace

TEST_CASE("guess_and_check: N == K selects everyone, sorted by score") {
    const auto c = small_config();
    const auto base = nnet::init_params(c, nnet::InitScheme::Xavier, 1);
    const auto scorer = task_scorer(c, small_task());
    const auto result = search::guess_and_check(base, c, scorer, 10, {{0.05}}, 10, 99);
    REQUIRE(result.selection.selected.size() == 10);
    for (std::size_t i = 1; i < 10; ++i)
        CHECK(result.selection.selected[i - 1].score >= result.selection.selected[i].score);
}

TEST_CASE("guess_and_check: selection equals an exhaustive sort oracle") {
    const auto c = small_config();
    const auto base = nnet::init_params(c, nnet::InitScheme::Xavier, 2);
    const auto scorer = task_scorer(c, small_task());
    const auto result = search::guess_and_check(base, c, scorer, 10, {{0.02, 0.05}}, 4, 7);

    // brute force over the full population
    std::vector<std::pair<double, int>> all;
    for (const auto& cand : result.population) all.emplace_back(cand.score, cand.index);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    REQUIRE(result.selection.selected.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(result.selection.selected[i].index == all[i].second);
        CHECK(result.selection.selected[i].score == all[i].first);
    }
}

TEST_CASE("guess_and_check: K=1 picks the argmax, lowest index on ties") {
    const auto c = small_config();
    const auto base = nnet::init_params(c, nnet::InitScheme::Xavier, 3);
    // constant scorer forces a total tie
    const search::Scorer constant = [](const nnet::ParamVector&) { return 1.25; };
    const auto result = search::guess_and_check(base, c, constant, 8, {{0.01}}, 1, 5);
    CHECK(result.selection.selected.front().index == 0);
}

TEST_CASE("guess_and_check: non-finite scores become -inf and are flagged") {
    const auto c = small_config();
    const auto base = nnet::init_params(c, nnet::InitScheme::Xavier, 4);
    const search::Scorer flaky = [](const nnet::ParamVector& p) {
        // fail exactly one candidate by keying on its first weight
        static thread_local int dummy = 0;
        (void)dummy;
        return p.values[0] > 0 ? std::numeric_limits<double>::quiet_NaN() : -1.0;
    };
    const auto result = search::guess_and_check(base, c, flaky, 16, {{0.5}}, 16, 6);
    bool saw_failed = false;
    for (const auto& cand : result.population) {
        if (cand.failed) {
            saw_failed = true;
            CHECK(cand.score == -std::numeric_limits<double>::infinity());
        }
    }
    CHECK(saw_failed);
    // failed candidates sort last
    CHECK_FALSE(result.selection.selected.front().failed);
}

TEST_CASE("guess_and_check: identical output for 1, 4, and 16 workers") {
    const auto c = small_config();
    const auto base = nnet::init_params(c, nnet::InitScheme::Xavier, 5);
    const auto scorer = task_scorer(c, small_task());
    const auto one = search::guess_and_check(base, c, scorer, 64, {{0.01, 0.02}}, 8, 11, 1);
    const auto four = search::guess_and_check(base, c, scorer, 64, {{0.01, 0.02}}, 8, 11, 4);
    const auto sixteen = search::guess_and_check(base, c, scorer, 64, {{0.01, 0.02}}, 8, 11, 16);
    for (int i = 0; i < 64; ++i) {
        CHECK(one.population[static_cast<std::size_t>(i)].score ==
              four.population[static_cast<std::size_t>(i)].score);
        CHECK(one.population[static_cast<std::size_t>(i)].score ==
              sixteen.population[static_cast<std::size_t>(i)].score);
    }
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(one.selection.selected[i].index == four.selection.selected[i].index);
        CHECK(one.selection.selected[i].index == sixteen.selection.selected[i].index);
    }
}

TEST_CASE("guess_and_check: top-1 score is non-decreasing over nested populations") {
    const auto c = small_config();
    const auto base = nnet::init_params(c, nnet::InitScheme::Xavier, 6);
    const auto scorer = task_scorer(c, small_task());
    double prev = -std::numeric_limits<double>::infinity();
    for (int n : {10, 50, 120}) {
        const auto result = search::guess_and_check(base, c, scorer, n, {{0.02}}, 1, 17);
        CHECK(result.selection.selected.front().score >= prev);
        prev = result.selection.selected.front().score;
    }
}

TEST_CASE("guess_and_check: adding a constant to every score keeps the same members") {
    const auto c = small_config();
    const auto base = nnet::init_params(c, nnet::InitScheme::Xavier, 7);
    const auto scorer = task_scorer(c, small_task());
    const search::Scorer shifted = [scorer](const nnet::ParamVector& p) {
        return scorer(p) + 123.456;
    };
    const auto a = search::guess_and_check(base, c, scorer, 32, {{0.03}}, 5, 23);
    const auto b = search::guess_and_check(base, c, shifted, 32, {{0.03}}, 5, 23);
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(a.selection.selected[i].index == b.selection.selected[i].index);
}

TEST_CASE("majority_vote: basic examples") {
    CHECK(search::majority_vote({{1, 0}, {1, 1}, {2, 2}}) == 1);
    CHECK(search::majority_vote({{5, 0}, {5, 1}, {5, 2}}) == 5);
    // two-way tie goes to the answer holding the best rank
    CHECK(search::majority_vote({{10, 0}, {20, 1}}) == 10);
    CHECK(search::majority_vote({{10, 1}, {20, 0}}) == 20);
    CHECK_THROWS_AS(search::majority_vote({}), config_error);
}

TEST_CASE("majority_vote: equals the counting oracle on random vote vectors") {
    for (int trial = 0; trial < 10000; ++trial) {
        const std::uint64_t key = static_cast<std::uint64_t>(trial);
        const int n_votes = 1 + static_cast<int>(rng::bounded(rng::counter_word(50, key), 9));
        std::vector<std::pair<int, int>> votes;
        for (int v = 0; v < n_votes; ++v) {
            const int answer = static_cast<int>(
                rng::bounded(rng::counter_word(51, key * 16 + static_cast<std::uint64_t>(v)), 4));
            votes.emplace_back(answer, v);
        }
        CHECK(search::majority_vote(votes) == oracles::counting_mode(votes));
    }
}

TEST_CASE("majority_vote: odd voters without ties equals the naive mode") {
    for (int trial = 0; trial < 2000; ++trial) {
        const std::uint64_t key = 7000 + static_cast<std::uint64_t>(trial);
        std::vector<std::pair<int, int>> votes;
        for (int v = 0; v < 5; ++v)
            votes.emplace_back(
                static_cast<int>(rng::bounded(
                    rng::counter_word(key, static_cast<std::uint64_t>(v)), 2)),
                v);
        // 5 votes over 2 answers can never tie
        CHECK(search::majority_vote(votes) == oracles::counting_mode(votes));
    }
}

TEST_CASE("synthetic 80%-accurate voters: ensemble beats the individual rate") {
    // three independent voters, 3 classes; wrong answers uniform over the
    // other two classes; Monte-Carlo oracle recomputes the accuracy directly
    const int items = 10000;
    int ensemble_correct = 0;
    int oracle_correct = 0;
    for (int i = 0; i < items; ++i) {
        const std::uint64_t key = static_cast<std::uint64_t>(i);
        const int truth = static_cast<int>(rng::bounded(rng::counter_word(900, key), 3));
        std::vector<std::pair<int, int>> votes;
        for (int v = 0; v < 3; ++v) {
            const double u = rng::uniform(901 + static_cast<std::uint64_t>(v), key);
            int answer = truth;
            if (u >= 0.8) {
                const int other = static_cast<int>(
                    rng::bounded(rng::counter_word(910 + static_cast<std::uint64_t>(v), key), 2));
                answer = (truth + 1 + other) % 3;
            }
            votes.emplace_back(answer, v);
        }
        if (search::majority_vote(votes) == truth) ++ensemble_correct;
        if (oracles::counting_mode(votes) == truth) ++oracle_correct;
    }
    CHECK(ensemble_correct == oracle_correct);
    const double accuracy = static_cast<double>(ensemble_correct) / items;
    CHECK(accuracy > 0.80);
}

TEST_CASE("ensemble_classify: K=1 equals that single model's accuracy") {
    const auto c = small_config();
    const auto base = nnet::init_params(c, nnet::InitScheme::Xavier, 8);
    const auto mixture = signals::make_mixture(signals::all_families());
    signals::Grid grid{0.0, 0.1, 30};
    const auto ds = signals::make_dataset(mixture, 4, 4, grid, 77);
    const auto task = search::make_change_task(ds.items);

    const perturb::PerturbationSpec spec{1234, 0.05};
    const auto sel = manual_selection({spec});
    const double ens_acc = search::ensemble_classify(sel, base, c, task);

    const auto member = perturb::apply(base, spec);
    int correct = 0;
    for (const auto& item : task.items) {
        const double pred = nnet::forward(member, c, item.context);
        if (search::change_class(pred, item.context.back(), task.dead_band) == item.label)
            ++correct;
    }
    CHECK(ens_acc == Catch::Approx(static_cast<double>(correct) / task.items.size()));
}

TEST_CASE("ensemble_classify: sigma-zero members equal the base accuracy") {
    const auto c = small_config();
    const auto base = nnet::init_params(c, nnet::InitScheme::Xavier, 9);
    const auto mixture = signals::make_mixture(signals::all_families());
    signals::Grid grid{0.0, 0.1, 30};
    const auto ds = signals::make_dataset(mixture, 4, 4, grid, 78);
    const auto task = search::make_change_task(ds.items);

    const auto sel = manual_selection({{1, 0.0}, {2, 0.0}, {3, 0.0}});
    const double ens_acc = search::ensemble_classify(sel, base, c, task);

    int correct = 0;
    for (const auto& item : task.items) {
        const double pred = nnet::forward(base, c, item.context);
        if (search::change_class(pred, item.context.back(), task.dead_band) == item.label)
            ++correct;
    }
    CHECK(ens_acc == Catch::Approx(static_cast<double>(correct) / task.items.size()));
}

TEST_CASE("ensemble_rollout: K=1 equals the member rollout") {
    const auto c = small_config();
    const auto base = nnet::init_params(c, nnet::InitScheme::Xavier, 10);
    const perturb::PerturbationSpec spec{55, 0.02};
    const auto sel = manual_selection({spec});
    const std::vector<double> ctx = {0.1, 0.2, 0.3, 0.4};
    const auto ens = search::ensemble_rollout(sel, base, c, ctx, 6);
    const auto member = nnet::rollout(perturb::apply(base, spec), c, ctx, 6);
    CHECK(ens == member);
}

TEST_CASE("ensemble_rollout: identical members equal a single rollout") {
    const auto c = small_config();
    const auto base = nnet::init_params(c, nnet::InitScheme::Xavier, 11);
    const auto sel = manual_selection({{9, 0.0}, {10, 0.0}});
    const std::vector<double> ctx = {0.4, -0.1, 0.3, 0.0};
    const auto ens = search::ensemble_rollout(sel, base, c, ctx, 5);
    const auto single = nnet::rollout(base, c, ctx, 5);
    for (std::size_t t = 0; t < ens.size(); ++t)
        CHECK(ens[t] == Catch::Approx(single[t]).margin(1e-15));
}

TEST_CASE("ensemble_rollout: two members average pointwise") {
    const auto c = small_config();
    const auto base = nnet::init_params(c, nnet::InitScheme::Xavier, 12);
    const perturb::PerturbationSpec s1{100, 0.05};
    const perturb::PerturbationSpec s2{200, 0.05};
    const std::vector<double> ctx = {0.1, -0.2, 0.5, 0.2};
    const auto sel = manual_selection({s1, s2});
    const auto ens = search::ensemble_rollout(sel, base, c, ctx, 3);
    const auto r1 = nnet::rollout(perturb::apply(base, s1), c, ctx, 3);
    const auto r2 = nnet::rollout(perturb::apply(base, s2), c, ctx, 3);
    for (std::size_t t = 0; t < 3; ++t)
        CHECK(ens[t] == Catch::Approx(0.5 * r1[t] + 0.5 * r2[t]).margin(1e-15));
}

TEST_CASE("ensemble_rollout: permutation-invariant in the selection order") {
    const auto c = small_config();
    const auto base = nnet::init_params(c, nnet::InitScheme::Xavier, 13);
    const std::vector<double> ctx = {0.3, 0.1, -0.4, 0.2};
    const auto a = search::ensemble_rollout(
        manual_selection({{1, 0.03}, {2, 0.03}, {3, 0.03}}), base, c, ctx, 4);
    const auto b = search::ensemble_rollout(
        manual_selection({{3, 0.03}, {1, 0.03}, {2, 0.03}}), base, c, ctx, 4);
    for (std::size_t t = 0; t < 4; ++t) CHECK(a[t] == Catch::Approx(b[t]).margin(1e-14));
}

TEST_CASE("es_baseline: alpha zero leaves the params unchanged") {
    const auto c = small_config();
    const auto base = nnet::init_params(c, nnet::InitScheme::Xavier, 14);
    const auto scorer = task_scorer(c, small_task());
    const auto result = search::es_baseline(base, c, scorer, 8, 5, 0.0, 0.01, 42);
    CHECK(result.params.values == base.values);
}

TEST_CASE("es_baseline: same seed twice is bit-identical") {
    const auto c = small_config();
    const auto base = nnet::init_params(c, nnet::InitScheme::Xavier, 15);
    const auto scorer = task_scorer(c, small_task());
    const auto a = search::es_baseline(base, c, scorer, 8, 10, 1e-3, 0.01, 43);
    const auto b = search::es_baseline(base, c, scorer, 8, 10, 1e-3, 0.01, 43);
    CHECK(a.params.values == b.params.values);
    CHECK(a.score_curve == b.score_curve);
}

TEST_CASE("es_baseline: converges on the quadratic toy objective") {
    // 10-parameter net container; the objective ignores the network semantics
    nnet::MlpConfig c;
    c.context_len = 1;
    c.hidden = {3};
    REQUIRE(c.param_count() == 10);
    auto base = nnet::zeros(c);
    std::vector<double> target(10);
    for (std::size_t i = 0; i < 10; ++i) target[i] = (i % 2 == 0 ? 1.0 : -1.0) / std::sqrt(10.0);
    const search::Scorer quadratic = [&target](const nnet::ParamVector& p) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < target.size(); ++i) {
            const double d = p.values[i] - target[i];
            d2 += d * d;
        }
        return -d2;
    };
    const double initial = 1.0;  // ||0 - target|| = 1
    const auto result = search::es_baseline(base, c, quadratic, 30, 200, 1e-3, 0.02, 4242);
    double final_d2 = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double d = result.params.values[i] - target[i];
        final_d2 += d * d;
    }
    CHECK(std::sqrt(final_d2) < 0.1 * initial);
}

TEST_CASE("es_baseline: non-finite score aborts with the iteration index") {
    const auto c = small_config();
    const auto base = nnet::init_params(c, nnet::InitScheme::Xavier, 16);
    const search::Scorer bad = [](const nnet::ParamVector&) {
        return std::numeric_limits<double>::quiet_NaN();
    };
    CHECK_THROWS_AS(search::es_baseline(base, c, bad, 4, 3, 1e-3, 0.01, 1), numerical_error);
}

TEST_CASE("distill: single-teacher regression converges onto the teacher") {
    nnet::MlpConfig c;
    c.context_len = 3;
    c.hidden = {12};
    const auto base = nnet::init_params(c, nnet::InitScheme::Xavier, 17);
    const perturb::PerturbationSpec teacher_spec{77, 0.05};
    const auto sel = manual_selection({teacher_spec});
    std::vector<std::vector<double>> inputs;
    for (int i = 0; i < 32; ++i)
        inputs.push_back({rng::uniform(60, static_cast<std::uint64_t>(i)) * 2 - 1,
                          rng::uniform(61, static_cast<std::uint64_t>(i)) * 2 - 1,
                          rng::uniform(62, static_cast<std::uint64_t>(i)) * 2 - 1});
    nnet::OptHparams hp;
    hp.epochs = 500;
    hp.batch_size = 8;
    hp.learning_rate = 3e-3;
    hp.seed = 5;
    const auto distilled = search::distill(sel, base, c, inputs, hp);
    const auto teacher = perturb::apply(base, teacher_spec);
    double mse = 0.0;
    for (const auto& in : inputs) {
        const double d = nnet::forward(distilled, c, in) - nnet::forward(teacher, c, in);
        mse += d * d;
    }
    mse /= static_cast<double>(inputs.size());
    CHECK(mse < 1e-3);
}

TEST_CASE("distill: self-distillation reproduces the base in output space") {
    nnet::MlpConfig c;
    c.context_len = 3;
    c.hidden = {8};
    const auto base = nnet::init_params(c, nnet::InitScheme::Xavier, 18);
    const auto sel = manual_selection({{5, 0.0}, {6, 0.0}});
    std::vector<std::vector<double>> inputs;
    for (int i = 0; i < 16; ++i)
        inputs.push_back({0.1 * i, -0.05 * i, 0.2});
    nnet::OptHparams hp;
    hp.epochs = 50;
    hp.batch_size = 4;
    hp.seed = 6;
    const auto distilled = search::distill(sel, base, c, inputs, hp);
    double mse = 0.0;
    for (const auto& in : inputs) {
        const double d = nnet::forward(distilled, c, in) - nnet::forward(base, c, in);
        mse += d * d;
    }
    mse /= static_cast<double>(inputs.size());
    CHECK(mse < 1e-4);
}
