#include <catch2/catch_amalgamated.hpp>

#include "thicket/flops.hpp"

using namespace thicket;
using flops::FlopsArgs;
using flops::Method;

TEST_CASE("flops: unit arguments recover the method coefficients") {
    FlopsArgs ones;
    CHECK(flops::u128_to_string(flops::total_flops(Method::Grpo, ones)) == "8");
    CHECK(flops::u128_to_string(flops::total_flops(Method::Ppo, ones)) == "14");
    CHECK(flops::u128_to_string(flops::total_flops(Method::Es, ones)) == "2");
    CHECK(flops::u128_to_string(flops::total_flops(Method::Randopt, ones)) == "2");
}

TEST_CASE("flops: randopt ignores the step count (single parallel step)") {
    FlopsArgs a;
    a.steps = 99;
    a.population = 10;
    a.dataset = 5;
    CHECK(flops::total_flops(Method::Randopt, a) == flops::U128(2) * 10 * 5);
}

TEST_CASE("flops: matched budgets, 167 ES iterations x 30 equals one randopt pass at 5010") {
    FlopsArgs es;
    es.steps = 167;
    es.population = 30;
    es.dataset = 200;
    es.params = 3000000000ULL;
    es.seq_len = 1024;
    FlopsArgs ro = es;
    ro.steps = 1;
    ro.population = 5010;
    CHECK(flops::total_flops(Method::Es, es) == flops::total_flops(Method::Randopt, ro));
    CHECK(flops::u128_to_string(flops::total_flops(Method::Es, es)) == "6156288000000000000");
}

TEST_CASE("flops: products beyond 64 bits print exactly") {
    FlopsArgs a;
    a.steps = 200;
    a.batch = 1024;
    a.group = 8;
    a.params = 3000000000ULL;
    a.seq_len = 1024;
    CHECK(flops::u128_to_string(flops::total_flops(Method::Grpo, a)) == "40265318400000000000");
}

TEST_CASE("flops: nonpositive inputs are rejected") {
    FlopsArgs a;
    a.batch = 0;
    CHECK_THROWS_AS(flops::total_flops(Method::Grpo, a), config_error);
    FlopsArgs b;
    b.params = 0;
    CHECK_THROWS_AS(flops::total_flops(Method::Es, b), config_error);
    FlopsArgs c;
    c.population = 0;
    CHECK_THROWS_AS(flops::total_flops(Method::Randopt, c), config_error);
}

TEST_CASE("flops: method names round-trip") {
    for (auto m : {Method::Grpo, Method::Ppo, Method::Es, Method::Randopt})
        CHECK(flops::method_from_string(flops::to_string(m)) == m);
    CHECK_THROWS_AS(flops::method_from_string("sgd"), config_error);
}

TEST_CASE("u128 printing handles zero and single digits") {
    CHECK(flops::u128_to_string(0) == "0");
    CHECK(flops::u128_to_string(7) == "7");
}
