#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "pasm/tensor.hpp"

using namespace pasm;

TEST_CASE("wrap_to_word examples") {
    CHECK(wrap_to_word(255, WordSpec(8)) == -1);
    CHECK(wrap_to_word(0, WordSpec(4)) == 0);
    CHECK(wrap_to_word(-129, WordSpec(8)) == 127);
    CHECK(wrap_to_word(128, WordSpec(8)) == -128);
    CHECK(wrap_to_word(INT64_MIN, WordSpec(64)) == INT64_MIN);
}

TEST_CASE("WordSpec range and validation") {
    CHECK(WordSpec(8).min_value() == -128);
    CHECK(WordSpec(8).max_value() == 127);
    CHECK(WordSpec(2).min_value() == -2);
    CHECK(WordSpec(64).max_value() == INT64_MAX);
    CHECK_THROWS_AS(WordSpec(1), ValidationError);
    CHECK_THROWS_AS(WordSpec(65), ValidationError);
}

TEST_CASE("wrap is idempotent and a ring homomorphism") {
    std::mt19937_64 rng(11);
    for (int width = 2; width <= 8; ++width) {
        const WordSpec w(width);
        const std::int64_t mod = std::int64_t{1} << width;
        // exhaustive over one full period on each side
        for (std::int64_t a = -mod; a < mod; ++a) {
            const std::int64_t wa = wrap_to_word(a, w);
            CHECK(w.contains(wa));
            CHECK(wrap_to_word(wa, w) == wa);
            CHECK((a - wa) % mod == 0);
            for (std::int64_t b = -mod; b < mod; b += 3) {
                const std::int64_t wb = wrap_to_word(b, w);
                CHECK(wrap_to_word(wa + wb, w) == wrap_to_word(a + b, w));
                CHECK(wrap_to_word(wa * wb, w) == wrap_to_word(a * b, w));
            }
        }
    }
    for (int i = 0; i < 1000; ++i) {
        const auto v = static_cast<std::int64_t>(rng());
        const WordSpec w(static_cast<int>(2 + rng() % 63));
        CHECK(wrap_to_word(wrap_to_word(v, w), w) == wrap_to_word(v, w));
    }
}

TEST_CASE("acc_width examples") {
    CHECK(acc_width(8, 800) == 26);
    CHECK(acc_width(4, 1) == 9);
    CHECK(acc_width(16, 135) == 40);
    CHECK(acc_width(32, 1568) == 64);
    CHECK(acc_width_exact(16, 135));
    CHECK_FALSE(acc_width_exact(32, 1568));
    CHECK_THROWS_AS(acc_width(33, 1), ValidationError);
    CHECK_THROWS_AS(acc_width(1, 4), ValidationError);
    CHECK_THROWS_AS(acc_width(8, 0), ValidationError);
}

TEST_CASE("acc_width bounds every sum of N extreme products") {
    // The largest-magnitude sum of N products of W-bit words is N * (-2^(W-1))^2.
    for (int w = 2; w <= 8; ++w) {
        const WordSpec word(w);
        for (std::uint64_t n = 1; n <= 16; ++n) {
            const WordSpec acc(acc_width(w, n));
            const std::int64_t extremes[] = {word.min_value(), word.max_value()};
            for (std::int64_t a : extremes) {
                for (std::int64_t b : extremes) {
                    CHECK(acc.contains(static_cast<std::int64_t>(n) * a * b));
                }
            }
        }
    }
    // Random sums as well.
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20000; ++trial) {
        const int w = 2 + static_cast<int>(rng() % 7);
        const WordSpec word(w);
        const std::uint64_t n = 1 + rng() % 16;
        const WordSpec acc(acc_width(w, n));
        std::int64_t sum = 0;
        const std::int64_t span = word.max_value() - word.min_value() + 1;
        for (std::uint64_t i = 0; i < n; ++i) {
            const std::int64_t a = word.min_value() + static_cast<std::int64_t>(rng() % span);
            const std::int64_t b = word.min_value() + static_cast<std::int64_t>(rng() % span);
            sum += a * b;
        }
        CHECK(acc.contains(sum));
    }
}

TEST_CASE("QTensor get/set") {
    QTensor t({2, 3, 4}, WordSpec(8));
    CHECK(t.size() == 24);
    CHECK(t.get({1, 2, 3}) == 0);
    t.set({1, 2, 3}, 300);
    CHECK(t.get({1, 2, 3}) == 44);
    t.set({0, 1, 2}, -5);
    CHECK(t.get({0, 1, 2}) == -5);
    CHECK(t.offset({1, 0, 0}) == 12);
    CHECK_THROWS_AS(t.get({2, 0, 0}), ValidationError);
    CHECK_THROWS_AS(t.get({0, 0}), ValidationError);
}

TEST_CASE("QTensor construction validates") {
    CHECK_THROWS_AS(QTensor({}, WordSpec(8)), ValidationError);
    CHECK_THROWS_AS(QTensor({2, 0}, WordSpec(8)), ValidationError);
    CHECK_THROWS_AS(QTensor({2}, WordSpec(8), {1, 2, 3}), ValidationError);
    CHECK_THROWS_AS(QTensor({1}, WordSpec(8), {300}), ValidationError);
    CHECK_NOTHROW(QTensor({2}, WordSpec(8), {-128, 127}));
}
