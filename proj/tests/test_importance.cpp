// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <set>
#include <vector>

#include "avprune/error.hpp"
#include "avprune/importance.hpp"
#include "doctest.h"

using namespace avprune;

namespace {

ImportanceScores make_scores(const std::vector<double>& s, const std::vector<std::size_t>& chunks) {
    ImportanceScores out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        out.push_back({i, chunks.empty() ? 0 : chunks[i], s[i]});
    }
    return out;
}

AttentionMap make_map(const std::vector<std::vector<double>>& rows) {
    AttentionMap m;
    m.values = MatrixD(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        m.row_ids.push_back(100 + r);
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            m.values(r, c) = rows[r][c];
        }
    }
    for (std::size_t c = 0; c < rows.front().size(); ++c) {
        m.col_ids.push_back(c);
        m.col_chunks.push_back(0);
    }
    return m;
}

}  // namespace

TEST_CASE("query_importance") {
    const auto uniform = query_importance(make_map(std::vector<std::vector<double>>(3, std::vector<double>(5, 0.2))));
    for (const auto& e : uniform) {
        CHECK(e.score == doctest::Approx(0.2));
    }
    const auto s = query_importance(make_map({{0.5, 0.3, 0.2}, {0.1, 0.6, 0.3}}));
    CHECK(s[0].score == doctest::Approx(0.3));
    CHECK(s[1].score == doctest::Approx(0.45));
    CHECK(s[2].score == doctest::Approx(0.25));
    const auto dup = query_importance(make_map({{0.5, 0.3, 0.2}, {0.1, 0.6, 0.3}, {0.5, 0.3, 0.2}, {0.1, 0.6, 0.3}}));
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(dup[i].score == doctest::Approx(s[i].score));
    }

    AttentionMap empty;
    CHECK_THROWS_AS(query_importance(empty), Error);
}

TEST_CASE("prune_count") {
    CHECK(prune_count(100, 0, 0.0) == 0);
    CHECK(prune_count(35, 115, 0.1) == 15);
    CHECK(prune_count(3, 4, 0.5) == 3);
    CHECK_THROWS_AS(prune_count(3, 4, 1.0), Error);
}

TEST_CASE("plain_select") {
    const auto s = make_scores({0.9, 0.1, 0.2, 0.15, 0.05, 0.3}, {});
    CHECK(plain_select(s, 0).pruned.empty());
    CHECK(plain_select(s, 2).pruned == std::vector<TokenId>{1, 4});
    CHECK(plain_select(make_scores({1, 1, 1, 1}, {}), 2).pruned == std::vector<TokenId>{0, 1});
    const auto over = plain_select(s, 10);
    CHECK(over.clamped);
    CHECK(over.pruned.size() == 6);
}

TEST_CASE("tds_select worked example") {
    const auto s = make_scores({0.9, 0.1, 0.2, 0.15, 0.05, 0.3}, {0, 0, 1, 1, 2, 2});
    const auto p = tds_select(s, 2, TdsConfig{0.2, 0}, 2);
    CHECK(p.pruned == std::vector<TokenId>{1, 3});
    CHECK(tds_select(s, 0, TdsConfig{0.2, 0}, 2).pruned.empty());
    // lambda = 0 reduces to plain selection.
    CHECK(tds_select(s, 2, TdsConfig{0.0, 0}, 2).pruned == plain_select(s, 2).pruned);
    // Single chunk disables the distance term.
    CHECK(tds_select(s, 3, TdsConfig{5.0, 0}, 0).pruned == plain_select(s, 3).pruned);
}

TEST_CASE("tds_select properties on random instances") {
    Rng rng(21);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(40);
        const std::size_t max_chunk = std::size_t{1} << rng.uniform_index(4);  // 1, 2, 4, 8
        ImportanceScores s;
        for (std::size_t i = 0; i < n; ++i) {
            // Dyadic values keep sums exact so shifted orderings are identical.
            s.push_back({i * 3 + 1, rng.uniform_index(max_chunk + 1), double(rng.uniform_index(64)) / 64.0});
        }
        const std::size_t k = rng.uniform_index(n + 3);
        const TdsConfig cfg{0.25 * double(rng.uniform_index(5)), 0};
        const auto p = tds_select(s, k, cfg, max_chunk);
        CHECK(p.pruned.size() == std::min(k, n));

        auto sorted = s;
        std::sort(sorted.begin(), sorted.end(), prune_before);
        std::set<TokenId> buffer;
        for (std::size_t i = 0; i < std::min(2 * k, n); ++i) {
            buffer.insert(sorted[i].id);
        }
        for (TokenId id : p.pruned) {
            CHECK(buffer.contains(id));
        }

        auto shifted = s;
        for (auto& e : shifted) {
            e.score += 1.0;
        }
        CHECK(tds_select(shifted, k, cfg, max_chunk).pruned == p.pruned);
        CHECK(plain_select(shifted, k).pruned == plain_select(s, k).pruned);
    }
}

TEST_CASE("tds_select with large lambda orders the buffer by temporal distance") {
    // Peak in chunk 0; candidates spread over chunks 0..4.
    const auto s = make_scores({1.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08},
                               {0, 4, 3, 2, 1, 0, 1, 2, 3});
    // k = 4 -> buffer is ids 1..8. Nearest to chunk 0 go first: 5 (d0), 4, 6 (d1), 3 (d2, lower score than 7).
    const auto p = tds_select(s, 4, TdsConfig{100.0, 0}, 4);
    CHECK(p.pruned == std::vector<TokenId>{3, 4, 5, 6});
}

TEST_CASE("random_select") {
    std::vector<TokenId> ids{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    Rng a(7);
    CHECK(random_select(ids, 0, a).pruned.empty());
    CHECK(random_select(ids, 10, a).pruned == ids);
    Rng r1(7);
    Rng r2(7);
    const auto x = random_select(ids, 3, r1);
    CHECK(x.pruned == random_select(ids, 3, r2).pruned);
    CHECK(x.pruned.size() == 3);
    CHECK(std::set<TokenId>(x.pruned.begin(), x.pruned.end()).size() == 3);
    Rng r3(1);
    CHECK(random_select(ids, 20, r3).clamped);

    // Each id is drawn with probability k/n.
    Rng r4(99);
    std::vector<int> hits(10, 0);
    for (int t = 0; t < 20000; ++t) {
        for (TokenId id : random_select(ids, 3, r4).pruned) {
            ++hits[id];
        }
    }
    for (int h : hits) {
        CHECK(h > 5600);
        CHECK(h < 6400);
    }
}

TEST_CASE("selector names") {
    CHECK(selector_from_string("tds") == Selector::kTds);
    CHECK(to_string(Selector::kRandom) == "random");
    CHECK_THROWS_AS(selector_from_string("greedy"), Error);
}
