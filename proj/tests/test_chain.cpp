#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "idla/chain.hpp"
#include "idla/errors.hpp"
#include "idla/oracle.hpp"
#include "idla/stat_tests.hpp"
#include "idla/stats.hpp"

using namespace idla;

TEST_CASE("particle conservation and monotone growth") {
    ChainState chain = make_chain(6, 101, 0);
    std::int64_t last_card = 0;
    bool monotone = true;
    run_idla(chain, 200, [&](std::int64_t, Site settle, const Cluster& c) {
        std::int64_t card = c.cardinality_above(0);
        monotone = monotone && card == last_card + 1 && c.occupied(settle);
        last_card = card;
    });
    CHECK(monotone);
    CHECK(chain.cluster.cardinality_above(0) == 200);
    CHECK(chain.t == 200);
}

TEST_CASE("zero steps leave the start untouched") {
    ChainState chain = make_chain(5, 1, 0);
    Cluster before = chain.cluster;
    run_idla(chain, 0);
    CHECK(chain.cluster == before);
}

TEST_CASE("first settle from flat is uniform on level 1") {
    std::vector<std::int64_t> counts(4, 0);
    const std::int64_t reps = 100000;
    for (std::int64_t r = 0; r < reps; ++r) {
        ChainState chain = make_chain(4, 7, static_cast<std::uint64_t>(r));
        Site s = add_particle(chain);
        REQUIRE(s.y == 1);
        ++counts[static_cast<std::size_t>(s.x)];
    }
    CHECK(stat_tests::g_test_p(counts, std::vector<double>(4, 0.25)) > 0.01);
}

TEST_CASE("two-particle law matches the exact oracle") {
    auto exact = oracle::exact_cluster_distribution(Cluster(3, 0), 2);
    std::map<Cluster, std::int64_t> counts;
    const std::int64_t reps = 100000;
    for (std::int64_t r = 0; r < reps; ++r) {
        ChainState chain = make_chain(3, 11, static_cast<std::uint64_t>(r));
        add_particle(chain);
        add_particle(chain);
        ++counts[chain.cluster];
    }
    std::vector<std::int64_t> obs;
    std::vector<double> probs;
    std::int64_t seen = 0;
    for (const auto& [cluster, p] : exact) {
        probs.push_back(p);
        auto it = counts.find(cluster);
        obs.push_back(it == counts.end() ? 0 : it->second);
        seen += obs.back();
    }
    REQUIRE(seen == reps); // every simulated cluster lies in the oracle support
    CHECK(stat_tests::g_test_p(obs, probs) > 1e-3);
}

TEST_CASE("shifted chain stays rooted at base zero") {
    ChainState chain = make_chain(5, 13, 0);
    for (int i = 0; i < 500; ++i) {
        shifted_step(chain);
        CHECK(chain.cluster.max_filled_level() == 0);
        // |A*(t)| above 0 equals |A(t)| above the consumed shift
        CHECK(chain.cluster.cardinality_above(0) + 5 * chain.cumulative_shift == chain.t);
    }
}

TEST_CASE("three shifted steps match the oracle law with the shift applied") {
    auto exact_raw = oracle::exact_cluster_distribution(Cluster(3, 0), 3);
    std::map<Cluster, double> exact;
    for (const auto& [cluster, p] : exact_raw) exact[downshifted(cluster)] += p;

    std::map<Cluster, std::int64_t> counts;
    const std::int64_t reps = 100000;
    for (std::int64_t r = 0; r < reps; ++r) {
        ChainState chain = make_chain(3, 17, static_cast<std::uint64_t>(r));
        for (int i = 0; i < 3; ++i) shifted_step(chain);
        ++counts[chain.cluster];
    }
    std::vector<std::int64_t> obs;
    std::vector<double> probs;
    std::int64_t seen = 0;
    for (const auto& [cluster, p] : exact) {
        probs.push_back(p);
        auto it = counts.find(cluster);
        obs.push_back(it == counts.end() ? 0 : it->second);
        seen += obs.back();
    }
    REQUIRE(seen == reps);
    CHECK(stat_tests::g_test_p(obs, probs) > 1e-3);
}

TEST_CASE("smash sum identities") {
    Cluster a(4, 0);
    StreamFamily streams{19, 0};
    CHECK(smash_sum(a, {}, streams) == a);
    Cluster direct = smash_sum(a, {Site{2, 1}}, streams);
    CHECK(direct == occupied_with(a, Site{2, 1}));
}

TEST_CASE("smash sum order invariance under simulation") {
    Cluster a(3, 0);
    std::vector<Site> fwd{Site{0, 0}, Site{1, 1}};
    std::vector<Site> rev{Site{1, 1}, Site{0, 0}};
    std::map<Cluster, std::size_t> index;
    std::vector<std::int64_t> c1, c2;
    auto tally = [&](const Cluster& c, std::vector<std::int64_t>& counts) {
        auto [it, fresh] = index.emplace(c, index.size());
        if (fresh) {
            c1.resize(index.size(), 0);
            c2.resize(index.size(), 0);
        }
        ++counts[it->second];
    };
    const std::int64_t reps = 100000;
    for (std::int64_t r = 0; r < reps; ++r) {
        tally(smash_sum(a, fwd, StreamFamily{23, 2 * static_cast<std::uint64_t>(r)}), c1);
        tally(smash_sum(a, rev, StreamFamily{23, 2 * static_cast<std::uint64_t>(r) + 1}), c2);
    }
    CHECK(stat_tests::g_test_two_sample_p(c1, c2) > 1e-3);
}

TEST_CASE("water coupling with identical inputs couples from the start") {
    ChainState gen = make_chain(8, 29, 0);
    for (int i = 0; i < 200; ++i) shifted_step(gen);
    Cluster a0 = gen.cluster;
    auto out = water_level_coupling(a0, a0, 300, StreamFamily{31, 0});
    CHECK(out.coupled);
    CHECK(out.pairs_total == a0.cardinality_above(0));
    CHECK(out.pairs_met == out.pairs_total);
    CHECK(out.cluster1 == out.cluster2);
}

TEST_CASE("water coupling with empty inputs returns the water cluster") {
    Cluster flat(6, 0);
    auto out = water_level_coupling(flat, flat, 120, StreamFamily{37, 0});
    ChainState water(Cluster(6, 0), StreamFamily{37, 0});
    run_idla(water, 120);
    CHECK(out.pairs_total == 0);
    CHECK(out.cluster1 == water.cluster);
    CHECK(out.cluster2 == water.cluster);
}

TEST_CASE("water coupling rejects mismatched cardinalities") {
    Cluster a(5, 0), b(5, 0);
    b.occupy(Site{0, 1});
    CHECK_THROWS_AS(water_level_coupling(a, b, 10, StreamFamily{41, 0}),
                    CardinalityMismatchError);
}

TEST_CASE("water coupling preserves the marginal law") {
    // Abelian identity: output1 of the coupling is distributed as a plain
    // run of t_water particles from A0; compare on summary statistics
    const int n = 16;
    const std::int64_t t_water = 4 * n * n;
    ChainState gen = make_chain(n, 43, 0);
    for (int i = 0; i < 4 * n * n; ++i) shifted_step(gen);
    Cluster a0 = gen.cluster; // height <= a few levels, base 0
    // build a distinct partner with the same cardinality
    ChainState gen2 = make_chain(n, 44, 0);
    std::int64_t target = a0.cardinality_above(0);
    for (int i = 0; i < 64 * n * n; ++i) {
        shifted_step(gen2);
        if (i >= 4 * n * n && gen2.cluster.cardinality_above(0) == target) break;
    }
    REQUIRE(gen2.cluster.cardinality_above(0) == target);
    Cluster partner = gen2.cluster;

    const std::int64_t reps = 2000;
    std::vector<double> h_c, h_p, ex_c, ex_p, u_c, u_p;
    for (std::int64_t r = 0; r < reps; ++r) {
        auto out =
            water_level_coupling(a0, partner, t_water, StreamFamily{45, static_cast<std::uint64_t>(r)});
        h_c.push_back(static_cast<double>(out.cluster1.height()));
        ex_c.push_back(out.cluster1.excess_height().value());
        u_c.push_back(stats::imbalance(out.cluster1, out.cluster1.max_filled_level()));

        ChainState plain(a0, StreamFamily{46, static_cast<std::uint64_t>(r)});
        run_idla(plain, t_water);
        h_p.push_back(static_cast<double>(plain.cluster.height()));
        ex_p.push_back(plain.cluster.excess_height().value());
        u_p.push_back(stats::imbalance(plain.cluster, plain.cluster.max_filled_level()));
    }
    CHECK(stat_tests::ks_two_sample_p(h_c, h_p) > 1e-3);
    CHECK(stat_tests::ks_two_sample_p(ex_c, ex_p) > 1e-3);
    CHECK(stat_tests::ks_two_sample_p(u_c, u_p) > 1e-3);
}

TEST_CASE("deterministic release order is level-then-x") {
    Cluster a(4, 1);
    a.occupy(Site{3, 2});
    a.occupy(Site{0, 2});
    auto sites = sites_above_zero(a);
    REQUIRE(sites.size() == 6); // full row at y=1 plus two stored sites
    CHECK(sites[0] == Site{0, 1});
    CHECK(sites[3] == Site{3, 1});
    CHECK(sites[4] == Site{0, 2});
    CHECK(sites[5] == Site{3, 2});
}

TEST_CASE("observer checkpoints serialize and parse losslessly") {
    ChainState chain = make_chain(6, 47, 0);
    std::vector<std::string> dumps;
    run_idla(chain, 60, [&](std::int64_t t, Site, const Cluster& c) {
        if (t % 20 == 0) dumps.push_back(c.serialize());
    });
    REQUIRE(dumps.size() == 3);
    for (const auto& d : dumps) CHECK(Cluster::parse(d).serialize() == d);
}
