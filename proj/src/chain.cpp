#include "idla/chain.hpp"

#include "idla/errors.hpp"

namespace idla {

ChainState make_chain(int n, std::uint64_t master_seed, std::uint64_t replicate,
                      std::int64_t base) {
    return ChainState(Cluster(n, base), StreamFamily{master_seed, replicate});
}

Site add_particle(ChainState& state, WalkMode mode) {
    RngStream rng = state.streams.stream(static_cast<std::uint64_t>(state.t));
    auto x = static_cast<std::int32_t>(
        rng.next_below(static_cast<std::uint64_t>(state.cluster.width())));
    Site settle = walk_until_settle(state.cluster, Site{x, 0}, rng, *state.tables, mode);
    state.cluster.occupy(settle);
    ++state.t;
    return settle;
}

Cluster run_idla(ChainState& state, std::int64_t t, const StepObserver& observer) {
    for (std::int64_t i = 0; i < t; ++i) {
        Site settle = add_particle(state);
        if (observer) observer(state.t, settle, state.cluster);
    }
    return state.cluster;
}

Cluster run_idla_flat(int n, std::int64_t t, std::uint64_t master_seed, std::uint64_t replicate,
                      const StepObserver& observer) {
    ChainState state = make_chain(n, master_seed, replicate);
    return run_idla(state, t, observer);
}

Site shifted_step(ChainState& state) {
    Site settle = add_particle(state);
    state.cumulative_shift += state.cluster.downshift();
    return settle;
}

Cluster smash_sum(const Cluster& a, const std::vector<Site>& b, const StreamFamily& streams,
                  std::uint64_t first_particle) {
    Cluster cur = a;
    WalkTables tables(a.width());
    std::uint64_t particle = first_particle;
    for (const Site& z : b) {
        if (!cur.occupied(z)) {
            cur.occupy(z);
        } else {
            RngStream rng = streams.stream(particle);
            cur.occupy(walk_until_settle(cur, z, rng, tables, WalkMode::Contract));
        }
        ++particle;
    }
    return cur;
}

std::vector<Site> sites_above_zero(const Cluster& a) {
    std::vector<Site> sites;
    a.for_each_stored([&](Site s) {
        if (s.y > 0) sites.push_back(s);
    });
    // full rows between 1 and base are implicit in the representation
    for (std::int64_t y = 1; y <= a.base(); ++y)
        for (int x = 0; x < a.width(); ++x) sites.push_back(Site{x, y});
    std::sort(sites.begin(), sites.end(), [](const Site& l, const Site& r) {
        return l.y != r.y ? l.y < r.y : l.x < r.x;
    });
    return sites;
}

CouplingOutcome water_level_coupling(const Cluster& a0, const Cluster& a0p, std::int64_t t_water,
                                     const StreamFamily& streams) {
    if (a0.width() != a0p.width()) throw CardinalityMismatchError("width mismatch");
    std::int64_t n0 = a0.cardinality_above(0);
    if (n0 != a0p.cardinality_above(0))
        throw CardinalityMismatchError("initial clusters must hold the same particle count");
    if (t_water < 0) throw DomainError("t_water must be nonnegative");

    ChainState water(Cluster(a0.width(), 0), streams);
    run_idla(water, t_water);
    Cluster w1 = water.cluster;
    Cluster w2 = water.cluster;

    std::vector<Site> z1 = sites_above_zero(a0);
    std::vector<Site> z2 = sites_above_zero(a0p);

    CouplingOutcome out{w1, w2, false, n0, 0};
    WalkTables& tables = *water.tables;
    for (std::int64_t i = 0; i < n0; ++i) {
        RngStream rng = streams.stream(static_cast<std::uint64_t>(t_water + i));
        const Site s1 = z1[static_cast<std::size_t>(i)];
        const Site s2 = z2[static_cast<std::size_t>(i)];
        const bool in1 = out.cluster1.occupied(s1);
        const bool in2 = out.cluster2.occupied(s2);
        Site settle1 = s1, settle2 = s2;
        bool met = false;
        if (in1 && in2) {
            PairSettle pair = coupled_settle_pair(out.cluster1, out.cluster2, s1, s2, rng, tables);
            settle1 = pair.settle1;
            settle2 = pair.settle2;
            met = pair.met_before_exit;
        } else if (in1) {
            settle1 = walk_until_settle(out.cluster1, s1, rng, tables, WalkMode::Contract);
        } else if (in2) {
            settle2 = walk_until_settle(out.cluster2, s2, rng, tables, WalkMode::Contract);
        } else {
            met = (s1 == s2);
        }
        out.cluster1.occupy(settle1);
        out.cluster2.occupy(settle2);
        if (met) ++out.pairs_met;
    }
    out.coupled = (out.cluster1 == out.cluster2);
    return out;
}

} // namespace idla
