#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "idla/lattice.hpp"
#include "idla/rng.hpp"
#include "idla/walk.hpp"

namespace idla {

// One IDLA chain. Particle t draws everything it needs from the stream
// (master_seed, replicate, t), so replicates parallelize and any single
// particle can be replayed.
struct ChainState {
    Cluster cluster;
    std::int64_t t = 0;
    std::int64_t cumulative_shift = 0;
    StreamFamily streams;
    std::shared_ptr<WalkTables> tables;

    ChainState(Cluster c, StreamFamily s)
        : cluster(std::move(c)), streams(s),
          tables(std::make_shared<WalkTables>(cluster.width())) {}
};

ChainState make_chain(int n, std::uint64_t master_seed, std::uint64_t replicate,
                      std::int64_t base = 0);

// Releases one particle from a uniform level-0 site and occupies its settle
// site. Returns the settle site.
Site add_particle(ChainState& state, WalkMode mode = WalkMode::ContractFast);

using StepObserver = std::function<void(std::int64_t t, Site settle, const Cluster&)>;

// t applications of add_particle; the observer (if any) sees every step.
Cluster run_idla(ChainState& state, std::int64_t t, const StepObserver& observer = nullptr);

// Convenience: flat start from R_base.
Cluster run_idla_flat(int n, std::int64_t t, std::uint64_t master_seed, std::uint64_t replicate,
                      const StepObserver& observer = nullptr);

// add_particle followed by the downshift S; cumulative_shift bookkeeping.
Site shifted_step(ChainState& state);

// Left fold of the Diaconis-Fulton sum over B in the given order: vacant
// points join directly, occupied ones walk (single-chain mode, contracted).
Cluster smash_sum(const Cluster& a, const std::vector<Site>& b, const StreamFamily& streams,
                  std::uint64_t first_particle = 0);

struct CouplingOutcome {
    Cluster cluster1;
    Cluster cluster2;
    bool coupled = false; // bit-exact equality of the final clusters
    std::int64_t pairs_total = 0;
    std::int64_t pairs_met = 0;
};

// The water-level coupling: grow W_0 from flat with t_water particles, then
// release the sites of A0 and A0p above level 0 in coupled pairs (fixed
// order: level ascending, then x ascending) into the evolving W, W'. Each
// output is distributed as run_idla(A0_i, t_water + n0) by the Abelian
// property.
CouplingOutcome water_level_coupling(const Cluster& a0, const Cluster& a0p, std::int64_t t_water,
                                     const StreamFamily& streams);

// Deterministic release order used by the coupling.
std::vector<Site> sites_above_zero(const Cluster& a);

} // namespace idla
