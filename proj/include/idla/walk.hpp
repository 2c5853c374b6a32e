#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "idla/lattice.hpp"
#include "idla/rng.hpp"

namespace idla {

// Horizontal-offset law of the first return to a level after stepping below
// it into fully occupied territory: p(j) = (1/n) sum_k lambda_k cos(2 pi k j / n),
// lambda_k the root in (0,1] of lambda + 1/lambda = 4 - 2 cos(2 pi k / n).
struct ReturnDistribution {
    int n = 0;
    std::vector<double> probs;
};

ReturnDistribution precompute_return_distribution(int n);

// Same construction for a first passage rising `depth` levels through fully
// occupied territory (lambda_k^depth coefficients).
ReturnDistribution depth_return_distribution(int n, std::int64_t depth);

// Walker's alias method; O(1) sampling of a fixed discrete distribution.
class AliasTable {
  public:
    AliasTable() = default;
    explicit AliasTable(const std::vector<double>& weights);
    int sample(RngStream& rng) const {
        auto i = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(prob_.size())));
        return rng.next_double() < prob_[i] ? i : alias_[i];
    }
    bool empty() const { return prob_.empty(); }

  private:
    std::vector<double> prob_;
    std::vector<std::int32_t> alias_;
};

// Per-width sampling tables for the contraction macro-steps. Owned by one
// replicate; not meant to be shared across threads.
class WalkTables {
  public:
    explicit WalkTables(int n);

    int width() const { return n_; }
    const ReturnDistribution& return_distribution() const { return ret_; }

    // Offset J of one excursion below the current level.
    int sample_return(RngStream& rng) const { return ret_alias_.sample(rng); }

    // Offset of a first passage up `depth` levels through filled territory.
    int sample_depth_return(std::int64_t depth, RngStream& rng) const;

    // Test hook: corrupts the return law so negative-control checks fail.
    void corrupt_for_testing();

  private:
    int n_;
    ReturnDistribution ret_;
    AliasTable ret_alias_;
    double lambda1_;
    mutable std::map<std::int64_t, AliasTable> depth_cache_;
};

inline std::int32_t wrap_x(std::int64_t x, int n) {
    auto r = static_cast<std::int32_t>(x % n);
    return r < 0 ? r + n : r;
}

// One simple-random-walk step: each of (x +- 1 mod n, y) and (x, y +- 1)
// with probability 1/4.
Site srw_step(Site s, int n, RngStream& rng);

enum class WalkMode {
    // Down-step attempts from the cluster's max filled level are replaced by
    // a macro-step (x + J, same level), J ~ ReturnDistribution; starts below
    // the filled level fast-forward with the depth law. Identical in law to
    // the free walk's settle site.
    Contract,
    // As Contract, but the whole dwell at the filled level collapses into a
    // single jump to (x + J, level + 1); again identical in law (the escape
    // law solves the same quadratic as the return law). Chain hot path.
    ContractFast,
    // Literal stepping. Excursions that sink 48 levels below the filled
    // level are completed with one exact depth-law jump so the expected
    // running time stays finite.
    Free,
};

// Runs a walker from `start` (which must be in A) until it reaches an
// unoccupied site, and returns that site.
Site walk_until_settle(const Cluster& a, Site start, RngStream& rng, const WalkTables& tables,
                       WalkMode mode = WalkMode::Contract);

struct HittingSample {
    std::int64_t steps_total = 0;   // walk steps until level n_levels is first reached
    std::int64_t vertical_moves = 0; // vertical moves among them
};

// Samples (tau, tau_hat) for a free walk started at level 0: tau_hat is a sum
// of n_levels i.i.d. first passages to +1, and tau adds Geometric(1/2) step
// counts between vertical moves.
HittingSample sample_vertical_hitting_time(std::int64_t n_levels, RngStream& rng);

struct PairSettle {
    Site settle1;
    Site settle2;
    bool met_before_exit = false;
};

// The two-walker coupling: vertical sync (the lower walker moves alone until
// it reaches the higher one's level), then shared vertical steps with
// reflection-coupled horizontal steps, the even-width parity fix (the
// partner skips its first horizontal move when the offset is odd), and
// coalescence on meeting. Each walker settles at its own cluster's first
// unoccupied site along its trajectory.
PairSettle coupled_settle_pair(const Cluster& a, const Cluster& a2, Site start1, Site start2,
                               RngStream& rng, const WalkTables& tables);

} // namespace idla
