#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "idla/lattice.hpp"

namespace idla::oracle {

// Exact law of the settle site of a walk from `start`, computed by a direct
// solve of the first-passage linear system on the cylinder truncated at
// level base - depth with a reflecting bottom.
struct ExitDistribution {
    std::vector<std::pair<Site, double>> probs; // sorted by (level, x)
    double truncation_error = 0.0;              // P(walk reaches the truncation level)
};

struct OracleOptions {
    int depth = 200;
    std::int64_t state_cap = 100000;
    std::int64_t support_cap = 10000;
};

ExitDistribution exact_exit_distribution(const Cluster& a, Site start,
                                         const OracleOptions& opt = {});

// Settle-site law for the paper's uniform level-0 release (mixture over x).
ExitDistribution exact_exit_distribution_uniform0(const Cluster& a, const OracleOptions& opt = {});

// Exhaustive law of A(t) from A0 under uniform level-0 releases.
std::map<Cluster, double> exact_cluster_distribution(const Cluster& a0, int t,
                                                     const OracleOptions& opt = {});

// Exact-rational law of the Diaconis-Fulton sum A + B in the given order,
// on the truncated cylinder. Probabilities are exact rationals, so two
// orders of B can be compared for literal equality (the Abelian property).
// Probabilities are returned as canonical "num/den" strings to keep GMP out
// of the public header.
std::map<Cluster, std::string> exact_smash_distribution_rational(const Cluster& a,
                                                                 const std::vector<Site>& order,
                                                                 int depth = 25);

} // namespace idla::oracle
