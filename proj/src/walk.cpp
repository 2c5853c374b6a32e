#include "idla/walk.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "idla/errors.hpp"

namespace idla {

namespace {

constexpr double kPi = 3.14159265358979323846;

// lambda_k = c - sqrt(c^2 - 1), c = 2 - cos(2 pi k / n); k = 0 gives 1.
std::vector<double> lambdas(int n) {
    std::vector<double> l(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        double c = 2.0 - std::cos(2.0 * kPi * k / n);
        l[static_cast<std::size_t>(k)] = (k == 0) ? 1.0 : c - std::sqrt(c * c - 1.0);
    }
    return l;
}

std::vector<double> fourier_probs(int n, const std::vector<double>& coeff) {
    std::vector<double> p(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int k = 0; k < n; ++k)
            s += coeff[static_cast<std::size_t>(k)] * std::cos(2.0 * kPi * k * j / n);
        p[static_cast<std::size_t>(j)] = s / n;
    }
    return p;
}

} // namespace

ReturnDistribution precompute_return_distribution(int n) {
    if (n < 3) throw InvalidWidthError("return distribution needs n >= 3");
    return ReturnDistribution{n, fourier_probs(n, lambdas(n))};
}

ReturnDistribution depth_return_distribution(int n, std::int64_t depth) {
    if (n < 3) throw InvalidWidthError("return distribution needs n >= 3");
    if (depth < 1) throw DomainError("depth must be positive");
    auto l = lambdas(n);
    for (auto& v : l) v = std::pow(v, static_cast<double>(depth));
    return ReturnDistribution{n, fourier_probs(n, l)};
}

AliasTable::AliasTable(const std::vector<double>& weights) {
    std::size_t n = weights.size();
    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    double total = 0.0;
    for (double w : weights) total += std::max(w, 0.0);
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i)
        scaled[i] = std::max(weights[i], 0.0) / total * static_cast<double>(n);
    std::vector<std::int32_t> small, large;
    for (std::size_t i = 0; i < n; ++i)
        (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::int32_t>(i));
    while (!small.empty() && !large.empty()) {
        auto s = small.back();
        small.pop_back();
        auto l = large.back();
        prob_[static_cast<std::size_t>(s)] = scaled[static_cast<std::size_t>(s)];
        alias_[static_cast<std::size_t>(s)] = l;
        scaled[static_cast<std::size_t>(l)] -= 1.0 - scaled[static_cast<std::size_t>(s)];
        if (scaled[static_cast<std::size_t>(l)] < 1.0) {
            large.pop_back();
            small.push_back(l);
        }
    }
    for (auto i : small) prob_[static_cast<std::size_t>(i)] = 1.0;
    for (auto i : large) prob_[static_cast<std::size_t>(i)] = 1.0;
}

WalkTables::WalkTables(int n)
    : n_(n), ret_(precompute_return_distribution(n)), ret_alias_(ret_.probs) {
    double c = 2.0 - std::cos(2.0 * kPi / n);
    lambda1_ = c - std::sqrt(c * c - 1.0);
}

int WalkTables::sample_depth_return(std::int64_t depth, RngStream& rng) const {
    if (depth == 1) return ret_alias_.sample(rng);
    // lambda_1^depth below 1e-18 means the law is uniform to beyond double
    // resolution.
    if (static_cast<double>(depth) * std::log(lambda1_) < -41.5)
        return static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n_)));
    auto it = depth_cache_.find(depth);
    if (it == depth_cache_.end())
        it = depth_cache_.emplace(depth, AliasTable(depth_return_distribution(n_, depth).probs))
                 .first;
    return it->second.sample(rng);
}

void WalkTables::corrupt_for_testing() {
    ret_.probs[0] += 0.12;
    ret_.probs[1] = std::max(0.0, ret_.probs[1] - 0.12);
    ret_alias_ = AliasTable(ret_.probs);
}

Site srw_step(Site s, int n, RngStream& rng) {
    switch (rng.next_direction()) {
        case 0: return Site{s.x, s.y + 1};
        case 1: return Site{s.x, s.y - 1};
        case 2: return Site{s.x + 1 == n ? 0 : s.x + 1, s.y};
        default: return Site{s.x == 0 ? n - 1 : s.x - 1, s.y};
    }
}

namespace {

constexpr std::int64_t kFreeGuardDepth = 48;

Site settle_contract(const Cluster& a, Site pos, RngStream& rng, const WalkTables& tables,
                     bool fast) {
    const int n = a.width();
    const std::int64_t base = a.base();
    if (pos.y < base) {
        pos = Site{wrap_x(pos.x + tables.sample_depth_return(base - pos.y, rng), n), base};
    }
    for (;;) {
        if (pos.y == base && fast) {
            pos = Site{wrap_x(pos.x + tables.sample_return(rng), n), base + 1};
            if (!a.occupied(pos)) return pos;
            continue;
        }
        Site next = pos;
        switch (rng.next_direction()) {
            case 0: next.y += 1; break;
            case 1:
                if (pos.y == base) {
                    pos.x = wrap_x(pos.x + tables.sample_return(rng), n);
                    continue;
                }
                next.y -= 1;
                break;
            case 2: next.x = pos.x + 1 == n ? 0 : pos.x + 1; break;
            default: next.x = pos.x == 0 ? n - 1 : pos.x - 1; break;
        }
        if (!a.occupied(next)) return next;
        pos = next;
    }
}

Site settle_free(const Cluster& a, Site pos, RngStream& rng, const WalkTables& tables) {
    const int n = a.width();
    const std::int64_t base = a.base();
    for (;;) {
        if (pos.y < base - kFreeGuardDepth)
            pos = Site{wrap_x(pos.x + tables.sample_depth_return(base - pos.y, rng), n), base};
        Site next = srw_step(pos, n, rng);
        if (!a.occupied(next)) return next;
        pos = next;
    }
}

} // namespace

Site walk_until_settle(const Cluster& a, Site start, RngStream& rng, const WalkTables& tables,
                       WalkMode mode) {
    if (!a.occupied(start)) throw StartVacantError("walk must start inside the cluster");
    switch (mode) {
        case WalkMode::Contract: return settle_contract(a, start, rng, tables, false);
        case WalkMode::ContractFast: return settle_contract(a, start, rng, tables, true);
        default: return settle_free(a, start, rng, tables);
    }
}

namespace {

// Survival function of the first passage to +1 of a lazy-free vertical walk,
// counted in vertical moves: P(tau_hat > 2k+1) = C(2k+1, k) 2^-(2k+1).
// Exact recurrence table up to kTableSize, Stirling series beyond.
constexpr int kTableSize = 4096;

const std::vector<double>& fp_cdf_table() {
    static const std::vector<double> table = [] {
        std::vector<double> f(kTableSize);
        double s = 0.5; // S(0)
        f[0] = 1.0 - s;
        for (int k = 1; k < kTableSize; ++k) {
            s *= static_cast<double>(2 * k + 1) / static_cast<double>(2 * k + 2);
            f[static_cast<std::size_t>(k)] = 1.0 - s;
        }
        return f;
    }();
    return table;
}

double log_fp_survival(double k) {
    // log of C(2k+1,k) 2^-(2k+1) = log[(2k+1)/(2k+2)] + log[C(2k,k) 4^-k]
    // with C(2k,k) 4^-k expanded as (pi k)^-1/2 (1 - 1/(8k) + 1/(128k^2) + 5/(1024k^3) ...).
    double corr = 1.0 - 1.0 / (8.0 * k) + 1.0 / (128.0 * k * k) + 5.0 / (1024.0 * k * k * k);
    return std::log((2.0 * k + 1.0) / (2.0 * k + 2.0)) - 0.5 * std::log(kPi * k) + std::log(corr);
}

// Inverse-CDF sample of the first passage to +1 (in vertical moves). The
// heavy t^-1/2 tail makes direct simulation infeasible, so invert exactly.
std::int64_t sample_first_passage_one(RngStream& rng) {
    double u = rng.next_double();
    const auto& cdf = fp_cdf_table();
    if (u < cdf[kTableSize - 1]) {
        auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        return 2 * static_cast<std::int64_t>(it - cdf.begin()) + 1;
    }
    double target = std::log1p(-u); // log of survival target
    std::int64_t lo = kTableSize, hi = std::int64_t{2} * kTableSize;
    while (log_fp_survival(static_cast<double>(hi)) > target) {
        lo = hi;
        hi <<= 1;
        if (hi >= (std::int64_t{1} << 58)) return (std::int64_t{1} << 59) + 1; // ~1e-9 tail
    }
    while (lo < hi) {
        std::int64_t mid = lo + (hi - lo) / 2;
        if (log_fp_survival(static_cast<double>(mid)) <= target)
            hi = mid;
        else
            lo = mid + 1;
    }
    return 2 * lo + 1;
}

} // namespace

HittingSample sample_vertical_hitting_time(std::int64_t n_levels, RngStream& rng) {
    if (n_levels < 1) throw DomainError("n_levels must be >= 1");
    std::int64_t vertical = 0;
    for (std::int64_t i = 0; i < n_levels; ++i) vertical += sample_first_passage_one(rng);
    std::int64_t total;
    if (vertical <= (1 << 14)) {
        total = 0;
        for (std::int64_t i = 0; i < vertical; ++i) total += rng.next_geometric_half();
    } else {
        // sum of m Geometric(1/2) = m + NegBinomial(m, 1/2), sampled through
        // the Gamma-Poisson mixture to stay O(1) for huge m
        total = vertical + rng.next_poisson(rng.next_gamma(static_cast<double>(vertical)));
    }
    return HittingSample{total, vertical};
}

namespace {

// Finishes one walker alone; `pos` is on the trajectory and still inside c.
Site finish_solo(const Cluster& c, Site pos, RngStream& rng, const WalkTables& tables) {
    return settle_contract(c, pos, rng, tables, false);
}

// Moves the lower walker alone until it reaches `target` level (first
// passage) or settles on the way.
struct ClimbResult {
    Site pos;
    bool settled = false;
};

ClimbResult climb_to_level(const Cluster& c, Site pos, std::int64_t target, RngStream& rng,
                           const WalkTables& tables) {
    const int n = c.width();
    const std::int64_t base = c.base();
    if (pos.y < base) {
        std::int64_t stop = std::min(base, target);
        pos = Site{wrap_x(pos.x + tables.sample_depth_return(stop - pos.y, rng), n), stop};
        if (pos.y == target) return {pos, false};
    }
    while (pos.y != target) {
        Site next = pos;
        switch (rng.next_direction()) {
            case 0: next.y += 1; break;
            case 1:
                if (pos.y == base) {
                    pos.x = wrap_x(pos.x + tables.sample_return(rng), n);
                    continue;
                }
                next.y -= 1;
                break;
            case 2: next.x = pos.x + 1 == n ? 0 : pos.x + 1; break;
            default: next.x = pos.x == 0 ? n - 1 : pos.x - 1; break;
        }
        if (!c.occupied(next)) return {next, true};
        pos = next;
    }
    return {pos, false};
}

} // namespace

PairSettle coupled_settle_pair(const Cluster& a, const Cluster& a2, Site start1, Site start2,
                               RngStream& rng, const WalkTables& tables) {
    if (!a.occupied(start1) || !a2.occupied(start2))
        throw StartVacantError("coupled walk must start inside both clusters");
    const int n = a.width();
    Site p1 = start1, p2 = start2;
    bool met = (p1 == p2);

    // vertical sync: the higher walker stays in place
    if (!met && p1.y != p2.y) {
        const bool one_lower = p1.y < p2.y;
        const Cluster& low_cluster = one_lower ? a : a2;
        Site& low = one_lower ? p1 : p2;
        auto r = climb_to_level(low_cluster, low, one_lower ? p2.y : p1.y, rng, tables);
        low = r.pos;
        if (r.settled) {
            if (one_lower)
                return PairSettle{p1, finish_solo(a2, p2, rng, tables), false};
            return PairSettle{finish_solo(a, p1, rng, tables), p2, false};
        }
        met = (p1 == p2);
    }

    int delta_parity_fix = (!met && (n % 2 == 0) && (((p1.x - p2.x) % 2 + 2) % 2 == 1)) ? 1 : 0;

    // paired phase: shared vertical steps, reflection-coupled horizontal ones
    while (!met) {
        Site n1 = p1, n2 = p2;
        int d = rng.next_direction();
        if (d < 2) {
            n1.y += d == 0 ? 1 : -1;
            n2.y = n1.y;
        } else {
            int s = d == 2 ? 1 : -1;
            n1.x = wrap_x(n1.x + s, n);
            if (delta_parity_fix)
                delta_parity_fix = 0; // partner skips its first horizontal move
            else
                n2.x = wrap_x(n2.x - s, n);
        }
        p1 = n1;
        p2 = n2;
        if (p1 == p2) {
            met = true;
            break;
        }
        bool out1 = !a.occupied(p1);
        bool out2 = !a2.occupied(p2);
        if (out1 && out2) return PairSettle{p1, p2, false};
        if (out1) return PairSettle{p1, finish_solo(a2, p2, rng, tables), false};
        if (out2) return PairSettle{finish_solo(a, p1, rng, tables), p2, false};
    }

    // merged trajectory with two pending exits; contraction below the lower
    // of the two filled levels stays sound because both clusters contain it
    Site pos = p1;
    bool done1 = !a.occupied(pos);
    bool done2 = !a2.occupied(pos);
    Site out1 = pos, out2 = pos;
    while (!done1 || !done2) {
        std::int64_t level;
        if (!done1 && !done2)
            level = std::min(a.base(), a2.base());
        else
            level = done1 ? a2.base() : a.base();
        if (pos.y < level)
            pos = Site{wrap_x(pos.x + tables.sample_depth_return(level - pos.y, rng), n), level};
        Site next = pos;
        switch (rng.next_direction()) {
            case 0: next.y += 1; break;
            case 1:
                if (pos.y == level) {
                    pos.x = wrap_x(pos.x + tables.sample_return(rng), n);
                    continue;
                }
                next.y -= 1;
                break;
            case 2: next.x = pos.x + 1 == n ? 0 : pos.x + 1; break;
            default: next.x = pos.x == 0 ? n - 1 : pos.x - 1; break;
        }
        pos = next;
        if (!done1 && !a.occupied(pos)) {
            done1 = true;
            out1 = pos;
        }
        if (!done2 && !a2.occupied(pos)) {
            done2 = true;
            out2 = pos;
        }
    }
    return PairSettle{out1, out2, true};
}

} // namespace idla
