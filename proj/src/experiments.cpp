#include "idla/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "idla/chain.hpp"
#include "idla/stats.hpp"

namespace idla::experiments {

namespace {

// Composite stream-replicate key: every chain of every replicate gets its
// own address, reconstructible from the record columns.
std::uint64_t rep_key(int tag, int n, std::int64_t replicate, int sub) {
    return (static_cast<std::uint64_t>(tag) << 58) |
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(n)) << 34) |
           (static_cast<std::uint64_t>(replicate & 0x3fffffff) << 4) |
           static_cast<std::uint64_t>(sub);
}

std::string key_string(std::uint64_t seed, int tag, int n, std::int64_t rep, int sub) {
    return "seed=" + std::to_string(seed) + ":rep=" + std::to_string(rep_key(tag, n, rep, sub));
}

template <typename Fn>
void parallel_replicates(int threads, std::int64_t count, Fn&& fn) {
    int hw = threads > 0 ? threads
                         : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    hw = static_cast<int>(std::min<std::int64_t>(hw, count));
    if (hw <= 1) {
        for (std::int64_t r = 0; r < count; ++r) fn(r);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(hw));
    for (int i = 0; i < hw; ++i)
        pool.emplace_back([&] {
            for (std::int64_t r; (r = next.fetch_add(1)) < count;) {
                try {
                    fn(r);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::int64_t burnin_steps(double mult, int n) {
    return static_cast<std::int64_t>(
        std::ceil(mult * static_cast<double>(n) * n * std::log(static_cast<double>(n))));
}

// --- fluctuations ---------------------------------------------------------

constexpr int kTagFluct = 1;

std::vector<Record> fluct_replicate(const ExperimentConfig& cfg, int n, std::int64_t rep) {
    std::vector<Record> recs;
    std::int64_t t_final = cfg.steps > 0 ? cfg.steps : static_cast<std::int64_t>(n) * n;
    ChainState chain(Cluster(n, 0), StreamFamily{cfg.master_seed, rep_key(kTagFluct, n, rep, 0)});
    std::string key = key_string(cfg.master_seed, kTagFluct, n, rep, 0);
    auto emit = [&](std::int64_t t, const Cluster& c) {
        auto r = stats::fluctuation_check(c, t);
        recs.push_back({"fluctuations", n, rep, t, "overshoot",
                        static_cast<double>(r.max_overshoot), key});
        recs.push_back({"fluctuations", n, rep, t, "undershoot",
                        static_cast<double>(r.max_undershoot), key});
        recs.push_back({"fluctuations", n, rep, t, "max_fluctuation",
                        static_cast<double>(std::max(r.max_overshoot, r.max_undershoot)), key});
    };
    for (std::int64_t t = 0; t < t_final; ++t) {
        add_particle(chain);
        if (cfg.checkpoint_every > 0 && chain.t % cfg.checkpoint_every == 0 && chain.t != t_final)
            emit(chain.t, chain.cluster);
    }
    emit(t_final, chain.cluster);
    recs.push_back({"fluctuations", n, rep, t_final, "height",
                    static_cast<double>(chain.cluster.height()), key});
    return recs;
}

// --- stationary (shifted chain) -------------------------------------------

constexpr int kTagStationary = 2;

std::vector<Record> stationary_replicate(const ExperimentConfig& cfg, int n, std::int64_t rep) {
    std::vector<Record> recs;
    std::int64_t burnin = burnin_steps(cfg.burnin_mult, n);
    std::int64_t window = cfg.steps > 0 ? cfg.steps : burnin_steps(cfg.burnin_mult / 5.0, n);
    std::int64_t stride = cfg.checkpoint_every > 0 ? cfg.checkpoint_every : n;
    // the imbalance decorrelates on the N^2 scale; sample it sparsely so
    // cross-seed comparisons can treat the draws as independent
    std::int64_t u_stride = std::max<std::int64_t>(stride, n * static_cast<std::int64_t>(n) / 4);
    ChainState chain(Cluster(n, 0),
                     StreamFamily{cfg.master_seed, rep_key(kTagStationary, n, rep, 0)});
    std::string key = key_string(cfg.master_seed, kTagStationary, n, rep, 0);
    for (std::int64_t t = 0; t < burnin; ++t) shifted_step(chain);
    std::vector<double> heights;
    heights.reserve(static_cast<std::size_t>(window));
    std::int64_t h_max = 0;
    double excess_sum = 0.0;
    for (std::int64_t t = 0; t < window; ++t) {
        shifted_step(chain);
        std::int64_t h = chain.cluster.height();
        heights.push_back(static_cast<double>(h));
        h_max = std::max(h_max, h);
        excess_sum += chain.cluster.excess_height().value();
        if (t % u_stride == 0)
            recs.push_back({"stationary", n, rep, burnin + t, "u_sample",
                            stats::imbalance(chain.cluster), key});
        if (t % stride == 0)
            recs.push_back({"stationary", n, rep, burnin + t, "h_sample",
                            static_cast<double>(h), key});
    }
    std::sort(heights.begin(), heights.end());
    auto idx = static_cast<std::size_t>(0.99 * (static_cast<double>(heights.size()) - 1.0));
    double logn = std::log(static_cast<double>(n));
    recs.push_back({"stationary", n, rep, burnin + window, "h_p99", heights[idx], key});
    recs.push_back({"stationary", n, rep, burnin + window, "h_over_logn_p99",
                    heights[idx] / logn, key});
    recs.push_back({"stationary", n, rep, burnin + window, "h_max",
                    static_cast<double>(h_max), key});
    recs.push_back({"stationary", n, rep, burnin + window, "excess_mean",
                    excess_sum / static_cast<double>(window), key});
    return recs;
}

// --- water coupling --------------------------------------------------------

constexpr int kTagCoupling = 3;

// Draws one initial cluster from a short shifted-chain run, then a second
// independent one conditioned (by running on) to hold the same number of
// particles.
struct GeneratedPair {
    Cluster a;
    Cluster b;
    bool matched = false;
};

GeneratedPair generate_equal_pair(const ExperimentConfig& cfg, int n, std::uint64_t rep_composite) {
    std::int64_t gen_steps = 4 * static_cast<std::int64_t>(n) * n;
    ChainState c1(Cluster(n, 0), StreamFamily{cfg.master_seed, rep_composite});
    for (std::int64_t t = 0; t < gen_steps; ++t) shifted_step(c1);
    std::int64_t target = c1.cluster.cardinality_above(0);

    ChainState c2(Cluster(n, 0), StreamFamily{cfg.master_seed, rep_composite + 1});
    std::int64_t cap = 64 * static_cast<std::int64_t>(n) * n;
    for (std::int64_t t = 0; t < cap; ++t) {
        shifted_step(c2);
        if (t >= gen_steps && c2.cluster.cardinality_above(0) == target)
            return {c1.cluster, c2.cluster, true};
    }
    return {c1.cluster, c2.cluster, false};
}

std::vector<Record> coupling_replicate(const ExperimentConfig& cfg, int n, std::int64_t rep) {
    // replicate index r encodes (multiplier index, pair index)
    auto di = static_cast<std::size_t>(rep % static_cast<std::int64_t>(cfg.twater_mults.size()));
    std::int64_t pair_idx = rep / static_cast<std::int64_t>(cfg.twater_mults.size());
    double d = cfg.twater_mults[di];
    std::vector<Record> recs;
    std::string key = key_string(cfg.master_seed, kTagCoupling, n, rep, 0);
    auto emit = [&](const std::string& name, double v) {
        recs.push_back({"coupling", n, rep, static_cast<std::int64_t>(di), name, v, key});
    };
    emit("twater_mult", d);
    emit("pair_index", static_cast<double>(pair_idx));

    GeneratedPair pair = generate_equal_pair(cfg, n, rep_key(kTagCoupling, n, rep, 0));
    if (!pair.matched) {
        emit("cardinality_mismatch", 1.0);
        return recs;
    }
    std::int64_t h0 = std::max(pair.a.height(), pair.b.height());
    auto t_water = static_cast<std::int64_t>(
        std::ceil(static_cast<double>(h0) * n +
                  d * static_cast<double>(n) * n * std::log(static_cast<double>(n))));
    CouplingOutcome out = water_level_coupling(
        pair.a, pair.b, t_water,
        StreamFamily{cfg.master_seed, rep_key(kTagCoupling, n, rep, 2)});
    emit("h0", static_cast<double>(h0));
    emit("t_water", static_cast<double>(t_water));
    emit("coupled", out.coupled ? 1.0 : 0.0);
    emit("pairs_total", static_cast<double>(out.pairs_total));
    emit("pairs_met", static_cast<double>(out.pairs_met));
    return recs;
}

// --- imbalance lower bound --------------------------------------------------

constexpr int kTagImbalance = 4;

std::vector<Record> imbalance_replicate(const ExperimentConfig& cfg, int n, std::int64_t rep) {
    std::vector<Record> recs;
    std::int64_t burnin = burnin_steps(cfg.burnin_mult, n);
    auto evolve_steps = static_cast<std::int64_t>(std::ceil(cfg.alpha * n * n));
    std::string key = key_string(cfg.master_seed, kTagImbalance, n, rep, 0);
    auto emit = [&](std::int64_t t, const std::string& name, double v) {
        recs.push_back({"imbalance", n, rep, t, name, v, key});
    };

    ChainState c1(Cluster(n, 0), StreamFamily{cfg.master_seed, rep_key(kTagImbalance, n, rep, 0)});
    ChainState c2(Cluster(n, 0), StreamFamily{cfg.master_seed, rep_key(kTagImbalance, n, rep, 1)});
    for (std::int64_t t = 0; t < burnin; ++t) shifted_step(c1);
    for (std::int64_t t = 0; t < burnin; ++t) shifted_step(c2);
    double u1 = stats::imbalance(c1.cluster);
    double u2 = stats::imbalance(c2.cluster);
    double u0 = u1 - u2;
    emit(0, "u0", u0);
    bool qualifies = std::fabs(u0) > cfg.delta;
    emit(0, "qualifies", qualifies ? 1.0 : 0.0);
    if (!qualifies) return recs;

    // evolve both (unshifted) with independent walks; u(t) is a martingale
    const int sign0 = u0 > 0.0 ? 1 : -1;
    double u = u0;
    bool crossed = false;
    std::int64_t first_crossing = -1;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::int64_t t = 1; t <= evolve_steps; ++t) {
        Site s1 = add_particle(c1);
        Site s2 = add_particle(c2);
        u += (stats::psi(s1, n) - stats::psi(s2, n)) * inv_n;
        if (!crossed && (u > 0.0 ? 1 : -1) != sign0) {
            crossed = true;
            first_crossing = t;
        }
        if (cfg.checkpoint_every > 0 && t % cfg.checkpoint_every == 0) emit(t, "u", u);
    }
    emit(evolve_steps, "u_final", u);
    emit(evolve_steps, "sign_changed", crossed ? 1.0 : 0.0);
    emit(evolve_steps, "endpoint_flipped", ((u > 0.0 ? 1 : -1) != sign0) ? 1.0 : 0.0);
    emit(evolve_steps, "first_crossing_t", static_cast<double>(first_crossing));
    emit(evolve_steps, "du_total", u - u0);
    return recs;
}

// --- GFF discrepancy ---------------------------------------------------------

constexpr int kTagGff = 5;

std::vector<Record> gff_replicate(const ExperimentConfig& cfg, int n, std::int64_t rep) {
    stats::TestFunction phi = stats::TestFunction::parse(cfg.phi);
    std::vector<Record> recs;
    std::string key = key_string(cfg.master_seed, kTagGff, n, rep, 0);
    std::int64_t t_final;
    double shift;
    if (cfg.gff_stationary) {
        t_final = cfg.steps > 0 ? cfg.steps : burnin_steps(cfg.burnin_mult, n);
        shift = static_cast<double>(t_final) / (static_cast<double>(n) * n);
    } else {
        t_final = cfg.steps > 0 ? cfg.steps
                                : static_cast<std::int64_t>(std::llround(cfg.y0 * n * n));
        shift = 0.0;
    }
    ChainState chain(Cluster(n, 0), StreamFamily{cfg.master_seed, rep_key(kTagGff, n, rep, 0)});
    run_idla(chain, t_final);
    double d = stats::discrepancy_functional(chain.cluster, t_final, phi, shift);
    recs.push_back({"gff", n, rep, t_final, "D", d, key});
    return recs;
}

using ReplicateFn = std::vector<Record> (*)(const ExperimentConfig&, int, std::int64_t);

std::vector<Record> run_sweep(const ExperimentConfig& cfg, ReplicateFn fn,
                              std::int64_t replicates) {
    std::vector<Record> all;
    for (int n : cfg.n_sweep) {
        std::vector<std::vector<Record>> slots(static_cast<std::size_t>(replicates));
        parallel_replicates(cfg.threads, replicates, [&](std::int64_t r) {
            slots[static_cast<std::size_t>(r)] = fn(cfg, n, r);
        });
        for (auto& s : slots)
            for (auto& rec : s) all.push_back(std::move(rec));
    }
    sort_records(all);
    return all;
}

} // namespace

std::vector<Record> run_fluctuations(const ExperimentConfig& cfg) {
    return run_sweep(cfg, fluct_replicate, cfg.replicates);
}

std::vector<Record> run_stationary(const ExperimentConfig& cfg) {
    return run_sweep(cfg, stationary_replicate, cfg.replicates);
}

std::vector<Record> run_coupling(const ExperimentConfig& cfg) {
    auto pairs = cfg.replicates * static_cast<std::int64_t>(cfg.twater_mults.size());
    return run_sweep(cfg, coupling_replicate, pairs);
}

std::vector<Record> run_imbalance(const ExperimentConfig& cfg) {
    return run_sweep(cfg, imbalance_replicate, cfg.replicates);
}

std::vector<Record> run_gff(const ExperimentConfig& cfg) {
    stats::TestFunction phi = stats::TestFunction::parse(cfg.phi);
    std::vector<Record> all = run_sweep(cfg, gff_replicate, cfg.replicates);
    for (int n : cfg.n_sweep) {
        double v = stats::gff_variance(phi, cfg.y0, cfg.gff_stationary);
        all.push_back({"gff", n, -1, 0, "v_analytic", v, "analytic"});
    }
    sort_records(all);
    return all;
}

void sort_records(std::vector<Record>& records) {
    std::sort(records.begin(), records.end(), [](const Record& a, const Record& b) {
        return std::tie(a.experiment, a.n, a.replicate, a.t, a.observable) <
               std::tie(b.experiment, b.n, b.replicate, b.t, b.observable);
    });
}

namespace {
std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
} // namespace

void write_csv(std::ostream& out, const std::vector<Record>& records,
               const std::string& config_line) {
    out << "# idla schema=1\n";
    if (!config_line.empty()) out << "# config " << config_line << '\n';
    out << "experiment,n,replicate,t,observable,value,stream_key\n";
    for (const auto& r : records)
        out << r.experiment << ',' << r.n << ',' << r.replicate << ',' << r.t << ','
            << r.observable << ',' << format_value(r.value) << ',' << r.stream_key << '\n';
}

void write_jsonl(std::ostream& out, const std::vector<Record>& records,
                 const std::string& config_line) {
    nlohmann::json meta{{"schema", 1}, {"config", config_line}};
    out << meta.dump() << '\n';
    for (const auto& r : records) {
        nlohmann::json j{{"experiment", r.experiment}, {"n", r.n},
                         {"replicate", r.replicate},   {"t", r.t},
                         {"observable", r.observable}, {"value", r.value},
                         {"stream_key", r.stream_key}};
        out << j.dump() << '\n';
    }
}

std::vector<Record> rerun_replicate(const std::string& experiment, const ExperimentConfig& cfg,
                                    int n, std::int64_t replicate) {
    if (experiment == "fluctuations") return fluct_replicate(cfg, n, replicate);
    if (experiment == "stationary") return stationary_replicate(cfg, n, replicate);
    if (experiment == "coupling") return coupling_replicate(cfg, n, replicate);
    if (experiment == "imbalance") return imbalance_replicate(cfg, n, replicate);
    if (experiment == "gff") return gff_replicate(cfg, n, replicate);
    throw std::invalid_argument("unknown experiment: " + experiment);
}

} // namespace idla::experiments
