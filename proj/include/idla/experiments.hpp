#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "idla/lattice.hpp"

namespace idla::experiments {

struct ExperimentConfig {
    std::vector<int> n_sweep = {32};
    std::int64_t steps = 0; // 0 = per-experiment default
    std::int64_t replicates = 100;
    std::uint64_t master_seed = 1;
    double eta = 0.5;
    double delta = 0.02;
    std::string phi = "1:0,-0.5 -1:0,0.5"; // sin(2 pi x)
    double burnin_mult = 20.0;
    std::vector<double> twater_mults = {0.25, 0.5, 1.0, 2.0, 4.0};
    double y0 = 1.0;
    double alpha = 0.05;
    bool gff_stationary = false;
    int threads = 0; // 0 = hardware concurrency
    std::int64_t checkpoint_every = 0;
};

// One observable of one replicate; carries enough provenance to re-run it.
struct Record {
    std::string experiment;
    int n = 0;
    std::int64_t replicate = 0;
    std::int64_t t = 0;
    std::string observable;
    double value = 0.0;
    std::string stream_key;
};

std::vector<Record> run_fluctuations(const ExperimentConfig& cfg);
std::vector<Record> run_stationary(const ExperimentConfig& cfg);
std::vector<Record> run_coupling(const ExperimentConfig& cfg);
std::vector<Record> run_imbalance(const ExperimentConfig& cfg);
std::vector<Record> run_gff(const ExperimentConfig& cfg);

// Stable output ordering regardless of thread count.
void sort_records(std::vector<Record>& records);

void write_csv(std::ostream& out, const std::vector<Record>& records,
               const std::string& config_line);
void write_jsonl(std::ostream& out, const std::vector<Record>& records,
                 const std::string& config_line);

// Re-runs a single replicate of an experiment and returns its records
// (spot-check support for the provenance contract).
std::vector<Record> rerun_replicate(const std::string& experiment, const ExperimentConfig& cfg,
                                    int n, std::int64_t replicate);

} // namespace idla::experiments
