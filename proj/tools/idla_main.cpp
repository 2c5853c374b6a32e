#include <CLI11.hpp>
#include <cstdlib>
#include <cstring>
#include <utility>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "idla/errors.hpp"
#include "idla/experiments.hpp"
#include "idla/validate.hpp"

namespace {

using idla::experiments::ExperimentConfig;
using idla::experiments::Record;

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    if (out.empty()) throw idla::DomainError("empty integer list");
    return out;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    if (out.empty()) throw idla::DomainError("empty list");
    return out;
}

struct CliOptions {
    ExperimentConfig cfg;
    std::string n_list = "32";
    std::string twater_list = "0.25,0.5,1,2,4";
    std::string out_path;
    std::string format = "csv";
};

void add_common_options(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--n", opt.n_list, "cylinder width, or comma-separated sweep");
    cmd->add_option("--steps", opt.cfg.steps, "step count override (0 = experiment default)");
    cmd->add_option("--replicates", opt.cfg.replicates, "independent replicates");
    cmd->add_option("--seed", opt.cfg.master_seed, "master seed");
    cmd->add_option("--eta", opt.cfg.eta, "drift parameter in (0,1)");
    cmd->add_option("--delta", opt.cfg.delta, "imbalance threshold");
    cmd->add_option("--phi", opt.cfg.phi, "test function literal, e.g. \"1:0,-0.5 -1:0,0.5\"");
    cmd->add_option("--burnin-mult", opt.cfg.burnin_mult, "burn-in multiplier of N^2 ln N");
    cmd->add_option("--y0", opt.cfg.y0, "flat-start GFF height (T = y0 N^2)");
    cmd->add_option("--alpha", opt.cfg.alpha, "imbalance evolution horizon (t = alpha N^2)");
    cmd->add_option("--twater-mults", opt.twater_list, "water-level multiplier sweep");
    cmd->add_option("--threads", opt.cfg.threads, "worker threads (0 = hardware)");
    cmd->add_option("--checkpoint-every", opt.cfg.checkpoint_every, "emit records every k steps");
    cmd->add_option("--out", opt.out_path, "output path (default stdout)");
    cmd->add_option("--format", opt.format, "csv or jsonl")
        ->check(CLI::IsMember({"csv", "jsonl"}));
}

std::string config_line(const std::string& experiment, const CliOptions& opt) {
    std::ostringstream s;
    s << "experiment=" << experiment << " n=" << opt.n_list << " steps=" << opt.cfg.steps
      << " replicates=" << opt.cfg.replicates << " seed=" << opt.cfg.master_seed
      << " eta=" << opt.cfg.eta << " delta=" << opt.cfg.delta << " phi=\"" << opt.cfg.phi
      << "\" burnin-mult=" << opt.cfg.burnin_mult << " y0=" << opt.cfg.y0
      << " alpha=" << opt.cfg.alpha << " twater-mults=" << opt.twater_list
      << " checkpoint-every=" << opt.cfg.checkpoint_every << " format=" << opt.format;
    return s.str();
}

int emit(const std::string& experiment, const CliOptions& opt, const std::vector<Record>& records) {
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!opt.out_path.empty()) {
        file.open(opt.out_path);
        if (!file) {
            std::cerr << "cannot open output path " << opt.out_path << "\n";
            return 2;
        }
        out = &file;
    }
    std::string header = config_line(experiment, opt);
    if (opt.format == "jsonl")
        idla::experiments::write_jsonl(*out, records, header);
    else
        idla::experiments::write_csv(*out, records, header);
    return 0;
}

int run_experiment(const std::string& name, CliOptions& opt) {
    opt.cfg.n_sweep = parse_int_list(opt.n_list);
    opt.cfg.twater_mults = parse_double_list(opt.twater_list);
    if (opt.cfg.threads == 0) {
        if (const char* env = std::getenv("IDLA_THREADS")) opt.cfg.threads = std::atoi(env);
    }
    std::vector<Record> records;
    if (name == "fluctuations")
        records = idla::experiments::run_fluctuations(opt.cfg);
    else if (name == "stationary")
        records = idla::experiments::run_stationary(opt.cfg);
    else if (name == "coupling")
        records = idla::experiments::run_coupling(opt.cfg);
    else if (name == "imbalance")
        records = idla::experiments::run_imbalance(opt.cfg);
    else if (name == "gff")
        records = idla::experiments::run_gff(opt.cfg);
    return emit(name, opt, records);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo studies of internal DLA on the cylinder"};
    app.require_subcommand(1);

    CliOptions opt;
    const std::pair<const char*, const char*> experiments[] = {
        {"fluctuations", "flat-start growth: overshoot/undershoot of R_{t/N} per replicate"},
        {"stationary", "shifted-chain long runs: height, excess and imbalance after burn-in"},
        {"coupling", "water-level coupling success across a t_water multiplier sweep"},
        {"imbalance", "stationary pair imbalance u(0) and its sign persistence under evolution"},
        {"gff", "discrepancy functional D_{N,T}(phi) replicates against the analytic variance"},
    };
    for (const auto& [name, help] : experiments) {
        auto* cmd = app.add_subcommand(name, help);
        add_common_options(cmd, opt);
        if (std::strcmp(name, "gff") == 0)
            cmd->add_flag("--stationary", opt.cfg.gff_stationary,
                          "run to T = burnin-mult * N^2 ln N and re-center phi by T/N^2");
    }
    auto* validate_cmd = app.add_subcommand("validate", "oracle-backed correctness battery");
    std::uint64_t validate_seed = 20240901;
    bool corrupt = false;
    validate_cmd->add_option("--seed", validate_seed, "master seed");
    validate_cmd
        ->add_flag("--corrupt-return-hook", corrupt,
                   "negative control: corrupt the return distribution before checking")
        ->group(""); // test hook, hidden from help

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (validate_cmd->parsed()) {
            idla::validate::ValidationOptions vopt;
            vopt.master_seed = validate_seed;
            vopt.corrupt_return = corrupt;
            auto results = idla::validate::run_validation(vopt);
            idla::validate::print_report(std::cout, results);
            return idla::validate::all_passed(results) ? 0 : 1;
        }
        for (const auto* sub : app.get_subcommands())
            return run_experiment(sub->get_name(), opt);
        return 2;
    } catch (const CLI::Error& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
}
