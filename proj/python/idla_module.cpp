#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "idla/chain.hpp"
#include "idla/oracle.hpp"
#include "idla/stats.hpp"
#include "idla/validate.hpp"
#include "idla/walk.hpp"

namespace py = pybind11;
using namespace idla;

namespace {

Cluster run_flat(int n, std::int64_t t, std::uint64_t seed, std::uint64_t replicate) {
    return run_idla_flat(n, t, seed, replicate);
}

Cluster run_shifted(int n, std::int64_t t, std::uint64_t seed, std::uint64_t replicate) {
    ChainState chain = make_chain(n, seed, replicate);
    for (std::int64_t i = 0; i < t; ++i) shifted_step(chain);
    return chain.cluster;
}

Site settle_from(const Cluster& a, Site start, std::uint64_t seed, bool contract) {
    WalkTables tables(a.width());
    RngStream rng(seed, 0, 0);
    return walk_until_settle(a, start, rng, tables,
                             contract ? WalkMode::Contract : WalkMode::Free);
}

} // namespace

PYBIND11_MODULE(_idla, m) {
    m.doc() = "internal DLA on the cylinder: chains, couplings, observables";

    py::class_<Site>(m, "Site")
        .def(py::init<std::int32_t, std::int64_t>(), py::arg("x"), py::arg("y"))
        .def_readwrite("x", &Site::x)
        .def_readwrite("y", &Site::y)
        .def("__eq__", [](const Site& a, const Site& b) { return a == b; })
        .def("__repr__", [](const Site& s) {
            return "Site(" + std::to_string(s.x) + ", " + std::to_string(s.y) + ")";
        });

    py::class_<Cluster>(m, "Cluster")
        .def(py::init<int, std::int64_t>(), py::arg("n"), py::arg("base") = 0)
        .def("is_occupied", [](const Cluster& c, Site s) { return c.occupied(s); })
        .def("occupy", [](const Cluster& c, Site s) { return occupied_with(c, s); })
        .def("height", &Cluster::height)
        .def("base", &Cluster::base)
        .def("width", &Cluster::width)
        .def("cardinality_above", &Cluster::cardinality_above)
        .def("max_filled_level", &Cluster::max_filled_level)
        .def("excess_height",
             [](const Cluster& c) {
                 Fraction f = c.excess_height();
                 return py::make_tuple(f.num, f.den);
             })
        .def("downshift", [](const Cluster& c) { return downshifted(c); })
        .def("serialize", &Cluster::serialize)
        .def_static("parse", &Cluster::parse)
        .def("__eq__", [](const Cluster& a, const Cluster& b) { return a == b; });

    m.def("run_idla", &run_flat, py::arg("n"), py::arg("t"), py::arg("seed") = 1,
          py::arg("replicate") = 0, "flat-start chain, returns A(t)");
    m.def("run_shifted_idla", &run_shifted, py::arg("n"), py::arg("t"), py::arg("seed") = 1,
          py::arg("replicate") = 0, "shifted chain, returns A*(t)");
    m.def("walk_until_settle", &settle_from, py::arg("cluster"), py::arg("start"),
          py::arg("seed") = 1, py::arg("contract") = true);
    m.def(
        "smash_sum",
        [](const Cluster& a, const std::vector<Site>& b, std::uint64_t seed) {
            return smash_sum(a, b, StreamFamily{seed, 0});
        },
        py::arg("cluster"), py::arg("points"), py::arg("seed") = 1);
    m.def("return_distribution",
          [](int n) { return precompute_return_distribution(n).probs; });
    m.def("sample_vertical_hitting_time", [](std::int64_t levels, std::uint64_t seed) {
        RngStream rng(seed, 0, 0);
        auto h = sample_vertical_hitting_time(levels, rng);
        return py::make_tuple(h.steps_total, h.vertical_moves);
    });

    py::class_<CouplingOutcome>(m, "CouplingOutcome")
        .def_readonly("cluster1", &CouplingOutcome::cluster1)
        .def_readonly("cluster2", &CouplingOutcome::cluster2)
        .def_readonly("coupled", &CouplingOutcome::coupled)
        .def_readonly("pairs_total", &CouplingOutcome::pairs_total)
        .def_readonly("pairs_met", &CouplingOutcome::pairs_met);
    m.def(
        "water_level_coupling",
        [](const Cluster& a, const Cluster& b, std::int64_t t_water, std::uint64_t seed) {
            return water_level_coupling(a, b, t_water, StreamFamily{seed, 0});
        },
        py::arg("a0"), py::arg("a0p"), py::arg("t_water"), py::arg("seed") = 1);

    m.def("solve_qn", &stats::solve_qn);
    m.def("psi", [](int x, std::int64_t y, int n) {
        return stats::psi(Site{x, y}, n);
    });
    m.def("imbalance", &stats::imbalance, py::arg("cluster"), py::arg("reference_level") = 0);
    m.def(
        "discrepancy",
        [](const Cluster& a, std::int64_t t, const std::string& phi, double shift) {
            return stats::discrepancy_functional(a, t, stats::TestFunction::parse(phi), shift);
        },
        py::arg("cluster"), py::arg("t"), py::arg("phi"), py::arg("vertical_shift") = 0.0);
    m.def(
        "gff_variance",
        [](const std::string& phi, double y0, bool stationary) {
            return stats::gff_variance(stats::TestFunction::parse(phi), y0, stationary);
        },
        py::arg("phi"), py::arg("y0") = 1.0, py::arg("stationary") = false);
    m.def("fluctuation_check", [](const Cluster& a, std::int64_t t, double b) {
        auto r = stats::fluctuation_check(a, t, b);
        py::dict d;
        d["t"] = r.t;
        d["max_overshoot"] = r.max_overshoot;
        d["max_undershoot"] = r.max_undershoot;
        d["inner_ok"] = r.inner_ok;
        d["outer_ok"] = r.outer_ok;
        return d;
    }, py::arg("cluster"), py::arg("t"), py::arg("b_threshold") = 0.0);

    m.def("exact_exit_distribution", [](const Cluster& a, Site start, int depth) {
        oracle::OracleOptions opt;
        opt.depth = depth;
        auto d = oracle::exact_exit_distribution(a, start, opt);
        py::list out;
        for (const auto& [site, p] : d.probs) out.append(py::make_tuple(site.x, site.y, p));
        return py::make_tuple(out, d.truncation_error);
    }, py::arg("cluster"), py::arg("start"), py::arg("depth") = 200);

    m.def("validate", [](std::uint64_t seed) {
        validate::ValidationOptions opt;
        opt.master_seed = seed;
        auto results = validate::run_validation(opt);
        py::list out;
        for (const auto& r : results) {
            py::dict d;
            d["name"] = r.name;
            d["pass"] = r.pass;
            d["measured"] = r.measured;
            d["tolerance"] = r.tolerance;
            out.append(d);
        }
        return out;
    }, py::arg("seed") = 20240901);
}
