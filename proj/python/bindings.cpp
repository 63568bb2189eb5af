#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gwflow/config.hpp"
#include "gwflow/discrete_flow.hpp"
#include "gwflow/errors.hpp"
#include "gwflow/genfun.hpp"
#include "gwflow/limit_semigroup.hpp"
#include "gwflow/measures.hpp"
#include "gwflow/mechanisms.hpp"

namespace py = pybind11;
using namespace gwflow;

namespace {

BranchingMechanism make_mechanism(double b, double sigma2, const std::vector<std::pair<double, double>>& atoms,
                                  const std::optional<py::dict>& stable) {
    JumpMeasure jumps;
    if (stable) {
        if (!atoms.empty()) {
            throw DomainError("give either atoms or a stable panel, not both");
        }
        StablePanel panel;
        const auto& d = *stable;
        if (d.contains("alpha")) panel.alpha = d["alpha"].cast<double>();
        if (d.contains("scale")) panel.scale = d["scale"].cast<double>();
        if (d.contains("eps")) panel.eps = d["eps"].cast<double>();
        if (d.contains("cap")) panel.cap = d["cap"].cast<double>();
        if (d.contains("nodes")) panel.nodes = d["nodes"].cast<int>();
        jumps = JumpMeasure::stable(panel);
    } else if (!atoms.empty()) {
        std::vector<Atom> list;
        for (const auto& [u, w] : atoms) {
            list.push_back({u, w});
        }
        jumps = JumpMeasure::atoms(std::move(list));
    }
    return {b, sigma2, std::move(jumps)};
}

AdmissibleFamily make_family(const BranchingMechanism& phi0, double a, std::size_t grid_points, double h,
                             const std::vector<std::pair<double, double>>& atoms) {
    auto grid = std::make_shared<const Grid>(Grid::uniform(a, grid_points));
    std::vector<std::pair<double, Table>> tables;
    for (const auto& [u, w] : atoms) {
        tables.emplace_back(u, Table::constant(w));
    }
    return AdmissibleFamily::from_tables(phi0, std::move(grid), Table::constant(h), tables);
}

}  // namespace

PYBIND11_MODULE(_gwflow, m) {
    m.doc() = "Galton-Watson branching flows and their superprocess limits";

    auto base = py::register_exception<Error>(m, "GwflowError", PyExc_RuntimeError);
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<ValidityError>(m, "ValidityError", base.ptr());
    py::register_exception<PopulationCapError>(m, "PopulationCapError", base.ptr());
    py::register_exception<BlowUpError>(m, "BlowUpError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

    py::class_<BranchingMechanism>(m, "BranchingMechanism")
        .def(py::init(&make_mechanism), py::arg("b") = 0.0, py::arg("sigma2") = 0.0,
             py::arg("atoms") = std::vector<std::pair<double, double>>{}, py::arg("stable") = py::none())
        .def_property_readonly("b", &BranchingMechanism::b)
        .def_property_readonly("sigma2", &BranchingMechanism::sigma2)
        .def("__call__", &BranchingMechanism::operator(), py::arg("z"))
        .def("derivative", &BranchingMechanism::derivative, py::arg("z"))
        .def("default_gamma_constant", &BranchingMechanism::default_gamma_constant);

    py::class_<AdmissibleFamily>(m, "AdmissibleFamily")
        .def(py::init(&make_family), py::arg("phi0"), py::arg("a") = 1.0, py::arg("grid_points") = 101,
             py::arg("h") = 0.0, py::arg("atoms") = std::vector<std::pair<double, double>>{},
             "phi0 plus a theta-independent kernel psi(z) = h z + sum w (1 - exp(-u z))")
        .def_property_readonly("a", &AdmissibleFamily::a)
        .def("psi", [](const AdmissibleFamily& f, double theta, double z) { return eval_psi(f, theta, z); })
        .def("phi_q", [](const AdmissibleFamily& f, double q, double z) { return eval_phi_q(f, q, z); })
        .def("nonlocal_psi",
             [](const AdmissibleFamily& f, std::size_t x_index, const std::vector<double>& values) {
                 return eval_nonlocal_psi(f, x_index, values);
             })
        .def("grid", [](const AdmissibleFamily& f) {
            const auto nodes = f.grid().nodes();
            return std::vector<double>(nodes.begin(), nodes.end());
        });

    py::class_<Pgf>(m, "Pgf")
        .def_static("from_coefficients", &Pgf::from_coefficients, py::arg("p"))
        .def_static("identity", &Pgf::identity)
        .def("__call__", &Pgf::operator(), py::arg("s"))
        .def("derivative", &Pgf::derivative, py::arg("s"))
        .def("mean", &Pgf::mean)
        .def("coefficients", &Pgf::coefficients, py::arg("order"))
        .def("tail_mass", &Pgf::tail_mass, py::arg("order"));

    m.def("iterate", &iterate, py::arg("g"), py::arg("s"), py::arg("n"));
    m.def("build_local_pgf", &build_local_pgf, py::arg("mech"), py::arg("k"), py::arg("gamma_k"));
    m.def(
        "build_nonlocal_pgf",
        [](double h, const std::vector<std::pair<double, double>>& atoms, int k, double gamma_k) {
            ImmigrationKernel kernel{h, {}};
            for (const auto& [u, w] : atoms) {
                kernel.atoms.push_back({u, w});
            }
            return build_nonlocal_pgf(kernel, k, gamma_k);
        },
        py::arg("h"), py::arg("atoms"), py::arg("k"), py::arg("gamma_k"));
    m.def("scaled_phi_k", &scaled_phi_k, py::arg("g"), py::arg("k"), py::arg("gamma_k"), py::arg("z"));
    m.def("scaled_psi_k", &scaled_psi_k, py::arg("h"), py::arg("k"), py::arg("gamma_k"), py::arg("z"));
    m.def(
        "sampler_table",
        [](const Pgf& g, double delta_tail) {
            const auto table = make_sampler(g, delta_tail);
            std::vector<std::pair<std::uint64_t, double>> out;
            for (const auto& e : table.entries()) {
                out.emplace_back(e.value, e.probability);
            }
            return out;
        },
        py::arg("g"), py::arg("delta_tail") = kDefaultTailMass, "(count, probability) pairs of the sampling table");

    m.def(
        "solve_cumulant",
        [](const BranchingMechanism& mech, double t, double lambda, double step) {
            CumulantSolverOptions opts;
            opts.step = step;
            return solve_cumulant(mech, t, lambda, opts);
        },
        py::arg("mech"), py::arg("t"), py::arg("lam"), py::arg("step") = 1e-3);
    m.def("closed_form_cumulant", &closed_form_cumulant, py::arg("mech"), py::arg("t"), py::arg("lam"));
    m.def(
        "solve_nonlocal_cumulant",
        [](const AdmissibleFamily& family, double t, const std::vector<double>& f, double step) {
            CumulantSolverOptions opts;
            opts.step = step;
            const FunctionOnGrid fg(family.grid_ptr(), f);
            const auto v = solve_nonlocal_cumulant(family, t, fg, opts);
            return std::vector<double>(v.values().begin(), v.values().end());
        },
        py::arg("family"), py::arg("t"), py::arg("f"), py::arg("step") = 1e-3,
        "V_t f on the family grid; f gives one value per grid node");
    m.def("discrete_cumulant", &discrete_cumulant, py::arg("g"), py::arg("k"), py::arg("gamma_k"), py::arg("t"),
          py::arg("lam"));

    m.def(
        "simulate_independent",
        [](const BranchingMechanism& mech, int k, double gamma_k, const std::vector<std::uint64_t>& init,
           std::size_t generations, std::uint64_t seed, std::uint64_t replicate) {
            std::vector<Pgf> pgfs(init.size(), build_local_pgf(mech, k, gamma_k));
            const IndependentFlow flow(k, gamma_k, std::move(pgfs));
            RunControl run;
            run.master_seed = seed;
            run.replicate = replicate;
            run.generations = generations;
            return flow.simulate(init, run).snapshots.back().counts;
        },
        py::arg("mech"), py::arg("k"), py::arg("gamma_k"), py::arg("init"), py::arg("generations"),
        py::arg("seed"), py::arg("replicate") = 0, "site counts after the given number of generations");

    m.def("bundled_config_names", [] {
        std::vector<std::string> names;
        for (const auto& c : bundled_configs()) {
            names.push_back(c.name);
        }
        return names;
    });
    m.def(
        "bundled_config_json", [](const std::string& name) { return bundled_config(name).document.dump(); },
        py::arg("name"));
    m.def(
        "run_config_json",
        [](const std::string& text, unsigned workers) {
            nlohmann::json config;
            try {
                config = nlohmann::json::parse(text);
            } catch (const nlohmann::json::parse_error& e) {
                throw ConfigError(std::string("config is not valid JSON: ") + e.what());
            }
            py::gil_scoped_release release;
            const auto result = run_config(config, workers);
            return summary_json(config, result).dump();
        },
        py::arg("config"), py::arg("workers") = 0, "runs a config given as JSON text; returns the summary as JSON");
}
