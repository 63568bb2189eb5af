#include "gwflow/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include "gwflow/discrete_flow.hpp"
#include "gwflow/errors.hpp"

namespace gwflow {

using nlohmann::json;

namespace detail {
// Generated from configs/*.json at build time.
extern const std::vector<std::pair<const char*, const char*>> kBundledConfigText;
}  // namespace detail

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

const json& require(const json& node, const char* key, const std::string& where) {
    if (!node.is_object() || !node.contains(key)) {
        bad(where, std::string("missing field '") + key + "'");
    }
    return node.at(key);
}

double number(const json& node, const std::string& where) {
    if (!node.is_number()) {
        bad(where, "expected a number");
    }
    return node.get<double>();
}

double number_or(const json& node, const char* key, double fallback, const std::string& where) {
    if (!node.is_object() || !node.contains(key)) {
        return fallback;
    }
    return number(node.at(key), where + "." + key);
}

long long integer(const json& node, const std::string& where) {
    if (!node.is_number_integer()) {
        bad(where, "expected an integer");
    }
    return node.get<long long>();
}

long long integer_or(const json& node, const char* key, long long fallback, const std::string& where) {
    if (!node.is_object() || !node.contains(key)) {
        return fallback;
    }
    return integer(node.at(key), where + "." + key);
}

std::string string_or(const json& node, const char* key, std::string fallback, const std::string& where) {
    if (!node.is_object() || !node.contains(key)) {
        return fallback;
    }
    if (!node.at(key).is_string()) {
        bad(where + "." + key, "expected a string");
    }
    return node.at(key).get<std::string>();
}

std::vector<double> numbers(const json& node, const std::string& where) {
    if (!node.is_array()) {
        bad(where, "expected an array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < node.size(); ++i) {
        out.push_back(number(node[i], where + "[" + std::to_string(i) + "]"));
    }
    return out;
}

std::vector<int> ladder_of(const json& config) {
    const auto& node = require(config, "k_ladder", "config");
    if (!node.is_array() || node.empty()) {
        bad("config.k_ladder", "expected a nonempty array of integers");
    }
    std::vector<int> out;
    for (std::size_t i = 0; i < node.size(); ++i) {
        const auto k = integer(node[i], "config.k_ladder");
        if (k < 1 || (!out.empty() && k <= out.back())) {
            bad("config.k_ladder", "must be strictly increasing positive integers");
        }
        out.push_back(static_cast<int>(k));
    }
    return out;
}

int k_of(const json& config) {
    const auto k = integer(require(config, "k", "config"), "config.k");
    if (k < 1) {
        bad("config.k", "must be at least 1");
    }
    return static_cast<int>(k);
}

BranchingMechanism mechanism_of(const json& node, const std::string& where) {
    if (!node.is_object()) {
        bad(where, "expected an object {b, sigma2, jumps}");
    }
    JumpMeasure jumps;
    if (node.contains("jumps") && !node.at("jumps").is_null()) {
        const auto& j = node.at("jumps");
        const auto kind = string_or(j, "kind", "atoms", where + ".jumps");
        if (kind == "atoms") {
            std::vector<Atom> atoms;
            const auto& list = require(j, "atoms", where + ".jumps");
            if (!list.is_array()) {
                bad(where + ".jumps.atoms", "expected [[u, w], ...]");
            }
            for (const auto& pair : list) {
                const auto uw = numbers(pair, where + ".jumps.atoms");
                if (uw.size() != 2) {
                    bad(where + ".jumps.atoms", "expected [[u, w], ...]");
                }
                atoms.push_back({uw[0], uw[1]});
            }
            try {
                jumps = JumpMeasure::atoms(std::move(atoms));
            } catch (const DomainError& e) {
                bad(where + ".jumps", e.what());
            }
        } else if (kind == "stable") {
            StablePanel panel;
            const std::string w = where + ".jumps";
            panel.alpha = number_or(j, "alpha", panel.alpha, w);
            panel.scale = number_or(j, "scale", panel.scale, w);
            panel.eps = number_or(j, "eps", panel.eps, w);
            panel.cap = number_or(j, "cap", panel.cap, w);
            panel.nodes = static_cast<int>(integer_or(j, "nodes", panel.nodes, w));
            try {
                jumps = JumpMeasure::stable(panel);
            } catch (const DomainError& e) {
                bad(where + ".jumps", e.what());
            }
        } else if (kind != "empty") {
            bad(where + ".jumps.kind", "expected empty, atoms or stable");
        }
    }
    try {
        return {number_or(node, "b", 0.0, where), number_or(node, "sigma2", 0.0, where), std::move(jumps)};
    } catch (const DomainError& e) {
        bad(where, e.what());
    }
}

double domain_of(const json& config) {
    const double a = number_or(config, "a", 1.0, "config");
    if (!(a > 0.0)) {
        bad("config.a", "must be positive");
    }
    return a;
}

GridPtr model_grid(const json& config) {
    const auto n = integer_or(config, "grid_points", 101, "config");
    if (n < 2) {
        bad("config.grid_points", "must be at least 2");
    }
    return std::make_shared<const Grid>(Grid::uniform(domain_of(config), static_cast<std::size_t>(n)));
}

// "field": [{"from": x0, "mechanism": {...}}, ...]; the region with the
// largest from <= x applies. Without it, "mechanism" applies everywhere.
MechanismField field_of(const json& config, GridPtr grid) {
    if (!config.contains("field")) {
        return MechanismField::uniform(std::move(grid), mechanism_of(require(config, "mechanism", "config"),
                                                                     "config.mechanism"));
    }
    const auto& regions = config.at("field");
    if (!regions.is_array() || regions.empty()) {
        bad("config.field", "expected a nonempty array of regions");
    }
    std::vector<std::pair<double, BranchingMechanism>> parsed;
    for (std::size_t i = 0; i < regions.size(); ++i) {
        const std::string where = "config.field[" + std::to_string(i) + "]";
        parsed.emplace_back(number_or(regions[i], "from", 0.0, where),
                            mechanism_of(require(regions[i], "mechanism", where), where + ".mechanism"));
    }
    std::sort(parsed.begin(), parsed.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
    std::vector<BranchingMechanism> mechs;
    for (double x : grid->nodes()) {
        const BranchingMechanism* chosen = &parsed.front().second;
        for (const auto& [from, mech] : parsed) {
            if (from <= x + 1e-12) {
                chosen = &mech;
            }
        }
        mechs.push_back(*chosen);
    }
    return {std::move(grid), std::move(mechs)};
}

// A constant or [[θ, value], ...] piecewise-linear table.
Table table_of(const json& node, const std::string& where) {
    if (node.is_number()) {
        return Table::constant(node.get<double>());
    }
    if (!node.is_array() || node.empty()) {
        bad(where, "expected a number or [[theta, value], ...]");
    }
    std::vector<double> xs, ys;
    for (const auto& pair : node) {
        const auto xy = numbers(pair, where);
        if (xy.size() != 2) {
            bad(where, "expected [[theta, value], ...]");
        }
        xs.push_back(xy[0]);
        ys.push_back(xy[1]);
    }
    try {
        return {std::move(xs), std::move(ys)};
    } catch (const DomainError& e) {
        bad(where, e.what());
    }
}

AdmissibleFamily family_of(const json& config, GridPtr grid) {
    const auto phi0 = mechanism_of(require(config, "mechanism", "config"), "config.mechanism");
    if (!config.contains("psi") || config.at("psi").is_null()) {
        return AdmissibleFamily::local_only(phi0, std::move(grid));
    }
    const auto& psi = config.at("psi");
    const Table h = psi.contains("h") ? table_of(psi.at("h"), "config.psi.h") : Table::constant(0.0);
    std::vector<std::pair<double, Table>> atoms;
    if (psi.contains("atoms")) {
        const auto& list = psi.at("atoms");
        if (!list.is_array()) {
            bad("config.psi.atoms", "expected [{u, w}, ...]");
        }
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string where = "config.psi.atoms[" + std::to_string(i) + "]";
            const double u = number(require(list[i], "u", where), where + ".u");
            if (!(u > 0.0)) {
                bad(where + ".u", "must be positive");
            }
            atoms.emplace_back(u, table_of(require(list[i], "w", where), where + ".w"));
        }
    }
    auto family = AdmissibleFamily::from_tables(phi0, std::move(grid), h, atoms);
    const auto report = validate_admissible(family);
    if (!report.pass) {
        throw ValidityError("admissible family rejected: " + report.message, 0);
    }
    return family;
}

GammaRule gamma_of(const json& config, double default_constant) {
    if (!config.contains("gamma")) {
        return linear_gamma(default_constant);
    }
    const double c = number(require(config.at("gamma"), "C", "config.gamma"), "config.gamma.C");
    if (!(c > 0.0)) {
        bad("config.gamma.C", "must be positive");
    }
    return linear_gamma(c);
}

double family_gamma_constant(const AdmissibleFamily& family) {
    return family.phi0().default_gamma_constant() + family.admissibility_bound();
}

TestFunction test_function_of(const json& config) {
    if (!config.contains("test_function")) {
        return [](double) { return 1.0; };
    }
    const auto& node = config.at("test_function");
    const auto kind = string_or(node, "kind", "constant", "config.test_function");
    if (kind == "constant") {
        const double value = number_or(node, "value", 1.0, "config.test_function");
        if (!(value >= 0.0)) {
            bad("config.test_function.value", "must be nonnegative");
        }
        return [value](double) { return value; };
    }
    if (kind == "step") {
        const auto points = numbers(require(node, "points", "config.test_function"), "config.test_function.points");
        const auto weights =
            numbers(require(node, "weights", "config.test_function"), "config.test_function.weights");
        try {
            return step_test_function(points, weights);
        } catch (const DomainError& e) {
            bad("config.test_function", e.what());
        }
    }
    if (kind == "table") {
        const auto xs = numbers(require(node, "x", "config.test_function"), "config.test_function.x");
        const auto ys = numbers(require(node, "y", "config.test_function"), "config.test_function.y");
        if (std::any_of(ys.begin(), ys.end(), [](double y) { return !(y >= 0.0); })) {
            bad("config.test_function.y", "must be nonnegative");
        }
        try {
            Table table(xs, ys);
            return [table = std::move(table)](double x) { return table(x); };
        } catch (const DomainError& e) {
            bad("config.test_function", e.what());
        }
    }
    bad("config.test_function.kind", "expected constant, step or table");
}

// Initial measures live on the 1/k lattice:
//   {"kind": "unit_lattice", "count": c}   c individuals at every site
//   {"kind": "atoms", "atoms": [[x, mass], ...]}
//   {"kind": "csv", "path": "..."}           location,mass file
StepMeasure measure_of(const json& node, const std::string& where, int k, double a) {
    const auto kind = string_or(node, "kind", "unit_lattice", where);
    if (kind == "unit_lattice") {
        const auto count = integer_or(node, "count", 1, where);
        if (count < 0) {
            bad(where + ".count", "must be nonnegative");
        }
        std::vector<std::uint64_t> counts(site_count(k, a), static_cast<std::uint64_t>(count));
        return StepMeasure::lattice(k, counts, a);
    }
    if (kind == "atoms") {
        std::vector<MeasureAtom> atoms;
        for (const auto& pair : require(node, "atoms", where)) {
            const auto xm = numbers(pair, where + ".atoms");
            if (xm.size() != 2) {
                bad(where + ".atoms", "expected [[x, mass], ...]");
            }
            atoms.push_back({xm[0], xm[1]});
        }
        try {
            return {a, std::move(atoms)};
        } catch (const DomainError& e) {
            bad(where, e.what());
        }
    }
    if (kind == "csv") {
        const auto path = string_or(node, "path", "", where);
        std::ifstream in(path);
        if (!in) {
            bad(where + ".path", "cannot open " + path);
        }
        try {
            return read_measure_csv(in);
        } catch (const DomainError& e) {
            bad(where, e.what());
        }
    }
    bad(where + ".kind", "expected unit_lattice, atoms or csv");
}

CumulantSolverOptions solver_of(const json& config) {
    CumulantSolverOptions opts;
    if (config.contains("solver")) {
        opts.step = number_or(config.at("solver"), "step", opts.step, "config.solver");
        opts.blowup = number_or(config.at("solver"), "blowup", opts.blowup, "config.solver");
    }
    if (!(opts.step > 0.0)) {
        bad("config.solver.step", "must be positive");
    }
    return opts;
}

const json& tolerances(const json& config) {
    static const json empty = json::object();
    return config.contains("tolerances") ? config.at("tolerances") : empty;
}

MonteCarloOptions mc_options_of(const json& config, unsigned workers) {
    MonteCarloOptions opts;
    const auto replicates = integer(require(config, "replicates", "config"), "config.replicates");
    if (replicates < 1) {
        bad("config.replicates", "must be at least 1");
    }
    opts.replicates = static_cast<std::size_t>(replicates);
    const auto& seed = require(config, "seed", "config");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
        bad("config.seed", "expected a nonnegative integer");
    }
    opts.seed = seed.get<std::uint64_t>();
    opts.workers = workers != 0 ? workers : static_cast<unsigned>(std::max(1LL, integer_or(config, "workers", 1, "config")));
    const auto& tol = tolerances(config);
    opts.bias_coefficient = number_or(tol, "bias_coefficient", opts.bias_coefficient, "config.tolerances");
    opts.z_score = number_or(tol, "z_score", opts.z_score, "config.tolerances");
    opts.delta_tail = number_or(tol, "delta_tail", opts.delta_tail, "config.tolerances");
    opts.oracle_refinement = static_cast<int>(integer_or(config, "oracle_refinement", opts.oracle_refinement, "config"));
    opts.solver = solver_of(config);
    return opts;
}

double time_of(const json& config) {
    const double t = number(require(config, "t", "config"), "config.t");
    if (!(t >= 0.0)) {
        bad("config.t", "must be nonnegative");
    }
    return t;
}

bool interactive(const json& config) {
    const auto model = string_or(config, "model", "independent", "config");
    if (model != "independent" && model != "interactive") {
        bad("config.model", "expected independent or interactive");
    }
    return model == "interactive";
}

// MC models live on the lattice of the run's k so that x ∨ θ stays exact.
ModelSpec mc_model(const json& config, int k) {
    const double a = domain_of(config);
    if (interactive(config)) {
        return family_of(config, std::make_shared<const Grid>(Grid::lattice(k, a)));
    }
    return field_of(config, model_grid(config));
}

double mc_gamma_constant(const ModelSpec& model) {
    if (const auto* field = std::get_if<MechanismField>(&model)) {
        double c = 0.0;
        for (std::size_t i = 0; i < field->grid().size(); ++i) {
            c = std::max(c, field->node(i).default_gamma_constant());
        }
        return c;
    }
    return family_gamma_constant(std::get<AdmissibleFamily>(model));
}

ExperimentResult run_closed_form(const json& config) {
    const auto solver = solver_of(config);
    const double tol = number_or(tolerances(config), "closed_form", 1e-6, "config.tolerances");
    const auto& cases = require(config, "cases", "config");
    if (!cases.is_array() || cases.empty()) {
        bad("config.cases", "expected a nonempty array");
    }
    ExperimentResult result;
    result.tag = "closed_form";
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const std::string where = "config.cases[" + std::to_string(i) + "]";
        const auto mech = mechanism_of(require(cases[i], "mechanism", where), where + ".mechanism");
        const double t = number(require(cases[i], "t", where), where + ".t");
        const double lambda = number(require(cases[i], "lambda", where), where + ".lambda");
        const auto one = closed_form_check(mech, t, lambda, tol, solver);
        auto rung = one.rungs.front();
        rung.k = static_cast<int>(i);
        result.rungs.push_back(rung);
        result.verdicts.push_back({"case_" + std::to_string(i), rung.pass, one.verdicts.front().detail});
        result.wall_clock_seconds += one.wall_clock_seconds;
    }
    return result;
}

ExperimentResult dispatch(const json& config, unsigned workers) {
    const auto experiment = require(config, "experiment", "config").get<std::string>();
    if (experiment == "closed_form") {
        return run_closed_form(config);
    }
    if (experiment == "cumulant_convergence") {
        const auto mech = mechanism_of(require(config, "mechanism", "config"), "config.mechanism");
        LadderOptions opts;
        opts.final_bound = number_or(tolerances(config), "final_bound", opts.final_bound, "config.tolerances");
        opts.slack = number_or(tolerances(config), "slack", opts.slack, "config.tolerances");
        opts.solver = solver_of(config);
        const auto ladder = ladder_of(config);
        return cumulant_convergence(mech, ladder, gamma_of(config, mech.default_gamma_constant()), time_of(config),
                                    number(require(config, "lambda", "config"), "config.lambda"), opts);
    }
    if (experiment == "condition_3a") {
        const auto field = field_of(config, model_grid(config));
        const auto z = numbers(require(config, "z_grid", "config"), "config.z_grid");
        if (z.size() < 2) {
            bad("config.z_grid", "needs at least two points");
        }
        const auto ladder = ladder_of(config);
        return condition_3a_audit(field, ladder, gamma_of(config, mc_gamma_constant(field)), z);
    }
    if (experiment == "mc_laplace" || experiment == "fdd_flow") {
        const int k = k_of(config);
        const auto model = mc_model(config, k);
        const auto init =
            measure_of(config.contains("initial") ? config.at("initial") : json::object(), "config.initial", k,
                       domain_of(config));
        const auto gamma = gamma_of(config, mc_gamma_constant(model));
        const auto opts = mc_options_of(config, workers);
        if (experiment == "mc_laplace") {
            return mc_laplace(model, init, test_function_of(config), time_of(config), k, gamma, opts);
        }
        const auto points = numbers(require(config, "points", "config"), "config.points");
        const auto weights = numbers(require(config, "weights", "config"), "config.weights");
        if (points.size() != weights.size()) {
            bad("config.weights", "needs one weight per point");
        }
        return fdd_flow(model, init, points, weights, time_of(config), k, gamma, opts);
    }
    if (experiment == "degeneration") {
        const int k = k_of(config);
        const double a = domain_of(config);
        const auto phi0 = mechanism_of(require(config, "mechanism", "config"), "config.mechanism");
        const auto init = measure_of(config.contains("initial") ? config.at("initial") : json::object(),
                                     "config.initial", k, a);
        return degeneration_check(phi0, init, a, time_of(config), k, gamma_of(config, phi0.default_gamma_constant()),
                                  mc_options_of(config, workers));
    }
    if (experiment == "generator_gap") {
        const auto ladder = ladder_of(config);
        const double a = domain_of(config);
        // Every rung's lattice is a sublattice of the reference lattice.
        GeneratorOptions opts;
        opts.final_relative_bound =
            number_or(tolerances(config), "final_relative", opts.final_relative_bound, "config.tolerances");
        const auto family =
            family_of(config, std::make_shared<const Grid>(Grid::lattice(ladder.back() * opts.reference_refinement, a)));
        const auto nu = measure_of(require(config, "nu", "config"), "config.nu", ladder.front(), a);
        return generator_gap(family, nu, test_function_of(config), ladder,
                             gamma_of(config, family_gamma_constant(family)), opts);
    }
    if (experiment == "nonlocal_endpoint") {
        const auto family = family_of(config, model_grid(config));
        const double f = number_or(config, "f_value", 1.0, "config");
        return nonlocal_endpoint(family, time_of(config), f,
                                 number_or(tolerances(config), "endpoint", 1e-4, "config.tolerances"),
                                 solver_of(config));
    }
    if (experiment == "metric_audit") {
        MetricAuditOptions opts;
        const json& m = config.contains("metric") ? config.at("metric") : json::object();
        opts.a = domain_of(config);
        opts.lattice_k = static_cast<int>(integer_or(m, "lattice_k", opts.lattice_k, "config.metric"));
        opts.family_size = static_cast<std::size_t>(integer_or(m, "family_size", 32, "config.metric"));
        opts.fuzz_triples = static_cast<std::size_t>(integer_or(m, "fuzz_triples", 1000, "config.metric"));
        opts.corpus_size = static_cast<std::size_t>(integer_or(m, "corpus_size", 100, "config.metric"));
        opts.delta = number_or(m, "delta", opts.delta, "config.metric");
        opts.seed = static_cast<std::uint64_t>(integer(require(config, "seed", "config"), "config.seed"));
        return metric_audit(opts);
    }
    bad("config.experiment", "unknown experiment '" + experiment + "'");
}

}  // namespace

const std::vector<BundledConfig>& bundled_configs() {
    static const std::vector<BundledConfig> configs = [] {
        std::vector<BundledConfig> out;
        for (const auto& [name, text] : detail::kBundledConfigText) {
            auto doc = json::parse(text);
            out.push_back({name, doc.value("anchor", std::string{}), std::move(doc)});
        }
        std::sort(out.begin(), out.end(), [](const auto& l, const auto& r) { return l.name < r.name; });
        return out;
    }();
    return configs;
}

const BundledConfig& bundled_config(std::string_view name) {
    for (const auto& c : bundled_configs()) {
        if (c.name == name) {
            return c;
        }
    }
    throw ConfigError("no bundled config named '" + std::string(name) + "'");
}

json load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
}

void apply_override(json& config, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
    }
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    json* node = &config;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) {
            throw ConfigError("override key '" + key + "' has an empty component");
        }
        if (!node->is_object()) {
            throw ConfigError("override key '" + key + "' descends into a non-object");
        }
        if (dot == std::string::npos) {
            (*node)[part] = std::move(value);
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) {
            *node = json::object();
        }
        start = dot + 1;
    }
}

void validate_config(const json& config) {
    if (!config.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    if (!config.contains("schema") || config.at("schema") != kConfigSchema) {
        throw ConfigError("config.schema must be \"" + std::string(kConfigSchema) + "\"");
    }
    if (!config.contains("experiment") || !config.at("experiment").is_string()) {
        throw ConfigError("config.experiment must name an experiment");
    }
    const auto experiment = config.at("experiment").get<std::string>();
    const bool stochastic = experiment == "mc_laplace" || experiment == "fdd_flow" ||
                            experiment == "degeneration" || experiment == "metric_audit";
    if (stochastic && !config.contains("seed")) {
        throw ConfigError("config.seed is required for " + experiment);
    }
}

ExperimentResult run_config(const json& config, unsigned workers) {
    validate_config(config);
    try {
        return dispatch(config, workers);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config has the wrong shape: ") + e.what());
    }
}

json summary_json(const json& config, const ExperimentResult& result) {
    json verdicts = json::array();
    for (const auto& v : result.verdicts) {
        verdicts.push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
    }
    json rungs = json::array();
    for (const auto& r : result.rungs) {
        rungs.push_back({{"k", r.k},
                         {"estimate", r.estimate},
                         {"standard_error", r.standard_error},
                         {"oracle", r.oracle},
                         {"gap", r.gap},
                         {"allowance", r.allowance},
                         {"pass", r.pass}});
    }
    json extras = json::object();
    for (const auto& [key, value] : result.extras) {
        extras[key] = value;
    }
    return {{"schema", kConfigSchema},
            {"name", config.value("name", std::string{})},
            {"experiment", result.tag},
            {"passed", result.passed()},
            {"ladder", result.ladder},
            {"rungs", rungs},
            {"verdicts", verdicts},
            {"extras", extras},
            {"wall_clock_seconds", result.wall_clock_seconds},
            {"config", config}};
}

void write_artifacts(const std::filesystem::path& dir, const json& config, const ExperimentResult& result) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
    }
    std::ofstream csv(dir / "results.csv");
    write_result_csv(csv, result);
    std::ofstream summary(dir / "summary.json");
    summary << summary_json(config, result).dump(2) << '\n';
    if (!csv || !summary) {
        throw Error("failed to write artifacts under " + dir.string());
    }
}

int exit_code_for(const std::exception& e) noexcept {
    if (dynamic_cast<const ConfigError*>(&e)) {
        return kExitSchema;
    }
    if (dynamic_cast<const ValidityError*>(&e)) {
        return kExitValidity;
    }
    return kExitRuntime;
}

}  // namespace gwflow
