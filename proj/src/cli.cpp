#include "mtp/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "mtp/adversarial.hpp"
#include "mtp/procedures.hpp"
#include "mtp/rational.hpp"
#include "mtp/simulation.hpp"

namespace mtp::cli {

namespace {

using nlohmann::json;

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path);
    if (!f) {
        throw std::runtime_error("cannot open output file: " + path);
    }
    f << text;
    if (!f) {
        throw std::runtime_error("failed writing output file: " + path);
    }
}

std::vector<double> parse_beta_list(const std::string& text) {
    std::vector<double> betas;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &pos);
        } catch (const std::exception&) {
            throw std::invalid_argument("malformed beta value: " + tok);
        }
        if (pos != tok.size()) {
            throw std::invalid_argument("malformed beta value: " + tok);
        }
        betas.push_back(v);
    }
    if (betas.empty()) {
        throw std::invalid_argument("empty beta list");
    }
    return betas;
}

json params_json(const ProcedureParams& p, Method method) {
    json j;
    j["method"] = method_name(method);
    j["s"] = p.s;
    if (p.k) j["k"] = *p.k;
    if (p.gamma) j["gamma"] = p.gamma->str();
    j["alpha"] = p.alpha;
    return j;
}

struct AdjustOptions {
    std::string input;
    std::string method;
    double alpha = 0.0;
    std::optional<std::size_t> k;
    std::string gamma;
    std::string output;
    std::string format = "json";
};

ProcedureParams make_params(Method method, std::size_t s, double alpha,
                            const std::optional<std::size_t>& k, const std::string& gamma) {
    ProcedureParams params;
    params.s = s;
    params.alpha = alpha;
    if (method == Method::kfwer_ss || method == Method::kfwer_sd) {
        if (!k) throw std::invalid_argument("--k is required for " + method_name(method));
        params.k = *k;
    }
    if (method == Method::fdp_sd || method == Method::fdp_hommel) {
        if (gamma.empty()) {
            throw std::invalid_argument("--gamma is required for " + method_name(method));
        }
        params.gamma = Rational::parse(gamma);
    }
    return params;
}

int cmd_adjust(const AdjustOptions& opt, std::ostream& out) {
    const Method method = parse_method(opt.method);
    const PValueVector pv = read_input_table(opt.input);
    const OrderedPValues ord = order_pvalues(pv);
    const ProcedureParams params =
        make_params(method, pv.size(), opt.alpha, opt.k, opt.gamma);
    const AdjustmentReport report = adjusted_pvalues(ord, method, params);

    if (opt.format == "csv") {
        std::string text = "id,p,rank,threshold,rejected,adjusted_p\n";
        for (const auto& row : report.rows) {
            text += row.id + "," + fmt17(row.p) + "," + std::to_string(row.rank) + "," +
                    fmt17(row.threshold) + "," + (row.rejected ? "true" : "false") + "," +
                    fmt17(row.adjusted_p) + "\n";
        }
        write_text(opt.output, text, out);
    } else {
        json j;
        j["command"] = "adjust";
        j["params"] = params_json(report.params, report.method);
        j["rejection_count"] = report.rejection_count;
        j["rows"] = json::array();
        for (const auto& row : report.rows) {
            j["rows"].push_back({{"id", row.id},
                                 {"p", row.p},
                                 {"rank", row.rank},
                                 {"threshold", row.threshold},
                                 {"rejected", row.rejected},
                                 {"adjusted_p", row.adjusted_p}});
        }
        write_text(opt.output, j.dump(2) + "\n", out);
    }
    return kExitOk;
}

struct ConstantsOptions {
    std::string method;
    std::size_t s = 0;
    double alpha = 0.0;
    std::optional<std::size_t> k;
    std::string gamma;
    std::string output;
};

int cmd_constants(const ConstantsOptions& opt, std::ostream& out) {
    const Method method = parse_method(opt.method);
    const ProcedureParams params =
        make_params(method, opt.s, opt.alpha, opt.k, opt.gamma);
    const std::vector<double> c = alpha_constants(method, params);
    std::string text = "i,alpha_i\n";
    for (std::size_t i = 0; i < c.size(); ++i) {
        text += std::to_string(i + 1) + "," + fmt17(c[i]) + "\n";
    }
    write_text(opt.output, text, out);
    return kExitOk;
}

struct SimulateOptions {
    std::string scenario;
    std::size_t s = 0;
    std::optional<std::size_t> s0;
    double effect = 0.0;
    double rho = 0.0;
    std::optional<std::size_t> scenario_k;
    std::optional<std::size_t> scenario_i;
    double scenario_alpha = 0.0;
    double inflate = 1.0;
    std::string scenario_betas;

    std::string procedure;
    std::optional<std::size_t> k;
    std::string gamma;
    double alpha = 0.05;

    std::size_t replicates = 0;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    std::string output;
    std::string plot_data;
};

json scenario_json(const Scenario& scn) {
    json j;
    j["kind"] = scenario_kind_name(scn.kind);
    j["s"] = scn.s;
    switch (scn.kind) {
        case ScenarioKind::independent_uniform:
        case ScenarioKind::normal_means:
            j["s0"] = scn.s0;
            j["effect"] = scn.effect;
            break;
        case ScenarioKind::equicorrelated_normal:
            j["s0"] = scn.s0;
            j["effect"] = scn.effect;
            j["rho"] = scn.rho;
            break;
        case ScenarioKind::adversarial_thm21:
            j["k"] = scn.k;
            break;
        case ScenarioKind::adversarial_thm23:
            j["k"] = scn.k;
            j["i"] = scn.i;
            j["alpha"] = scn.alpha;
            j["inflate"] = scn.inflate;
            break;
        case ScenarioKind::adversarial_lemma31:
            j["betas"] = scn.betas;
            break;
    }
    return j;
}

Scenario make_scenario(const SimulateOptions& opt) {
    Scenario scn;
    scn.kind = parse_scenario_kind(opt.scenario);
    scn.s = opt.s;
    scn.s0 = opt.s0.value_or(opt.s);
    scn.effect = opt.effect;
    scn.rho = opt.rho;
    scn.inflate = opt.inflate;
    if (opt.scenario_k) scn.k = *opt.scenario_k;
    if (opt.scenario_i) scn.i = *opt.scenario_i;
    scn.alpha = opt.scenario_alpha;
    if (!opt.scenario_betas.empty()) scn.betas = parse_beta_list(opt.scenario_betas);
    // adversarial kinds default their construction to the procedure's params
    if (scn.kind == ScenarioKind::adversarial_thm21 && scn.k == 0 && opt.k) scn.k = *opt.k;
    if (scn.kind == ScenarioKind::adversarial_thm23) {
        if (scn.k == 0 && opt.k) scn.k = *opt.k;
        if (scn.alpha == 0.0) scn.alpha = opt.alpha;
    }
    scn.validate();
    return scn;
}

int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err) {
    if (opt.replicates < 1) {
        throw std::invalid_argument("--replicates must be >= 1");
    }
    const Scenario scn = make_scenario(opt);
    ProcedureSpec proc;
    proc.method = parse_method(opt.procedure);
    proc.params = make_params(proc.method, scn.s, opt.alpha, opt.k, opt.gamma);

    std::uint64_t seed = 0;
    if (opt.seed) {
        seed = *opt.seed;
    } else {
        err << "warning: no --seed given; defaulting to 0 "
               "(runs are only reproducible with an explicit seed)\n";
    }

    const SimulationReport report =
        run_experiment(scn, proc, opt.replicates, seed, opt.threads);

    json j;
    j["command"] = "simulate";
    j["scenario"] = scenario_json(scn);
    j["procedure"] = params_json(proc.params, proc.method);
    j["replicates"] = report.replicates;
    j["seed"] = report.seed;
    j["metrics"] = json::object();
    for (const auto& [name, m] : report.metrics) {
        j["metrics"][name] = {{"estimate", m.estimate}, {"se", m.se}};
    }
    write_text(opt.output, j.dump(2) + "\n", out);

    if (!opt.plot_data.empty()) {
        std::string csv = "metric,parameter,estimate,se\n";
        const std::string param = "alpha=" + fmt17(opt.alpha);
        for (const auto& [name, m] : report.metrics) {
            csv += name + "," + param + "," + fmt17(m.estimate) + "," + fmt17(m.se) + "\n";
        }
        write_text(opt.plot_data, csv, out);
    }
    return kExitOk;
}

struct SharpnessOptions {
    std::string construction;
    std::size_t s = 0;
    std::size_t k = 0;
    std::size_t i = 0;
    double alpha = 0.0;
    double inflate = 1.0;
    std::size_t t = 0;
    std::string betas;
    double u = 0.0;
    std::size_t replicates = 0;
    std::optional<std::uint64_t> seed;
    std::string output;
    std::string plot_data;
};

struct SharpnessResult {
    double target = 0.0;
    std::size_t hits = 0;
    json params;
};

SharpnessResult run_sharpness(const SharpnessOptions& opt) {
    SharpnessResult res;
    const std::uint64_t seed = opt.seed.value_or(0);
    if (opt.construction == "thm21") {
        if (opt.s < 1 || opt.k < 1 || opt.k > opt.s) {
            throw std::invalid_argument("thm21 requires 1 <= k <= s");
        }
        if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) {
            throw std::invalid_argument("--alpha must lie in (0,1)");
        }
        const double cutoff =
            static_cast<double>(opt.k) * opt.alpha / static_cast<double>(opt.s);
        res.target = opt.alpha;
        res.params = {{"s", opt.s}, {"k", opt.k}, {"alpha", opt.alpha}};
        for (std::size_t r = 0; r < opt.replicates; ++r) {
            Rng rng = replicate_rng(seed, r);
            const AdversarialDraw d = sample_theorem21(opt.s, opt.k, rng);
            std::size_t below = 0;
            for (double p : d.pvalues) {
                if (p <= cutoff) ++below;
            }
            if (below >= opt.k) ++res.hits;
        }
    } else if (opt.construction == "thm23") {
        StepdownConstants c = constants_kfwer_stepdown(opt.s, opt.k, opt.alpha);
        if (opt.i < opt.k || opt.i > opt.s) {
            throw std::invalid_argument("thm23 requires k <= i <= s");
        }
        c.alphas[opt.i - 1] *= opt.inflate;
        res.target = opt.inflate * opt.alpha;
        res.params = {{"s", opt.s},
                      {"k", opt.k},
                      {"i", opt.i},
                      {"alpha", opt.alpha},
                      {"inflate", opt.inflate}};
        for (std::size_t r = 0; r < opt.replicates; ++r) {
            Rng rng = replicate_rng(seed, r);
            AdversarialDraw d = sample_theorem23(opt.s, opt.k, opt.i, opt.alpha, rng, opt.inflate);
            std::sort(d.pvalues.begin(), d.pvalues.end());
            bool ok = true;
            for (std::size_t j = 0; j < opt.i; ++j) {
                if (d.pvalues[j] > c.alphas[j]) {
                    ok = false;
                    break;
                }
            }
            if (ok) ++res.hits;
        }
    } else if (opt.construction == "lemma21") {
        const std::vector<double> betas = parse_beta_list(opt.betas);
        const double u = opt.u > 0.0 ? opt.u : 1.0;
        res.target = betas.back() / u;
        res.params = {{"betas", betas}, {"u", u}};
        for (std::size_t r = 0; r < opt.replicates; ++r) {
            Rng rng = replicate_rng(seed, r);
            Lemma21Draw d = sample_lemma21(betas, u, rng);
            std::sort(d.values.begin(), d.values.end());
            bool ok = true;
            for (std::size_t j = 0; j < betas.size(); ++j) {
                if (d.values[j] > betas[j]) {
                    ok = false;
                    break;
                }
            }
            if (d.certain_branch && !ok) {
                throw std::logic_error("certain branch missed an ordered threshold");
            }
            if (ok) ++res.hits;
        }
    } else if (opt.construction == "lemma31") {
        const std::vector<double> betas = parse_beta_list(opt.betas);
        if (opt.t < 1) throw std::invalid_argument("lemma31 requires --t >= 1");
        res.target = hommel_bound(opt.t, betas);
        res.params = {{"t", opt.t}, {"betas", betas}};
        for (std::size_t r = 0; r < opt.replicates; ++r) {
            Rng rng = replicate_rng(seed, r);
            const std::vector<double> values = sample_lemma31(opt.t, betas, rng);
            if (union_event_holds(values, betas)) ++res.hits;
        }
    } else {
        throw std::invalid_argument("unknown construction: " + opt.construction);
    }
    return res;
}

int cmd_sharpness(const SharpnessOptions& opt, std::ostream& out, std::ostream& err) {
    if (opt.replicates < 1) {
        throw std::invalid_argument("--replicates must be >= 1");
    }
    if (!opt.seed) {
        err << "warning: no --seed given; defaulting to 0 "
               "(runs are only reproducible with an explicit seed)\n";
    }
    const SharpnessResult res = run_sharpness(opt);
    const double n = static_cast<double>(opt.replicates);
    const double empirical = static_cast<double>(res.hits) / n;
    const double se = std::sqrt(empirical * (1.0 - empirical) / n);
    const double z = se > 0.0 ? (empirical - res.target) / se : 0.0;

    json j;
    j["command"] = "sharpness";
    j["construction"] = opt.construction;
    j["params"] = res.params;
    j["replicates"] = opt.replicates;
    j["seed"] = opt.seed.value_or(0);
    j["target"] = res.target;
    j["empirical"] = empirical;
    j["se"] = se;
    j["z"] = z;
    j["pass"] = std::fabs(z) <= 3.0;
    write_text(opt.output, j.dump(2) + "\n", out);

    if (!opt.plot_data.empty()) {
        std::string csv = "metric,parameter,estimate,se\n";
        csv += "sharpness," + opt.construction + "," + fmt17(empirical) + "," + fmt17(se) + "\n";
        write_text(opt.plot_data, csv, out);
    }
    return kExitOk;
}

}  // namespace

PValueVector read_input_table(const std::string& path) {
    std::ifstream f(path);
    if (!f) {
        throw std::runtime_error("cannot open input file: " + path);
    }
    std::string line;
    if (!std::getline(f, line)) {
        throw std::invalid_argument(path + ":1: missing header (expected `id,pvalue`)");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "id,pvalue") {
        throw std::invalid_argument(path + ":1: header must be exactly `id,pvalue`");
    }
    std::vector<PValueEntry> entries;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                        ": expected exactly two comma-separated fields");
        }
        const std::string id = line.substr(0, comma);
        const std::string pstr = line.substr(comma + 1);
        if (id.empty()) {
            throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": empty id");
        }
        double p = 0.0;
        std::size_t pos = 0;
        try {
            p = std::stod(pstr, &pos);
        } catch (const std::exception&) {
            pos = std::string::npos;
        }
        if (pos != pstr.size() || !std::isfinite(p) || p < 0.0 || p > 1.0) {
            throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                        ": pvalue must be a finite decimal in [0,1], got `" +
                                        pstr + "`");
        }
        entries.push_back({id, p});
    }
    try {
        return PValueVector(std::move(entries));
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"k-FWER and FDP controlling multiple testing procedures"};
    app.require_subcommand(1);

    AdjustOptions adj;
    auto* adjust = app.add_subcommand("adjust", "apply a procedure to a p-value table");
    adjust->add_option("--input", adj.input, "input CSV with header id,pvalue")->required();
    adjust->add_option("--method", adj.method,
                       "bonferroni|holm|kfwer-ss|kfwer-sd|fdp-sd|fdp-hommel|bh")
        ->required();
    adjust->add_option("--alpha", adj.alpha, "level in (0,1); the q of bh")->required();
    adjust->add_option("--k", adj.k, "tolerated false rejections (kfwer methods)");
    adjust->add_option("--gamma", adj.gamma, "FDP threshold, decimal or fraction (fdp methods)");
    adjust->add_option("--output", adj.output, "output path (default stdout)");
    adjust->add_option("--format", adj.format, "json|csv (default json)")
        ->check(CLI::IsMember({"json", "csv"}));

    ConstantsOptions con;
    auto* constants = app.add_subcommand("constants", "print critical constants");
    constants->add_option("--method", con.method, "procedure method")->required();
    constants->add_option("--s", con.s, "number of hypotheses")->required();
    constants->add_option("--alpha", con.alpha, "level in (0,1)")->required();
    constants->add_option("--k", con.k, "tolerated false rejections");
    constants->add_option("--gamma", con.gamma, "FDP threshold");
    constants->add_option("--output", con.output, "output path (default stdout)");

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo error-rate estimation");
    simulate->add_option("--scenario", sim.scenario, "scenario kind")->required();
    simulate->add_option("--s", sim.s, "number of hypotheses")->required();
    simulate->add_option("--s0", sim.s0, "number of true nulls");
    simulate->add_option("--effect", sim.effect, "mean shift per false null");
    simulate->add_option("--rho", sim.rho, "common correlation");
    simulate->add_option("--scenario-k", sim.scenario_k, "construction k (adversarial kinds)");
    simulate->add_option("--scenario-i", sim.scenario_i, "construction i (thm23)");
    simulate->add_option("--scenario-alpha", sim.scenario_alpha, "construction alpha (thm23)");
    simulate->add_option("--inflate", sim.inflate, "inflation factor for the last constant");
    simulate->add_option("--scenario-betas", sim.scenario_betas,
                         "comma-separated thresholds (lemma31 kind)");
    simulate->add_option("--procedure", sim.procedure, "procedure method")->required();
    simulate->add_option("--k", sim.k, "procedure k");
    simulate->add_option("--gamma", sim.gamma, "procedure gamma");
    simulate->add_option("--alpha", sim.alpha, "procedure level");
    simulate->add_option("--replicates", sim.replicates, "number of replicates")->required();
    simulate->add_option("--seed", sim.seed, "master seed");
    simulate->add_option("--threads", sim.threads, "worker threads (0 = hardware)");
    simulate->add_option("--output", sim.output, "output path (default stdout)");
    simulate->add_option("--plot-data", sim.plot_data, "write long-format CSV here");

    SharpnessOptions shp;
    auto* sharpness = app.add_subcommand("sharpness", "certify a sharpness construction");
    sharpness->add_option("--construction", shp.construction, "thm21|thm23|lemma21|lemma31")
        ->required();
    sharpness->add_option("--s", shp.s, "number of hypotheses");
    sharpness->add_option("--k", shp.k, "construction k");
    sharpness->add_option("--i", shp.i, "construction i (thm23)");
    sharpness->add_option("--alpha", shp.alpha, "construction alpha");
    sharpness->add_option("--inflate", shp.inflate, "inflation factor on the last constant");
    sharpness->add_option("--t", shp.t, "number of p-values (lemma31)");
    sharpness->add_option("--betas", shp.betas, "comma-separated thresholds");
    sharpness->add_option("--u", shp.u, "upper endpoint (lemma21)");
    sharpness->add_option("--replicates", shp.replicates, "number of replicates")->required();
    sharpness->add_option("--seed", shp.seed, "master seed");
    sharpness->add_option("--output", shp.output, "output path (default stdout)");
    sharpness->add_option("--plot-data", shp.plot_data, "write long-format CSV here");

    std::vector<const char*> argv;
    argv.push_back("mtp");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (adjust->parsed()) return cmd_adjust(adj, out);
        if (constants->parsed()) return cmd_constants(con, out);
        if (simulate->parsed()) return cmd_simulate(sim, out, err);
        if (sharpness->parsed()) return cmd_sharpness(shp, out, err);
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::runtime_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitUsage;
}

}  // namespace mtp::cli
