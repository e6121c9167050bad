// toddlab: orbit iteration, invariants, Lyapunov checks, energy-inequality
// checking and boundedness experiments for the third-order rational
// difference equation z[n+1] = (alpha + beta*z[n] + lambda*z[n-1]) / z[n-2].
//
// Exit codes: 0 success; 1 usage or flag validation error; 2 domain error
// (DegenerateStep, BitLimitExceeded, NotToddForm, ...); 3 a verification
// subcommand found a violation.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "toddlab/toddlab.hpp"

namespace {

using namespace toddlab;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDomain = 2;
constexpr int kExitViolation = 3;

struct GlobalOptions {
    std::string precision = "f64";
    double tol = kDefaultRelTolerance;
    std::uint64_t seed = 0;
    std::string format = "plain";
    std::string out;

    Mode mode() const {
        if (precision == "exact") return Mode::Exact;
        if (precision == "f64") return Mode::Float64;
        raise(Errc::InvalidArgument, "precision must be exact or f64");
    }
};

// Flag values are validated before any computation: malformed numbers and
// invalid parameter combinations are usage errors, not domain errors.
Scalar flag_scalar(const std::string& text, Mode mode, const char* flag) {
    try {
        return parse_scalar(text, mode);
    } catch (const Error& e) {
        throw CLI::ValidationError(std::string(flag) + ": " + e.what());
    }
}

State3 flag_state(const std::string& text, Mode mode, const char* flag) {
    try {
        return parse_state(text, mode);
    } catch (const Error& e) {
        throw CLI::ValidationError(std::string(flag) + ": " + e.what());
    }
}

// Map flags shared by step/orbit/classify: either the raw triple or a
// normalized form.
struct MapFlags {
    std::string alpha, beta, lambda, c, a;

    StepMap build(Mode mode) const {
        const bool has_general = !alpha.empty() || !beta.empty() || !lambda.empty();
        const bool has_c = !c.empty();
        if (has_general && has_c)
            throw CLI::ValidationError("--alpha/--beta/--lambda and --c are mutually exclusive");
        try {
            if (has_general) {
                if (alpha.empty() || beta.empty() || lambda.empty())
                    throw CLI::ValidationError("--alpha, --beta and --lambda must be given together");
                return Params(flag_scalar(alpha, mode, "--alpha"), flag_scalar(beta, mode, "--beta"),
                              flag_scalar(lambda, mode, "--lambda"));
            }
            if (!has_c) throw CLI::ValidationError("give either --c [--a] or --alpha --beta --lambda");
            if (!a.empty())
                return NormalizedTwoParam(flag_scalar(c, mode, "--c"), flag_scalar(a, mode, "--a"));
            return NormalizedTodd(flag_scalar(c, mode, "--c"));
        } catch (const Error& e) {
            throw CLI::ValidationError(e.what());
        }
    }

    void attach(CLI::App* cmd) {
        cmd->add_option("--alpha", alpha, "alpha coefficient");
        cmd->add_option("--beta", beta, "beta coefficient");
        cmd->add_option("--lambda", lambda, "lambda coefficient");
        cmd->add_option("--c", c, "normalized parameter c");
        cmd->add_option("--a", a, "two-parameter asymmetry a (with --c)");
    }
};

Json map_params_json(const StepMap& map) {
    const MapDescription d = describe_map(map);
    Json obj;
    if (d.alpha) obj["alpha"] = to_string(*d.alpha);
    if (d.beta) obj["beta"] = to_string(*d.beta);
    if (d.lambda) obj["lambda"] = to_string(*d.lambda);
    if (d.c) obj["c"] = to_string(*d.c);
    if (d.a) obj["a"] = to_string(*d.a);
    return obj;
}

Json state_json(const State3& s) {
    return Json::array({to_string(s.oldest()), to_string(s.middle()), to_string(s.newest())});
}

EnergyCandidate parse_candidate(const std::string& name, const std::string& base, std::size_t stride,
                                std::size_t depth, const StepMap& map) {
    if (name == "invariant") return EnergyCandidate::todd_invariant();
    if (name == "sum") return EnergyCandidate::sum_coordinates();
    if (name == "max") return EnergyCandidate::max_coordinate();
    if (name == "max-comp") {
        EnergyCandidate f0 = parse_candidate(base.empty() ? "max" : base, "", 1, 0, map);
        return build_max_composition(std::move(f0), stride, depth == 0 ? 1 : depth, map);
    }
    throw CLI::ValidationError("--candidate must be invariant, sum, max or max-comp");
}

std::vector<State3> seeded_states(Mode mode, std::uint64_t seed, std::size_t count, double lo, double hi) {
    std::vector<State3> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        SplitMix64 rng = substream(seed, i);
        out.push_back(sample_state(rng, mode, lo, hi));
    }
    return out;
}

void emit(const GlobalOptions& global, CommandOutput output) {
    write_output(output, parse_format(global.format), global.out);
}

OutputTable classification_table(const ClassificationReport& rep) {
    OutputTable t;
    t.columns = {"verdict", "period", "max_value", "min_value", "steps_run", "escape_step", "evidence"};
    t.rows.push_back({verdict_name(rep.verdict), rep.period ? std::to_string(*rep.period) : "",
                      to_string(rep.max_value), to_string(rep.min_value), std::to_string(rep.steps_run),
                      rep.escape_step ? std::to_string(*rep.escape_step) : "", rep.evidence});
    return t;
}

Json classification_json(const ClassificationReport& rep) {
    Json obj;
    obj["verdict"] = verdict_name(rep.verdict);
    obj["period"] = rep.period ? Json(*rep.period) : Json(nullptr);
    obj["max_value"] = to_string(rep.max_value);
    obj["min_value"] = to_string(rep.min_value);
    obj["steps_run"] = rep.steps_run;
    obj["escape_step"] = rep.escape_step ? Json(*rep.escape_step) : Json(nullptr);
    obj["evidence"] = rep.evidence;
    return obj;
}

Json witness_json(const ViolationWitness& w) {
    Json obj;
    obj["state"] = state_json(w.state);
    obj["lhs"] = to_string(w.lhs);
    obj["rhs"] = to_string(w.rhs);
    obj["inequality"] = w.inequality;
    return obj;
}

int run(int argc, char** argv) {
    CLI::App app{"numerical laboratory for z[n+1] = (alpha + beta*z[n] + lambda*z[n-1]) / z[n-2]"};
    app.require_subcommand(1);
    app.fallthrough();
    app.failure_message(CLI::FailureMessage::simple);

    GlobalOptions global;
    app.add_option("--precision", global.precision, "numeric mode: exact | f64")
        ->check(CLI::IsMember({"exact", "f64"}));
    app.add_option("--tol", global.tol, "relative comparison tolerance (f64 mode)");
    app.add_option("--seed", global.seed, "seed for all randomized subcommands");
    app.add_option("--format", global.format, "output format: json | csv | plain")
        ->check(CLI::IsMember({"json", "csv", "plain"}));
    app.add_option("--out", global.out, "write output to this file instead of stdout");

    int exit_code = kExitOk;

    // step
    auto* step_cmd = app.add_subcommand("step", "apply the map n times and print the final state")->fallthrough();
    auto step_map = std::make_shared<MapFlags>();
    step_map->attach(step_cmd);
    auto step_state = std::make_shared<std::string>();
    auto step_n = std::make_shared<std::size_t>(1);
    step_cmd->add_option("--state", *step_state, "initial state x0,x1,x2")->required();
    step_cmd->add_option("--n", *step_n, "number of steps (default 1)");
    step_cmd->callback([&, step_map, step_state, step_n] {
        const Mode mode = global.mode();
        const StepMap map = step_map->build(mode);
        State3 s = flag_state(*step_state, mode, "--state");
        for (std::size_t i = 0; i < *step_n; ++i) s = apply_step(map, s);
        CommandOutput out;
        out.command = "step";
        out.params = map_params_json(map);
        out.params["n"] = *step_n;
        Json row;
        row["state"] = state_json(s);
        out.results.push_back(row);
        out.table.columns = {"x0", "x1", "x2"};
        out.table.rows.push_back({to_string(s.oldest()), to_string(s.middle()), to_string(s.newest())});
        emit(global, std::move(out));
    });

    // orbit
    auto* orbit_cmd = app.add_subcommand("orbit", "iterate and list every value of the orbit")->fallthrough();
    auto orbit_map = std::make_shared<MapFlags>();
    orbit_map->attach(orbit_cmd);
    auto orbit_state = std::make_shared<std::string>();
    auto orbit_steps = std::make_shared<std::size_t>(0);
    auto orbit_trace = std::make_shared<bool>(false);
    orbit_cmd->add_option("--state", *orbit_state, "initial state x0,x1,x2")->required();
    orbit_cmd->add_option("--steps", *orbit_steps, "number of steps")->required();
    orbit_cmd->add_flag("--trace-invariant", *orbit_trace, "record the Todd invariant per window");
    orbit_cmd->callback([&, orbit_map, orbit_state, orbit_steps, orbit_trace] {
        const Mode mode = global.mode();
        const StepMap map = orbit_map->build(mode);
        if (*orbit_trace && !is_todd_form(map))
            throw CLI::ValidationError("--trace-invariant requires a Todd-form map (--c without --a)");
        const State3 s0 = flag_state(*orbit_state, mode, "--state");
        const OrbitRecord rec = iterate_orbit_with_invariant(map, s0, *orbit_steps, *orbit_trace);
        CommandOutput out;
        out.command = "orbit";
        out.params = map_params_json(map);
        out.params["steps"] = *orbit_steps;
        Json row;
        Json values = Json::array();
        for (const auto& v : rec.values) values.push_back(to_string(v));
        row["values"] = values;
        if (!rec.invariant_trace.empty()) {
            Json trace = Json::array();
            for (const auto& v : rec.invariant_trace) trace.push_back(to_string(v));
            row["invariant"] = trace;
        }
        row["max_value"] = to_string(rec.max_value);
        row["min_value"] = to_string(rec.min_value);
        row["steps"] = rec.steps;
        if (rec.failure) {
            Json failure;
            failure["code"] = errc_name(rec.failure->code);
            failure["message"] = rec.failure->message;
            failure["at_step"] = rec.failure->at_step;
            row["failure"] = failure;
        }
        out.results.push_back(row);
        out.table.columns = {"n", "value", "invariant"};
        for (std::size_t i = 0; i < rec.values.size(); ++i) {
            std::string inv;
            if (i >= 2 && i - 2 < rec.invariant_trace.size()) inv = to_string(rec.invariant_trace[i - 2]);
            out.table.rows.push_back({std::to_string(i), to_string(rec.values[i]), inv});
        }
        emit(global, std::move(out));
        if (rec.failure) raise(rec.failure->code, rec.failure->message);
    });

    // invariant
    auto* inv_cmd = app.add_subcommand("invariant", "evaluate the Todd invariant at a state")->fallthrough();
    auto inv_c = std::make_shared<std::string>();
    auto inv_state = std::make_shared<std::string>();
    inv_cmd->add_option("--c", *inv_c, "Todd parameter c")->required();
    inv_cmd->add_option("--state", *inv_state, "state x0,x1,x2")->required();
    inv_cmd->callback([&, inv_c, inv_state] {
        const Mode mode = global.mode();
        const Scalar c = flag_scalar(*inv_c, mode, "--c");
        const State3 s = flag_state(*inv_state, mode, "--state");
        const Scalar value = todd_invariant(c, s);
        CommandOutput out;
        out.command = "invariant";
        out.params["c"] = to_string(c);
        out.params["state"] = state_json(s);
        Json row;
        row["invariant"] = to_string(value);
        out.results.push_back(row);
        out.table.columns = {"invariant"};
        out.table.rows.push_back({to_string(value)});
        emit(global, std::move(out));
    });

    // lyapunov
    auto* lya_cmd = app.add_subcommand("lyapunov", "evaluate V = I - I(p,p,p) at a state")->fallthrough();
    auto lya_c = std::make_shared<std::string>();
    auto lya_state = std::make_shared<std::string>();
    lya_cmd->add_option("--c", *lya_c, "Todd parameter c")->required();
    lya_cmd->add_option("--state", *lya_state, "state x0,x1,x2")->required();
    lya_cmd->callback([&, lya_c, lya_state] {
        const Mode mode = global.mode();
        const Scalar c = flag_scalar(*lya_c, mode, "--c");
        const State3 s = flag_state(*lya_state, mode, "--state");
        const Scalar value = lyapunov_value(c, s);
        CommandOutput out;
        out.command = "lyapunov";
        out.params["c"] = to_string(c);
        out.params["state"] = state_json(s);
        Json row;
        row["V"] = to_string(value);
        out.results.push_back(row);
        out.table.columns = {"V"};
        out.table.rows.push_back({to_string(value)});
        emit(global, std::move(out));
    });

    // fixed-point
    auto* fp_cmd = app.add_subcommand("fixed-point", "the fixed point of the two-parameter map")->fallthrough();
    auto fp_a = std::make_shared<std::string>();
    auto fp_c = std::make_shared<std::string>();
    fp_cmd->add_option("--a", *fp_a, "asymmetry a")->required();
    fp_cmd->add_option("--c", *fp_c, "parameter c")->required();
    fp_cmd->callback([&, fp_a, fp_c] {
        const Mode mode = global.mode();
        const NormalizedTwoParam q = [&] {
            try {
                return NormalizedTwoParam(flag_scalar(*fp_c, mode, "--c"), flag_scalar(*fp_a, mode, "--a"));
            } catch (const Error& e) {
                throw CLI::ValidationError(e.what());
            }
        }();
        const Scalar u = fixed_point(q);
        CommandOutput out;
        out.command = "fixed-point";
        out.params["a"] = to_string(q.a);
        out.params["c"] = to_string(q.c);
        Json row;
        row["fixed_point"] = to_string(u);
        out.results.push_back(row);
        out.table.columns = {"fixed_point"};
        out.table.rows.push_back({to_string(u)});
        emit(global, std::move(out));
    });

    // classify
    auto* cls_cmd = app.add_subcommand("classify", "classify one orbit")->fallthrough();
    auto cls_map = std::make_shared<MapFlags>();
    cls_map->attach(cls_cmd);
    auto cls_state = std::make_shared<std::string>();
    auto cls_max_steps = std::make_shared<std::size_t>(10'000);
    auto cls_escape = std::make_shared<std::string>();
    auto cls_floor = std::make_shared<std::string>();
    cls_cmd->add_option("--state", *cls_state, "initial state x0,x1,x2")->required();
    cls_cmd->add_option("--max-steps", *cls_max_steps, "iteration budget (default 10000)");
    cls_cmd->add_option("--escape", *cls_escape, "escape threshold (default 1e9)");
    cls_cmd->add_option("--floor", *cls_floor, "floor threshold (default 1e-9)");
    cls_cmd->callback([&, cls_map, cls_state, cls_max_steps, cls_escape, cls_floor] {
        const Mode mode = global.mode();
        const StepMap map = cls_map->build(mode);
        const State3 s0 = flag_state(*cls_state, mode, "--state");
        ClassifyConfig cfg = ClassifyConfig::defaults(mode);
        cfg.max_steps = *cls_max_steps;
        cfg.tolerance = global.tol;
        if (!cls_escape->empty()) cfg.escape_threshold = flag_scalar(*cls_escape, mode, "--escape");
        if (!cls_floor->empty()) cfg.floor_threshold = flag_scalar(*cls_floor, mode, "--floor");
        const ClassificationReport rep = classify_orbit(map, s0, cfg);
        CommandOutput out;
        out.command = "classify";
        out.params = map_params_json(map);
        out.params["state"] = state_json(s0);
        out.results.push_back(classification_json(rep));
        out.table = classification_table(rep);
        emit(global, std::move(out));
    });

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "run the classification grid of a spec file")->fallthrough();
    auto sweep_file = std::make_shared<std::string>();
    sweep_cmd->add_option("--spec", *sweep_file, "sweep spec file")->required();
    sweep_cmd->callback([&, sweep_file] {
        std::ifstream in(*sweep_file);
        if (!in) raise(Errc::Io, "cannot open spec file '" + *sweep_file + "'");
        SweepSpec spec = parse_sweep_spec(in);
        if (app.count("--seed") > 0) spec.seed = global.seed;
        const std::vector<SweepRow> rows = run_sweep(spec);
        CommandOutput out;
        out.command = "sweep";
        out.params["spec_file"] = *sweep_file;
        out.params["cells"] = spec.cells.size();
        out.params["seed"] = spec.seed;
        for (const auto& row : rows) out.results.push_back(sweep_row_json(row));
        out.table = sweep_table(rows);
        emit(global, std::move(out));
    });

    // search-unbounded
    auto* search_cmd = app.add_subcommand("search-unbounded", "random search for escaping orbits (beta != lambda)")->fallthrough();
    auto search_alpha = std::make_shared<std::string>();
    auto search_beta = std::make_shared<std::string>();
    auto search_lambda = std::make_shared<std::string>();
    auto search_trials = std::make_shared<std::size_t>(100);
    auto search_low = std::make_shared<double>(0.01);
    auto search_high = std::make_shared<double>(100.0);
    auto search_max_steps = std::make_shared<std::size_t>(10'000);
    search_cmd->add_option("--alpha", *search_alpha, "alpha coefficient")->required();
    search_cmd->add_option("--beta", *search_beta, "beta coefficient")->required();
    search_cmd->add_option("--lambda", *search_lambda, "lambda coefficient")->required();
    search_cmd->add_option("--trials", *search_trials, "number of random initial conditions");
    search_cmd->add_option("--low", *search_low, "sample box lower bound");
    search_cmd->add_option("--high", *search_high, "sample box upper bound");
    search_cmd->add_option("--max-steps", *search_max_steps, "iteration budget per trial");
    search_cmd->callback([&, search_alpha, search_beta, search_lambda, search_trials, search_low,
                          search_high, search_max_steps] {
        const Mode mode = global.mode();
        const Params p = [&] {
            try {
                return Params(flag_scalar(*search_alpha, mode, "--alpha"),
                              flag_scalar(*search_beta, mode, "--beta"),
                              flag_scalar(*search_lambda, mode, "--lambda"));
            } catch (const Error& e) {
                throw CLI::ValidationError(e.what());
            }
        }();
        ClassifyConfig cfg = ClassifyConfig::defaults(mode);
        cfg.max_steps = *search_max_steps;
        cfg.tolerance = global.tol;
        const SearchResult result =
            search_unbounded(p, *search_trials, global.seed, cfg, *search_low, *search_high);
        CommandOutput out;
        out.command = "search-unbounded";
        out.params["alpha"] = to_string(p.alpha);
        out.params["beta"] = to_string(p.beta);
        out.params["lambda"] = to_string(p.lambda);
        out.params["trials"] = result.trials;
        out.params["seed"] = result.seed;
        Json row = classification_json(result.best);
        row["best_trial"] = result.best_trial;
        row["initial"] = state_json(result.best_initial);
        row["growing_count"] = result.growing_count;
        row["growth_rate"] = format_f64(result.growth_rate);
        out.results.push_back(row);
        out.table.columns = {"trial", "x0", "x1", "x2", "verdict", "period", "max_value",
                             "min_value", "steps_run", "escape_step", "growth_rate"};
        out.table.rows.push_back(
            {std::to_string(result.best_trial), to_string(result.best_initial.oldest()),
             to_string(result.best_initial.middle()), to_string(result.best_initial.newest()),
             verdict_name(result.best.verdict),
             result.best.period ? std::to_string(*result.best.period) : "",
             to_string(result.best.max_value), to_string(result.best.min_value),
             std::to_string(result.best.steps_run),
             result.best.escape_step ? std::to_string(*result.best.escape_step) : "",
             format_f64(result.growth_rate)});
        emit(global, std::move(out));
    });

    // check-sub-energy
    auto* sub_cmd = app.add_subcommand("check-sub-energy", "test f(T^k s) <= f(s) on seeded samples")->fallthrough();
    auto sub_candidate = std::make_shared<std::string>();
    auto sub_base = std::make_shared<std::string>();
    auto sub_c = std::make_shared<std::string>();
    auto sub_samples = std::make_shared<std::size_t>(100);
    auto sub_variant = std::make_shared<std::string>("one-step");
    auto sub_k = std::make_shared<std::size_t>(1);
    auto sub_depth = std::make_shared<std::size_t>(1);
    auto sub_low = std::make_shared<double>(0.01);
    auto sub_high = std::make_shared<double>(100.0);
    sub_cmd->add_option("--candidate", *sub_candidate, "invariant | sum | max | max-comp")->required();
    sub_cmd->add_option("--base", *sub_base, "base candidate for max-comp (default max)");
    sub_cmd->add_option("--c", *sub_c, "Todd parameter c")->required();
    sub_cmd->add_option("--samples", *sub_samples, "number of seeded samples");
    sub_cmd->add_option("--variant", *sub_variant, "one-step | k-step | max-of-two")
        ->check(CLI::IsMember({"one-step", "k-step", "max-of-two"}));
    sub_cmd->add_option("--k", *sub_k, "stride for k-step / max-comp");
    sub_cmd->add_option("--depth", *sub_depth, "composition depth for max-comp");
    sub_cmd->add_option("--low", *sub_low, "sample box lower bound");
    sub_cmd->add_option("--high", *sub_high, "sample box upper bound");
    sub_cmd->callback([&, sub_candidate, sub_base, sub_c, sub_samples, sub_variant, sub_k, sub_depth,
                       sub_low, sub_high] {
        const Mode mode = global.mode();
        const Scalar c = flag_scalar(*sub_c, mode, "--c");
        const StepMap map = NormalizedTodd(c);
        const EnergyCandidate f = parse_candidate(*sub_candidate, *sub_base, *sub_k, *sub_depth, map);
        const SubEnergyVariant variant = *sub_variant == "one-step" ? SubEnergyVariant::OneStep
                                         : *sub_variant == "k-step" ? SubEnergyVariant::KStep
                                                                    : SubEnergyVariant::MaxOfTwo;
        const std::vector<State3> samples = seeded_states(mode, global.seed, *sub_samples, *sub_low, *sub_high);
        const SubEnergyReport report = check_sub_energy(f, c, samples, variant, *sub_k, global.tol);
        CommandOutput out;
        out.command = "check-sub-energy";
        out.params["candidate"] = *sub_candidate;
        out.params["c"] = to_string(c);
        out.params["variant"] = *sub_variant;
        out.params["samples"] = *sub_samples;
        out.params["seed"] = global.seed;
        Json row;
        row["pass"] = report.pass;
        row["equality_throughout"] = report.equality_throughout;
        row["samples_checked"] = report.samples_checked;
        if (report.witness) row["witness"] = witness_json(*report.witness);
        out.results.push_back(row);
        out.table.columns = {"pass", "inequality", "x0", "x1", "x2", "lhs", "rhs"};
        if (report.witness) {
            const auto& w = *report.witness;
            out.table.rows.push_back({"false", w.inequality, to_string(w.state.oldest()),
                                      to_string(w.state.middle()), to_string(w.state.newest()),
                                      to_string(w.lhs), to_string(w.rhs)});
        } else {
            out.table.rows.push_back({"true", "", "", "", "", "", ""});
        }
        emit(global, std::move(out));
        if (!report.pass) exit_code = kExitViolation;
    });

    // refute-super-energy
    auto* refute_cmd = app.add_subcommand("refute-super-energy",
                                          "produce the fixed-point witness against a super-energy candidate")->fallthrough();
    auto ref_a = std::make_shared<std::string>();
    auto ref_c = std::make_shared<std::string>();
    auto ref_rho = std::make_shared<std::string>();
    auto ref_candidate = std::make_shared<std::string>();
    refute_cmd->add_option("--a", *ref_a, "asymmetry a")->required();
    refute_cmd->add_option("--c", *ref_c, "parameter c")->required();
    refute_cmd->add_option("--rho", *ref_rho, "growth factor rho > 1")->required();
    refute_cmd->add_option("--candidate", *ref_candidate, "invariant | sum | max")->required();
    refute_cmd->callback([&, ref_a, ref_c, ref_rho, ref_candidate] {
        const Mode mode = global.mode();
        const auto [q, spec] = [&] {
            try {
                NormalizedTwoParam params(flag_scalar(*ref_c, mode, "--c"), flag_scalar(*ref_a, mode, "--a"));
                EnergyCandidate g = parse_candidate(*ref_candidate, "", 1, 0, StepMap(params));
                SuperEnergySpec s(flag_scalar(*ref_rho, mode, "--rho"), std::move(g), params);
                return std::pair<NormalizedTwoParam, SuperEnergySpec>(params, std::move(s));
            } catch (const Error& e) {
                throw CLI::ValidationError(e.what());
            }
        }();
        const ViolationWitness witness = refute_super_energy(spec);
        CommandOutput out;
        out.command = "refute-super-energy";
        out.params["a"] = to_string(q.a);
        out.params["c"] = to_string(q.c);
        out.params["rho"] = to_string(spec.rho);
        out.params["candidate"] = *ref_candidate;
        Json row = witness_json(witness);
        row["refuted"] = true;
        out.results.push_back(row);
        out.table.columns = {"fixed_point", "lhs", "rhs", "inequality"};
        out.table.rows.push_back({to_string(witness.state.oldest()), to_string(witness.lhs),
                                  to_string(witness.rhs), witness.inequality});
        emit(global, std::move(out));
    });

    // check-lyapunov
    auto* lyap_cmd = app.add_subcommand("check-lyapunov", "verify the three Lyapunov conditions on samples")->fallthrough();
    auto lyc_c = std::make_shared<std::string>();
    auto lyc_samples = std::make_shared<std::size_t>(1000);
    lyap_cmd->add_option("--c", *lyc_c, "Todd parameter c")->required();
    lyap_cmd->add_option("--samples", *lyc_samples, "number of seeded samples in (0,10]^3");
    lyap_cmd->callback([&, lyc_c, lyc_samples] {
        const Mode mode = global.mode();
        const Scalar c = flag_scalar(*lyc_c, mode, "--c");
        std::vector<State3> samples;
        samples.reserve(*lyc_samples);
        for (std::size_t i = 0; i < *lyc_samples; ++i) {
            SplitMix64 rng = substream(global.seed, i);
            const auto draw = [&] {
                if (mode == Mode::Float64) return Scalar::f64(10.0 * (1.0 - rng.next_unit()));
                const std::uint64_t den = rng.next_in(1, kRationalSampleDenominatorBound);
                const std::uint64_t num = rng.next_in(1, den * 10);
                return Scalar::exact(BigRational(num, den));
            };
            Scalar a = draw(), b = draw(), d = draw();
            samples.push_back(State3(std::move(a), std::move(b), std::move(d)));
        }
        const LyapunovReport report = check_lyapunov(c, samples, global.tol);
        CommandOutput out;
        out.command = "check-lyapunov";
        out.params["c"] = to_string(c);
        out.params["samples"] = *lyc_samples;
        out.params["seed"] = global.seed;
        Json row;
        row["zero_at_equilibrium"] = report.zero_at_equilibrium;
        row["positive_on_samples"] = report.positive_on_samples;
        row["constant_along_step"] = report.constant_along_step;
        row["samples_checked"] = report.samples_checked;
        row["equilibrium_samples"] = report.equilibrium_samples;
        Json viols = Json::array();
        for (const auto& w : report.violations) viols.push_back(witness_json(w));
        row["violations"] = viols;
        row["pass"] = report.pass();
        out.results.push_back(row);
        out.table.columns = {"condition", "pass"};
        out.table.rows.push_back({"V(p,p,p) = 0", report.zero_at_equilibrium ? "true" : "false"});
        out.table.rows.push_back({"V > 0 away from equilibrium", report.positive_on_samples ? "true" : "false"});
        out.table.rows.push_back({"V(T s) = V(s)", report.constant_along_step ? "true" : "false"});
        emit(global, std::move(out));
        if (!report.pass()) exit_code = kExitViolation;
    });

    // scan-t2
    auto* scan_cmd = app.add_subcommand("scan-t2", "grid-scan the residual of T^2 for fixed-point regions")->fallthrough();
    auto scan_a = std::make_shared<std::string>();
    auto scan_c = std::make_shared<std::string>();
    auto scan_box = std::make_shared<std::string>("0.1,10");
    auto scan_res = std::make_shared<std::size_t>(50);
    auto scan_screen = std::make_shared<double>(kDefaultScanScreenTolerance);
    scan_cmd->add_option("--a", *scan_a, "asymmetry a")->required();
    scan_cmd->add_option("--c", *scan_c, "parameter c")->required();
    scan_cmd->add_option("--box", *scan_box, "grid box LO,HI (default 0.1,10)");
    scan_cmd->add_option("--resolution", *scan_res, "grid points per axis (default 50)");
    scan_cmd->add_option("--screen", *scan_screen, "residual screening tolerance (default 0.05)");
    scan_cmd->callback([&, scan_a, scan_c, scan_box, scan_res, scan_screen] {
        const NormalizedTwoParam q = [&] {
            try {
                return NormalizedTwoParam(flag_scalar(*scan_c, Mode::Float64, "--c"),
                                          flag_scalar(*scan_a, Mode::Float64, "--a"));
            } catch (const Error& e) {
                throw CLI::ValidationError(e.what());
            }
        }();
        const auto bounds = [&] {
            const auto parts = detail::split(*scan_box, ',');
            if (parts.size() != 2) throw CLI::ValidationError("--box expects LO,HI");
            return std::pair<double, double>(detail::parse_double(parts[0]), detail::parse_double(parts[1]));
        }();
        const std::vector<ScanRegion> regions =
            scan_t2_fixed_points(q, bounds.first, bounds.second, *scan_res, *scan_screen);
        const double u = fixed_point(q).as_f64();
        const double spacing = (bounds.second - bounds.first) / static_cast<double>(*scan_res - 1);
        bool diagonal_found = false;
        CommandOutput out;
        out.command = "scan-t2";
        out.params["a"] = to_string(q.a);
        out.params["c"] = to_string(q.c);
        out.params["box"] = *scan_box;
        out.params["resolution"] = *scan_res;
        out.params["screen"] = format_f64(*scan_screen);
        out.params["fixed_point"] = format_f64(u);
        out.table.columns = {"x0", "x1", "x2", "min_residual", "cells", "contains_fixed_point"};
        for (const auto& region : regions) {
            const bool contains = region.contains(u, u, u, spacing);
            diagonal_found = diagonal_found || contains;
            Json row;
            row["representative"] = Json::array({format_f64(region.representative[0]),
                                                 format_f64(region.representative[1]),
                                                 format_f64(region.representative[2])});
            row["min_residual"] = format_f64(region.min_residual);
            row["cells"] = region.cell_count;
            row["contains_fixed_point"] = contains;
            out.results.push_back(row);
            out.table.rows.push_back({format_f64(region.representative[0]),
                                      format_f64(region.representative[1]),
                                      format_f64(region.representative[2]),
                                      format_f64(region.min_residual), std::to_string(region.cell_count),
                                      contains ? "true" : "false"});
        }
        emit(global, std::move(out));
        // Extra regions or a missing diagonal region contradict the cited
        // uniqueness remark: report as a failed check.
        if (!diagonal_found || regions.size() != 1) exit_code = kExitViolation;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help
            return app.exit(e);
        }
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    }
    return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const toddlab::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    }
}
