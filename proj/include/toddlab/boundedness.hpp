#pragma once

// Orbit classification and the boundedness experiments.
//
// Finite iteration cannot certify boundedness, so the classifier is
// deliberately conservative: Growing requires a recorded value at or above
// the escape threshold, BoundedNoPeriod requires a thousandfold margin below
// it and is never emitted for asymmetric (beta != lambda) coefficients, and
// everything else is Inconclusive.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "toddlab/dynamics.hpp"
#include "toddlab/rng.hpp"

namespace toddlab {

struct ClassifyConfig {
    std::size_t max_steps = 10'000;
    Scalar escape_threshold = Scalar::f64(1e9);
    Scalar floor_threshold = Scalar::f64(1e-9);
    bool period_search = true;
    double tolerance = kDefaultRelTolerance;

    static ClassifyConfig defaults(Mode mode) {
        ClassifyConfig cfg;
        if (mode == Mode::Exact) {
            cfg.escape_threshold = Scalar::exact(1'000'000'000);
            cfg.floor_threshold = Scalar::exact(1, 1'000'000'000);
        }
        return cfg;
    }

    void validate() const {
        if (max_steps < 16) raise(Errc::InvalidArgument, "max_steps must be >= 16");
        if (!(escape_threshold > escape_threshold.same_mode(1)))
            raise(Errc::InvalidArgument, "escape_threshold must be > 1");
        if (!(floor_threshold < floor_threshold.same_mode(1)) || !floor_threshold.is_positive())
            raise(Errc::InvalidArgument, "floor_threshold must be in (0, 1)");
    }
};

enum class Verdict { Equilibrium, Periodic, BoundedNoPeriod, Growing, Inconclusive };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Equilibrium: return "Equilibrium";
        case Verdict::Periodic: return "Periodic";
        case Verdict::BoundedNoPeriod: return "BoundedNoPeriod";
        case Verdict::Growing: return "Growing";
        case Verdict::Inconclusive: return "Inconclusive";
    }
    return "Unknown";
}

struct ClassificationReport {
    Verdict verdict = Verdict::Inconclusive;
    std::optional<std::size_t> period;
    Scalar max_value, min_value;
    std::size_t steps_run = 0;
    std::optional<std::size_t> escape_step;  // index into the value sequence
    std::string evidence;
};

inline ClassificationReport classify_orbit(const StepMap& map, const State3& s0,
                                           const ClassifyConfig& cfg) {
    cfg.validate();
    const double tol = cfg.tolerance;
    const Scalar escape = coerce_mode(cfg.escape_threshold, s0.mode());

    OrbitRecord rec{map, s0, {}, {}, s0.oldest(), s0.oldest(), 0, std::nullopt};
    rec.values = {s0.oldest(), s0.middle(), s0.newest()};

    ClassificationReport report;
    report.max_value = s0.oldest();
    report.min_value = s0.oldest();
    auto note_value = [&](const Scalar& v, std::size_t index) {
        if (v > report.max_value) report.max_value = v;
        if (v < report.min_value) report.min_value = v;
        if (!report.escape_step && v >= escape) report.escape_step = index;
    };
    for (std::size_t i = 0; i < 3; ++i) note_value(rec.values[i], i);

    std::optional<std::string> abort_reason;
    State3 s = s0;
    while (!report.escape_step && rec.steps < cfg.max_steps) {
        try {
            s = apply_step(map, s);
        } catch (const Error& e) {
            abort_reason = e.what();
            break;
        }
        rec.values.push_back(s.newest());
        rec.steps += 1;
        note_value(s.newest(), rec.values.size() - 1);
    }
    report.steps_run = rec.steps;

    if (report.escape_step) {
        report.verdict = Verdict::Growing;
        report.evidence = "value " + to_string(rec.values[*report.escape_step]) + " at index " +
                          std::to_string(*report.escape_step) + " reached escape threshold " +
                          to_string(cfg.escape_threshold);
        return report;
    }
    if (abort_reason) {
        report.verdict = Verdict::Inconclusive;
        report.evidence = "iteration aborted: " + *abort_reason;
        return report;
    }

    if (cfg.period_search) {
        if (const auto p = detect_period(rec, tol)) {
            report.period = *p;
            report.verdict = *p == 1 ? Verdict::Equilibrium : Verdict::Periodic;
            report.evidence = "state recurs every " + std::to_string(*p) +
                              " steps across all recorded windows";
            return report;
        }
    }

    // The cited unboundedness theorems are existence results: for
    // beta != lambda a non-escaping finite run proves nothing.
    if (symmetric_coefficients(map)) {
        const Scalar friction = escape.same_mode(1000);
        const Scalar margin = escape / friction;
        const Scalar floor_margin = coerce_mode(cfg.floor_threshold, s0.mode()) * friction;
        if (report.max_value <= margin && report.min_value >= floor_margin) {
            report.verdict = Verdict::BoundedNoPeriod;
            report.evidence = "values stayed within [" + to_string(floor_margin) + ", " +
                              to_string(margin) + "], 1000x inside both thresholds, over " +
                              std::to_string(report.steps_run) + " steps";
            return report;
        }
        report.verdict = Verdict::Inconclusive;
        report.evidence = "extrema [" + to_string(report.min_value) + ", " + to_string(report.max_value) +
                          "] lack the 1000x margin against the thresholds";
        return report;
    }
    report.verdict = Verdict::Inconclusive;
    report.evidence = "no escape within " + std::to_string(report.steps_run) +
                      " steps; asymmetric coefficients never classify as bounded";
    return report;
}

struct PersistenceStats {
    Scalar min, max;
    std::size_t min_index = 0, max_index = 0;  // first occurrence, index into values
};

inline PersistenceStats persistence_stats(const OrbitRecord& r) {
    if (r.values.empty()) raise(Errc::InvalidArgument, "empty orbit record");
    PersistenceStats st{r.values.front(), r.values.front(), 0, 0};
    for (std::size_t i = 1; i < r.values.size(); ++i) {
        if (r.values[i] < st.min) {
            st.min = r.values[i];
            st.min_index = i;
        }
        if (r.values[i] > st.max) {
            st.max = r.values[i];
            st.max_index = i;
        }
    }
    return st;
}

// ---------------------------------------------------------------------------
// Parameter sweeps.
// ---------------------------------------------------------------------------

struct RandomInitials {
    std::size_t count = 0;
    double low = 0.01, high = 100.0;  // coordinate-wise log-uniform box
};

struct ExplicitInitials {
    std::vector<State3> states;
};

struct SweepSpec {
    Mode precision = Mode::Float64;
    std::vector<StepMap> cells;
    std::variant<RandomInitials, ExplicitInitials> initials = RandomInitials{};
    ClassifyConfig classify;
    std::uint64_t seed = 0;

    void validate() const {
        if (cells.empty()) raise(Errc::InvalidSpec, "empty parameter grid");
        if (const auto* r = std::get_if<RandomInitials>(&initials)) {
            if (r->count == 0) raise(Errc::InvalidSpec, "random initial count must be >= 1");
            if (!(0.0 < r->low && r->low < r->high))
                raise(Errc::InvalidSpec, "random box requires 0 < low < high");
        } else if (std::get<ExplicitInitials>(initials).states.empty()) {
            raise(Errc::InvalidSpec, "no explicit initial states");
        }
        classify.validate();
    }
};

struct SweepRow {
    std::size_t cell_index = 0, initial_index = 0;
    MapDescription map;
    State3 initial;
    ClassificationReport report;
    std::optional<std::string> error;
    std::uint64_t seed = 0;
};

inline State3 sample_state(SplitMix64& rng, Mode mode, double lo, double hi) {
    Scalar a = sample_coordinate(rng, mode, lo, hi);
    Scalar b = sample_coordinate(rng, mode, lo, hi);
    Scalar c = sample_coordinate(rng, mode, lo, hi);
    return State3(std::move(a), std::move(b), std::move(c));
}

// One row per (cell, initial), ordered by (cell index, initial index).
// Random initials for row (ci, ii) come from substream ci*count + ii, so the
// table is a pure function of (spec, seed) regardless of execution order.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
    spec.validate();
    std::vector<SweepRow> rows;
    for (std::size_t ci = 0; ci < spec.cells.size(); ++ci) {
        const StepMap& cell = spec.cells[ci];
        const std::size_t n_initials = std::holds_alternative<RandomInitials>(spec.initials)
                                           ? std::get<RandomInitials>(spec.initials).count
                                           : std::get<ExplicitInitials>(spec.initials).states.size();
        for (std::size_t ii = 0; ii < n_initials; ++ii) {
            State3 s0 = [&]() -> State3 {
                if (const auto* r = std::get_if<RandomInitials>(&spec.initials)) {
                    SplitMix64 rng = substream(spec.seed, ci * r->count + ii);
                    return sample_state(rng, spec.precision, r->low, r->high);
                }
                return std::get<ExplicitInitials>(spec.initials).states[ii];
            }();
            SweepRow row{ci, ii, describe_map(cell), s0, {}, std::nullopt, spec.seed};
            try {
                row.report = classify_orbit(cell, s0, spec.classify);
            } catch (const Error& e) {
                row.error = e.what();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Unboundedness search (beta != lambda).
// ---------------------------------------------------------------------------

struct SearchResult {
    ClassificationReport best;
    State3 best_initial;
    std::size_t best_trial = 0;
    std::size_t trials = 0;
    std::size_t growing_count = 0;
    double growth_rate = 0.0;  // LS slope of log(max-so-far) vs n, final half
    std::uint64_t seed = 0;
};

// Least-squares slope of log(running max) against the step index over the
// final half of the recorded values.
inline double growth_rate_estimate(const OrbitRecord& r) {
    std::vector<double> log_max;
    log_max.reserve(r.values.size());
    double running = 0.0;
    for (std::size_t i = 0; i < r.values.size(); ++i) {
        running = std::max(running, r.values[i].as_f64());
        log_max.push_back(std::log(running));
    }
    const std::size_t begin = log_max.size() / 2;
    const std::size_t n = log_max.size() - begin;
    if (n < 2) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = begin; i < log_max.size(); ++i) {
        const double x = static_cast<double>(i), y = log_max[i];
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = static_cast<double>(n) * sxx - sx * sx;
    return denom == 0.0 ? 0.0 : (static_cast<double>(n) * sxy - sx * sy) / denom;
}

inline SearchResult search_unbounded(const Params& p, std::size_t trials, std::uint64_t seed,
                                     const ClassifyConfig& cfg, double lo = 0.01, double hi = 100.0) {
    if (p.beta == p.lambda)
        raise(Errc::NotApplicable, "beta = lambda is the conjectured bounded family");
    if (trials == 0) raise(Errc::InvalidArgument, "trials must be >= 1");
    cfg.validate();
    const Mode mode = p.alpha.mode();
    const StepMap map = p;

    ClassificationReport best;
    std::optional<State3> best_initial;
    std::size_t best_trial = 0, growing_count = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        SplitMix64 rng = substream(seed, t);
        State3 s0 = sample_state(rng, mode, lo, hi);
        ClassificationReport rep = classify_orbit(map, s0, cfg);
        if (rep.verdict == Verdict::Growing) ++growing_count;
        if (!best_initial || rep.max_value > best.max_value) {
            best = rep;
            best_initial = s0;
            best_trial = t;
        }
    }
    const OrbitRecord best_orbit = iterate_orbit(map, *best_initial, best.steps_run);
    const double growth = growth_rate_estimate(best_orbit);
    return SearchResult{best, *best_initial, best_trial, trials, growing_count, growth, seed};
}

// ---------------------------------------------------------------------------
// T^2 fixed-point scan.
//
// Samples the relative residual of T^2 on a cubic grid and reports connected
// regions (26-neighbor connectivity) of cells whose residual falls below the
// screening tolerance. For a != 1 the cited uniqueness remark predicts
// exactly one region, around the diagonal fixed point; any other region is a
// potential counterexample. Grid screening only; float arithmetic.
// ---------------------------------------------------------------------------

struct ScanRegion {
    std::array<double, 3> representative;  // grid argmin of the region
    double min_residual = 0.0;
    std::array<double, 3> box_low, box_high;  // bounding box of member cells
    std::size_t cell_count = 0;

    bool contains(double x, double y, double z, double slack) const {
        return box_low[0] - slack <= x && x <= box_high[0] + slack && box_low[1] - slack <= y &&
               y <= box_high[1] + slack && box_low[2] - slack <= z && z <= box_high[2] + slack;
    }
};

inline constexpr double kDefaultScanScreenTolerance = 0.05;

inline double t2_residual(double c, double a, double x0, double x1, double x2) {
    const auto step = [&](double u0, double u1, double u2) { return (c + a * u2 + u1 / a) / u0; };
    const double y0 = x1, y1 = x2, y2 = step(x0, x1, x2);
    const double z0 = y1, z1 = y2, z2 = step(y0, y1, y2);
    const auto rel = [](double t, double s) {
        return std::fabs(t - s) / std::max(1.0, std::max(std::fabs(t), std::fabs(s)));
    };
    return std::max(rel(z0, x0), std::max(rel(z1, x1), rel(z2, x2)));
}

inline std::vector<ScanRegion> scan_t2_fixed_points(const NormalizedTwoParam& q, double lo, double hi,
                                                    std::size_t resolution,
                                                    double screen_tol = kDefaultScanScreenTolerance) {
    if (!(0.0 < lo && lo < hi)) raise(Errc::InvalidArgument, "scan box requires 0 < lo < hi");
    if (resolution < 2) raise(Errc::InvalidArgument, "resolution must be >= 2");
    if (!(screen_tol > 0.0)) raise(Errc::InvalidArgument, "screening tolerance must be positive");
    const double c = q.c.as_f64(), a = q.a.as_f64();
    const double u = fixed_point(NormalizedTwoParam(Scalar::f64(c), Scalar::f64(a))).as_f64();
    if (u < lo || u > hi) raise(Errc::InvalidArgument, "grid box does not cover the fixed point");

    const std::size_t r = resolution;
    std::vector<double> xs(r);
    for (std::size_t i = 0; i < r; ++i)
        xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(r - 1);

    std::vector<double> residual(r * r * r);
    const auto at = [r](std::size_t i, std::size_t j, std::size_t k) { return (i * r + j) * r + k; };
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j)
            for (std::size_t k = 0; k < r; ++k)
                residual[at(i, j, k)] = t2_residual(c, a, xs[i], xs[j], xs[k]);

    std::vector<char> visited(r * r * r, 0);
    std::vector<ScanRegion> regions;
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < r; ++j) {
            for (std::size_t k = 0; k < r; ++k) {
                const std::size_t start = at(i, j, k);
                if (visited[start] || residual[start] >= screen_tol) continue;
                ScanRegion region;
                region.min_residual = residual[start];
                region.representative = {xs[i], xs[j], xs[k]};
                region.box_low = region.box_high = {xs[i], xs[j], xs[k]};
                std::deque<std::array<std::size_t, 3>> queue{{i, j, k}};
                visited[start] = 1;
                while (!queue.empty()) {
                    const auto [ci, cj, ck] = queue.front();
                    queue.pop_front();
                    ++region.cell_count;
                    const std::array<double, 3> pt{xs[ci], xs[cj], xs[ck]};
                    const double res = residual[at(ci, cj, ck)];
                    if (res < region.min_residual) {
                        region.min_residual = res;
                        region.representative = pt;
                    }
                    for (int axis = 0; axis < 3; ++axis) {
                        region.box_low[axis] = std::min(region.box_low[axis], pt[axis]);
                        region.box_high[axis] = std::max(region.box_high[axis], pt[axis]);
                    }
                    for (int di = -1; di <= 1; ++di) {
                        for (int dj = -1; dj <= 1; ++dj) {
                            for (int dk = -1; dk <= 1; ++dk) {
                                if (di == 0 && dj == 0 && dk == 0) continue;
                                const long long ni = static_cast<long long>(ci) + di;
                                const long long nj = static_cast<long long>(cj) + dj;
                                const long long nk = static_cast<long long>(ck) + dk;
                                if (ni < 0 || nj < 0 || nk < 0 || ni >= static_cast<long long>(r) ||
                                    nj >= static_cast<long long>(r) || nk >= static_cast<long long>(r))
                                    continue;
                                const std::size_t idx = at(static_cast<std::size_t>(ni),
                                                           static_cast<std::size_t>(nj),
                                                           static_cast<std::size_t>(nk));
                                if (!visited[idx] && residual[idx] < screen_tol) {
                                    visited[idx] = 1;
                                    queue.push_back({static_cast<std::size_t>(ni),
                                                     static_cast<std::size_t>(nj),
                                                     static_cast<std::size_t>(nk)});
                                }
                            }
                        }
                    }
                }
                regions.push_back(region);
            }
        }
    }
    std::sort(regions.begin(), regions.end(),
              [](const ScanRegion& x, const ScanRegion& y) { return x.min_residual < y.min_residual; });
    return regions;
}

}  // namespace toddlab
