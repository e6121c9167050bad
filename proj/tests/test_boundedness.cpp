#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "toddlab/boundedness.hpp"

using namespace toddlab;

namespace {

Scalar ex(long long n, long long d = 1) { return Scalar::exact(n, d); }

State3 exact_state(long long a, long long b, long long c) { return State3(ex(a), ex(b), ex(c)); }

}  // namespace

TEST_CASE("classify the Todd c = 1 cycle") {
    ClassifyConfig cfg = ClassifyConfig::defaults(Mode::Exact);
    cfg.max_steps = 64;
    const ClassificationReport rep = classify_orbit(NormalizedTodd(ex(1)), exact_state(1, 1, 1), cfg);
    CHECK(rep.verdict == Verdict::Periodic);
    REQUIRE(rep.period.has_value());
    CHECK(*rep.period == 8);
    CHECK(rep.max_value == ex(9));
    CHECK(rep.min_value == ex(1));
}

TEST_CASE("classify the two-parameter fixed point as equilibrium") {
    ClassifyConfig cfg = ClassifyConfig::defaults(Mode::Exact);
    cfg.max_steps = 32;
    const State3 fp(ex(5, 2), ex(5, 2), ex(5, 2));
    const ClassificationReport rep = classify_orbit(NormalizedTwoParam(ex(0), ex(2)), fp, cfg);
    CHECK(rep.verdict == Verdict::Equilibrium);
    REQUIRE(rep.period.has_value());
    CHECK(*rep.period == 1);
}

TEST_CASE("growing verdicts carry a re-checkable escape witness") {
    // beta != lambda regime with plentiful escapes
    const Params p(Scalar::f64(0.5), Scalar::f64(0.25), Scalar::f64(1));
    ClassifyConfig cfg = ClassifyConfig::defaults(Mode::Float64);
    SplitMix64 rng = substream(4242, 0);
    const State3 s0 = sample_state(rng, Mode::Float64, 0.01, 100.0);
    const ClassificationReport rep = classify_orbit(p, s0, cfg);
    REQUIRE(rep.verdict == Verdict::Growing);
    REQUIRE(rep.escape_step.has_value());
    CHECK(rep.max_value >= cfg.escape_threshold);
    // independent re-run reproduces the recorded escape
    const OrbitRecord rerun = iterate_orbit(StepMap(p), s0, rep.steps_run);
    REQUIRE(*rep.escape_step < rerun.values.size());
    CHECK(rerun.values[*rep.escape_step] >= cfg.escape_threshold);
}

TEST_CASE("bit-limit aborts classify as inconclusive") {
    BitLimitGuard guard(512);
    ClassifyConfig cfg = ClassifyConfig::defaults(Mode::Exact);
    cfg.max_steps = 500;
    const ClassificationReport rep = classify_orbit(NormalizedTodd(ex(2)), exact_state(1, 1, 1), cfg);
    CHECK(rep.verdict == Verdict::Inconclusive);
    CHECK(rep.evidence.find("BitLimitExceeded") != std::string::npos);
}

TEST_CASE("bounded verdicts need margin against both thresholds") {
    ClassifyConfig cfg = ClassifyConfig::defaults(Mode::Exact);
    cfg.max_steps = 64;
    cfg.period_search = false;
    const ClassificationReport rep = classify_orbit(NormalizedTodd(ex(1)), exact_state(1, 1, 1), cfg);
    CHECK(rep.verdict == Verdict::BoundedNoPeriod);

    cfg.floor_threshold = Scalar::exact(1, 100);  // margin 10 exceeds the orbit minimum 1
    const ClassificationReport near_floor = classify_orbit(NormalizedTodd(ex(1)), exact_state(1, 1, 1), cfg);
    CHECK(near_floor.verdict == Verdict::Inconclusive);

    cfg = ClassifyConfig::defaults(Mode::Exact);
    cfg.max_steps = 64;
    cfg.period_search = false;
    cfg.escape_threshold = Scalar::exact(100);  // margin 1/10, below the orbit maximum 9
    const ClassificationReport near_escape = classify_orbit(NormalizedTodd(ex(1)), exact_state(1, 1, 1), cfg);
    CHECK(near_escape.verdict == Verdict::Inconclusive);
}

TEST_CASE("classify config validation") {
    ClassifyConfig cfg = ClassifyConfig::defaults(Mode::Float64);
    cfg.max_steps = 4;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = ClassifyConfig::defaults(Mode::Float64);
    cfg.escape_threshold = Scalar::f64(0.5);
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = ClassifyConfig::defaults(Mode::Float64);
    cfg.floor_threshold = Scalar::f64(2.0);
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("persistence statistics") {
    const OrbitRecord rec = iterate_orbit(StepMap(NormalizedTodd(ex(1))), exact_state(1, 1, 1), 20);
    const PersistenceStats st = persistence_stats(rec);
    CHECK(st.min == ex(1));
    CHECK(st.max == ex(9));
    CHECK(st.min_index == 0);
    CHECK(st.max_index == 5);  // values 1,1,1,3,5,9,...

    const State3 fp(ex(5, 2), ex(5, 2), ex(5, 2));
    const OrbitRecord constant = iterate_orbit(StepMap(NormalizedTwoParam(ex(0), ex(2))), fp, 10);
    const PersistenceStats cst = persistence_stats(constant);
    CHECK(cst.min == ex(5, 2));
    CHECK(cst.max == ex(5, 2));

    const OrbitRecord c0 = iterate_orbit(StepMap(NormalizedTodd(ex(0))), exact_state(1, 1, 1), 50);
    const PersistenceStats pst = persistence_stats(c0);
    CHECK(pst.min.is_positive());
    CHECK(pst.max.is_finite());
}

TEST_CASE("sweep over todd parameters") {
    SweepSpec spec;
    spec.precision = Mode::Exact;
    spec.cells = {NormalizedTodd(ex(1, 2)), NormalizedTodd(ex(1)), NormalizedTodd(ex(2))};
    spec.initials = RandomInitials{10, 0.1, 10.0};
    spec.classify = ClassifyConfig::defaults(Mode::Exact);
    spec.classify.max_steps = 48;  // exact non-periodic orbits grow quadratically in bit size
    spec.seed = 99;

    const std::vector<SweepRow> rows = run_sweep(spec);
    REQUIRE(rows.size() == 30);
    for (const auto& row : rows) {
        REQUIRE_FALSE(row.error.has_value());
        const bool todd_one = row.map.c && *row.map.c == ex(1);
        if (todd_one) {
            CHECK(row.report.verdict == Verdict::Periodic);
            REQUIRE(row.report.period.has_value());
            CHECK(*row.report.period == 8);
        } else {
            CHECK((row.report.verdict == Verdict::Periodic ||
                   row.report.verdict == Verdict::BoundedNoPeriod));
        }
    }

    // determinism: identical spec and seed give identical tables
    const std::vector<SweepRow> again = run_sweep(spec);
    REQUIRE(again.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].initial.oldest() == again[i].initial.oldest());
        CHECK(rows[i].report.verdict == again[i].report.verdict);
        CHECK(rows[i].report.max_value == again[i].report.max_value);
    }
}

TEST_CASE("sweep validation") {
    SweepSpec spec;
    spec.initials = RandomInitials{10, 0.01, 100.0};
    try {
        run_sweep(spec);
        FAIL("expected InvalidSpec");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::InvalidSpec);
    }

    spec.cells = {NormalizedTodd(Scalar::f64(1))};
    spec.initials = RandomInitials{0, 0.01, 100.0};
    CHECK_THROWS_AS(run_sweep(spec), Error);
    spec.initials = RandomInitials{5, 2.0, 1.0};
    CHECK_THROWS_AS(run_sweep(spec), Error);
}

TEST_CASE("unbounded search") {
    SECTION("beta = lambda is not applicable") {
        try {
            search_unbounded(Params(ex(0), ex(1), ex(1)), 10, 1, ClassifyConfig::defaults(Mode::Exact));
            FAIL("expected NotApplicable");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::NotApplicable);
        }
    }

    SECTION("the cited regime produces escapes and never claims boundedness") {
        const Params p(Scalar::f64(0.5), Scalar::f64(0.25), Scalar::f64(1));
        ClassifyConfig cfg = ClassifyConfig::defaults(Mode::Float64);
        cfg.max_steps = 2000;
        const SearchResult result = search_unbounded(p, 50, 7, cfg);
        CHECK(result.trials == 50);
        CHECK(result.growing_count > 0);
        CHECK(result.best.verdict == Verdict::Growing);
        CHECK(result.growth_rate > 0.0);
        // determinism
        const SearchResult again = search_unbounded(p, 50, 7, cfg);
        CHECK(again.best_trial == result.best_trial);
        CHECK(again.best.max_value == result.best.max_value);
        CHECK(again.growth_rate == result.growth_rate);
    }
}

TEST_CASE("t2 residual scan") {
    SECTION("a = 2, c = 0 has exactly one region, containing the fixed point") {
        const NormalizedTwoParam q(Scalar::f64(0), Scalar::f64(2));
        const auto regions = scan_t2_fixed_points(q, 0.1, 10.0, 50);
        REQUIRE(regions.size() == 1);
        const double spacing = 9.9 / 49.0;
        CHECK(regions[0].contains(2.5, 2.5, 2.5, spacing));
        CHECK(regions[0].min_residual < 0.05);
    }

    SECTION("a = 1, c = 1 finds the diagonal equilibrium among its regions") {
        const NormalizedTwoParam q(Scalar::f64(1), Scalar::f64(1));
        const auto regions = scan_t2_fixed_points(q, 0.1, 10.0, 50);
        REQUIRE_FALSE(regions.empty());
        const double u = 1.0 + std::sqrt(2.0);
        const double spacing = 9.9 / 49.0;
        bool found = false;
        for (const auto& region : regions) found = found || region.contains(u, u, u, spacing);
        CHECK(found);
    }

    SECTION("residual vanishes at the exact fixed point") {
        CHECK(t2_residual(0.0, 2.0, 2.5, 2.5, 2.5) == 0.0);
    }

    SECTION("validation") {
        const NormalizedTwoParam q(Scalar::f64(0), Scalar::f64(2));
        CHECK_THROWS_AS(scan_t2_fixed_points(q, 5.0, 10.0, 50), Error);   // box misses 2.5
        CHECK_THROWS_AS(scan_t2_fixed_points(q, 0.1, 10.0, 1), Error);    // resolution too small
        CHECK_THROWS_AS(scan_t2_fixed_points(q, -1.0, 10.0, 50), Error);  // nonpositive box
    }
}

TEST_CASE("persistence of symmetric orbits in float mode") {
    for (const double c : {0.0, 0.5, 1.0, 2.0}) {
        const StepMap map = NormalizedTodd(Scalar::f64(c));
        for (std::uint64_t t = 0; t < 10; ++t) {
            SplitMix64 rng = substream(808 + static_cast<std::uint64_t>(c * 10), t);
            const State3 s0 = sample_state(rng, Mode::Float64, 0.01, 100.0);
            const OrbitRecord rec = iterate_orbit(map, s0, 1000);
            REQUIRE_FALSE(rec.failure.has_value());
            const PersistenceStats st = persistence_stats(rec);
            CHECK(st.min.as_f64() > 1e-9);
            CHECK(st.max.as_f64() < 1e9);
        }
    }
}
