#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "toddlab/energy.hpp"
#include "toddlab/rng.hpp"

using namespace toddlab;

namespace {

Scalar ex(long long n, long long d = 1) { return Scalar::exact(n, d); }

State3 exact_state(long long a, long long b, long long c) { return State3(ex(a), ex(b), ex(c)); }

State3 fstate(double a, double b, double c) {
    return State3(Scalar::f64(a), Scalar::f64(b), Scalar::f64(c));
}

State3 random_exact_state(SplitMix64& rng) {
    const auto coord = [&] {
        return Scalar::exact(static_cast<long long>(rng.next_in(1, 1000)),
                             static_cast<long long>(rng.next_in(1, 1000)));
    };
    Scalar a = coord(), b = coord(), c = coord();
    return State3(std::move(a), std::move(b), std::move(c));
}

}  // namespace

TEST_CASE("invariant values") {
    CHECK(todd_invariant(ex(1), exact_state(1, 1, 1)) == ex(32));
    CHECK(todd_invariant(ex(1), exact_state(3, 5, 9)) == ex(32));  // same orbit as (1,1,1)
    CHECK(todd_invariant(ex(0), exact_state(1, 1, 1)) == ex(24));
    CHECK(todd_invariant(ex(1), State3(ex(3, 2), ex(7, 10), ex(23, 10))) == ex(10285, 322));
}

TEST_CASE("invariant is conserved exactly along Todd orbits") {
    const NormalizedTodd one(ex(1));
    SplitMix64 rng = substream(8, 8);
    for (int trial = 0; trial < 5; ++trial) {
        const State3 s0 = random_exact_state(rng);
        OrbitRecord rec = iterate_orbit_with_invariant(StepMap(one), s0, 1000, true);
        REQUIRE(rec.invariant_trace.size() == rec.state_count());
        for (const auto& v : rec.invariant_trace) CHECK(v == rec.invariant_trace.front());
        CHECK(invariant_drift(rec) == ex(0));
    }
}

TEST_CASE("invariant drift in float mode") {
    const StepMap one = NormalizedTodd(Scalar::f64(1));
    OrbitRecord rec = iterate_orbit_with_invariant(one, fstate(1, 1, 1), 1000, true);
    // every division on this orbit is exact in binary64
    CHECK(invariant_drift(rec).as_f64() == 0.0);

    const StepMap two = NormalizedTodd(Scalar::f64(2));
    OrbitRecord rec2 = iterate_orbit_with_invariant(two, fstate(1.5, 0.7, 2.3), 10'000, true);
    CHECK(invariant_drift(rec2).as_f64() <= 1e-6);
}

TEST_CASE("equilibrium and its invariant") {
    CHECK(todd_equilibrium(ex(0)) == ex(2));
    CHECK(todd_equilibrium(ex(3)) == ex(3));
    CHECK(todd_equilibrium(ex(5, 4)) == ex(5, 2));
    CHECK(equilibrium_invariant(ex(0)) == ex(81, 4));
    CHECK(todd_invariant(ex(0), exact_state(2, 2, 2)) == ex(81, 4));
    CHECK(equilibrium_invariant(ex(3)) == ex(256, 9));

    try {
        todd_equilibrium(ex(1));
        FAIL("expected ExactModeUnsupported");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ExactModeUnsupported);
    }

    const double p = todd_equilibrium(Scalar::f64(1)).as_f64();
    CHECK(std::fabs(p - (1.0 + std::sqrt(2.0))) <= 1e-15 * p);
    const double ieq = equilibrium_invariant(Scalar::f64(1)).as_f64();
    CHECK(std::fabs(ieq - 23.31370849898476) <= 1e-12 * ieq);
    // closed form agrees with direct evaluation at (p,p,p)
    const double direct = todd_invariant(Scalar::f64(1), fstate(p, p, p)).as_f64();
    CHECK(std::fabs(direct - ieq) <= 1e-12 * ieq);
}

TEST_CASE("lyapunov values") {
    CHECK(lyapunov_value(ex(0), exact_state(1, 1, 1)) == ex(15, 4));  // 24 - 81/4

    const double p = todd_equilibrium(Scalar::f64(1)).as_f64();
    CHECK(std::fabs(lyapunov_value(Scalar::f64(1), fstate(p, p, p)).as_f64()) <= 1e-12);

    const double v = lyapunov_value(Scalar::f64(1), fstate(1, 1, 1)).as_f64();
    CHECK(std::fabs(v - (32.0 - 23.31370849898476)) <= 1e-12 * v);
}

TEST_CASE("lyapunov conditions on samples") {
    SECTION("float, c = 1") {
        std::vector<State3> samples;
        SplitMix64 rng = substream(14, 0);
        for (int i = 0; i < 1000; ++i)
            samples.push_back(fstate(10.0 * (1.0 - rng.next_unit()), 10.0 * (1.0 - rng.next_unit()),
                                     10.0 * (1.0 - rng.next_unit())));
        const LyapunovReport report = check_lyapunov(Scalar::f64(1), samples, 1e-9);
        CHECK(report.pass());
        CHECK(report.samples_checked == 1000);
        CHECK(report.violations.empty());
    }

    SECTION("exact, c = 0: V and V o T agree exactly") {
        const std::vector<State3> samples{exact_state(1, 1, 1)};
        const LyapunovReport report = check_lyapunov(ex(0), samples, 0.0);
        CHECK(report.pass());
        CHECK(report.zero_at_equilibrium);
        CHECK(report.constant_along_step);
    }

    SECTION("equilibrium sample violates the precondition and is reported") {
        const std::vector<State3> samples{exact_state(2, 2, 2)};
        const LyapunovReport report = check_lyapunov(ex(0), samples, 0.0);
        CHECK_FALSE(report.pass());
        REQUIRE(report.equilibrium_samples.size() == 1);
        CHECK(report.equilibrium_samples[0] == 0);
    }
}

TEST_CASE("coercivity bounds") {
    CHECK(coercivity_bounds_hold(ex(1), exact_state(1, 1, 1)));
    CHECK(todd_invariant(ex(0), exact_state(100, 1, 1)) >= ex(102));
    CHECK(todd_invariant(ex(0), State3(ex(1, 1000), ex(1), ex(1))) >= ex(2000));

    SplitMix64 rng = substream(55, 0);
    for (const long long cnum : {0LL, 1LL, 2LL, 4LL}) {
        const Scalar c = Scalar::f64(static_cast<double>(cnum) / 2.0);
        for (int i = 0; i < 2000; ++i) {
            const State3 s = fstate(sample_log_uniform(rng, 0.01, 100), sample_log_uniform(rng, 0.01, 100),
                                    sample_log_uniform(rng, 0.01, 100));
            const auto witness = coercivity_violation(c, s);
            if (witness) {
                CAPTURE(to_string(witness->lhs), to_string(witness->rhs), witness->inequality);
                FAIL("coercivity bound violated");
            }
        }
    }
}

TEST_CASE("candidate evaluation") {
    const State3 s = exact_state(1, 2, 3);
    CHECK(evaluate_candidate(EnergyCandidate::sum_coordinates(), ex(1), s) == ex(6));
    CHECK(evaluate_candidate(EnergyCandidate::max_coordinate(), ex(1), s) == ex(3));
    CHECK(evaluate_candidate(EnergyCandidate::todd_invariant(), ex(1), exact_state(1, 1, 1)) == ex(32));
}

TEST_CASE("max composition") {
    const StepMap one = NormalizedTodd(ex(1));

    SECTION("windows of the c = 1 orbit from (1,1,1)") {
        // states (1,1,1),(1,1,3),(1,3,5),(3,5,9): maxima 1,3,5,9
        const EnergyCandidate f =
            build_max_composition(EnergyCandidate::max_coordinate(), 1, 3, one);
        CHECK(evaluate_candidate(f, ex(1), exact_state(1, 1, 1)) == ex(9));
    }

    SECTION("depth zero is the base itself") {
        const EnergyCandidate f =
            build_max_composition(EnergyCandidate::max_coordinate(), 1, 0, one);
        CHECK(f.kind == CandidateKind::MaxCoordinate);
    }

    SECTION("composing the invariant changes nothing") {
        const EnergyCandidate f =
            build_max_composition(EnergyCandidate::todd_invariant(), 2, 4, one);
        SplitMix64 rng = substream(21, 0);
        for (int i = 0; i < 20; ++i) {
            const State3 s = random_exact_state(rng);
            CHECK(evaluate_candidate(f, ex(1), s) == todd_invariant(ex(1), s));
        }
    }

    SECTION("validation") {
        CHECK_THROWS_AS(build_max_composition(EnergyCandidate::max_coordinate(), 0, 1, one), Error);
        CHECK_THROWS_AS(build_max_composition(EnergyCandidate::max_coordinate(), 1, 65, one), Error);
    }
}

TEST_CASE("sub-energy checks") {
    SplitMix64 rng = substream(33, 0);
    std::vector<State3> samples;
    for (int i = 0; i < 100; ++i) samples.push_back(random_exact_state(rng));

    SECTION("the invariant passes every variant with equality") {
        for (const auto variant :
             {SubEnergyVariant::OneStep, SubEnergyVariant::KStep, SubEnergyVariant::MaxOfTwo}) {
            const SubEnergyReport report = check_sub_energy(EnergyCandidate::todd_invariant(), ex(1),
                                                            samples, variant, 3, 0.0);
            CHECK(report.pass);
            CHECK(report.equality_throughout);
        }
    }

    SECTION("sum of coordinates fails one-step at (1,1,1)") {
        std::vector<State3> with_unit{exact_state(1, 1, 1)};
        with_unit.insert(with_unit.end(), samples.begin(), samples.end());
        const SubEnergyReport report = check_sub_energy(EnergyCandidate::sum_coordinates(), ex(1),
                                                        with_unit, SubEnergyVariant::OneStep);
        REQUIRE_FALSE(report.pass);
        REQUIRE(report.witness.has_value());
        CHECK(report.witness->lhs == ex(5));
        CHECK(report.witness->rhs == ex(3));
        CHECK(report.witness->state.oldest() == ex(1));
        CHECK(report.samples_checked == 1);  // first violation, deterministic order
    }
}

TEST_CASE("super-energy refutation") {
    SECTION("rational fixed point, sum candidate") {
        const SuperEnergySpec spec(ex(3, 2), EnergyCandidate::sum_coordinates(),
                                   NormalizedTwoParam(ex(0), ex(2)));
        const ViolationWitness w = refute_super_energy(spec);
        CHECK(w.state.oldest() == ex(5, 2));
        CHECK(w.lhs == ex(15, 2));
        CHECK(w.rhs == ex(45, 4));
        CHECK(w.lhs < w.rhs);
    }

    SECTION("irrational fixed point, max candidate") {
        const SuperEnergySpec spec(Scalar::f64(1.1), EnergyCandidate::max_coordinate(),
                                   NormalizedTwoParam(Scalar::f64(1), Scalar::f64(1)));
        const ViolationWitness w = refute_super_energy(spec);
        const double u = 1.0 + std::sqrt(2.0);
        CHECK(std::fabs(w.lhs.as_f64() - u) <= 1e-12 * u);
        CHECK(std::fabs(w.rhs.as_f64() - 1.1 * u) <= 1e-12 * u);
        CHECK(w.lhs.as_f64() < w.rhs.as_f64());
    }

    SECTION("any positive candidate fails at a fixed point") {
        const SuperEnergySpec spec(Scalar::f64(2), EnergyCandidate::todd_invariant(),
                                   NormalizedTwoParam(Scalar::f64(1), Scalar::f64(3)));
        const ViolationWitness w = refute_super_energy(spec);
        const double g_star = todd_invariant(Scalar::f64(1), w.state).as_f64();
        CHECK(std::fabs(w.lhs.as_f64() - g_star) <= 1e-12 * g_star);
        CHECK(std::fabs(w.rhs.as_f64() - 2.0 * g_star) <= 1e-12 * w.rhs.as_f64());
        CHECK(w.lhs.as_f64() < w.rhs.as_f64());
    }

    SECTION("rho must exceed one") {
        CHECK_THROWS_AS(SuperEnergySpec(ex(1), EnergyCandidate::sum_coordinates(),
                                        NormalizedTwoParam(ex(0), ex(2))),
                        Error);
    }
}

TEST_CASE("gradient of I vanishes at the equilibrium") {
    const double h = 1e-5;
    for (const double c : {0.0, 1.0, 2.0}) {
        const double p = todd_equilibrium(Scalar::f64(c)).as_f64();
        const Scalar cs = Scalar::f64(c);
        double norm_sq = 0.0;
        for (int axis = 0; axis < 3; ++axis) {
            double plus[3] = {p, p, p}, minus[3] = {p, p, p};
            plus[axis] += h;
            minus[axis] -= h;
            const double fp = todd_invariant(cs, fstate(plus[0], plus[1], plus[2])).as_f64();
            const double fm = todd_invariant(cs, fstate(minus[0], minus[1], minus[2])).as_f64();
            const double g = (fp - fm) / (2 * h);
            norm_sq += g * g;
        }
        CHECK(std::sqrt(norm_sq) <= 1e-6);
    }
}
