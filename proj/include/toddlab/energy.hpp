#pragma once

// The Todd invariant and everything built on it: the conserved quantity
//
//   I(c; x0,x1,x2) = (c + x0 + x1 + x2)(1 + 1/x0)(1 + 1/x1)(1 + 1/x2)
//
// its coercivity bounds, the Lyapunov function V = I - I(p,p,p), sub-energy
// inequality checking with a max-composition candidate builder, and the
// fixed-point refutation of super-energy functions.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "toddlab/dynamics.hpp"

namespace toddlab {

inline Scalar todd_invariant(const Scalar& c, const State3& s) {
    if (c.is_negative()) raise(Errc::InvalidArgument, "c must be nonnegative");
    const Scalar one = c.same_mode(1);
    // Grouped as one division so integer-valued orbits evaluate exactly in
    // float mode: (1 + 1/x) = (x + 1)/x.
    return (c + s.oldest() + s.middle() + s.newest()) *
           ((s.oldest() + one) * (s.middle() + one) * (s.newest() + one)) /
           (s.oldest() * s.middle() * s.newest());
}

inline void attach_invariant_trace(OrbitRecord& r, const Scalar& c) {
    r.invariant_trace.clear();
    r.invariant_trace.reserve(r.state_count());
    for (std::size_t i = 0; i < r.state_count(); ++i)
        r.invariant_trace.push_back(todd_invariant(c, r.state_at(i)));
}

/// iterate_orbit plus the per-window invariant when the map is Todd-form.
inline OrbitRecord iterate_orbit_with_invariant(const StepMap& map, const State3& s0, std::size_t steps,
                                                bool trace_invariant) {
    OrbitRecord rec = iterate_orbit(map, s0, steps);
    if (trace_invariant) {
        if (const auto c = todd_c(map)) attach_invariant_trace(rec, *c);
    }
    return rec;
}

/// Max over the trace of |I_n - I_0| / I_0; exactly zero along exact Todd orbits.
inline Scalar invariant_drift(const OrbitRecord& r) {
    if (r.invariant_trace.empty()) raise(Errc::InvalidArgument, "record has no invariant trace");
    const Scalar& i0 = r.invariant_trace.front();
    Scalar worst = i0.same_mode(0);
    for (const Scalar& in : r.invariant_trace) {
        const Scalar dev = ((in - i0) / i0).abs();
        if (dev > worst) worst = dev;
    }
    return worst;
}

// The Todd equilibrium p = 1 + sqrt(1 + c), the positive root of p^2 = c + 2p.
inline Scalar todd_equilibrium(const Scalar& c) {
    if (c.is_negative()) raise(Errc::InvalidArgument, "c must be nonnegative");
    const Scalar one = c.same_mode(1);
    if (c.is_exact()) {
        const auto root = exact_sqrt((one + c).rational());
        if (!root)
            raise(Errc::ExactModeUnsupported,
                  "1 + c = " + to_string(one + c) + " is not a rational square");
        return one + Scalar::exact(*root);
    }
    return Scalar::f64(1.0 + std::sqrt(1.0 + c.as_f64()));
}

/// I at the equilibrium in closed form: (p+1)^4 / p^2.
inline Scalar equilibrium_invariant(const Scalar& c) {
    const Scalar p = todd_equilibrium(c);
    const Scalar p1 = p + p.same_mode(1);
    const Scalar sq = p1 * p1;
    return sq * sq / (p * p);
}

inline Scalar lyapunov_value(const Scalar& c, const State3& s) {
    return todd_invariant(c, s) - equilibrium_invariant(c);
}

struct ViolationWitness {
    State3 state;
    Scalar lhs, rhs;
    std::string inequality;
};

// ---------------------------------------------------------------------------
// Coercivity: I dominates the coordinate sum and each pairwise ratio, which
// forces I -> infinity as any coordinate grows or collapses.
// ---------------------------------------------------------------------------

inline std::optional<ViolationWitness> coercivity_violation(const Scalar& c, const State3& s) {
    const Scalar inv = todd_invariant(c, s);
    const Scalar x0 = s.oldest(), x1 = s.middle(), x2 = s.newest();
    const struct {
        Scalar bound;
        const char* name;
    } bounds[] = {
        {x0 + x1 + x2, "I >= x0+x1+x2"},
        {(x1 + x2) / x0, "I >= (x1+x2)/x0"},
        {(x0 + x2) / x1, "I >= (x0+x2)/x1"},
        {(x0 + x1) / x2, "I >= (x0+x1)/x2"},
    };
    for (const auto& b : bounds) {
        if (inv < b.bound) return ViolationWitness{s, inv, b.bound, b.name};
    }
    return std::nullopt;
}

inline bool coercivity_bounds_hold(const Scalar& c, const State3& s) {
    return !coercivity_violation(c, s).has_value();
}

// ---------------------------------------------------------------------------
// Lyapunov conditions at the equilibrium p:
//   1) V(p,p,p) = 0
//   2) V > 0 away from the equilibrium
//   3) V(T s) = V(s) along the dynamics
// ---------------------------------------------------------------------------

struct LyapunovReport {
    bool zero_at_equilibrium = false;
    bool positive_on_samples = false;
    bool constant_along_step = false;
    std::vector<ViolationWitness> violations;
    std::vector<std::size_t> equilibrium_samples;  // samples violating the s != (p,p,p) precondition
    std::size_t samples_checked = 0;

    bool pass() const {
        return zero_at_equilibrium && positive_on_samples && constant_along_step &&
               equilibrium_samples.empty();
    }
};

inline LyapunovReport check_lyapunov(const Scalar& c, std::span<const State3> samples, double tol) {
    LyapunovReport report;
    const Scalar p = todd_equilibrium(c);
    const Scalar zero = c.same_mode(0);
    const State3 equilibrium(p, p, p);
    const Scalar v_eq = lyapunov_value(c, equilibrium);
    report.zero_at_equilibrium = scalar_close(v_eq, zero, tol);
    if (!report.zero_at_equilibrium)
        report.violations.push_back({equilibrium, v_eq, zero, "V(p,p,p) = 0"});

    report.positive_on_samples = true;
    report.constant_along_step = true;
    const NormalizedTodd map(c);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const State3& s = samples[i];
        if (s.close_to(equilibrium, tol)) {
            report.equilibrium_samples.push_back(i);
            continue;
        }
        const Scalar v = lyapunov_value(c, s);
        if (!(v > zero)) {
            report.positive_on_samples = false;
            report.violations.push_back({s, v, zero, "V(s) > 0"});
        }
        const Scalar v_next = lyapunov_value(c, step_todd(map, s));
        if (!scalar_close(v_next, v, tol)) {
            report.constant_along_step = false;
            report.violations.push_back({s, v_next, v, "V(T s) = V(s)"});
        }
        ++report.samples_checked;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Energy candidates. A closed enumeration keeps evaluation exact-mode capable:
//   ToddInvariant   I(c; .) with the context's c
//   SumCoordinates  x0 + x1 + x2
//   MaxCoordinate   max(x0, x1, x2)
//   MaxComposition  max of a base candidate over forward iterates T^(j*k), j = 0..depth
// ---------------------------------------------------------------------------

enum class CandidateKind { ToddInvariant, SumCoordinates, MaxCoordinate, MaxComposition };

inline const char* candidate_kind_name(CandidateKind k) {
    switch (k) {
        case CandidateKind::ToddInvariant: return "invariant";
        case CandidateKind::SumCoordinates: return "sum";
        case CandidateKind::MaxCoordinate: return "max";
        case CandidateKind::MaxComposition: return "max-composition";
    }
    return "unknown";
}

inline constexpr std::size_t kCompositionDepthCap = 64;

struct EnergyCandidate {
    CandidateKind kind = CandidateKind::SumCoordinates;
    std::shared_ptr<const EnergyCandidate> base;  // MaxComposition only
    std::size_t stride = 1;                       // k
    std::size_t depth = 0;                        // number of composed windows past j = 0
    std::optional<StepMap> composition_map;       // map iterated by MaxComposition

    static EnergyCandidate todd_invariant() { return of_kind(CandidateKind::ToddInvariant); }
    static EnergyCandidate sum_coordinates() { return of_kind(CandidateKind::SumCoordinates); }
    static EnergyCandidate max_coordinate() { return of_kind(CandidateKind::MaxCoordinate); }

private:
    static EnergyCandidate of_kind(CandidateKind k) {
        EnergyCandidate f;
        f.kind = k;
        return f;
    }
};

// F(s) = max_{j=0..depth} f0(T^(j*k) s), the finite truncation of the
// f0 v (f0 o T^k) v (f0 o T^2k) v ... construction. depth 0 returns f0 itself.
inline EnergyCandidate build_max_composition(EnergyCandidate f0, std::size_t stride, std::size_t depth,
                                             StepMap map) {
    if (stride < 1) raise(Errc::InvalidArgument, "stride must be >= 1");
    if (depth > kCompositionDepthCap)
        raise(Errc::InvalidArgument, "composition depth capped at " + std::to_string(kCompositionDepthCap));
    if (depth == 0) return f0;
    EnergyCandidate out;
    out.kind = CandidateKind::MaxComposition;
    out.base = std::make_shared<EnergyCandidate>(std::move(f0));
    out.stride = stride;
    out.depth = depth;
    out.composition_map = std::move(map);
    return out;
}

inline Scalar evaluate_candidate(const EnergyCandidate& f, const Scalar& c, const State3& s) {
    switch (f.kind) {
        case CandidateKind::ToddInvariant: return todd_invariant(c, s);
        case CandidateKind::SumCoordinates: return s.oldest() + s.middle() + s.newest();
        case CandidateKind::MaxCoordinate: {
            Scalar m = s.oldest();
            if (s.middle() > m) m = s.middle();
            if (s.newest() > m) m = s.newest();
            return m;
        }
        case CandidateKind::MaxComposition: {
            if (!f.base || !f.composition_map)
                raise(Errc::InvalidArgument, "max-composition candidate is missing base or map");
            State3 cur = s;
            Scalar best = evaluate_candidate(*f.base, c, cur);
            for (std::size_t j = 1; j <= f.depth; ++j) {
                for (std::size_t i = 0; i < f.stride; ++i) cur = apply_step(*f.composition_map, cur);
                const Scalar v = evaluate_candidate(*f.base, c, cur);
                if (v > best) best = v;
            }
            return best;
        }
    }
    raise(Errc::InvalidArgument, "unknown candidate kind");
}

// ---------------------------------------------------------------------------
// Sub-energy inequality checking against the Todd dynamics with parameter c.
// ---------------------------------------------------------------------------

enum class SubEnergyVariant { OneStep, KStep, MaxOfTwo };

inline const char* sub_energy_variant_name(SubEnergyVariant v) {
    switch (v) {
        case SubEnergyVariant::OneStep: return "one-step";
        case SubEnergyVariant::KStep: return "k-step";
        case SubEnergyVariant::MaxOfTwo: return "max-of-two";
    }
    return "unknown";
}

struct SubEnergyReport {
    bool pass = true;
    bool equality_throughout = true;  // every checked pair was equal (within tol)
    std::optional<ViolationWitness> witness;
    std::size_t samples_checked = 0;
};

// Checks, in deterministic sample order, one of
//   one-step:    f(T s)   <= f(s)
//   k-step:      f(T^k s) <= f(s)
//   max-of-two:  f(T^2 s) <= max(f(s), f(T s))
// The first violated sample is reported. In float mode a violation must
// exceed the comparison tolerance, so round-off never flags a conserved
// candidate.
inline SubEnergyReport check_sub_energy(const EnergyCandidate& f, const Scalar& c,
                                        std::span<const State3> samples, SubEnergyVariant variant,
                                        std::size_t k = 1, double tol = kDefaultRelTolerance) {
    if (variant == SubEnergyVariant::KStep && k < 1) raise(Errc::InvalidArgument, "k must be >= 1");
    const NormalizedTodd map(c);
    SubEnergyReport report;
    for (const State3& s : samples) {
        ++report.samples_checked;
        Scalar lhs = c.same_mode(0), rhs = c.same_mode(0);
        std::string label;
        switch (variant) {
            case SubEnergyVariant::OneStep: {
                rhs = evaluate_candidate(f, c, s);
                lhs = evaluate_candidate(f, c, step_todd(map, s));
                label = "f(T s) <= f(s)";
                break;
            }
            case SubEnergyVariant::KStep: {
                rhs = evaluate_candidate(f, c, s);
                State3 cur = s;
                for (std::size_t i = 0; i < k; ++i) cur = step_todd(map, cur);
                lhs = evaluate_candidate(f, c, cur);
                label = "f(T^" + std::to_string(k) + " s) <= f(s)";
                break;
            }
            case SubEnergyVariant::MaxOfTwo: {
                const Scalar f0 = evaluate_candidate(f, c, s);
                const State3 s1 = step_todd(map, s);
                const Scalar f1 = evaluate_candidate(f, c, s1);
                rhs = f0 > f1 ? f0 : f1;
                lhs = evaluate_candidate(f, c, step_todd(map, s1));
                label = "f(T^2 s) <= max(f(s), f(T s))";
                break;
            }
        }
        if (!scalar_close(lhs, rhs, tol)) {
            report.equality_throughout = false;
            if (lhs > rhs) {
                report.pass = false;
                report.witness = ViolationWitness{s, lhs, rhs, label};
                return report;
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Super-energy refutation. A rho-super-energy g would satisfy
// g(T s) >= rho*g(s) everywhere; at the fixed point s* = (u,u,u) that forces
// g(s*) >= rho*g(s*), impossible for positive g and rho > 1. The returned
// witness carries both evaluated sides.
// ---------------------------------------------------------------------------

struct SuperEnergySpec {
    Scalar rho;
    EnergyCandidate candidate;
    NormalizedTwoParam params;

    SuperEnergySpec(Scalar rho_, EnergyCandidate candidate_, NormalizedTwoParam params_)
        : rho(std::move(rho_)), candidate(std::move(candidate_)), params(std::move(params_)) {
        if (!(rho > rho.same_mode(1))) raise(Errc::InvalidArgument, "rho must be > 1");
    }
};

inline ViolationWitness refute_super_energy(const SuperEnergySpec& spec) {
    const Scalar u = fixed_point(spec.params);
    const State3 star(u, u, u);
    const Scalar g_star = evaluate_candidate(spec.candidate, spec.params.c, star);
    if (!g_star.is_positive())
        raise(Errc::CandidateNotPositive, "candidate evaluates to " + to_string(g_star) + " at the fixed point");
    const State3 next = step_two_param(spec.params, star);
    const Scalar lhs = evaluate_candidate(spec.candidate, spec.params.c, next);
    const Scalar rhs = spec.rho * g_star;
    return ViolationWitness{star, lhs, rhs, "g(T s) >= rho*g(s)"};
}

}  // namespace toddlab
