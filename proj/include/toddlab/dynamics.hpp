#pragma once

// The difference-equation maps and their phase space.
//
// General form:    z[n+1] = (alpha + beta*z[n] + lambda*z[n-1]) / z[n-2]
// Todd form:       x[n+1] = (c + x[n] + x[n-1]) / x[n-2],  c = alpha/beta^2
// Two-param form:  u[n+1] = (c + a*u[n] + u[n-1]/a) / u[n-2]
//
// A phase point is the ordered triple (oldest, middle, newest); one step
// shifts left and appends the new value, so the divisor is always `oldest`.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "toddlab/scalar.hpp"

namespace toddlab {

struct Params {
    Scalar alpha, beta, lambda;

    Params(Scalar alpha_, Scalar beta_, Scalar lambda_)
        : alpha(std::move(alpha_)), beta(std::move(beta_)), lambda(std::move(lambda_)) {
        if (alpha.mode() != beta.mode() || beta.mode() != lambda.mode())
            raise(Errc::ModeMismatch, "parameter triple mixes precision modes");
        if (alpha.is_negative() || beta.is_negative() || lambda.is_negative())
            raise(Errc::InvalidArgument, "parameters must be nonnegative");
        if (alpha.is_zero() && beta.is_zero() && lambda.is_zero())
            raise(Errc::InvalidArgument, "parameter triple (0,0,0) is degenerate");
    }
};

struct NormalizedTodd {
    Scalar c;

    explicit NormalizedTodd(Scalar c_) : c(std::move(c_)) {
        if (c.is_negative()) raise(Errc::InvalidArgument, "c must be nonnegative");
    }
};

struct NormalizedTwoParam {
    Scalar c, a;

    NormalizedTwoParam(Scalar c_, Scalar a_) : c(std::move(c_)), a(std::move(a_)) {
        if (c.mode() != a.mode()) raise(Errc::ModeMismatch, "c and a mix precision modes");
        if (c.is_negative()) raise(Errc::InvalidArgument, "c must be nonnegative");
        if (!a.is_positive()) raise(Errc::InvalidArgument, "a must be positive");
    }
};

class State3 {
public:
    State3(Scalar oldest, Scalar middle, Scalar newest)
        : oldest_(std::move(oldest)), middle_(std::move(middle)), newest_(std::move(newest)) {
        if (oldest_.mode() != middle_.mode() || middle_.mode() != newest_.mode())
            raise(Errc::ModeMismatch, "state triple mixes precision modes");
        if (!oldest_.is_positive() || !middle_.is_positive() || !newest_.is_positive())
            raise(Errc::NonPositiveState, "state components must be strictly positive");
    }

    const Scalar& oldest() const { return oldest_; }
    const Scalar& middle() const { return middle_; }
    const Scalar& newest() const { return newest_; }
    Mode mode() const { return oldest_.mode(); }

    bool close_to(const State3& other, double tol) const {
        return scalar_close(oldest_, other.oldest_, tol) && scalar_close(middle_, other.middle_, tol) &&
               scalar_close(newest_, other.newest_, tol);
    }

private:
    Scalar oldest_, middle_, newest_;
};

namespace detail {
inline State3 shift_append(const State3& s, const Scalar& numerator, const char* what) {
    if (!numerator.is_positive())
        raise(Errc::DegenerateStep,
              std::string(what) + " produced a nonpositive or non-finite numerator");
    Scalar next = numerator / s.oldest();
    if (!next.is_finite()) raise(Errc::DegenerateStep, std::string(what) + " produced a non-finite value");
    return State3(s.middle(), s.newest(), std::move(next));
}
}  // namespace detail

inline State3 step_general(const Params& p, const State3& s) {
    return detail::shift_append(s, p.alpha + p.beta * s.newest() + p.lambda * s.middle(), "general step");
}

inline State3 step_todd(const NormalizedTodd& t, const State3& s) {
    return detail::shift_append(s, t.c + s.newest() + s.middle(), "Todd step");
}

inline State3 step_two_param(const NormalizedTwoParam& q, const State3& s) {
    return detail::shift_append(s, q.c + q.a * s.newest() + s.middle() / q.a, "two-parameter step");
}

// x = z/beta conjugates the general map (beta = lambda > 0) to Todd form with
// c = alpha/beta^2. Returns (form, scale).
inline std::pair<NormalizedTodd, Scalar> normalize_todd(const Params& p) {
    if (!(p.beta == p.lambda) || !p.beta.is_positive())
        raise(Errc::NotToddForm, "requires beta = lambda > 0");
    return {NormalizedTodd(p.alpha / (p.beta * p.beta)), p.beta};
}

// u = z/sqrt(beta*lambda) conjugates the general map to the two-parameter
// form with c = alpha/(beta*lambda), a = sqrt(beta/lambda). Float-only: the
// square roots are generally irrational.
inline std::pair<NormalizedTwoParam, Scalar> normalize_two_param(const Params& p) {
    if (!p.beta.is_positive() || !p.lambda.is_positive())
        raise(Errc::NotNormalizable, "requires beta > 0 and lambda > 0");
    if (p.alpha.mode() == Mode::Exact)
        raise(Errc::ExactModeUnsupported, "two-parameter normalization takes square roots; use f64");
    const double beta = p.beta.as_f64(), lambda = p.lambda.as_f64();
    const double c = p.alpha.as_f64() / (beta * lambda);
    const double a = std::sqrt(beta / lambda);
    return {NormalizedTwoParam(Scalar::f64(c), Scalar::f64(a)), Scalar::f64(std::sqrt(beta * lambda))};
}

// w = z/s maps (alpha, beta, lambda) to (alpha/s^2, beta/s, lambda/s); the
// step commutes with coordinate division by s.
inline Params rescale_conjugacy(const Params& p, const Scalar& s) {
    if (!s.is_positive()) raise(Errc::InvalidArgument, "scale must be positive");
    return Params(p.alpha / (s * s), p.beta / s, p.lambda / s);
}

// The unique positive fixed point u of the two-parameter map:
//   u = (1 + a^2 + sqrt(a^4 + 4a^2 c + 2a^2 + 1)) / (2a),  u^2 = c + a u + u/a.
// Exact mode requires the discriminant to be a rational square.
inline Scalar fixed_point(const NormalizedTwoParam& q) {
    const Scalar a2 = q.a * q.a;
    const Scalar one = q.a.same_mode(1);
    const Scalar disc = a2 * a2 + q.c * a2 * q.a.same_mode(4) + a2 * q.a.same_mode(2) + one;
    Scalar root = q.a.same_mode(0);
    if (q.a.is_exact()) {
        const auto r = exact_sqrt(disc.rational());
        if (!r)
            raise(Errc::ExactModeUnsupported,
                  "fixed-point discriminant " + to_string(disc) + " is not a rational square");
        root = Scalar::exact(*r);
    } else {
        root = Scalar::f64(std::sqrt(disc.as_f64()));
    }
    return (one + a2 + root) / (q.a.same_mode(2) * q.a);
}

// ---------------------------------------------------------------------------
// Orbits.
// ---------------------------------------------------------------------------

using StepMap = std::variant<Params, NormalizedTodd, NormalizedTwoParam>;

inline State3 apply_step(const StepMap& map, const State3& s) {
    return std::visit(
        [&](const auto& m) -> State3 {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, Params>) return step_general(m, s);
            else if constexpr (std::is_same_v<M, NormalizedTodd>) return step_todd(m, s);
            else return step_two_param(m, s);
        },
        map);
}

inline Mode map_mode(const StepMap& map) {
    return std::visit(
        [](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, Params>) return m.alpha.mode();
            else return m.c.mode();
        },
        map);
}

inline bool is_todd_form(const StepMap& map) { return std::holds_alternative<NormalizedTodd>(map); }

inline std::optional<Scalar> todd_c(const StepMap& map) {
    if (const auto* t = std::get_if<NormalizedTodd>(&map)) return t->c;
    return std::nullopt;
}

// True when the map belongs to the conjectured bounded family: Todd form,
// beta = lambda, or a = 1.
inline bool symmetric_coefficients(const StepMap& map) {
    if (std::holds_alternative<NormalizedTodd>(map)) return true;
    if (const auto* p = std::get_if<Params>(&map)) return p->beta == p->lambda;
    const auto& q = std::get<NormalizedTwoParam>(map);
    return q.a == q.a.same_mode(1);
}

struct OrbitFailure {
    Errc code;
    std::string message;
    std::size_t at_step;  // 1-based step that failed
};

struct OrbitRecord {
    StepMap map;
    State3 initial;
    std::vector<Scalar> values;           // z_0 ... z_N, N = steps + 2
    std::vector<Scalar> invariant_trace;  // one entry per state window when traced
    Scalar max_value, min_value;
    std::size_t steps = 0;  // steps completed
    std::optional<OrbitFailure> failure;

    std::size_t state_count() const { return values.size() - 2; }

    State3 state_at(std::size_t window) const {
        return State3(values[window], values[window + 1], values[window + 2]);
    }
};

inline OrbitRecord iterate_orbit(const StepMap& map, const State3& s0, std::size_t steps) {
    OrbitRecord rec{map, s0, {}, {}, s0.oldest(), s0.oldest(), 0, std::nullopt};
    rec.values.reserve(steps + 3);
    rec.values.push_back(s0.oldest());
    rec.values.push_back(s0.middle());
    rec.values.push_back(s0.newest());
    for (const auto& v : rec.values) {
        if (v > rec.max_value) rec.max_value = v;
        if (v < rec.min_value) rec.min_value = v;
    }
    State3 s = s0;
    for (std::size_t n = 1; n <= steps; ++n) {
        try {
            s = apply_step(map, s);
        } catch (const Error& e) {
            rec.failure = OrbitFailure{e.code(), e.what(), n};
            break;
        }
        rec.values.push_back(s.newest());
        if (s.newest() > rec.max_value) rec.max_value = s.newest();
        if (s.newest() < rec.min_value) rec.min_value = s.newest();
        rec.steps = n;
    }
    return rec;
}

// Smallest period p >= 1 such that every recorded state window recurs after p
// more steps. A single near-recurrence is not accepted: the match must hold
// for all remaining windows, and candidates are capped at steps/2 so at least
// one full period of evidence exists.
inline std::optional<std::size_t> detect_period(const OrbitRecord& r, double tol) {
    if (r.values.size() < 3) return std::nullopt;
    const std::size_t windows = r.state_count();
    const std::size_t max_candidate = r.steps / 2;
    for (std::size_t p = 1; p <= max_candidate; ++p) {
        bool consistent = true;
        for (std::size_t i = 0; i + p < windows; ++i) {
            if (!scalar_close(r.values[i], r.values[i + p], tol) ||
                !scalar_close(r.values[i + 1], r.values[i + p + 1], tol) ||
                !scalar_close(r.values[i + 2], r.values[i + p + 2], tol)) {
                consistent = false;
                break;
            }
        }
        if (consistent) return p;
    }
    return std::nullopt;
}

// Describes the map for reports: filled fields mirror the variant alternative.
struct MapDescription {
    std::optional<Scalar> alpha, beta, lambda, c, a;
};

inline MapDescription describe_map(const StepMap& map) {
    MapDescription d;
    std::visit(
        [&](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, Params>) {
                d.alpha = m.alpha;
                d.beta = m.beta;
                d.lambda = m.lambda;
            } else if constexpr (std::is_same_v<M, NormalizedTodd>) {
                d.c = m.c;
            } else {
                d.c = m.c;
                d.a = m.a;
            }
        },
        map);
    return d;
}

}  // namespace toddlab
