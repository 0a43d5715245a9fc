#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stosched/evaluator.hpp"
#include "stosched/model.hpp"
#include "stosched/optimal.hpp"
#include "stosched/policy.hpp"

namespace stosched {

/// Counting instance: integer item sizes and an integer capacity bound.
/// A feasible solution is a subset whose total size is at most the bound.
struct KnapsackInstance {
    std::vector<long long> sizes;
    long long bound = 2;

    int n() const { return static_cast<int>(sizes.size()); }
    long long total() const {
        long long s = 0;
        for (long long v : sizes) s += v;
        return s;
    }
};

inline void require_valid(const KnapsackInstance& kp) {
    if (kp.n() < 2)
        throw DomainError(ErrorCode::InvalidKnapsack, "need at least 2 items");
    if (kp.bound < 2)
        throw DomainError(ErrorCode::InvalidKnapsack, "bound must be >= 2");
    for (long long s : kp.sizes)
        if (s < 1 || s > kp.bound)
            throw DomainError(ErrorCode::InvalidKnapsack,
                              "item sizes must satisfy 1 <= s_i <= bound");
}

/// Counts feasible subsets by exhaustive bitmask enumeration.
inline std::uint64_t count_knapsack_bruteforce(const KnapsackInstance& kp) {
    require_valid(kp);
    if (kp.n() > 30)
        throw DomainError(ErrorCode::TooManyItems,
                          "brute-force count is capped at 30 items");
    const std::uint64_t max = std::uint64_t{1} << kp.n();
    std::uint64_t feasible = 0;
    for (std::uint64_t mask = 0; mask < max; ++mask) {
        long long sum = 0;
        for (int i = 0; i < kp.n(); ++i)
            if ((mask >> i) & 1u) sum += kp.sizes[i];
        if (sum <= kp.bound) ++feasible;
    }
    return feasible;
}

struct RestrictResult {
    KnapsackInstance instance;
    std::uint64_t count_adjustment = 0;  // feasible(original) = feasible(restricted) - adjustment
    bool applied = false;
};

/// Rewrites an instance whose total size exceeds 3B/2 into an equivalent
/// restricted one (B'+1 < total' <= 3B'/2) by adding two items of size
/// S = total and setting B' = 2S + B. Every subset missing at least one
/// new item fits, so feasible counts differ by exactly 3 * 2^n.
inline RestrictResult restrict_knapsack(const KnapsackInstance& kp) {
    require_valid(kp);
    const long long total = kp.total();
    if (2 * total <= 3 * kp.bound) return {kp, 0, false};  // already restricted upstream

    KnapsackInstance out = kp;
    out.sizes.push_back(total);
    out.sizes.push_back(total);
    out.bound = 2 * total + kp.bound;
    require_valid(out);
    return {out, std::uint64_t{3} << kp.n(), true};
}

/// Which counting pipeline produced a report.
enum class ReductionMode { WseptThm1, SeptThm2, OptimalThm4 };

inline const char* mode_name(ReductionMode m) {
    switch (m) {
        case ReductionMode::WseptThm1: return "wsept";
        case ReductionMode::SeptThm2: return "sept";
        case ReductionMode::OptimalThm4: return "optimal";
    }
    return "?";
}

/// Builds the two WSEPT evaluation instances for a counting input with
/// total size > B+1. Both use m = n machines; n two-point coin jobs with
/// sizes 1/n or s_j (probability 1/2 each, weight 1); m-1 heavyweight
/// deterministic blockers (weight 6B) of which exactly one is shorter
/// (B+1 instead of B+1+1/n) in the first instance; and one deterministic
/// dummy of size B, weight 1.
inline std::pair<SchedInstance, SchedInstance> build_wsept_pair(const KnapsackInstance& kp) {
    require_valid(kp);
    const int n = kp.n();
    if (kp.total() <= kp.bound + 1)
        throw DomainError(ErrorCode::TotalSizeTooSmall,
                          "construction requires total item size > bound + 1 "
                          "(smaller cases have closed-form counts)");

    const Rational b = kp.bound;
    const Rational short_size(1, n);
    const Rational long_blocker = b + 1 + short_size;

    SchedInstance base;
    base.machines = n;
    for (int j = 0; j < n; ++j)
        base.jobs.push_back({j, 1,
                             SizeDistribution::two_point(short_size, kp.sizes[j], Rational(1, 2)),
                             JobTag::Knapsack});
    for (int j = 0; j < n - 1; ++j)
        base.jobs.push_back({n + j, 6 * b, SizeDistribution::deterministic(long_blocker),
                             JobTag::Blocker});
    base.jobs.push_back({2 * n - 1, 1, SizeDistribution::deterministic(b), JobTag::Dummy});

    SchedInstance first = base;
    first.jobs[n].size = SizeDistribution::deterministic(b + 1);  // the one short blocker
    require_valid(first);
    require_valid(base);
    return {first, base};
}

enum class SeptQMode { Evaluation, OptimalPolicy };

struct SeptPair {
    SchedInstance first;
    SchedInstance second;
    Rational q_used;
};

/// Builds the two SEPT instances: unit weights throughout, Bernoulli
/// blockers of size 0 or B+1 (one of them, first instance only) resp.
/// 0 or B+1+1/n, each long with probability q, and a deterministic dummy
/// of size B+1. Requires a restricted input (B+1 < total <= 3B/2); apply
/// restrict_knapsack first otherwise. Default q is 1/(3B) for policy
/// evaluation and 1/(2 n^2 B) when an optimal policy must provably start
/// the blockers first.
inline SeptPair build_sept_pair(const KnapsackInstance& kp,
                                const std::optional<Rational>& q = std::nullopt,
                                SeptQMode q_mode = SeptQMode::Evaluation) {
    require_valid(kp);
    const int n = kp.n();
    if (kp.total() <= kp.bound + 1)
        throw DomainError(ErrorCode::TotalSizeTooSmall,
                          "construction requires total item size > bound + 1 "
                          "(smaller cases have closed-form counts)");
    if (2 * kp.total() > 3 * kp.bound)
        throw DomainError(ErrorCode::NotRestricted,
                          "construction requires total item size <= 3B/2; "
                          "apply restrict_knapsack first");

    Rational q_used;
    if (q) {
        if (*q <= 0 || *q >= 1)
            throw DomainError(ErrorCode::ProbabilityOutOfRange, "q must satisfy 0 < q < 1");
        q_used = *q;
    } else if (q_mode == SeptQMode::Evaluation) {
        q_used = Rational(1, 3 * kp.bound);
    } else {
        q_used = Rational(1, 2 * static_cast<long long>(n) * n * kp.bound);
    }

    const Rational b = kp.bound;
    const Rational short_size(1, n);
    const Rational long_blocker = b + 1 + short_size;

    SchedInstance base;
    base.machines = n;
    for (int j = 0; j < n; ++j)
        base.jobs.push_back({j, 1,
                             SizeDistribution::two_point(short_size, kp.sizes[j], Rational(1, 2)),
                             JobTag::Knapsack});
    for (int j = 0; j < n - 1; ++j)
        base.jobs.push_back({n + j, 1, SizeDistribution::two_point(Rational(0), long_blocker, q_used),
                             JobTag::Blocker});
    base.jobs.push_back({2 * n - 1, 1, SizeDistribution::deterministic(b + 1), JobTag::Dummy});

    SchedInstance first = base;
    first.jobs[n].size = SizeDistribution::two_point(Rational(0), b + 1, q_used);
    require_valid(first);
    require_valid(base);
    return {first, base, q_used};
}

/// Outcome of one counting pipeline run. `feasible`/`infeasible` always
/// refer to the original input; when the restriction transform was applied
/// the recovery happened on the enlarged instance and `count_adjustment`
/// was subtracted.
struct ReductionReport {
    ReductionMode mode = ReductionMode::WseptThm1;
    int n = 0;                      // original item count
    std::uint64_t feasible = 0;     // original feasible count (the answer)
    std::uint64_t infeasible = 0;   // 2^n - feasible
    std::optional<std::string> trivial_case;
    bool transform_applied = false;
    int evaluated_n = 0;            // item count of the instance actually evaluated
    std::uint64_t count_adjustment = 0;
    std::uint64_t evaluated_infeasible = 0;  // k recovered on the evaluated instance
    Rational e1, e2, delta;
    std::optional<Rational> q;
    std::optional<std::vector<PerRealizationRow>> per_realization;
};

struct CountOptions {
    int enumeration_cap = kDefaultEnumerationCap;
    int dp_cap = kDefaultDpCap;
    bool per_realization_table = false;
    std::optional<Rational> q;
    int threads = 1;
};

namespace detail {

inline Rational pow_rational(const Rational& base, unsigned exp) {
    Rational r = 1;
    for (unsigned i = 0; i < exp; ++i) r *= base;
    return r;
}

/// Closed-form counts that bypass the construction: with total <= B every
/// subset fits (2^n); with total == B+1 exactly the full set fails (2^n - 1).
inline std::optional<ReductionReport> trivial_count(const KnapsackInstance& kp,
                                                    ReductionMode mode) {
    const long long total = kp.total();
    if (total > kp.bound + 1) return std::nullopt;
    ReductionReport rep;
    rep.mode = mode;
    rep.n = kp.n();
    rep.evaluated_n = kp.n();
    const std::uint64_t all = std::uint64_t{1} << kp.n();
    if (total <= kp.bound) {
        rep.trivial_case = "total_at_most_bound";
        rep.feasible = all;
    } else {
        rep.trivial_case = "total_equals_bound_plus_one";
        rep.feasible = all - 1;
    }
    rep.infeasible = all - rep.feasible;
    return rep;
}

/// Converts the exact cost difference into the infeasible-subset count
/// k = n 2^n Delta / q^(m-1) and validates integrality and range.
inline std::uint64_t recover_count(const Rational& delta, int n, const Rational& q_power) {
    const Rational k = delta * n * Rational(BigInt(1) << n) / q_power;
    if (!is_integer(k) || k < 0 || k > Rational(BigInt(1) << n))
        throw DomainError(ErrorCode::NonIntegerCount,
                          "recovered count " + to_string(k) +
                              " is not an integer in [0, 2^n]; this indicates an "
                              "implementation bug");
    return static_cast<std::uint64_t>(numerator(k));
}

inline void finish_report(ReductionReport& rep, const KnapsackInstance& original,
                          std::uint64_t evaluated_k) {
    rep.evaluated_infeasible = evaluated_k;
    const std::uint64_t evaluated_feasible = (std::uint64_t{1} << rep.evaluated_n) - evaluated_k;
    if (evaluated_feasible < rep.count_adjustment)
        throw DomainError(ErrorCode::NonIntegerCount,
                          "recovered feasible count is smaller than the transform adjustment");
    rep.feasible = evaluated_feasible - rep.count_adjustment;
    const std::uint64_t all = std::uint64_t{1} << original.n();
    if (rep.feasible > all)
        throw DomainError(ErrorCode::NonIntegerCount,
                          "recovered feasible count exceeds 2^n");
    rep.infeasible = all - rep.feasible;
}

}  // namespace detail

/// Counts feasible subsets by evaluating the paired scheduling instances
/// under the mode's list policy and reading the count off the exact cost
/// difference. WseptThm1 evaluates the weighted pair as-is; SeptThm2 first
/// applies the restriction transform when needed, then divides the
/// difference by q^(m-1).
inline ReductionReport count_via_policy(const KnapsackInstance& kp, ReductionMode mode,
                                        const CountOptions& opts = {}) {
    require_valid(kp);
    if (mode == ReductionMode::OptimalThm4)
        throw std::invalid_argument("use count_via_optimal for the optimal-policy pipeline");
    if (auto trivial = detail::trivial_count(kp, mode)) return *trivial;

    ReductionReport rep;
    rep.mode = mode;
    rep.n = kp.n();

    EvalOptions eval_opts;
    eval_opts.enumeration_cap = opts.enumeration_cap;
    eval_opts.threads = opts.threads;

    if (mode == ReductionMode::WseptThm1) {
        rep.evaluated_n = kp.n();
        const auto [first, second] = build_wsept_pair(kp);
        const auto rule = PriorityRule::wsept();
        rep.e1 = expected_cost(first, rule, ObjectiveKind::StartTimes, eval_opts).total;
        rep.e2 = expected_cost(second, rule, ObjectiveKind::StartTimes, eval_opts).total;
        rep.delta = rep.e2 - rep.e1;
        if (opts.per_realization_table)
            rep.per_realization =
                delta_table(first, second, rule, ObjectiveKind::StartTimes, {}, eval_opts);
        detail::finish_report(rep, kp, detail::recover_count(rep.delta, rep.n, Rational(1)));
        return rep;
    }

    // SeptThm2
    const RestrictResult restricted = restrict_knapsack(kp);
    rep.transform_applied = restricted.applied;
    rep.count_adjustment = restricted.count_adjustment;
    const KnapsackInstance& work = restricted.instance;
    rep.evaluated_n = work.n();

    const SeptPair pair = build_sept_pair(work, opts.q, SeptQMode::Evaluation);
    rep.q = pair.q_used;
    const auto rule = PriorityRule::sept();
    rep.e1 = expected_cost(pair.first, rule, ObjectiveKind::StartTimes, eval_opts).total;
    rep.e2 = expected_cost(pair.second, rule, ObjectiveKind::StartTimes, eval_opts).total;
    rep.delta = rep.e2 - rep.e1;
    if (opts.per_realization_table)
        rep.per_realization =
            delta_table(pair.first, pair.second, rule, ObjectiveKind::StartTimes, {}, eval_opts);
    const Rational q_power = detail::pow_rational(pair.q_used, work.n() - 1);  // m - 1 = n - 1
    detail::finish_report(rep, kp, detail::recover_count(rep.delta, rep.evaluated_n, q_power));
    return rep;
}

/// Same recovery as the SEPT pipeline, but both expected costs come from
/// the exact optimal-policy computation at q = 1/(2 n^2 B). Also verifies
/// that the optimum equals the SEPT list cost on both instances, which the
/// construction guarantees.
inline ReductionReport count_via_optimal(const KnapsackInstance& kp,
                                         const CountOptions& opts = {}) {
    require_valid(kp);
    if (auto trivial = detail::trivial_count(kp, ReductionMode::OptimalThm4)) return *trivial;

    ReductionReport rep;
    rep.mode = ReductionMode::OptimalThm4;
    rep.n = kp.n();

    const RestrictResult restricted = restrict_knapsack(kp);
    rep.transform_applied = restricted.applied;
    rep.count_adjustment = restricted.count_adjustment;
    const KnapsackInstance& work = restricted.instance;
    rep.evaluated_n = work.n();

    const SeptPair pair = build_sept_pair(work, opts.q, SeptQMode::OptimalPolicy);
    rep.q = pair.q_used;

    DpOptions dp_opts;
    dp_opts.dp_cap = opts.dp_cap;
    dp_opts.build_tree = false;
    EvalOptions eval_opts;
    eval_opts.enumeration_cap = opts.enumeration_cap;
    eval_opts.threads = opts.threads;

    const auto rule = PriorityRule::sept();
    rep.e1 = optimal_expected_cost(pair.first, ObjectiveKind::StartTimes, dp_opts).cost;
    rep.e2 = optimal_expected_cost(pair.second, ObjectiveKind::StartTimes, dp_opts).cost;
    const Rational sept1 = expected_cost(pair.first, rule, ObjectiveKind::StartTimes, eval_opts).total;
    const Rational sept2 = expected_cost(pair.second, rule, ObjectiveKind::StartTimes, eval_opts).total;
    if (rep.e1 != sept1 || rep.e2 != sept2)
        throw DomainError(ErrorCode::OptimalDiffersFromSept,
                          "optimal cost differs from the SEPT cost on a constructed instance; "
                          "this falsifies the construction's premise and indicates a bug");

    rep.delta = rep.e2 - rep.e1;
    const Rational q_power = detail::pow_rational(pair.q_used, work.n() - 1);
    detail::finish_report(rep, kp, detail::recover_count(rep.delta, rep.evaluated_n, q_power));
    return rep;
}

// ---------------------------------------------------------------------------
// lemma-verification harness
// ---------------------------------------------------------------------------

struct VerificationCheck {
    std::string name;
    bool pass = true;
    std::string details;
};

struct VerificationReport {
    ReductionMode mode = ReductionMode::WseptThm1;
    int n = 0;
    std::optional<Rational> q;
    bool trivial = false;
    bool transform_applied = false;
    std::vector<VerificationCheck> checks;

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

namespace detail {

struct CheckBuilder {
    VerificationCheck check;
    explicit CheckBuilder(std::string name) { check.name = std::move(name); }

    void fail(const std::string& details) {
        if (check.pass) {
            check.pass = false;
            check.details = details;
        }
    }
    void note(const std::string& details) {
        if (check.pass && check.details.empty()) check.details = details;
    }
};

/// Set of long knapsack jobs encoded by the low n bits of a realization
/// index, and whether that subset fits the bound.
inline bool is_yes_realization(const KnapsackInstance& kp, std::uint64_t index) {
    long long sum = 0;
    for (int j = 0; j < kp.n(); ++j)
        if ((index >> j) & 1u) sum += kp.sizes[j];
    return sum <= kp.bound;
}

inline std::vector<int> tagged_ids(const SchedInstance& inst, JobTag tag) {
    std::vector<int> ids;
    for (const auto& j : inst.jobs)
        if (j.tag == tag) ids.push_back(j.id);
    return ids;
}

/// Fact-1-style ordering: in every realization every blocker starts at
/// time 0 and no job starts after the dummy.
inline void check_role_ordering(CheckBuilder& cb, const SchedInstance& inst,
                                const std::vector<int>& order, const Realization& real,
                                MachineTieBreak tie, std::uint64_t index) {
    const Schedule sched = simulate_list_schedule(inst, order, real, tie);
    const auto blockers = tagged_ids(inst, JobTag::Blocker);
    const auto dummies = tagged_ids(inst, JobTag::Dummy);
    const Rational dummy_start = sched.start.at(dummies.front());
    for (int b : blockers)
        if (sched.start.at(b) != 0)
            cb.fail("blocker " + std::to_string(b) + " starts at " + to_string(sched.start.at(b)) +
                    " in realization " + std::to_string(index));
    for (const auto& [id, start] : sched.start)
        if (start > dummy_start)
            cb.fail("job " + std::to_string(id) + " starts after the dummy in realization " +
                    std::to_string(index));
}

/// Total realized size of the free machine's knapsack prefix (jobs started
/// on the blocker-free machine no later than B+1), following the
/// construction's counting argument. When a completion tie at exactly B+1
/// diverts the next knapsack job to a just-freed blocker machine, that job
/// is counted as part of the prefix volume.
inline Rational prefix_volume(const SchedInstance& inst, const std::vector<int>& order,
                              const Realization& real, MachineTieBreak tie, long long bound) {
    const Schedule sched = simulate_list_schedule(inst, order, real, tie);
    const auto blockers = tagged_ids(inst, JobTag::Blocker);
    std::vector<bool> machine_blocked(inst.machines, false);
    for (int b : blockers) machine_blocked[static_cast<std::size_t>(sched.machine.at(b))] = true;

    const Rational cutoff = Rational(bound) + 1;
    Rational volume = 0;
    for (const auto& job : inst.jobs) {
        if (job.tag != JobTag::Knapsack) continue;
        const Rational& start = sched.start.at(job.id);
        if (start > cutoff) continue;
        const bool on_free = !machine_blocked[static_cast<std::size_t>(sched.machine.at(job.id))];
        if (on_free || start == cutoff) volume += real.size_of(job.id);
    }
    return volume;
}

}  // namespace detail

/// Re-derives the construction's per-realization claims by measurement:
/// every check enumerates outcomes and compares exact schedule costs, and
/// failures carry the offending realization. Checks are report entries,
/// never exceptions.
inline VerificationReport verify_lemmas(const KnapsackInstance& kp, ReductionMode mode,
                                        const CountOptions& opts = {}) {
    require_valid(kp);
    VerificationReport rep;
    rep.mode = mode;
    rep.n = kp.n();

    if (kp.total() <= kp.bound + 1) {
        rep.trivial = true;
        detail::CheckBuilder cb("trivial_routing");
        cb.note(kp.total() <= kp.bound ? "total <= bound: all 2^n subsets feasible"
                                       : "total == bound + 1: 2^n - 1 subsets feasible");
        rep.checks.push_back(cb.check);
        return rep;
    }

    EvalOptions eval_opts;
    eval_opts.enumeration_cap = opts.enumeration_cap;
    eval_opts.threads = opts.threads;

    if (mode == ReductionMode::WseptThm1) {
        const auto [first, second] = build_wsept_pair(kp);
        const auto rule = PriorityRule::wsept();
        const auto order1 = priority_order(first, rule);
        const auto order2 = priority_order(second, rule);
        const int n = kp.n();
        const Rational contribution(1, n);

        detail::CheckBuilder ratio("wsept_ratio_separation");
        {
            for (const auto& job : first.jobs) {
                const Rational r = job.weight / job.size.expectation();
                if (job.tag == JobTag::Blocker && !(r > 2))
                    ratio.fail("blocker ratio " + to_string(r) + " not > 2");
                if (job.tag == JobTag::Knapsack && !(r <= 2 && r > Rational(1, kp.bound)))
                    ratio.fail("knapsack ratio " + to_string(r) + " outside (1/B, 2]");
                if (job.tag == JobTag::Dummy && r != Rational(1, kp.bound))
                    ratio.fail("dummy ratio " + to_string(r) + " != 1/B");
            }
        }
        rep.checks.push_back(ratio.check);

        detail::CheckBuilder fact1("fact1_blockers_first_dummy_last");
        detail::CheckBuilder contrib("yes_no_realization_contributions");
        detail::CheckBuilder contrib_alt("yes_no_contributions_alternative_tiebreak");
        detail::CheckBuilder prefix("no_realization_prefix_volume_bound");
        Rational min_excess;
        bool have_excess = false;

        const auto tp_ids = first.two_point_ids();
        for_each_realization(
            first,
            [&](std::uint64_t index, const Realization& r1) {
                const Realization r2 = realization_at(second, tp_ids, index);
                const bool yes = detail::is_yes_realization(kp, index);

                for (auto tie : {MachineTieBreak::LowestIndex, MachineTieBreak::HighestIndex}) {
                    detail::check_role_ordering(fact1, first, order1, r1, tie, index);
                    detail::check_role_ordering(fact1, second, order2, r2, tie, index);

                    const Rational diff =
                        schedule_cost(second, simulate_list_schedule(second, order2, r2, tie),
                                      ObjectiveKind::StartTimes) -
                        schedule_cost(first, simulate_list_schedule(first, order1, r1, tie),
                                      ObjectiveKind::StartTimes);
                    const Rational expected = yes ? Rational(0) : contribution;
                    auto& target =
                        tie == MachineTieBreak::LowestIndex ? contrib : contrib_alt;
                    if (diff != expected)
                        target.fail("realization " + std::to_string(index) + " contributes " +
                                    to_string(diff) + ", expected " + to_string(expected));
                }

                if (!yes) {
                    const Rational volume =
                        detail::prefix_volume(first, order1, r1, MachineTieBreak::LowestIndex,
                                              kp.bound);
                    const Rational lower = Rational(kp.bound) + 1 + contribution;
                    if (volume < lower)
                        prefix.fail("realization " + std::to_string(index) + " has prefix volume " +
                                    to_string(volume) + " < " + to_string(lower));
                    const Rational excess = volume - lower;
                    if (!have_excess || excess < min_excess) {
                        min_excess = excess;
                        have_excess = true;
                    }
                }
            },
            opts.enumeration_cap);
        if (have_excess)
            prefix.note("minimum slack above B+1+1/n over NO realizations: " +
                        to_string(min_excess));
        rep.checks.push_back(fact1.check);
        rep.checks.push_back(contrib.check);
        rep.checks.push_back(contrib_alt.check);
        rep.checks.push_back(prefix.check);
        return rep;
    }

    // SEPT- and optimal-mode checks share the Bernoulli-blocker pair.
    const RestrictResult restricted = restrict_knapsack(kp);
    rep.transform_applied = restricted.applied;
    const KnapsackInstance& work = restricted.instance;
    const int n = work.n();
    const Rational contribution(1, n);
    const SeptQMode q_mode = mode == ReductionMode::OptimalThm4 ? SeptQMode::OptimalPolicy
                                                                : SeptQMode::Evaluation;
    const SeptPair pair = build_sept_pair(work, opts.q, q_mode);
    rep.q = pair.q_used;
    const auto rule = PriorityRule::sept();
    const auto order1 = priority_order(pair.first, rule);
    const auto order2 = priority_order(pair.second, rule);
    const auto blocker_ids = detail::tagged_ids(pair.first, JobTag::Blocker);

    detail::CheckBuilder order_check("sept_order_blockers_first_dummy_last");
    {
        for (const auto* order : {&order1, &order2}) {
            for (std::size_t i = 0; i < blocker_ids.size(); ++i) {
                const Job* job = pair.first.find_job((*order)[i]);
                if (job->tag != JobTag::Blocker)
                    order_check.fail("position " + std::to_string(i) + " holds a non-blocker");
            }
            if (pair.first.find_job(order->back())->tag != JobTag::Dummy)
                order_check.fail("dummy is not last in the SEPT order");
        }
    }
    rep.checks.push_back(order_check.check);

    detail::CheckBuilder short_blocker("short_blocker_realizations_contribute_zero");
    detail::CheckBuilder conditional("conditional_yes_no_contributions");
    detail::CheckBuilder conditional_alt("conditional_contributions_alternative_tiebreak");

    const auto tp_ids = pair.first.two_point_ids();  // knapsack bits 0..n-1, then blockers
    Rational delta_total = 0;
    for_each_realization(
        pair.first,
        [&](std::uint64_t index, const Realization& r1) {
            const Realization r2 = realization_at(pair.second, tp_ids, index);
            const Rational diff =
                schedule_cost(pair.second, simulate_list_schedule(pair.second, order2, r2),
                              ObjectiveKind::StartTimes) -
                schedule_cost(pair.first, simulate_list_schedule(pair.first, order1, r1),
                              ObjectiveKind::StartTimes);
            delta_total += r1.probability * diff;

            bool all_blockers_long = true;
            for (std::size_t b = 0; b < blocker_ids.size(); ++b)
                if (((index >> (n + b)) & 1u) == 0) all_blockers_long = false;

            if (!all_blockers_long) {
                if (diff != 0)
                    short_blocker.fail("realization " + std::to_string(index) +
                                       " has a short blocker but contributes " + to_string(diff));
                return;
            }
            const bool yes = detail::is_yes_realization(work, index);
            const Rational expected = yes ? Rational(0) : contribution;
            if (diff != expected)
                conditional.fail("realization " + std::to_string(index) + " contributes " +
                                 to_string(diff) + ", expected " + to_string(expected));
            const Rational diff_alt =
                schedule_cost(pair.second,
                              simulate_list_schedule(pair.second, order2, r2,
                                                     MachineTieBreak::HighestIndex),
                              ObjectiveKind::StartTimes) -
                schedule_cost(pair.first,
                              simulate_list_schedule(pair.first, order1, r1,
                                                     MachineTieBreak::HighestIndex),
                              ObjectiveKind::StartTimes);
            if (diff_alt != expected)
                conditional_alt.fail("realization " + std::to_string(index) + " contributes " +
                                     to_string(diff_alt) + ", expected " + to_string(expected));
        },
        opts.enumeration_cap);
    rep.checks.push_back(short_blocker.check);
    rep.checks.push_back(conditional.check);
    rep.checks.push_back(conditional_alt.check);

    detail::CheckBuilder lemma5("delta_equals_q_power_times_conditional_delta");
    {
        OutcomeCondition all_long;
        for (int b : blocker_ids) all_long.fixed[b] = OutcomeCondition::Branch::Hi;
        const Rational e1c =
            conditional_expected_cost(pair.first, rule, ObjectiveKind::StartTimes, all_long,
                                      eval_opts);
        const Rational e2c =
            conditional_expected_cost(pair.second, rule, ObjectiveKind::StartTimes, all_long,
                                      eval_opts);
        const Rational q_power = detail::pow_rational(pair.q_used, work.n() - 1);
        if (delta_total != q_power * (e2c - e1c))
            lemma5.fail("delta " + to_string(delta_total) + " != q^(m-1) * (E2' - E1') = " +
                        to_string(q_power * (e2c - e1c)));
        else
            lemma5.note("delta = " + to_string(delta_total) + ", E2' - E1' = " +
                        to_string(e2c - e1c));
    }
    rep.checks.push_back(lemma5.check);

    if (mode == ReductionMode::OptimalThm4) {
        DpOptions dp_opts;
        dp_opts.dp_cap = opts.dp_cap;

        detail::CheckBuilder dp_sept("optimal_cost_equals_sept_cost");
        detail::CheckBuilder root("optimal_policy_starts_all_blockers_at_time_zero");
        for (const auto* inst : {&pair.first, &pair.second}) {
            const OptimalResult opt =
                optimal_expected_cost(*inst, ObjectiveKind::StartTimes, dp_opts);
            const Rational sept_cost =
                expected_cost(*inst, rule, ObjectiveKind::StartTimes, eval_opts).total;
            if (opt.cost != sept_cost)
                dp_sept.fail("optimal " + to_string(opt.cost) + " != SEPT " +
                             to_string(sept_cost));
            const auto& start_set = opt.tree->nodes.at(opt.tree->root).start_set;
            for (int b : blocker_ids)
                if (std::find(start_set.begin(), start_set.end(), b) == start_set.end())
                    root.fail("blocker " + std::to_string(b) + " missing from the root start set");
        }
        rep.checks.push_back(dp_sept.check);
        rep.checks.push_back(root.check);
    }
    return rep;
}

}  // namespace stosched
