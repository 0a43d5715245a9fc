#pragma once

#include <cmath>
#include <cstdint>
#include <future>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "stosched/model.hpp"
#include "stosched/policy.hpp"

namespace stosched {

/// One row of an opt-in per-realization table. For paired-instance tables
/// `cost` refers to the second instance and `delta_contribution` holds the
/// unweighted per-realization cost difference.
struct PerRealizationRow {
    std::uint64_t index = 0;
    std::string bitmask;  // one char per enumerated two-point job, id order, '1' = hi
    Rational probability;
    Rational cost;
    std::optional<Rational> delta_contribution;
};

/// Exact expected cost with an exact per-job decomposition.
struct CostBreakdown {
    ObjectiveKind objective = ObjectiveKind::StartTimes;
    Rational total;
    std::map<int, Rational> per_job;  // expected weighted contribution of each job
    std::optional<std::vector<PerRealizationRow>> per_realization;
};

/// Fixes the branch of selected two-point jobs.
struct OutcomeCondition {
    enum class Branch { Lo, Hi };
    std::map<int, Branch> fixed;

    bool empty() const { return fixed.empty(); }
};

struct EvalOptions {
    int enumeration_cap = kDefaultEnumerationCap;
    bool per_realization_table = false;
    int threads = 1;
};

namespace detail {

/// Two-point jobs that remain random under a condition, ascending id.
inline std::vector<int> free_two_point_ids(const SchedInstance& inst,
                                           const OutcomeCondition& cond) {
    for (const auto& [id, branch] : cond.fixed) {
        (void)branch;
        const Job* job = inst.find_job(id);
        if (job == nullptr)
            throw DomainError(ErrorCode::UnknownJobId,
                              "condition references unknown job " + std::to_string(id));
        if (!job->size.is_two_point())
            throw DomainError(ErrorCode::ConditionOnDeterministicJob,
                              "condition references deterministic job " + std::to_string(id));
    }
    std::vector<int> free_ids;
    for (int id : inst.two_point_ids())
        if (!cond.fixed.count(id)) free_ids.push_back(id);
    return free_ids;
}

/// Realization under a condition: conditioned jobs contribute their fixed
/// branch with probability factor 1, so the product over free jobs is
/// already the renormalized conditional probability.
inline Realization realization_at_conditioned(const SchedInstance& inst,
                                              const std::vector<int>& free_ids,
                                              const OutcomeCondition& cond, std::uint64_t index) {
    Realization real;
    for (const auto& job : inst.jobs) {
        if (!job.size.is_two_point()) {
            real.sizes.emplace(job.id, job.size.value);
        } else if (auto it = cond.fixed.find(job.id); it != cond.fixed.end()) {
            real.sizes.emplace(job.id, it->second == OutcomeCondition::Branch::Hi ? job.size.hi
                                                                                  : job.size.lo);
        }
    }
    std::size_t bit = 0;
    for (int id : free_ids) {
        const Job* job = inst.find_job(id);
        const bool hi = (index >> bit) & 1u;
        real.sizes.emplace(id, hi ? job->size.hi : job->size.lo);
        real.probability *= hi ? job->size.p_hi : (1 - job->size.p_hi);
        ++bit;
    }
    return real;
}

inline std::string index_bitmask(std::uint64_t index, std::size_t bits) {
    std::string s(bits, '0');
    for (std::size_t k = 0; k < bits; ++k)
        if ((index >> k) & 1u) s[k] = '1';
    return s;
}

inline void check_enumeration_cap(std::size_t bits, int cap) {
    if (static_cast<int>(bits) > cap)
        throw DomainError(ErrorCode::EnumerationCapExceeded,
                          std::to_string(bits) + " enumerated two-point jobs exceed the cap of " +
                              std::to_string(cap) + "; use Monte-Carlo evaluation instead");
}

/// Splits [0, count) into chunks, reduces each sequentially, and combines
/// chunk results in index order. Rational addition is exact, so the result
/// is bit-identical to a sequential pass for any thread count.
template <typename Accum, typename PerIndex, typename Merge>
Accum indexed_reduce(std::uint64_t count, int threads, const PerIndex& per_index,
                     const Merge& merge) {
    const int t = std::max(1, std::min<int>(threads, 64));
    if (t == 1 || count < 256) {
        Accum acc{};
        for (std::uint64_t i = 0; i < count; ++i) per_index(acc, i);
        return acc;
    }
    const std::uint64_t chunk = (count + t - 1) / t;
    std::vector<std::future<Accum>> parts;
    for (int w = 0; w < t; ++w) {
        const std::uint64_t begin = std::min<std::uint64_t>(count, w * chunk);
        const std::uint64_t end = std::min<std::uint64_t>(count, begin + chunk);
        parts.push_back(std::async(std::launch::async, [&, begin, end] {
            Accum acc{};
            for (std::uint64_t i = begin; i < end; ++i) per_index(acc, i);
            return acc;
        }));
    }
    Accum acc{};
    for (auto& f : parts) {
        Accum part = f.get();
        merge(acc, part);
    }
    return acc;
}

}  // namespace detail

/// Exact expected cost of the list policy over a full (optionally
/// conditioned) enumeration. With a condition the probabilities are the
/// renormalized conditional ones.
inline CostBreakdown expected_cost_conditioned(const SchedInstance& inst, const PriorityRule& rule,
                                               ObjectiveKind obj, const OutcomeCondition& cond,
                                               const EvalOptions& opts = {}) {
    require_valid(inst);
    const auto order = priority_order(inst, rule);
    const auto free_ids = detail::free_two_point_ids(inst, cond);
    detail::check_enumeration_cap(free_ids.size(), opts.enumeration_cap);
    const std::uint64_t count = std::uint64_t{1} << free_ids.size();

    struct Accum {
        Rational total;
        std::map<int, Rational> per_job;
        std::vector<PerRealizationRow> rows;
    };
    const bool want_rows = opts.per_realization_table;
    const auto per_index = [&](Accum& acc, std::uint64_t index) {
        const Realization real = detail::realization_at_conditioned(inst, free_ids, cond, index);
        const Schedule sched = simulate_list_schedule(inst, order, real);
        Rational cost = 0;
        for (const auto& job : inst.jobs) {
            const Rational& t = obj == ObjectiveKind::StartTimes ? sched.start.at(job.id)
                                                                 : sched.completion.at(job.id);
            const Rational contrib = job.weight * t;
            acc.per_job[job.id] += real.probability * contrib;
            cost += contrib;
        }
        acc.total += real.probability * cost;
        if (want_rows)
            acc.rows.push_back({index, detail::index_bitmask(index, free_ids.size()),
                                real.probability, cost, std::nullopt});
    };
    const auto merge = [](Accum& into, Accum& part) {
        into.total += part.total;
        for (const auto& [id, v] : part.per_job) into.per_job[id] += v;
        into.rows.insert(into.rows.end(), std::make_move_iterator(part.rows.begin()),
                         std::make_move_iterator(part.rows.end()));
    };

    Accum acc = detail::indexed_reduce<Accum>(count, opts.threads, per_index, merge);
    CostBreakdown out;
    out.objective = obj;
    out.total = std::move(acc.total);
    out.per_job = std::move(acc.per_job);
    if (want_rows) out.per_realization = std::move(acc.rows);
    return out;
}

/// Exact expected cost of a list policy under full enumeration.
inline CostBreakdown expected_cost(const SchedInstance& inst, const PriorityRule& rule,
                                   ObjectiveKind obj, const EvalOptions& opts = {}) {
    return expected_cost_conditioned(inst, rule, obj, OutcomeCondition{}, opts);
}

/// Exact conditional expectation given fixed branches for some two-point
/// jobs (probabilities renormalized by the condition's probability).
inline Rational conditional_expected_cost(const SchedInstance& inst, const PriorityRule& rule,
                                          ObjectiveKind obj, const OutcomeCondition& cond,
                                          const EvalOptions& opts = {}) {
    return expected_cost_conditioned(inst, rule, obj, cond, opts).total;
}

/// cost(instB) - cost(instA) under identical rule, objective and condition.
inline Rational delta_between(const SchedInstance& instA, const SchedInstance& instB,
                              const PriorityRule& rule, ObjectiveKind obj,
                              const std::optional<OutcomeCondition>& cond = std::nullopt,
                              const EvalOptions& opts = {}) {
    const OutcomeCondition c = cond.value_or(OutcomeCondition{});
    return expected_cost_conditioned(instB, rule, obj, c, opts).total -
           expected_cost_conditioned(instA, rule, obj, c, opts).total;
}

/// Coupled per-realization difference table for paired instances that share
/// the same two-point job ids and branch probabilities (realization index k
/// means the same joint coin outcome in both). `cost` is instance B's cost;
/// `delta_contribution` is costB - costA for that outcome.
inline std::vector<PerRealizationRow> delta_table(const SchedInstance& instA,
                                                  const SchedInstance& instB,
                                                  const PriorityRule& rule, ObjectiveKind obj,
                                                  const OutcomeCondition& cond = {},
                                                  const EvalOptions& opts = {}) {
    require_valid(instA);
    require_valid(instB);
    const auto free_a = detail::free_two_point_ids(instA, cond);
    const auto free_b = detail::free_two_point_ids(instB, cond);
    if (free_a != free_b)
        throw DomainError(ErrorCode::UnknownJobId,
                          "paired instances disagree on their two-point job ids");
    for (int id : free_a)
        if (instA.find_job(id)->size.p_hi != instB.find_job(id)->size.p_hi)
            throw DomainError(ErrorCode::ProbabilityOutOfRange,
                              "paired instances disagree on p_hi of job " + std::to_string(id));
    detail::check_enumeration_cap(free_a.size(), opts.enumeration_cap);

    const auto order_a = priority_order(instA, rule);
    const auto order_b = priority_order(instB, rule);
    const std::uint64_t count = std::uint64_t{1} << free_a.size();
    std::vector<PerRealizationRow> rows;
    rows.reserve(count);
    for (std::uint64_t index = 0; index < count; ++index) {
        const Realization ra = detail::realization_at_conditioned(instA, free_a, cond, index);
        const Realization rb = detail::realization_at_conditioned(instB, free_b, cond, index);
        const Rational cost_a = schedule_cost(instA, simulate_list_schedule(instA, order_a, ra), obj);
        const Rational cost_b = schedule_cost(instB, simulate_list_schedule(instB, order_b, rb), obj);
        rows.push_back({index, detail::index_bitmask(index, free_a.size()), ra.probability, cost_b,
                        cost_b - cost_a});
    }
    return rows;
}

/// Approximate cost estimate. Deliberately a distinct type from
/// CostBreakdown: reduction pipelines only accept exact costs.
struct MonteCarloEstimate {
    Rational mean;      // exact mean of the sampled costs
    double std_error;   // approximate, sqrt(sample variance / samples)
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Uniform 64-bit value for (seed, sample, job) — every pair gets its own
/// stream, so chunked parallel sampling reproduces the sequential outputs.
inline std::uint64_t sample_job_bits(std::uint64_t seed, std::uint64_t sample, std::uint64_t job) {
    return splitmix64(splitmix64(seed ^ splitmix64(sample + 1)) ^ splitmix64(job + 1));
}

}  // namespace detail

/// Monte-Carlo estimate of a list policy's expected cost. Deterministic
/// for a fixed seed: sample i draws job j's branch from a dedicated
/// splitmix64 stream keyed by (seed, i, j), taking the hi branch iff
/// u/2^64 < p_hi (an exact rational comparison).
inline MonteCarloEstimate monte_carlo_cost(const SchedInstance& inst, const PriorityRule& rule,
                                           ObjectiveKind obj, std::uint64_t samples,
                                           std::uint64_t seed, int threads = 1) {
    require_valid(inst);
    if (samples == 0)
        throw DomainError(ErrorCode::EnumerationCapExceeded, "samples must be >= 1");
    const auto order = priority_order(inst, rule);
    const auto tp_ids = inst.two_point_ids();
    const BigInt two64 = BigInt(1) << 64;

    struct Accum {
        Rational sum;
        Rational sum_sq;
    };
    const auto per_index = [&](Accum& acc, std::uint64_t i) {
        Realization real;
        real.probability = 1;
        for (const auto& job : inst.jobs)
            if (!job.size.is_two_point()) real.sizes.emplace(job.id, job.size.value);
        std::uint64_t bit = 0;
        for (int id : tp_ids) {
            const Job* job = inst.find_job(id);
            const std::uint64_t u = detail::sample_job_bits(seed, i, bit++);
            const bool hi = Rational(BigInt(u), two64) < job->size.p_hi;
            real.sizes.emplace(id, hi ? job->size.hi : job->size.lo);
        }
        const Rational cost =
            schedule_cost(inst, simulate_list_schedule(inst, order, real), obj);
        acc.sum += cost;
        acc.sum_sq += cost * cost;
    };
    const auto merge = [](Accum& into, Accum& part) {
        into.sum += part.sum;
        into.sum_sq += part.sum_sq;
    };
    Accum acc = detail::indexed_reduce<Accum>(samples, threads, per_index, merge);

    MonteCarloEstimate est;
    est.samples = samples;
    est.seed = seed;
    est.mean = acc.sum / samples;
    if (samples > 1) {
        const Rational var =
            (acc.sum_sq - est.mean * est.mean * Rational(samples)) / Rational(samples - 1);
        const double v = var < 0 ? 0.0 : static_cast<double>(var) / static_cast<double>(samples);
        est.std_error = std::sqrt(v);
    } else {
        est.std_error = 0.0;
    }
    return est;
}

}  // namespace stosched
