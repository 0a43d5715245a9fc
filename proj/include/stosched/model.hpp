#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stosched/errors.hpp"
#include "stosched/rational.hpp"

namespace stosched {

/// Default cap on the number of two-point jobs a full enumeration will
/// accept (2^24 ~ 16.7M realizations).
inline constexpr int kDefaultEnumerationCap = 24;

/// Processing-time distribution with support size at most two.
///
/// Boundary probabilities are deliberately rejected: a two-point size with
/// p_hi in {0,1} must be encoded as Deterministic, so that a full
/// enumeration always has exactly 2^(#two-point jobs) branches.
struct SizeDistribution {
    enum class Kind { Deterministic, TwoPoint };

    Kind kind = Kind::Deterministic;
    Rational value;  // Deterministic only
    Rational lo, hi; // TwoPoint only
    Rational p_hi;   // probability of the hi branch

    static SizeDistribution deterministic(Rational v) {
        SizeDistribution d;
        d.kind = Kind::Deterministic;
        d.value = std::move(v);
        return d;
    }

    static SizeDistribution two_point(Rational lo, Rational hi, Rational p_hi) {
        SizeDistribution d;
        d.kind = Kind::TwoPoint;
        d.lo = std::move(lo);
        d.hi = std::move(hi);
        d.p_hi = std::move(p_hi);
        return d;
    }

    bool is_two_point() const { return kind == Kind::TwoPoint; }

    Rational expectation() const {
        if (kind == Kind::Deterministic) return value;
        return lo * (1 - p_hi) + hi * p_hi;
    }

    /// Largest support value.
    const Rational& max_value() const { return kind == Kind::Deterministic ? value : hi; }
};

/// Job roles in the counting constructions. Metadata only: simulation and
/// optimization never read the tag.
enum class JobTag { Knapsack, Blocker, Dummy, Plain };

inline const char* tag_name(JobTag t) {
    switch (t) {
        case JobTag::Knapsack: return "knapsack";
        case JobTag::Blocker: return "blocker";
        case JobTag::Dummy: return "dummy";
        case JobTag::Plain: return "plain";
    }
    return "plain";
}

struct Job {
    int id = 0;
    Rational weight = 1;
    SizeDistribution size;
    JobTag tag = JobTag::Plain;
};

/// Non-preemptive stochastic scheduling instance on parallel identical
/// machines.
struct SchedInstance {
    int machines = 1;
    std::vector<Job> jobs;

    const Job* find_job(int id) const {
        for (const auto& j : jobs)
            if (j.id == id) return &j;
        return nullptr;
    }

    /// Ids of two-point jobs in ascending id order; this fixes the bit
    /// order of realization indices (bit k = k-th id here, 0 = lo branch).
    std::vector<int> two_point_ids() const {
        std::vector<int> ids;
        for (const auto& j : jobs)
            if (j.size.is_two_point()) ids.push_back(j.id);
        std::sort(ids.begin(), ids.end());
        return ids;
    }

    Rational total_weight() const {
        Rational w = 0;
        for (const auto& j : jobs) w += j.weight;
        return w;
    }

    /// sum_j w_j * E[X_j]; the policy-independent gap between the
    /// completion-time and start-time objectives.
    Rational weighted_expected_size() const {
        Rational s = 0;
        for (const auto& j : jobs) s += j.weight * j.size.expectation();
        return s;
    }
};

/// Objective: expected total weighted start times, or completion times.
/// They differ by the policy-independent constant sum_j w_j E[X_j].
enum class ObjectiveKind { StartTimes, CompletionTimes };

/// One joint outcome of all job sizes together with its exact probability.
struct Realization {
    std::map<int, Rational> sizes;
    Rational probability = 1;

    const Rational& size_of(int job_id) const {
        auto it = sizes.find(job_id);
        if (it == sizes.end())
            throw DomainError(ErrorCode::UnknownJobId,
                              "realization has no size for job " + std::to_string(job_id));
        return it->second;
    }
};

struct ValidationIssue {
    ErrorCode code;
    std::optional<int> job_id;
    std::string message;
};

/// Checks every type invariant; returns the first violation, or nullopt if
/// the instance is well-formed.
inline std::optional<ValidationIssue> validate_instance(const SchedInstance& inst) {
    if (inst.machines < 1)
        return ValidationIssue{ErrorCode::InvalidMachineCount, std::nullopt,
                               "machine count must be >= 1"};
    if (inst.jobs.empty())
        return ValidationIssue{ErrorCode::EmptyInstance, std::nullopt, "instance has no jobs"};
    std::vector<int> seen;
    for (const auto& job : inst.jobs) {
        const std::string jid = "job " + std::to_string(job.id);
        if (std::find(seen.begin(), seen.end(), job.id) != seen.end())
            return ValidationIssue{ErrorCode::DuplicateJobId, job.id, jid + ": duplicate id"};
        seen.push_back(job.id);
        if (job.weight <= 0)
            return ValidationIssue{ErrorCode::NonPositiveWeight, job.id,
                                   jid + ": weight must be > 0"};
        const auto& s = job.size;
        if (s.kind == SizeDistribution::Kind::Deterministic) {
            if (s.value < 0)
                return ValidationIssue{ErrorCode::NegativeSize, job.id,
                                       jid + ": size must be >= 0"};
        } else {
            if (s.lo < 0)
                return ValidationIssue{ErrorCode::NegativeSize, job.id,
                                       jid + ": lo must be >= 0"};
            if (s.p_hi <= 0 || s.p_hi >= 1)
                return ValidationIssue{ErrorCode::ProbabilityOutOfRange, job.id,
                                       jid + ": p_hi must satisfy 0 < p_hi < 1 "
                                             "(use a deterministic size for p_hi in {0,1})"};
            if (!(s.lo < s.hi))
                return ValidationIssue{ErrorCode::TwoPointOrderViolation, job.id,
                                       jid + ": requires lo < hi"};
        }
    }
    return std::nullopt;
}

/// Throws DomainError on the first violated invariant.
inline void require_valid(const SchedInstance& inst) {
    if (auto issue = validate_instance(inst))
        throw DomainError(issue->code, issue->message);
}

/// Materializes the realization with the given index. Bit k of the index
/// selects the branch of the k-th two-point job in id order (1 = hi).
inline Realization realization_at(const SchedInstance& inst, const std::vector<int>& tp_ids,
                                  std::uint64_t index) {
    Realization real;
    std::size_t bit = 0;
    for (const auto& job : inst.jobs) {
        if (!job.size.is_two_point()) {
            real.sizes.emplace(job.id, job.size.value);
        }
    }
    for (int id : tp_ids) {
        const Job* job = inst.find_job(id);
        const bool hi = (index >> bit) & 1u;
        real.sizes.emplace(id, hi ? job->size.hi : job->size.lo);
        real.probability *= hi ? job->size.p_hi : (1 - job->size.p_hi);
        ++bit;
    }
    return real;
}

/// Streams all 2^(#two-point jobs) realizations in deterministic order
/// (binary counter over two-point jobs in id order, lo branch = bit 0).
/// Probabilities are exact and sum to exactly 1 over a full enumeration.
inline void for_each_realization(const SchedInstance& inst,
                                 const std::function<void(std::uint64_t, const Realization&)>& fn,
                                 int enumeration_cap = kDefaultEnumerationCap) {
    require_valid(inst);
    const auto tp_ids = inst.two_point_ids();
    if (static_cast<int>(tp_ids.size()) > enumeration_cap)
        throw DomainError(ErrorCode::EnumerationCapExceeded,
                          std::to_string(tp_ids.size()) + " two-point jobs exceed the cap of " +
                              std::to_string(enumeration_cap) +
                              "; use Monte-Carlo evaluation instead");
    const std::uint64_t count = std::uint64_t{1} << tp_ids.size();
    for (std::uint64_t index = 0; index < count; ++index)
        fn(index, realization_at(inst, tp_ids, index));
}

/// Convenience wrapper materializing the full stream. Intended for small
/// instances; prefer for_each_realization beyond a few thousand branches.
inline std::vector<Realization> enumerate_realizations(const SchedInstance& inst,
                                                       int enumeration_cap = kDefaultEnumerationCap) {
    std::vector<Realization> out;
    for_each_realization(
        inst, [&](std::uint64_t, const Realization& r) { out.push_back(r); }, enumeration_cap);
    return out;
}

}  // namespace stosched
