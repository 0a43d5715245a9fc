#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "stosched/model.hpp"

namespace stosched {

/// Fixed priority order for list scheduling. Wsept sorts by w_j/E[X_j]
/// descending, Sept by E[X_j] ascending, Spt by deterministic size
/// ascending; all ties break by ascending job id.
struct PriorityRule {
    enum class Kind { Sept, Wsept, Spt, Custom };

    Kind kind = Kind::Sept;
    std::vector<int> custom_order;  // Custom only; a permutation of the job ids

    static PriorityRule sept() { return {Kind::Sept, {}}; }
    static PriorityRule wsept() { return {Kind::Wsept, {}}; }
    static PriorityRule spt() { return {Kind::Spt, {}}; }
    static PriorityRule custom(std::vector<int> order) { return {Kind::Custom, std::move(order)}; }
};

inline const char* rule_name(PriorityRule::Kind k) {
    switch (k) {
        case PriorityRule::Kind::Sept: return "sept";
        case PriorityRule::Kind::Wsept: return "wsept";
        case PriorityRule::Kind::Spt: return "spt";
        case PriorityRule::Kind::Custom: return "custom";
    }
    return "custom";
}

/// Which idle machine receives the next job when several are idle.
/// LowestIndex is the library default; HighestIndex exists so the lemma
/// harness can re-check the per-realization claims under an alternative.
enum class MachineTieBreak { LowestIndex, HighestIndex };

/// Start/completion times and machine assignment for one realization.
struct Schedule {
    std::map<int, Rational> start;
    std::map<int, Rational> completion;
    std::map<int, int> machine;
};

/// Computes the priority list for a rule on a valid instance.
inline std::vector<int> priority_order(const SchedInstance& inst, const PriorityRule& rule) {
    require_valid(inst);
    std::vector<int> ids;
    ids.reserve(inst.jobs.size());
    for (const auto& j : inst.jobs) ids.push_back(j.id);
    std::sort(ids.begin(), ids.end());

    switch (rule.kind) {
        case PriorityRule::Kind::Custom: {
            std::vector<int> sorted = rule.custom_order;
            std::sort(sorted.begin(), sorted.end());
            if (sorted != ids)
                throw DomainError(ErrorCode::NotAPermutation,
                                  "custom order is not a permutation of the instance's job ids");
            return rule.custom_order;
        }
        case PriorityRule::Kind::Spt: {
            for (const auto& j : inst.jobs)
                if (j.size.is_two_point())
                    throw DomainError(ErrorCode::SptOnStochastic,
                                      "SPT requires deterministic sizes; job " +
                                          std::to_string(j.id) + " is two-point");
            std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
                const auto& sa = inst.find_job(a)->size.value;
                const auto& sb = inst.find_job(b)->size.value;
                if (sa != sb) return sa < sb;
                return a < b;
            });
            return ids;
        }
        case PriorityRule::Kind::Sept: {
            std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
                const Rational ea = inst.find_job(a)->size.expectation();
                const Rational eb = inst.find_job(b)->size.expectation();
                if (ea != eb) return ea < eb;
                return a < b;
            });
            return ids;
        }
        case PriorityRule::Kind::Wsept: {
            for (const auto& j : inst.jobs)
                if (j.size.expectation() == 0)
                    throw DomainError(ErrorCode::ZeroExpectationWsept,
                                      "WSEPT ratio undefined: job " + std::to_string(j.id) +
                                          " has zero expected size");
            // w_a/E_a > w_b/E_b  <=>  w_a*E_b > w_b*E_a, all expectations > 0.
            std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
                const Job* ja = inst.find_job(a);
                const Job* jb = inst.find_job(b);
                const Rational lhs = ja->weight * jb->size.expectation();
                const Rational rhs = jb->weight * ja->size.expectation();
                if (lhs != rhs) return lhs > rhs;
                return a < b;
            });
            return ids;
        }
    }
    return ids;
}

/// Runs the list policy on one realization: at time 0 and at every
/// completion event, repeatedly assign the highest-priority unstarted job
/// to an idle machine until no idle machine or no unstarted job remains.
/// Zero-size jobs complete within the same event instant, freeing their
/// machine for further assignments at that instant.
inline Schedule simulate_list_schedule(const SchedInstance& inst, const std::vector<int>& order,
                                       const Realization& real,
                                       MachineTieBreak tie = MachineTieBreak::LowestIndex) {
    require_valid(inst);
    {
        std::vector<int> sorted = order;
        std::sort(sorted.begin(), sorted.end());
        std::vector<int> ids;
        for (const auto& j : inst.jobs) ids.push_back(j.id);
        std::sort(ids.begin(), ids.end());
        if (sorted != ids)
            throw DomainError(ErrorCode::NotAPermutation,
                              "order is not a permutation of the instance's job ids");
    }

    Schedule sched;
    const int m = inst.machines;
    std::vector<Rational> free_at(m, Rational(0));
    std::size_t next = 0;  // position in the priority list
    Rational now = 0;

    while (next < order.size()) {
        // All machines freeing at the current instant are available before
        // any assignment happens; they form one event.
        std::set<int> idle;
        for (int k = 0; k < m; ++k)
            if (free_at[k] == now) idle.insert(k);

        while (!idle.empty() && next < order.size()) {
            const int jid = order[next++];
            const int k = (tie == MachineTieBreak::LowestIndex) ? *idle.begin() : *idle.rbegin();
            const Rational& size = real.size_of(jid);
            sched.start[jid] = now;
            sched.completion[jid] = now + size;
            sched.machine[jid] = k;
            if (size == 0) continue;  // completes at the same instant; machine stays idle
            free_at[k] = now + size;
            idle.erase(k);
        }
        if (next >= order.size()) break;

        // Advance to the next completion event.
        Rational next_event;
        bool have = false;
        for (int k = 0; k < m; ++k) {
            if (free_at[k] > now && (!have || free_at[k] < next_event)) {
                next_event = free_at[k];
                have = true;
            }
        }
        now = next_event;  // some machine is always busy here: idle ones were exhausted
    }
    return sched;
}

/// Total weighted cost of one simulated schedule under the objective.
inline Rational schedule_cost(const SchedInstance& inst, const Schedule& sched,
                              ObjectiveKind obj) {
    Rational total = 0;
    for (const auto& job : inst.jobs) {
        const auto& t = obj == ObjectiveKind::StartTimes ? sched.start.at(job.id)
                                                         : sched.completion.at(job.id);
        total += job.weight * t;
    }
    return total;
}

}  // namespace stosched
