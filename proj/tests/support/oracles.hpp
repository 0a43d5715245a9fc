#pragma once

// Test-only reference implementations, deliberately written along different
// lines than the library code they check: the list simulator uses the
// min-load formulation instead of event processing, the expectation oracle
// recurses over branches instead of enumerating bitmask indices, and the
// optimal-policy oracle searches absolute-time machine slots with no
// memoization or state canonicalization.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "stosched/model.hpp"
#include "stosched/policy.hpp"

namespace oracles {

using stosched::Job;
using stosched::ObjectiveKind;
using stosched::Rational;
using stosched::Realization;
using stosched::SchedInstance;
using stosched::SizeDistribution;

// ---------------------------------------------------------------------------
// deterministic test RNG
// ---------------------------------------------------------------------------

struct TestRng {
    std::uint64_t state;

    explicit TestRng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t below(std::uint64_t bound) { return next() % bound; }

    long long range(long long lo, long long hi) {
        return lo + static_cast<long long>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }
};

// ---------------------------------------------------------------------------
// list-schedule start times via the min-load formulation
// ---------------------------------------------------------------------------

/// Start times of a list policy: job k in the order starts at the smallest
/// current machine load (lowest index on ties), which that job's realized
/// size then extends.
inline std::map<int, Rational> minload_start_times(const SchedInstance& inst,
                                                   const std::vector<int>& order,
                                                   const Realization& real) {
    std::vector<Rational> load(inst.machines, Rational(0));
    std::map<int, Rational> start;
    for (int id : order) {
        std::size_t arg = 0;
        for (std::size_t k = 1; k < load.size(); ++k)
            if (load[k] < load[arg]) arg = k;
        start[id] = load[arg];
        load[arg] += real.size_of(id);
    }
    return start;
}

inline Rational minload_cost(const SchedInstance& inst, const std::vector<int>& order,
                             const Realization& real, ObjectiveKind obj) {
    const auto start = minload_start_times(inst, order, real);
    Rational total = 0;
    for (const auto& job : inst.jobs) {
        total += job.weight * start.at(job.id);
        if (obj == ObjectiveKind::CompletionTimes) total += job.weight * real.size_of(job.id);
    }
    return total;
}

// ---------------------------------------------------------------------------
// expectation by recursion over branches
// ---------------------------------------------------------------------------

inline Rational branch_expectation_rec(const SchedInstance& inst, const std::vector<int>& order,
                                       ObjectiveKind obj, std::size_t job_index,
                                       Realization& partial) {
    if (job_index == inst.jobs.size()) return minload_cost(inst, order, partial, obj);
    const Job& job = inst.jobs[job_index];
    if (!job.size.is_two_point()) {
        partial.sizes[job.id] = job.size.value;
        const Rational v = branch_expectation_rec(inst, order, obj, job_index + 1, partial);
        partial.sizes.erase(job.id);
        return v;
    }
    partial.sizes[job.id] = job.size.lo;
    const Rational lo_val = branch_expectation_rec(inst, order, obj, job_index + 1, partial);
    partial.sizes[job.id] = job.size.hi;
    const Rational hi_val = branch_expectation_rec(inst, order, obj, job_index + 1, partial);
    partial.sizes.erase(job.id);
    return (1 - job.size.p_hi) * lo_val + job.size.p_hi * hi_val;
}

/// Exact expected list-policy cost, independent of the library's
/// enumeration and simulation paths.
inline Rational brute_expected_cost(const SchedInstance& inst, const std::vector<int>& order,
                                    ObjectiveKind obj) {
    Realization partial;
    return branch_expectation_rec(inst, order, obj, 0, partial);
}

// ---------------------------------------------------------------------------
// optimal non-idling policies by absolute-time exhaustive search
// ---------------------------------------------------------------------------

/// One busy machine slot. Deterministic and revealed-long jobs know their
/// absolute completion time; a running two-point job is unknown until the
/// clock reaches start + lo.
struct Slot {
    bool known = true;
    Rational completion;  // known only
    int job_id = -1;      // unknown only
    Rational started_at;  // unknown only
};

struct SearchCtx {
    const SchedInstance& inst;
    std::map<int, const Job*> by_id;

    explicit SearchCtx(const SchedInstance& i) : inst(i) {
        for (const auto& j : i.jobs) by_id[j.id] = &j;
    }
};

inline Rational tree_search_value(SearchCtx& ctx, std::vector<int> unstarted,
                                  std::vector<Slot> slots, const Rational& now);

/// Advances to the next event and branches nature.
inline Rational tree_search_advance(SearchCtx& ctx, const std::vector<int>& unstarted,
                                    const std::vector<Slot>& slots, const Rational& now) {
    if (unstarted.empty()) return 0;
    Rational event;
    bool have = false;
    for (const auto& s : slots) {
        const Rational t = s.known ? s.completion : s.started_at + ctx.by_id.at(s.job_id)->size.lo;
        if (!have || t < event) {
            event = t;
            have = true;
        }
    }

    std::vector<Slot> keep;
    std::vector<const Job*> branching;
    for (const auto& s : slots) {
        if (s.known) {
            if (s.completion > event) keep.push_back(s);
        } else {
            const Job* job = ctx.by_id.at(s.job_id);
            if (s.started_at + job->size.lo == event) {
                branching.push_back(job);
            } else {
                keep.push_back(s);
            }
        }
    }

    Rational total = 0;
    const std::uint64_t outcomes = std::uint64_t{1} << branching.size();
    for (std::uint64_t mask = 0; mask < outcomes; ++mask) {
        Rational prob = 1;
        std::vector<Slot> next = keep;
        for (std::size_t z = 0; z < branching.size(); ++z) {
            const Job* job = branching[z];
            if ((mask >> z) & 1u) {
                prob *= job->size.p_hi;
                Slot s;
                s.known = true;
                s.completion = event - job->size.lo + job->size.hi;
                next.push_back(s);
            } else {
                prob *= 1 - job->size.p_hi;
            }
        }
        total += prob * tree_search_value(ctx, unstarted, std::move(next), event);
    }
    return total;
}

inline void tree_search_subsets(const std::vector<int>& pool, std::size_t k, std::size_t from,
                                std::vector<int>& chosen,
                                const std::function<void(const std::vector<int>&)>& fn) {
    if (chosen.size() == k) {
        fn(chosen);
        return;
    }
    for (std::size_t i = from; i + (k - chosen.size()) <= pool.size(); ++i) {
        chosen.push_back(pool[i]);
        tree_search_subsets(pool, k, i + 1, chosen, fn);
        chosen.pop_back();
    }
}

/// Minimum expected total weighted start time (absolute) over all
/// non-idling decision trees, conditioned on the given absolute-time state.
inline Rational tree_search_value(SearchCtx& ctx, std::vector<int> unstarted,
                                  std::vector<Slot> slots, const Rational& now) {
    if (unstarted.empty()) return 0;
    const int free = ctx.inst.machines - static_cast<int>(slots.size());
    if (free <= 0) return tree_search_advance(ctx, unstarted, slots, now);

    const std::size_t k = std::min<std::size_t>(free, unstarted.size());
    std::optional<Rational> best;
    std::vector<int> chosen;
    tree_search_subsets(unstarted, k, 0, chosen, [&](const std::vector<int>& pick) {
        Rational immediate = 0;
        std::vector<int> rest;
        for (int id : unstarted)
            if (std::find(pick.begin(), pick.end(), id) == pick.end()) rest.push_back(id);
        std::vector<Slot> next = slots;
        for (int id : pick) {
            const Job* job = ctx.by_id.at(id);
            immediate += job->weight * now;
            if (job->size.is_two_point()) {
                Slot s;
                s.known = false;
                s.job_id = id;
                s.started_at = now;
                next.push_back(s);
            } else if (job->size.value > 0) {
                Slot s;
                s.known = true;
                s.completion = now + job->size.value;
                next.push_back(s);
            }
        }
        const Rational v = immediate + tree_search_value(ctx, rest, std::move(next), now);
        if (!best || v < *best) best = v;
    });
    return *best;
}

/// Independent oracle for the optimal non-idling adaptive policy cost.
inline Rational exhaustive_optimal_cost(const SchedInstance& inst, ObjectiveKind obj) {
    SearchCtx ctx(inst);
    std::vector<int> ids;
    for (const auto& j : inst.jobs) ids.push_back(j.id);
    std::sort(ids.begin(), ids.end());
    Rational cost = tree_search_value(ctx, std::move(ids), {}, Rational(0));
    if (obj == ObjectiveKind::CompletionTimes) cost += inst.weighted_expected_size();
    return cost;
}

// ---------------------------------------------------------------------------
// the full set of expected costs over all non-idling decision trees
// ---------------------------------------------------------------------------

/// Achievable expected start-time costs of every non-idling policy from a
/// relative-time state. Exponential in general; meant for tiny instances.
class PolicyCostSets {
  public:
    explicit PolicyCostSets(const SchedInstance& inst) : ctx_(inst) {}

    std::set<Rational> all_costs() {
        std::vector<int> ids;
        for (const auto& j : ctx_.inst.jobs) ids.push_back(j.id);
        std::sort(ids.begin(), ids.end());
        return costs_of(std::move(ids), {});
    }

  private:
    struct RelSlot {
        bool known = true;
        Rational remaining;  // known
        int job_id = -1;     // unknown
        Rational elapsed;    // unknown
    };

    std::set<Rational> costs_of(std::vector<int> unstarted, std::vector<RelSlot> slots) {
        if (unstarted.empty()) return {Rational(0)};
        std::sort(unstarted.begin(), unstarted.end());
        std::sort(slots.begin(), slots.end(), [](const RelSlot& a, const RelSlot& b) {
            if (a.known != b.known) return a.known;
            const Rational& ta = a.known ? a.remaining : a.elapsed;
            const Rational& tb = b.known ? b.remaining : b.elapsed;
            if (ta != tb) return ta < tb;
            return a.job_id < b.job_id;
        });
        std::string key = encode(unstarted, slots);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;

        std::set<Rational> out;
        const int free = ctx_.inst.machines - static_cast<int>(slots.size());
        if (free > 0) {
            const std::size_t k = std::min<std::size_t>(free, unstarted.size());
            std::vector<int> chosen;
            tree_search_subsets(unstarted, k, 0, chosen, [&](const std::vector<int>& pick) {
                std::vector<int> rest;
                for (int id : unstarted)
                    if (std::find(pick.begin(), pick.end(), id) == pick.end())
                        rest.push_back(id);
                std::vector<RelSlot> next = slots;
                for (int id : pick) {
                    const Job* job = ctx_.by_id.at(id);
                    if (job->size.is_two_point())
                        next.push_back({false, Rational(), id, Rational(0)});
                    else if (job->size.value > 0)
                        next.push_back({true, job->size.value, -1, Rational()});
                }
                const auto sub = after_start(rest, next);
                out.insert(sub.begin(), sub.end());
            });
        } else {
            out = advance(unstarted, slots);
        }
        memo_[key] = out;
        return out;
    }

    std::set<Rational> after_start(const std::vector<int>& unstarted,
                                   const std::vector<RelSlot>& slots) {
        // resolve zero-lo branch points at the same instant
        std::vector<std::size_t> zero;
        for (std::size_t i = 0; i < slots.size(); ++i)
            if (!slots[i].known &&
                slots[i].elapsed == ctx_.by_id.at(slots[i].job_id)->size.lo)
                zero.push_back(i);
        if (zero.empty()) {
            if (unstarted.empty()) return {Rational(0)};
            return costs_of(unstarted, slots);
        }
        std::vector<std::pair<Rational, std::set<Rational>>> branches;
        const std::uint64_t outcomes = std::uint64_t{1} << zero.size();
        for (std::uint64_t mask = 0; mask < outcomes; ++mask) {
            Rational prob = 1;
            std::vector<RelSlot> next = slots;
            for (std::size_t z = zero.size(); z-- > 0;) {
                const std::size_t i = zero[z];
                const Job* job = ctx_.by_id.at(next[i].job_id);
                if ((mask >> z) & 1u) {
                    prob *= job->size.p_hi;
                    next[i] = {true, job->size.hi - job->size.lo, -1, Rational()};
                } else {
                    prob *= 1 - job->size.p_hi;
                    next.erase(next.begin() + static_cast<std::ptrdiff_t>(i));
                }
            }
            branches.emplace_back(prob, after_start(unstarted, next));
        }
        return combine(branches, Rational(0));
    }

    std::set<Rational> advance(const std::vector<int>& unstarted,
                               const std::vector<RelSlot>& slots) {
        Rational delta;
        bool have = false;
        for (const auto& s : slots) {
            const Rational t =
                s.known ? s.remaining : ctx_.by_id.at(s.job_id)->size.lo - s.elapsed;
            if (!have || t < delta) {
                delta = t;
                have = true;
            }
        }
        std::vector<RelSlot> keep;
        std::vector<const Job*> tied;
        for (const auto& s : slots) {
            if (s.known) {
                if (s.remaining > delta) keep.push_back({true, s.remaining - delta, -1, Rational()});
            } else {
                const Job* job = ctx_.by_id.at(s.job_id);
                if (job->size.lo - s.elapsed == delta)
                    tied.push_back(job);
                else
                    keep.push_back({false, Rational(), s.job_id, s.elapsed + delta});
            }
        }
        std::vector<std::pair<Rational, std::set<Rational>>> branches;
        const std::uint64_t outcomes = std::uint64_t{1} << tied.size();
        for (std::uint64_t mask = 0; mask < outcomes; ++mask) {
            Rational prob = 1;
            std::vector<RelSlot> next = keep;
            for (std::size_t z = 0; z < tied.size(); ++z) {
                if ((mask >> z) & 1u) {
                    prob *= tied[z]->size.p_hi;
                    next.push_back({true, tied[z]->size.hi - tied[z]->size.lo, -1, Rational()});
                } else {
                    prob *= 1 - tied[z]->size.p_hi;
                }
            }
            branches.emplace_back(prob, costs_of(unstarted, next));
        }
        Rational shift = 0;
        for (int id : unstarted) shift += ctx_.by_id.at(id)->weight;
        return combine(branches, delta * shift);
    }

    /// All values of shift + sum_i p_i v_i over the branch cross product.
    static std::set<Rational> combine(
        const std::vector<std::pair<Rational, std::set<Rational>>>& branches,
        const Rational& shift) {
        std::set<Rational> acc{shift};
        for (const auto& [prob, values] : branches) {
            std::set<Rational> next;
            for (const auto& base : acc)
                for (const auto& v : values) next.insert(base + prob * v);
            acc = std::move(next);
        }
        return acc;
    }

    std::string encode(const std::vector<int>& unstarted, const std::vector<RelSlot>& slots) {
        std::string key;
        for (int id : unstarted) key += std::to_string(id) + ",";
        key += "|";
        for (const auto& s : slots) {
            key += s.known ? "K" + stosched::to_string(s.remaining)
                           : "J" + std::to_string(s.job_id) + "@" + stosched::to_string(s.elapsed);
            key += ";";
        }
        return key;
    }

    SearchCtx ctx_;
    std::map<std::string, std::set<Rational>> memo_;
};

// ---------------------------------------------------------------------------
// random instance generators
// ---------------------------------------------------------------------------

struct InstanceShape {
    int min_jobs = 2;
    int max_jobs = 6;
    int max_two_point = 3;
    int max_machines = 3;
    bool unit_weights = false;
};

inline SchedInstance random_instance(TestRng& rng, const InstanceShape& shape = {}) {
    SchedInstance inst;
    const int jobs = static_cast<int>(rng.range(shape.min_jobs, shape.max_jobs));
    inst.machines = static_cast<int>(rng.range(1, shape.max_machines));
    int two_point_left = std::min(shape.max_two_point, jobs);
    for (int j = 0; j < jobs; ++j) {
        Job job;
        job.id = j;
        job.weight = shape.unit_weights ? Rational(1) : Rational(rng.range(1, 4));
        const bool stochastic = two_point_left > 0 && rng.below(2) == 0;
        const long long den = rng.range(1, 3);
        if (stochastic) {
            --two_point_left;
            const Rational lo(rng.range(0, 2), den);
            const Rational hi = lo + Rational(rng.range(1, 3), den);
            static const Rational probs[] = {Rational(1, 4), Rational(1, 3), Rational(1, 2),
                                             Rational(2, 3), Rational(3, 4)};
            job.size = SizeDistribution::two_point(lo, hi, probs[rng.below(5)]);
        } else {
            job.size = SizeDistribution::deterministic(Rational(rng.range(0, 4), den));
        }
        inst.jobs.push_back(std::move(job));
    }
    return inst;
}

/// Unit-weight instance whose two-point sizes are pairwise stochastically
/// ordered: all share one lo value, and (hi, p_hi) are jointly sorted so
/// the survival functions never cross. Deterministic jobs, when present,
/// sit at or below the common lo.
inline SchedInstance random_comparable_instance(TestRng& rng) {
    SchedInstance inst;
    const int jobs = static_cast<int>(rng.range(3, 6));
    inst.machines = static_cast<int>(rng.range(2, 3));
    const long long den = rng.range(1, 2);
    const Rational lo(rng.range(0, 1), den);

    std::vector<Rational> his;
    std::vector<Rational> probs;
    static const Rational pool[] = {Rational(1, 4), Rational(1, 3), Rational(1, 2),
                                    Rational(2, 3), Rational(3, 4)};
    const int stochastic = static_cast<int>(rng.range(2, jobs));
    for (int j = 0; j < stochastic; ++j) {
        his.push_back(lo + Rational(rng.range(1, 4), den));
        probs.push_back(pool[rng.below(5)]);
    }
    std::sort(his.begin(), his.end());
    std::sort(probs.begin(), probs.end());

    for (int j = 0; j < jobs; ++j) {
        Job job;
        job.id = j;
        job.weight = 1;
        if (j < stochastic) {
            job.size = SizeDistribution::two_point(lo, his[j], probs[j]);
        } else {
            job.size = SizeDistribution::deterministic(lo == 0 ? Rational(0)
                                                               : Rational(rng.range(0, 1), den));
        }
        inst.jobs.push_back(std::move(job));
    }
    return inst;
}

}  // namespace oracles
