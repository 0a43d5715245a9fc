#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "stosched/evaluator.hpp"
#include "stosched/model.hpp"

namespace stosched {

inline constexpr int kDefaultDpCap = 12;

/// One busy machine. Resolved: frees in `time` (> 0), regardless of which
/// job runs there. Unresolved: two-point job `job_id` started `time` ago
/// (0 <= time < lo); at elapsed == lo it either completes (probability
/// 1 - p_hi) or is revealed long and becomes Resolved(hi - lo).
struct BusyEntry {
    bool resolved = true;
    Rational time;
    int job_id = -1;  // unresolved only
};

/// Optimal decisions for every reachable epoch state, in canonical-key DAG
/// form: `nodes[key]` holds the start set chosen at that state and the
/// nature branches leading to successor states.
struct PolicyTree {
    struct Branch {
        std::vector<int> completed;  // unresolved jobs revealed short on this transition
        std::vector<int> promoted;   // unresolved jobs revealed long on this transition
        Rational probability;
        std::string next;  // successor state key, or "terminal"
    };
    struct Node {
        std::vector<int> start_set;
        std::vector<Branch> branches;
    };
    std::string root;
    std::map<std::string, Node> nodes;
};

struct DpOptions {
    int dp_cap = kDefaultDpCap;
    bool use_memo = true;
    bool build_tree = true;
};

struct OptimalResult {
    Rational cost;
    std::optional<PolicyTree> tree;
};

namespace detail {

/// Memoized expectimax over epoch states for the minimum expected cost of
/// a non-idling adaptive policy. All values are start-time costs relative
/// to the current epoch; re-basing adds delta * (weight of unstarted jobs)
/// whenever the clock advances by delta.
class OptimalPolicySolver {
  public:
    OptimalPolicySolver(const SchedInstance& inst, const DpOptions& opts)
        : inst_(inst), opts_(opts) {
        require_valid(inst);
        if (static_cast<int>(inst.jobs.size()) > opts.dp_cap)
            throw DomainError(ErrorCode::DpCapExceeded,
                              std::to_string(inst.jobs.size()) + " jobs exceed the DP cap of " +
                                  std::to_string(opts.dp_cap));
        for (const auto& j : inst.jobs) jobs_[j.id] = &j;
    }

    Rational solve() {
        State root;
        for (const auto& [id, job] : jobs_) {
            (void)job;
            root.remaining.push_back(id);
        }
        root_key_ = encode(root);
        return value(root);
    }

    PolicyTree extract_tree() {
        PolicyTree tree;
        tree.root = root_key_;
        State root;
        for (const auto& [id, job] : jobs_) {
            (void)job;
            root.remaining.push_back(id);
        }
        expand_node(root, tree);
        return tree;
    }

  private:
    struct State {
        std::vector<int> remaining;    // sorted ascending
        std::vector<BusyEntry> busy;   // canonical order, see canonicalize()
    };

    static bool entry_less(const BusyEntry& a, const BusyEntry& b) {
        if (a.resolved != b.resolved) return a.resolved;  // Resolved sorts first
        if (a.time != b.time) return a.time < b.time;
        return a.job_id < b.job_id;
    }

    static void canonicalize(State& s) {
        std::sort(s.remaining.begin(), s.remaining.end());
        std::sort(s.busy.begin(), s.busy.end(), entry_less);
    }

    static std::string encode(const State& s) {
        std::string key = "rem=";
        for (int id : s.remaining) {
            key += std::to_string(id);
            key += ',';
        }
        key += "|busy=";
        for (const auto& e : s.busy) {
            if (e.resolved) {
                key += 'R';
                key += to_string(e.time);
            } else {
                key += 'U';
                key += std::to_string(e.job_id);
                key += '@';
                key += to_string(e.time);
            }
            key += ';';
        }
        return key;
    }

    Rational weight_of(const std::vector<int>& ids) const {
        Rational w = 0;
        for (int id : ids) w += jobs_.at(id)->weight;
        return w;
    }

    /// Starts the chosen jobs at the current instant: deterministic
    /// positive sizes become Resolved entries, two-point jobs become
    /// Unresolved(j, 0), zero-size deterministic jobs vanish immediately.
    State apply_start(const State& s, const std::vector<int>& chosen) const {
        State t = s;
        for (int id : chosen) {
            t.remaining.erase(std::find(t.remaining.begin(), t.remaining.end(), id));
            const Job* job = jobs_.at(id);
            if (job->size.is_two_point()) {
                t.busy.push_back({false, Rational(0), id});
            } else if (job->size.value > 0) {
                t.busy.push_back({true, job->size.value, -1});
            }
        }
        return t;
    }

    /// Value of a canonical pre-decision state (no unresolved entry at its
    /// branch point). This is the only memoization point.
    Rational value(State s) {
        if (s.remaining.empty()) return 0;
        canonicalize(s);
        const std::string key = encode(s);
        if (opts_.use_memo) {
            auto it = memo_.find(key);
            if (it != memo_.end()) return it->second;
        }

        const int free = inst_.machines - static_cast<int>(s.busy.size());
        Rational best;
        std::vector<int> best_set;
        if (free > 0) {
            const std::size_t k = std::min<std::size_t>(free, s.remaining.size());
            bool first = true;
            for_each_subset(s.remaining, k, [&](const std::vector<int>& chosen) {
                const Rational v = after_start_value(apply_start(s, chosen));
                if (first || v < best) {
                    best = v;
                    best_set = chosen;
                    first = false;
                }
            });
        } else {
            best = nature_value(s);
        }
        memo_[key] = best;
        decision_[key] = best_set;
        return best;
    }

    /// Post-decision evaluation at the same instant: resolves zero-lo
    /// branch points immediately (their machines free within the event),
    /// then either terminates, continues the decision cascade, or lets
    /// time advance to the next completion.
    Rational after_start_value(State t) {
        std::vector<std::size_t> zero;
        for (std::size_t i = 0; i < t.busy.size(); ++i) {
            const auto& e = t.busy[i];
            if (!e.resolved && e.time == jobs_.at(e.job_id)->size.lo) zero.push_back(i);
        }
        if (!zero.empty()) {
            Rational total = 0;
            const std::uint64_t outcomes = std::uint64_t{1} << zero.size();
            for (std::uint64_t mask = 0; mask < outcomes; ++mask) {
                Rational prob = 1;
                State next = t;
                // erase from the back so stored indices stay valid
                for (std::size_t z = zero.size(); z-- > 0;) {
                    const std::size_t i = zero[z];
                    const Job* job = jobs_.at(next.busy[i].job_id);
                    if ((mask >> z) & 1u) {  // revealed long
                        prob *= job->size.p_hi;
                        next.busy[i] = {true, job->size.hi - job->size.lo, -1};
                    } else {  // completed short
                        prob *= 1 - job->size.p_hi;
                        next.busy.erase(next.busy.begin() + static_cast<std::ptrdiff_t>(i));
                    }
                }
                total += prob * after_start_value(std::move(next));
            }
            return total;
        }
        if (t.remaining.empty()) return 0;
        return value(std::move(t));
    }

    /// Time advances to the next completion event. Nature branches jointly
    /// over the unresolved entries whose branch point is reached; each
    /// completes short with probability 1 - p_hi, independently.
    Rational nature_value(const State& s) {
        Rational delta;
        bool have = false;
        for (const auto& e : s.busy) {
            const Rational t = e.resolved ? e.time : jobs_.at(e.job_id)->size.lo - e.time;
            if (!have || t < delta) {
                delta = t;
                have = true;
            }
        }

        std::vector<int> tied;  // unresolved entries at their branch point after delta
        State base;
        base.remaining = s.remaining;
        for (const auto& e : s.busy) {
            if (e.resolved) {
                if (e.time > delta) base.busy.push_back({true, e.time - delta, -1});
                // == delta: completes for sure, entry dropped
            } else {
                const Job* job = jobs_.at(e.job_id);
                if (job->size.lo - e.time == delta)
                    tied.push_back(e.job_id);
                else
                    base.busy.push_back({false, e.time + delta, e.job_id});
            }
        }

        Rational total = 0;
        const std::uint64_t outcomes = std::uint64_t{1} << tied.size();
        for (std::uint64_t mask = 0; mask < outcomes; ++mask) {
            Rational prob = 1;
            State next = base;
            for (std::size_t z = 0; z < tied.size(); ++z) {
                const Job* job = jobs_.at(tied[z]);
                if ((mask >> z) & 1u) {  // revealed long, runs hi - lo more
                    prob *= job->size.p_hi;
                    next.busy.push_back({true, job->size.hi - job->size.lo, -1});
                } else {
                    prob *= 1 - job->size.p_hi;
                }
            }
            total += prob * value(std::move(next));
        }
        return delta * weight_of(s.remaining) + total;
    }

    template <typename Fn>
    static void for_each_subset(const std::vector<int>& pool, std::size_t k, const Fn& fn) {
        std::vector<int> chosen;
        chosen.reserve(k);
        subset_rec(pool, k, 0, chosen, fn);
    }

    template <typename Fn>
    static void subset_rec(const std::vector<int>& pool, std::size_t k, std::size_t from,
                           std::vector<int>& chosen, const Fn& fn) {
        if (chosen.size() == k) {
            fn(chosen);
            return;
        }
        for (std::size_t i = from; i + (k - chosen.size()) <= pool.size(); ++i) {
            chosen.push_back(pool[i]);
            subset_rec(pool, k, i + 1, chosen, fn);
            chosen.pop_back();
        }
    }

    // ---- policy-tree extraction (replays the stored argmin decisions) ----

    void expand_node(State s, PolicyTree& tree) {
        canonicalize(s);
        const std::string key = encode(s);
        if (tree.nodes.count(key)) return;
        auto& node = tree.nodes[key];  // insert first: guards against cycles
        node.start_set = decision_.at(key);

        State t = node.start_set.empty() ? s : apply_start(s, node.start_set);
        std::vector<PolicyTree::Branch> pending;
        collect_transitions(std::move(t), Rational(1), {}, {}, pending, tree);
        node.branches = std::move(pending);
    }

    /// Walks the same-instant cascade and the following time advance,
    /// accumulating which jobs were revealed short/long, until the next
    /// canonical pre-decision state (or termination).
    void collect_transitions(State t, Rational prob, std::vector<int> completed,
                             std::vector<int> promoted, std::vector<PolicyTree::Branch>& out,
                             PolicyTree& tree) {
        std::vector<std::size_t> zero;
        for (std::size_t i = 0; i < t.busy.size(); ++i) {
            const auto& e = t.busy[i];
            if (!e.resolved && e.time == jobs_.at(e.job_id)->size.lo) zero.push_back(i);
        }
        if (!zero.empty()) {
            const std::uint64_t outcomes = std::uint64_t{1} << zero.size();
            for (std::uint64_t mask = 0; mask < outcomes; ++mask) {
                Rational p = prob;
                State next = t;
                auto comp = completed;
                auto prom = promoted;
                for (std::size_t z = zero.size(); z-- > 0;) {
                    const std::size_t i = zero[z];
                    const int id = next.busy[i].job_id;
                    const Job* job = jobs_.at(id);
                    if ((mask >> z) & 1u) {
                        p *= job->size.p_hi;
                        prom.push_back(id);
                        next.busy[i] = {true, job->size.hi - job->size.lo, -1};
                    } else {
                        p *= 1 - job->size.p_hi;
                        comp.push_back(id);
                        next.busy.erase(next.busy.begin() + static_cast<std::ptrdiff_t>(i));
                    }
                }
                collect_transitions(std::move(next), std::move(p), std::move(comp),
                                    std::move(prom), out, tree);
            }
            return;
        }

        if (t.remaining.empty()) {
            std::sort(completed.begin(), completed.end());
            std::sort(promoted.begin(), promoted.end());
            out.push_back({std::move(completed), std::move(promoted), std::move(prob), "terminal"});
            return;
        }

        const int free = inst_.machines - static_cast<int>(t.busy.size());
        if (free > 0) {
            // same-instant decision state: a child node of the tree
            canonicalize(t);
            std::sort(completed.begin(), completed.end());
            std::sort(promoted.begin(), promoted.end());
            out.push_back({completed, promoted, prob, encode(t)});
            expand_node(std::move(t), tree);
            return;
        }

        // time advance, mirroring nature_value
        Rational delta;
        bool have = false;
        for (const auto& e : t.busy) {
            const Rational rem = e.resolved ? e.time : jobs_.at(e.job_id)->size.lo - e.time;
            if (!have || rem < delta) {
                delta = rem;
                have = true;
            }
        }
        std::vector<int> tied;
        State base;
        base.remaining = t.remaining;
        for (const auto& e : t.busy) {
            if (e.resolved) {
                if (e.time > delta) base.busy.push_back({true, e.time - delta, -1});
            } else {
                const Job* job = jobs_.at(e.job_id);
                if (job->size.lo - e.time == delta)
                    tied.push_back(e.job_id);
                else
                    base.busy.push_back({false, e.time + delta, e.job_id});
            }
        }
        const std::uint64_t outcomes = std::uint64_t{1} << tied.size();
        for (std::uint64_t mask = 0; mask < outcomes; ++mask) {
            Rational p = prob;
            State next = base;
            auto comp = completed;
            auto prom = promoted;
            for (std::size_t z = 0; z < tied.size(); ++z) {
                const Job* job = jobs_.at(tied[z]);
                if ((mask >> z) & 1u) {
                    p *= job->size.p_hi;
                    prom.push_back(tied[z]);
                    next.busy.push_back({true, job->size.hi - job->size.lo, -1});
                } else {
                    p *= 1 - job->size.p_hi;
                    comp.push_back(tied[z]);
                }
            }
            canonicalize(next);
            std::sort(comp.begin(), comp.end());
            std::sort(prom.begin(), prom.end());
            if (next.remaining.empty()) {
                out.push_back({std::move(comp), std::move(prom), std::move(p), "terminal"});
            } else {
                out.push_back({comp, prom, p, encode(next)});
                expand_node(std::move(next), tree);
            }
        }
    }

    const SchedInstance& inst_;
    DpOptions opts_;
    std::map<int, const Job*> jobs_;
    std::unordered_map<std::string, Rational> memo_;
    std::unordered_map<std::string, std::vector<int>> decision_;
    std::string root_key_;
};

}  // namespace detail

/// Minimum expected cost over all non-idling adaptive policies, plus one
/// optimal policy in DAG form. CompletionTimes adds the policy-independent
/// constant sum_j w_j E[X_j] to the start-time optimum.
inline OptimalResult optimal_expected_cost(const SchedInstance& inst, ObjectiveKind obj,
                                           const DpOptions& opts = {}) {
    detail::OptimalPolicySolver solver(inst, opts);
    OptimalResult result;
    result.cost = solver.solve();
    if (obj == ObjectiveKind::CompletionTimes) result.cost += inst.weighted_expected_size();
    if (opts.build_tree) result.tree = solver.extract_tree();
    return result;
}

/// Decision oracle for the threshold question "is the optimal expected
/// cost at most x?". The optimum is computed once and cached; each decide()
/// is an exact rational comparison against it.
class ThresholdOracle {
  public:
    ThresholdOracle(const SchedInstance& inst, ObjectiveKind obj, const DpOptions& opts = {})
        : inst_(inst), obj_(obj), opts_(opts) {
        opts_.build_tree = false;
    }

    bool decide(const Rational& x) {
        ++calls_;
        return optimum() <= x;
    }

    const Rational& optimum() {
        if (!optimum_) optimum_ = optimal_expected_cost(inst_, obj_, opts_).cost;
        return *optimum_;
    }

    int calls() const { return calls_; }

  private:
    const SchedInstance& inst_;
    ObjectiveKind obj_;
    DpOptions opts_;
    std::optional<Rational> optimum_;
    int calls_ = 0;
};

/// True iff the optimal expected cost is at most x (exact comparison).
inline bool threshold_decide(const SchedInstance& inst, const Rational& x, ObjectiveKind obj,
                             const DpOptions& opts = {}) {
    return ThresholdOracle(inst, obj, opts).decide(x);
}

struct SearchResult {
    Rational value;
    int oracle_calls = 0;
};

/// Recovers the exact optimum from the threshold oracle by bisection.
///
/// Bisects [lo, hi] down to width < granularity, then snaps to the unique
/// rational in the interval whose denominator divides
/// D = denom(granularity) * lcm(denominators of all size values and weights).
/// When several such candidates remain, the one that is an integer multiple
/// of granularity is preferred (the Theorem-5-style instance families place
/// every attainable cost on that lattice); failing that, the smallest
/// candidate accepted by the oracle is returned.
///
/// Call budget: 1 validation call on hi, ceil(log2((hi-lo)/granularity))
/// bisection calls, plus extra calls only on the fallback paths.
inline SearchResult binary_search_optimum(const SchedInstance& inst, ObjectiveKind obj,
                                          Rational lo, Rational hi, const Rational& granularity,
                                          const DpOptions& opts = {}) {
    if (granularity <= 0)
        throw std::invalid_argument("granularity must be > 0");
    if (lo > hi)
        throw DomainError(ErrorCode::BoundsDoNotBracket, "lo > hi");
    ThresholdOracle oracle(inst, obj, opts);
    if (lo == hi) return {lo, 0};

    if (!oracle.decide(hi))
        throw DomainError(ErrorCode::BoundsDoNotBracket,
                          "threshold_decide(hi) is false: optimum exceeds hi");

    bool lo_untouched = true;
    while (hi - lo >= granularity) {
        const Rational mid = (lo + hi) / 2;
        if (oracle.decide(mid)) {
            hi = mid;
        } else {
            lo = mid;
            lo_untouched = false;
        }
    }
    if (lo_untouched && oracle.decide(lo - granularity))
        throw DomainError(ErrorCode::BoundsDoNotBracket,
                          "threshold_decide(lo - granularity) is true: optimum lies below lo");

    // cost-denominator bound
    BigInt lcm_den = 1;
    for (const auto& job : inst.jobs) {
        lcm_den = lcm_big(lcm_den, denominator(job.weight));
        if (job.size.is_two_point()) {
            lcm_den = lcm_big(lcm_den, denominator(job.size.lo));
            lcm_den = lcm_big(lcm_den, denominator(job.size.hi));
        } else {
            lcm_den = lcm_big(lcm_den, denominator(job.size.value));
        }
    }
    const BigInt d_bound = denominator(granularity) * lcm_den;

    std::vector<Rational> candidates;
    for (BigInt k = ceil_int(lo * d_bound); k <= floor_int(hi * d_bound); ++k)
        candidates.emplace_back(k, d_bound);
    if (candidates.empty())
        throw DomainError(ErrorCode::BoundsDoNotBracket,
                          "no attainable cost in the final interval; bounds did not bracket "
                          "the optimum");
    if (candidates.size() == 1) return {candidates.front(), oracle.calls()};

    std::optional<Rational> lattice_pick;
    for (const auto& c : candidates) {
        if (is_integer(c / granularity)) {
            if (lattice_pick) {
                lattice_pick.reset();  // not unique, fall through to the oracle
                break;
            }
            lattice_pick = c;
        }
    }
    if (lattice_pick) return {*lattice_pick, oracle.calls()};

    // find the smallest candidate the oracle accepts
    std::size_t first_true = candidates.size();
    std::size_t a = 0, b = candidates.size();
    while (a < b) {
        const std::size_t m = (a + b) / 2;
        if (oracle.decide(candidates[m])) {
            first_true = m;
            b = m;
        } else {
            a = m + 1;
        }
    }
    if (first_true == candidates.size())
        throw DomainError(ErrorCode::BoundsDoNotBracket,
                          "oracle rejected every candidate in the final interval");
    return {candidates[first_true], oracle.calls()};
}

}  // namespace stosched
