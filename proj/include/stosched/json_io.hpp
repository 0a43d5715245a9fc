#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stosched/evaluator.hpp"
#include "stosched/model.hpp"
#include "stosched/optimal.hpp"
#include "stosched/reduction.hpp"

namespace stosched {

using nlohmann::json;

// ---------------------------------------------------------------------------
// rationals on the wire: always "p/q" (or "p") strings, never decimals
// ---------------------------------------------------------------------------

inline json rational_to_json(const Rational& r) { return to_string(r); }

inline Rational rational_from_json(const json& j, const std::string& what) {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return Rational(j.get<long long>());
    throw std::invalid_argument(what + ": expected a \"p/q\" string");
}

// ---------------------------------------------------------------------------
// scheduling instances
// ---------------------------------------------------------------------------

inline JobTag tag_from_string(const std::string& s) {
    if (s == "knapsack") return JobTag::Knapsack;
    if (s == "blocker") return JobTag::Blocker;
    if (s == "dummy") return JobTag::Dummy;
    if (s == "plain") return JobTag::Plain;
    throw std::invalid_argument("unknown job tag '" + s + "'");
}

inline json instance_to_json(const SchedInstance& inst) {
    json jobs = json::array();
    for (const auto& job : inst.jobs) {
        json size;
        if (job.size.is_two_point()) {
            size = {{"type", "two_point"},
                    {"lo", rational_to_json(job.size.lo)},
                    {"hi", rational_to_json(job.size.hi)},
                    {"p_hi", rational_to_json(job.size.p_hi)}};
        } else {
            size = {{"type", "deterministic"}, {"value", rational_to_json(job.size.value)}};
        }
        jobs.push_back({{"id", job.id},
                        {"weight", rational_to_json(job.weight)},
                        {"tag", tag_name(job.tag)},
                        {"size", size}});
    }
    return {{"machines", inst.machines}, {"jobs", jobs}};
}

inline SchedInstance instance_from_json(const json& j) {
    SchedInstance inst;
    inst.machines = j.at("machines").get<int>();
    for (const auto& jj : j.at("jobs")) {
        Job job;
        job.id = jj.at("id").get<int>();
        job.weight = rational_from_json(jj.at("weight"), "weight");
        job.tag = jj.contains("tag") ? tag_from_string(jj.at("tag").get<std::string>())
                                     : JobTag::Plain;
        const auto& size = jj.at("size");
        const std::string type = size.at("type").get<std::string>();
        if (type == "deterministic") {
            job.size = SizeDistribution::deterministic(rational_from_json(size.at("value"), "value"));
        } else if (type == "two_point") {
            job.size = SizeDistribution::two_point(rational_from_json(size.at("lo"), "lo"),
                                                   rational_from_json(size.at("hi"), "hi"),
                                                   rational_from_json(size.at("p_hi"), "p_hi"));
        } else {
            throw std::invalid_argument("unknown size type '" + type + "'");
        }
        inst.jobs.push_back(std::move(job));
    }
    return inst;
}

// ---------------------------------------------------------------------------
// knapsack instances
// ---------------------------------------------------------------------------

inline json knapsack_to_json(const KnapsackInstance& kp) {
    return {{"sizes", kp.sizes}, {"B", kp.bound}};
}

inline KnapsackInstance knapsack_from_json(const json& j) {
    KnapsackInstance kp;
    kp.sizes = j.at("sizes").get<std::vector<long long>>();
    kp.bound = j.at("B").get<long long>();
    return kp;
}

// ---------------------------------------------------------------------------
// evaluation reports
// ---------------------------------------------------------------------------

inline const char* objective_name(ObjectiveKind obj) {
    return obj == ObjectiveKind::StartTimes ? "start" : "completion";
}

inline json per_realization_to_json(const std::vector<PerRealizationRow>& rows) {
    json out = json::array();
    for (const auto& row : rows) {
        json r = {{"index", row.index},
                  {"bitmask", row.bitmask},
                  {"probability", rational_to_json(row.probability)},
                  {"cost", rational_to_json(row.cost)}};
        r["contribution_to_delta"] =
            row.delta_contribution ? rational_to_json(*row.delta_contribution) : json();
        out.push_back(std::move(r));
    }
    return out;
}

inline std::string per_realization_to_csv(const std::vector<PerRealizationRow>& rows) {
    std::ostringstream os;
    os << "index,bitmask,probability,cost,contribution_to_delta\n";
    for (const auto& row : rows) {
        os << row.index << ',' << row.bitmask << ',' << to_string(row.probability) << ','
           << to_string(row.cost) << ',';
        if (row.delta_contribution) os << to_string(*row.delta_contribution);
        os << '\n';
    }
    return os.str();
}

inline json cost_breakdown_to_json(const CostBreakdown& cb) {
    json per_job = json::object();
    for (const auto& [id, v] : cb.per_job) per_job[std::to_string(id)] = rational_to_json(v);
    json out = {{"objective", objective_name(cb.objective)},
                {"total", rational_to_json(cb.total)},
                {"per_job", per_job}};
    if (cb.per_realization) out["per_realization"] = per_realization_to_json(*cb.per_realization);
    return out;
}

inline json monte_carlo_to_json(const MonteCarloEstimate& est, ObjectiveKind obj) {
    return {{"approximate", true},
            {"objective", objective_name(obj)},
            {"mean", rational_to_json(est.mean)},
            {"std_error", est.std_error},
            {"samples", est.samples},
            {"seed", est.seed}};
}

// ---------------------------------------------------------------------------
// reduction reports
// ---------------------------------------------------------------------------

inline json reduction_report_to_json(const ReductionReport& rep) {
    json out = {{"mode", mode_name(rep.mode)},
                {"n", rep.n},
                {"feasible", rep.feasible},
                {"infeasible", rep.infeasible},
                {"transform_applied", rep.transform_applied},
                {"evaluated_n", rep.evaluated_n},
                {"count_adjustment", rep.count_adjustment},
                {"evaluated_infeasible", rep.evaluated_infeasible},
                {"e1", rational_to_json(rep.e1)},
                {"e2", rational_to_json(rep.e2)},
                {"delta", rational_to_json(rep.delta)}};
    out["trivial_case"] = rep.trivial_case ? json(*rep.trivial_case) : json();
    out["q"] = rep.q ? rational_to_json(*rep.q) : json();
    if (rep.per_realization) out["per_realization"] = per_realization_to_json(*rep.per_realization);
    return out;
}

inline json verification_report_to_json(const VerificationReport& rep) {
    json checks = json::array();
    for (const auto& c : rep.checks)
        checks.push_back({{"name", c.name}, {"pass", c.pass}, {"details", c.details}});
    json out = {{"mode", mode_name(rep.mode)},
                {"n", rep.n},
                {"trivial", rep.trivial},
                {"transform_applied", rep.transform_applied},
                {"all_pass", rep.all_pass()},
                {"checks", checks}};
    out["q"] = rep.q ? rational_to_json(*rep.q) : json();
    return out;
}

inline std::string verification_report_to_text(const VerificationReport& rep) {
    std::ostringstream os;
    os << "mode=" << mode_name(rep.mode) << " n=" << rep.n;
    if (rep.q) os << " q=" << to_string(*rep.q);
    if (rep.transform_applied) os << " (restriction transform applied)";
    os << '\n';
    for (const auto& c : rep.checks) {
        os << (c.pass ? "PASS " : "FAIL ") << c.name;
        if (!c.details.empty()) os << " -- " << c.details;
        os << '\n';
    }
    os << (rep.all_pass() ? "all checks passed" : "SOME CHECKS FAILED") << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// policy trees and search results
// ---------------------------------------------------------------------------

inline json policy_tree_to_json(const PolicyTree& tree) {
    json nodes = json::object();
    for (const auto& [key, node] : tree.nodes) {
        json branches = json::array();
        for (const auto& b : node.branches)
            branches.push_back({{"completed", b.completed},
                                {"promoted", b.promoted},
                                {"probability", rational_to_json(b.probability)},
                                {"next", b.next}});
        nodes[key] = {{"start", node.start_set}, {"branches", branches}};
    }
    return {{"root", tree.root}, {"nodes", nodes}};
}

inline json search_result_to_json(const SearchResult& res) {
    return {{"optimum", rational_to_json(res.value)}, {"oracle_calls", res.oracle_calls}};
}

// ---------------------------------------------------------------------------
// file helpers
// ---------------------------------------------------------------------------

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    json j;
    in >> j;
    return j;
}

inline SchedInstance load_instance(const std::string& path) {
    return instance_from_json(load_json_file(path));
}

inline KnapsackInstance load_knapsack(const std::string& path) {
    return knapsack_from_json(load_json_file(path));
}

}  // namespace stosched
