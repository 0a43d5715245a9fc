#pragma once

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stosched/json_io.hpp"

namespace stosched::cli {

namespace detail {

inline std::vector<int> parse_id_list(const std::string& text) {
    std::vector<int> ids;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) throw std::invalid_argument("empty entry in id list '" + text + "'");
        ids.push_back(std::stoi(item));
    }
    return ids;
}

/// "3=hi,4=lo" -> OutcomeCondition
inline OutcomeCondition parse_condition(const std::string& text) {
    OutcomeCondition cond;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("condition entries look like 'id=hi' or 'id=lo'");
        const int id = std::stoi(item.substr(0, eq));
        const std::string branch = item.substr(eq + 1);
        if (branch == "hi")
            cond.fixed[id] = OutcomeCondition::Branch::Hi;
        else if (branch == "lo")
            cond.fixed[id] = OutcomeCondition::Branch::Lo;
        else
            throw std::invalid_argument("condition branch must be 'hi' or 'lo'");
    }
    return cond;
}

inline PriorityRule parse_rule(const std::string& policy, const std::string& order) {
    if (policy == "sept") return PriorityRule::sept();
    if (policy == "wsept") return PriorityRule::wsept();
    if (policy == "spt") return PriorityRule::spt();
    if (policy == "custom") {
        if (order.empty())
            throw std::invalid_argument("--policy custom requires --order id,id,...");
        return PriorityRule::custom(parse_id_list(order));
    }
    throw std::invalid_argument("unknown policy '" + policy + "'");
}

inline ObjectiveKind parse_objective(const std::string& name) {
    if (name == "start") return ObjectiveKind::StartTimes;
    if (name == "completion") return ObjectiveKind::CompletionTimes;
    throw std::invalid_argument("objective must be 'start' or 'completion'");
}

inline void emit(const std::string& report, const std::string& out_path, std::ostream& out) {
    if (out_path.empty()) {
        out << report;
        return;
    }
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw std::invalid_argument("cannot write to '" + out_path + "'");
    f << report;
}

}  // namespace detail

/// Runs one command. `args` excludes the program name. Returns the process
/// exit status: 0 success, 1 domain error, 2 usage error.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"exact analysis of stochastic scheduling policies and the"
                 " knapsack-counting pipelines built on them"};
    app.require_subcommand(1);

    std::string format = "json";
    std::string out_path;
    int max_enum = kDefaultEnumerationCap;
    int max_dp = kDefaultDpCap;
    int threads = 1;
    const auto add_common = [&](CLI::App* cmd, bool uses_enum, bool uses_dp) {
        cmd->add_option("--format", format, "output format: json, csv or text")
            ->check(CLI::IsMember({"json", "csv", "text"}));
        cmd->add_option("--out", out_path, "write the report to a file instead of stdout");
        if (uses_enum)
            cmd->add_option("--max-enum", max_enum,
                            "cap on enumerated two-point jobs (default 24)");
        if (uses_dp)
            cmd->add_option("--max-dp", max_dp, "cap on total jobs for the DP (default 12)");
        cmd->add_option("--threads", threads, "worker threads for enumeration sums (default 1)")
            ->check(CLI::PositiveNumber);
    };

    // evaluate
    std::string inst_path, policy = "sept", order, objective = "completion", condition;
    bool per_realization = false;
    std::uint64_t mc_samples = 0;
    std::uint64_t seed = 0;
    auto* eval_cmd = app.add_subcommand("evaluate", "expected cost of a list policy");
    eval_cmd->add_option("instance", inst_path, "instance JSON file")->required();
    eval_cmd->add_option("--policy", policy, "sept, wsept, spt or custom")->required();
    eval_cmd->add_option("--order", order, "comma-separated job ids for --policy custom");
    eval_cmd->add_option("--objective", objective, "start or completion (default completion)");
    eval_cmd->add_option("--condition", condition, "fix two-point branches, e.g. '3=hi,4=lo'");
    eval_cmd->add_flag("--per-realization", per_realization,
                       "include the per-realization table");
    auto* mc_opt = eval_cmd->add_option("--mc-samples", mc_samples,
                                        "Monte-Carlo sample count (approximate mode)");
    eval_cmd->add_option("--seed", seed, "PRNG seed, required with --mc-samples")
        ->needs(mc_opt);
    mc_opt->needs(eval_cmd->get_option("--seed"));
    add_common(eval_cmd, true, false);

    // optimal
    std::string opt_inst, opt_objective = "completion";
    bool emit_tree = false;
    auto* opt_cmd = app.add_subcommand("optimal", "exact optimal adaptive policy cost");
    opt_cmd->add_option("instance", opt_inst, "instance JSON file")->required();
    opt_cmd->add_option("--objective", opt_objective, "start or completion (default completion)");
    opt_cmd->add_flag("--emit-policy-tree", emit_tree, "include the policy tree in the report");
    add_common(opt_cmd, false, true);

    // build-pair
    std::string bp_kp, bp_mode, bp_q, bp_qmode = "eval";
    auto* bp_cmd = app.add_subcommand("build-pair", "emit the paired scheduling instances");
    bp_cmd->add_option("knapsack", bp_kp, "knapsack JSON file")->required();
    bp_cmd->add_option("--mode", bp_mode, "wsept or sept")
        ->required()
        ->check(CLI::IsMember({"wsept", "sept"}));
    bp_cmd->add_option("--q", bp_q, "blocker long-probability (sept mode), as p/q");
    bp_cmd->add_option("--q-mode", bp_qmode, "default q: eval (1/(3B)) or optimal (1/(2n^2B))")
        ->check(CLI::IsMember({"eval", "optimal"}));
    add_common(bp_cmd, false, false);

    // count
    std::string cnt_kp, via, cnt_q;
    bool cnt_table = false;
    auto* cnt_cmd = app.add_subcommand("count", "count feasible knapsack subsets");
    cnt_cmd->add_option("knapsack", cnt_kp, "knapsack JSON file")->required();
    cnt_cmd->add_option("--via", via, "bruteforce, wsept, sept or optimal")
        ->required()
        ->check(CLI::IsMember({"bruteforce", "wsept", "sept", "optimal"}));
    cnt_cmd->add_option("--q", cnt_q, "override blocker long-probability, as p/q");
    cnt_cmd->add_flag("--per-realization", cnt_table, "include the coupled difference table");
    add_common(cnt_cmd, true, true);

    // verify
    std::string vf_kp, vf_mode, vf_q;
    auto* vf_cmd = app.add_subcommand("verify", "re-check the per-realization lemma claims");
    vf_cmd->add_option("knapsack", vf_kp, "knapsack JSON file")->required();
    vf_cmd->add_option("--mode", vf_mode, "wsept, sept or optimal")
        ->required()
        ->check(CLI::IsMember({"wsept", "sept", "optimal"}));
    vf_cmd->add_option("--q", vf_q, "override blocker long-probability, as p/q");
    add_common(vf_cmd, true, true);

    // search
    std::string sr_inst, sr_lo, sr_hi, sr_gran, sr_objective = "completion";
    auto* sr_cmd = app.add_subcommand("search",
                                      "recover the optimum via the threshold oracle");
    sr_cmd->add_option("instance", sr_inst, "instance JSON file")->required();
    sr_cmd->add_option("--lo", sr_lo, "lower bound, as p/q")->required();
    sr_cmd->add_option("--hi", sr_hi, "upper bound, as p/q")->required();
    sr_cmd->add_option("--granularity", sr_gran, "cost-spacing lower bound, as p/q")->required();
    sr_cmd->add_option("--objective", sr_objective, "start or completion (default completion)");
    add_common(sr_cmd, false, true);

    try {
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        std::string report;

        if (*eval_cmd) {
            const SchedInstance inst = load_instance(inst_path);
            const PriorityRule rule = detail::parse_rule(policy, order);
            const ObjectiveKind obj = detail::parse_objective(objective);
            if (mc_samples > 0) {
                const auto est = monte_carlo_cost(inst, rule, obj, mc_samples, seed, threads);
                if (format != "json")
                    throw std::invalid_argument("Monte-Carlo reports are JSON only");
                report = monte_carlo_to_json(est, obj).dump(2) + "\n";
            } else {
                EvalOptions opts;
                opts.enumeration_cap = max_enum;
                opts.per_realization_table = per_realization;
                opts.threads = threads;
                const OutcomeCondition cond =
                    condition.empty() ? OutcomeCondition{} : detail::parse_condition(condition);
                const CostBreakdown cb = expected_cost_conditioned(inst, rule, obj, cond, opts);
                if (format == "csv") {
                    if (!cb.per_realization)
                        throw std::invalid_argument("--format csv requires --per-realization");
                    report = per_realization_to_csv(*cb.per_realization);
                } else if (format == "text") {
                    std::ostringstream os;
                    os << "objective " << objective_name(obj) << "\ntotal " << to_string(cb.total)
                       << "\n";
                    report = os.str();
                } else {
                    json j = cost_breakdown_to_json(cb);
                    if (!cond.empty()) {
                        json jc = json::object();
                        for (const auto& [id, br] : cond.fixed)
                            jc[std::to_string(id)] =
                                br == OutcomeCondition::Branch::Hi ? "hi" : "lo";
                        j["condition"] = jc;
                    }
                    report = j.dump(2) + "\n";
                }
            }
        } else if (*opt_cmd) {
            const SchedInstance inst = load_instance(opt_inst);
            const ObjectiveKind obj = detail::parse_objective(opt_objective);
            DpOptions opts;
            opts.dp_cap = max_dp;
            opts.build_tree = emit_tree;
            const OptimalResult res = optimal_expected_cost(inst, obj, opts);
            if (format == "text") {
                report = "objective " + std::string(objective_name(obj)) + "\noptimal " +
                         to_string(res.cost) + "\n";
            } else if (format == "json") {
                json j = {{"objective", objective_name(obj)},
                          {"optimal", rational_to_json(res.cost)}};
                if (res.tree) j["policy_tree"] = policy_tree_to_json(*res.tree);
                report = j.dump(2) + "\n";
            } else {
                throw std::invalid_argument("optimal reports are json or text");
            }
        } else if (*bp_cmd) {
            const KnapsackInstance kp = load_knapsack(bp_kp);
            json j;
            if (bp_mode == "wsept") {
                const auto [first, second] = build_wsept_pair(kp);
                j = {{"mode", "wsept"},
                     {"instance1", instance_to_json(first)},
                     {"instance2", instance_to_json(second)}};
            } else {
                std::optional<Rational> q;
                if (!bp_q.empty()) q = parse_rational(bp_q);
                const SeptPair pair = build_sept_pair(
                    kp, q,
                    bp_qmode == "eval" ? SeptQMode::Evaluation : SeptQMode::OptimalPolicy);
                j = {{"mode", "sept"},
                     {"q", rational_to_json(pair.q_used)},
                     {"instance1", instance_to_json(pair.first)},
                     {"instance2", instance_to_json(pair.second)}};
            }
            if (format != "json")
                throw std::invalid_argument("build-pair reports are JSON only");
            report = j.dump(2) + "\n";
        } else if (*cnt_cmd) {
            const KnapsackInstance kp = load_knapsack(cnt_kp);
            CountOptions opts;
            opts.enumeration_cap = max_enum;
            opts.dp_cap = max_dp;
            opts.per_realization_table = cnt_table;
            opts.threads = threads;
            if (!cnt_q.empty()) opts.q = parse_rational(cnt_q);

            if (via == "bruteforce") {
                const std::uint64_t feasible = count_knapsack_bruteforce(kp);
                const std::uint64_t all = std::uint64_t{1} << kp.n();
                json j = {{"via", "bruteforce"},
                          {"n", kp.n()},
                          {"feasible", feasible},
                          {"infeasible", all - feasible}};
                if (format == "text")
                    report = "feasible " + std::to_string(feasible) + "\n";
                else
                    report = j.dump(2) + "\n";
            } else {
                ReductionReport rep;
                if (via == "optimal")
                    rep = count_via_optimal(kp, opts);
                else
                    rep = count_via_policy(kp,
                                           via == "wsept" ? ReductionMode::WseptThm1
                                                          : ReductionMode::SeptThm2,
                                           opts);
                if (format == "csv") {
                    if (!rep.per_realization)
                        throw std::invalid_argument("--format csv requires --per-realization");
                    report = per_realization_to_csv(*rep.per_realization);
                } else if (format == "text") {
                    report = "feasible " + std::to_string(rep.feasible) + "\ndelta " +
                             to_string(rep.delta) + "\n";
                } else {
                    report = reduction_report_to_json(rep).dump(2) + "\n";
                }
            }
        } else if (*vf_cmd) {
            const KnapsackInstance kp = load_knapsack(vf_kp);
            CountOptions opts;
            opts.enumeration_cap = max_enum;
            opts.dp_cap = max_dp;
            opts.threads = threads;
            if (!vf_q.empty()) opts.q = parse_rational(vf_q);
            const ReductionMode mode = vf_mode == "wsept"  ? ReductionMode::WseptThm1
                                       : vf_mode == "sept" ? ReductionMode::SeptThm2
                                                           : ReductionMode::OptimalThm4;
            const VerificationReport rep = verify_lemmas(kp, mode, opts);
            if (format == "text")
                report = verification_report_to_text(rep);
            else if (format == "json")
                report = verification_report_to_json(rep).dump(2) + "\n";
            else
                throw std::invalid_argument("verify reports are json or text");
            detail::emit(report, out_path, out);
            return rep.all_pass() ? 0 : 1;
        } else if (*sr_cmd) {
            const SchedInstance inst = load_instance(sr_inst);
            const ObjectiveKind obj = detail::parse_objective(sr_objective);
            DpOptions opts;
            opts.dp_cap = max_dp;
            const SearchResult res = binary_search_optimum(
                inst, obj, parse_rational(sr_lo), parse_rational(sr_hi),
                parse_rational(sr_gran), opts);
            if (format == "text")
                report = "optimum " + to_string(res.value) + "\noracle_calls " +
                         std::to_string(res.oracle_calls) + "\n";
            else if (format == "json")
                report = search_result_to_json(res).dump(2) + "\n";
            else
                throw std::invalid_argument("search reports are json or text");
        }

        detail::emit(report, out_path, out);
        return 0;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const json::exception& e) {
        err << "error: malformed input: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::runtime_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace stosched::cli
