// Command-line front end: solve single instances, run scenario experiments,
// sweep the speed-up factor, and run the verification suites.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "orchard/io.hpp"
#include "orchard/kkt.hpp"
#include "orchard/oracle.hpp"

namespace fs = std::filesystem;
using namespace orchard;

namespace {

constexpr const char* kVersion = "orchard 1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

AlgorithmKind parse_algo(const std::string& name, double q) {
    if (name == "oa") return AlgorithmKind::oa();
    if (name == "orchard") return AlgorithmKind::orchard(q);
    if (name == "avg") return AlgorithmKind::avg();
    if (name == "eg") return AlgorithmKind::eg();
    throw CLI::ValidationError("--algo", "unknown algorithm '" + name +
                                             "' (expected one of: oa, orchard, avg, eg)");
}

void write_manifest(const fs::path& out_dir, const io::json& manifest) {
    io::write_text_file((out_dir / "manifest.json").string(), manifest.dump(2) + "\n");
}

int cmd_solve(const std::string& instance_path, const std::string& out_path) {
    io::Instance inst = io::load_instance(instance_path);
    std::vector<int> infeasible;
    for (const auto& r : inst.requests)
        if (!check_request_feasible(r)) infeasible.push_back(r.id);
    if (!infeasible.empty()) {
        std::cerr << "infeasible request(s):";
        for (int id : infeasible) std::cerr << ' ' << id;
        std::cerr << '\n';
        return kExitDomain;
    }

    OfflineSolution sol = solve_offline(inst.requests);
    KktReport kkt = verify_kkt(sol.schedule, inst.requests, sol.decomp);
    io::json j = io::schedule_to_json(sol, inst.requests, inst.cost);
    j["kkt"] = {{"passed", kkt.passed},
                {"max_balance_violation_kw", kkt.max_balance_violation_kw},
                {"max_zero_rate_violation_kw", kkt.max_zero_rate_violation_kw},
                {"max_cap_rate_violation_kw", kkt.max_cap_rate_violation_kw}};
    const std::string text = j.dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        io::write_text_file(out_path, text);
    std::cout << "total cost: " << io::num(j["total_cost"].get<double>()) << " $\n";
    if (!kkt.passed) {
        std::cerr << "KKT verification failed (worst violation " << io::num(kkt.worst())
                  << " kW)\n";
        return kExitDomain;
    }
    return kExitOk;
}

int cmd_simulate(const std::string& config_path, const std::vector<std::string>& algo_names,
                 double q, std::size_t runs, std::uint64_t seed, const std::string& out_dir) {
    ScenarioConfig config = io::load_scenario(config_path);
    std::vector<AlgorithmKind> algos;
    for (const auto& n : algo_names) algos.push_back(parse_algo(n, q));

    std::vector<ReplicationResult> results = run_batch(config, algos, runs, seed);
    std::vector<RatioSummary> summary = aggregate_ratios(results, algos);

    fs::create_directories(out_dir);
    io::write_text_file((fs::path(out_dir) / "replications.csv").string(),
                        io::replications_csv(results, algos));
    io::write_text_file((fs::path(out_dir) / "summary.csv").string(), io::summary_csv(summary));
    io::json manifest = {{"command", "simulate"},
                         {"config", config_path},
                         {"seed", seed},
                         {"runs", runs},
                         {"q", q},
                         {"algorithms", algo_names},
                         {"out", out_dir},
                         {"version", kVersion}};
    write_manifest(out_dir, manifest);

    for (const auto& s : summary)
        std::cout << s.algorithm << " (q=" << io::num(s.q)
                  << "): mean ratio " << io::num(s.mean_ratio) << " +/- "
                  << io::num(s.std_error) << '\n';
    return kExitOk;
}

int cmd_sweep_q(const std::string& config_path, const std::string& sweep_spec, std::size_t runs,
                std::uint64_t seed, const std::string& out_dir) {
    double q_min = 0, q_max = 0, step = 0;
    if (std::sscanf(sweep_spec.c_str(), "%lf:%lf:%lf", &q_min, &q_max, &step) != 3 ||
        step <= 0.0 || q_min < 1.0 || q_max > 5.0 || q_min >= q_max)
        throw CLI::ValidationError("--sweep",
                                   "expected q_min:q_max:step with 1 <= q_min < q_max <= 5");
    std::vector<double> qs;
    for (double v = q_min; v <= q_max + 1e-9; v += step) qs.push_back(v);

    ScenarioConfig config = io::load_scenario(config_path);
    std::vector<QPoint> sweep = q_sweep(config, qs, runs, seed);

    fs::create_directories(out_dir);
    io::write_text_file((fs::path(out_dir) / "sweep.csv").string(), io::sweep_csv(sweep));
    io::json manifest = {{"command", "sweep-q"}, {"config", config_path}, {"seed", seed},
                         {"runs", runs},        {"sweep", sweep_spec},   {"out", out_dir},
                         {"version", kVersion}};
    write_manifest(fs::path(out_dir), manifest);

    const std::size_t best = argmin_q(sweep);
    std::cout << "argmin q = " << io::num(sweep[best].q) << " with mean ratio "
              << io::num(sweep[best].mean_ratio) << '\n';
    return kExitOk;
}

int cmd_verify(const std::string& suite, std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    std::uint64_t worst_seed = 0;
    bool ok = true;

    for (std::size_t n = 0; n < count; ++n) {
        const std::uint64_t case_seed = seed + n;
        Rng case_rng(case_seed);
        if (suite == "kkt") {
            auto reqs = random_instance(10, case_rng);
            OfflineSolution sol = solve_offline(reqs);
            KktReport kkt = verify_kkt(sol.schedule, reqs, sol.decomp);
            double prev = std::numeric_limits<double>::infinity();
            bool monotone = true;
            for (double s : sol.peak_rates()) {
                if (s > prev + 1e-9) monotone = false;
                prev = s;
            }
            if (kkt.worst() > worst) {
                worst = kkt.worst();
                worst_seed = case_seed;
            }
            if (!kkt.passed || !monotone) ok = false;
        } else if (suite == "oracle") {
            auto reqs = random_instance(8, case_rng);
            OfflineSolution sol = solve_offline(reqs);
            RateSchedule ref = oracle_solve(reqs, sol.decomp);
            CostModel cost;
            const double c1 = evaluate_cost(sol.schedule, sol.decomp, cost);
            const double c2 = evaluate_cost(ref, sol.decomp, cost);
            const double gap = c2 > 0.0 ? std::abs(c1 - c2) / c2 : std::abs(c1 - c2);
            if (gap > worst) {
                worst = gap;
                worst_seed = case_seed;
            }
            if (gap > 1e-3) ok = false;
        } else if (suite == "online-invariants") {
            auto reqs = random_instance(10, case_rng);
            OfflineSolution sol = solve_offline(reqs);
            CostModel cost;
            const double off = evaluate_cost(sol.schedule, sol.decomp, cost);
            for (AlgorithmKind algo : {AlgorithmKind::oa(), AlgorithmKind::orchard(1.46),
                                       AlgorithmKind::avg(), AlgorithmKind::eg()}) {
                OnlineResult on = run_online(reqs, cost, algo);
                if (!on.all_demands_met) ok = false;
                if (on.total_cost < off - 1e-9) ok = false;
                if (algo.policy == Policy::Orchard && off > 0.0) {
                    const double ratio = on.total_cost / off;
                    if (ratio > worst) {
                        worst = ratio;
                        worst_seed = case_seed;
                    }
                    if (ratio > 2.39) ok = false;
                }
            }
        } else {
            throw CLI::ValidationError(
                "suite", "unknown suite '" + suite +
                             "' (expected one of: kkt, oracle, online-invariants)");
        }
    }
    std::cout << suite << ": " << count << " instances, worst "
              << (suite == "kkt" ? "violation " : suite == "oracle" ? "cost gap " : "ratio ")
              << io::num(worst) << " (seed " << worst_seed << ") -> "
              << (ok ? "pass" : "FAIL") << '\n';
    return ok ? kExitOk : kExitDomain;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deadline-constrained PEV charging: offline optimal solver, online "
                 "policies, and the stochastic experiment harness"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    auto* solve = app.add_subcommand("solve", "solve one instance file to optimality");
    std::string instance_path, out_path;
    solve->add_option("-i,--instance", instance_path, "instance JSON file")->required();
    solve->add_option("-o,--out", out_path, "schedule output path (default: stdout)");

    auto* simulate = app.add_subcommand("simulate", "run scenario replications");
    std::string config_path, out_dir = "results";
    std::vector<std::string> algo_names;
    double q = 1.46;
    std::size_t runs = 1000;
    std::uint64_t seed = 1;
    simulate->add_option("--config", config_path, "scenario config JSON")->required();
    simulate->add_option("--algo", algo_names, "algorithms: oa, orchard, avg, eg (repeatable)");
    simulate->add_option("--q", q, "speed-up factor for orchard");
    simulate->add_option("--runs", runs, "number of replications");
    simulate->add_option("--seed", seed, "base seed");
    simulate->add_option("--out", out_dir, "output directory");

    auto* sweep = app.add_subcommand("sweep-q", "sweep the speed-up factor");
    std::string sweep_spec = "1.0:3.0:0.2";
    std::size_t sweep_runs = 500;
    std::uint64_t sweep_seed = 1;
    std::string sweep_config, sweep_out = "results";
    sweep->add_option("--config", sweep_config, "scenario config JSON")->required();
    sweep->add_option("--sweep", sweep_spec, "q_min:q_max:step");
    sweep->add_option("--runs", sweep_runs, "replications per q value");
    sweep->add_option("--seed", sweep_seed, "base seed (shared across q)");
    sweep->add_option("--out", sweep_out, "output directory");

    auto* verify = app.add_subcommand("verify", "run a randomized invariant suite");
    std::string suite;
    std::size_t verify_runs = 200;
    std::uint64_t verify_seed = 1;
    verify->add_option("suite", suite, "kkt | oracle | online-invariants")->required();
    verify->add_option("--runs", verify_runs, "number of random instances");
    verify->add_option("--seed", verify_seed, "base seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (solve->parsed()) return cmd_solve(instance_path, out_path);
        if (simulate->parsed()) {
            if (algo_names.empty()) algo_names = {"orchard", "oa", "avg", "eg"};
            return cmd_simulate(config_path, algo_names, q, runs, seed, out_dir);
        }
        if (sweep->parsed())
            return cmd_sweep_q(sweep_config, sweep_spec, sweep_runs, sweep_seed, sweep_out);
        if (verify->parsed()) return cmd_verify(suite, verify_runs, verify_seed);
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDomain;
    }
    return kExitUsage;
}
