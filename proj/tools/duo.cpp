// duo: command-line front end for the DUO toolkit.
//
//   duo optimize --problem "sphere(d=5)" --optimizer de --seed 3 --out runs/a
//   duo sample   --problem "product-line(features=40, seed=1)"
//   duo flash    --problem "synthetic-config(d=8, levels=4, seed=2)"
//   duo tune     --dataset data.csv --learner smote-cart --metric recall
//   duo star     --problem "requirements(n=20, seed=4)"
//   duo pipeline --dataset data.csv --k 3
//   duo metrics  --predicted a.csv --actual b.csv --ref 1.1,1.1
//
// Exit status: 0 success, 1 usage or configuration error, 2 runtime failure.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "duo/pipeline.hpp"

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> config;
    std::optional<std::string> out;
    std::optional<std::string> format;
    std::optional<std::size_t> repeats;
};

struct Overrides {
    std::vector<std::pair<std::string, std::string>> values;
    std::vector<std::string> sets;

    void add(const std::string& key, const std::string& value) { values.emplace_back(key, value); }
};

// Binds an optional subcommand flag to a config key.
void bind(CLI::App* cmd, Overrides& ov, const std::string& flag, const std::string& key,
          const std::string& help) {
    cmd->add_option_function<std::string>(
        flag, [&ov, key](const std::string& v) { ov.add(key, v); }, help);
}

duo::ExperimentConfig build_config(const std::string& command, const Globals& g, const Overrides& ov) {
    duo::ExperimentConfig cfg = g.config ? duo::ExperimentConfig::from_file(*g.config) : duo::ExperimentConfig{};
    cfg.set("command", command);
    for (const auto& [k, v] : ov.values)
        cfg.set(k, v);
    for (const auto& kv : ov.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw duo::ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (g.seed)
        cfg.set("seed", std::to_string(*g.seed));
    if (g.out)
        cfg.set("out", *g.out);
    if (g.format)
        cfg.set("format", *g.format);
    if (g.repeats)
        cfg.set("repeats", std::to_string(*g.repeats));
    return cfg;
}

duo::Vec parse_point(const std::string& text) {
    duo::Vec out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto v = duo::parse_number(item);
        if (!v)
            throw duo::ConfigError("--ref expects comma-separated numbers, got '" + text + "'");
        out.push_back(*v);
    }
    return out;
}

int run_metrics(const Globals& g, const std::string& predicted, const std::string& actual,
                const std::optional<std::string>& ref, std::size_t samples) {
    duo::Table table;
    try {
        const duo::Front p = duo::load_front(predicted);
        const duo::Front a = duo::load_front(actual);
        duo::MetricsOptions opts;
        if (ref)
            opts.reference = parse_point(*ref);
        opts.samples = samples;
        opts.seed = g.seed.value_or(1);
        table = duo::metrics_table(p, a, opts);
    } catch (const duo::ContractError& e) {
        throw duo::ConfigError(e.what());
    }
    const std::string format = g.format.value_or("csv");
    if (format == "json")
        std::cout << table.json().dump(2) << '\n';
    else
        std::cout << table.csv();
    if (g.out) {
        std::filesystem::create_directories(*g.out);
        if (format != "json")
            duo::detail::write_file(std::filesystem::path(*g.out) / "metrics.csv", table.csv());
        if (format != "csv")
            duo::detail::write_file(std::filesystem::path(*g.out) / "metrics.json", table.json().dump(2) + "\n");
    }
    return 0;
}

int run_command(const std::string& command, const Globals& g, const Overrides& ov) {
    const duo::ExperimentConfig cfg = build_config(command, g, ov);
    const duo::RunReport report = duo::run_experiment(cfg);
    const std::string format = cfg.get("format");
    const auto files = duo::write_report(report, cfg.get("out"), format);
    if (format == "json")
        std::cout << report.json();
    else
        std::cout << report.csv();
    for (const auto& f : files)
        std::cerr << "wrote " << f << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DUO: data miners and optimizers"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Master seed");
    app.add_option("--config", g.config, "key = value config file")->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"csv", "json", "both"}));
    app.add_option("--repeats", g.repeats, "Independent repeats")->check(CLI::PositiveNumber);

    Overrides ov;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--set", ov.sets, "Extra config key=value (repeatable)");
    };

    auto* optimize = app.add_subcommand("optimize", "Run DE, GA or SWAY on a benchmark problem");
    bind(optimize, ov, "--problem", "problem", "Problem descriptor, e.g. sphere(d=5)");
    bind(optimize, ov, "--optimizer", "optimizer", "de | ga | sway");
    bind(optimize, ov, "--np", "de.np", "DE population size");
    bind(optimize, ov, "--generations", "de.generations", "DE generations");
    add_common(optimize);

    auto* sample = app.add_subcommand("sample", "SWAY sampling on a benchmark problem");
    bind(sample, ov, "--problem", "problem", "Problem descriptor");
    bind(sample, ov, "--n0", "sway.n0", "Initial population size");
    bind(sample, ov, "--stop", "sway.stop", "Recursion stop size");
    add_common(sample);

    auto* flash = app.add_subcommand("flash", "FLASH surrogate search over a sampled pool");
    bind(flash, ov, "--problem", "problem", "Single-goal problem descriptor");
    bind(flash, ov, "--pool", "flash.pool", "Pool size");
    bind(flash, ov, "--init", "flash.init", "Random initial evaluations");
    bind(flash, ov, "--budget", "flash.budget", "Total evaluations");
    add_common(flash);

    auto* tune = app.add_subcommand("tune", "Tune a learner and compare against its defaults");
    bind(tune, ov, "--dataset", "dataset", "CSV dataset");
    bind(tune, ov, "--learner", "tune.learner", "cart | smote-cart");
    bind(tune, ov, "--metric", "tune.metric", "recall | precision | false-alarm | auc | mse");
    bind(tune, ov, "--method", "tune.method", "de | grid");
    std::optional<std::size_t> tune_budget;
    tune->add_option("--budget", tune_budget, "Configurations to evaluate (DE)")->check(CLI::PositiveNumber);
    add_common(tune);

    auto* star = app.add_subcommand("star", "Rank decision ranges and build the decision ladder");
    bind(star, ov, "--problem", "problem", "Problem descriptor");
    bind(star, ov, "--optimizer", "optimizer", "Optimizer re-run on each rung");
    bind(star, ov, "--samples", "star.samples", "Random candidates evaluated for best/rest");
    bind(star, ov, "--rungs", "star.rungs", "Maximum asserted ranges");
    add_common(star);

    auto* metrics = app.add_subcommand("metrics", "Compare two front files");
    std::string predicted, actual;
    std::optional<std::string> ref;
    std::size_t samples = 100000;
    metrics->add_option("--predicted", predicted, "Predicted front CSV")->required()->check(CLI::ExistingFile);
    metrics->add_option("--actual", actual, "Reference front CSV")->required()->check(CLI::ExistingFile);
    metrics->add_option("--ref", ref, "Hypervolume reference point, comma-separated");
    metrics->add_option("--samples", samples, "Monte Carlo samples for 3+ goals");

    auto* pipeline = app.add_subcommand("pipeline", "Cluster with k-means, then tune per cluster");
    bind(pipeline, ov, "--dataset", "dataset", "CSV dataset");
    bind(pipeline, ov, "--k", "pipeline.k", "Clusters");
    bind(pipeline, ov, "--learner", "tune.learner", "cart | smote-cart");
    bind(pipeline, ov, "--metric", "tune.metric", "Metric to optimize");
    add_common(pipeline);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (metrics->parsed())
            return run_metrics(g, predicted, actual, ref, samples);
        const auto* cmd = app.get_subcommands().front();
        if (tune->parsed() && tune_budget) {
            duo::ExperimentConfig probe = build_config("tune", g, ov);
            const std::size_t np = probe.count("tune.np");
            ov.add("tune.generations", std::to_string(*tune_budget > np ? *tune_budget / np - 1 : 0));
        }
        return run_command(cmd->get_name(), g, ov);
    } catch (const duo::ConfigError& e) {
        std::cerr << "duo: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "duo: " << e.what() << '\n';
        return 2;
    }
}
