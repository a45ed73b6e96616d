// pricing: command-line front end for the markdown pricing toolkit.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pricing/config.hpp"
#include "pricing/figures.hpp"
#include "pricing/pipeline.hpp"
#include "pricing/simulate.hpp"

namespace fs = std::filesystem;
using namespace pricing;
using namespace pricing::app;

namespace {

struct Globals {
    std::string config;
    std::string out;
    std::string product;
};

RunConfig make_config(const Globals& g) {
    RunConfig c = g.config.empty() ? RunConfig{} : load_config(g.config);
    if (!g.out.empty()) c.output_dir = g.out;
    if (!g.product.empty()) c.product_id = g.product;
    c.validate();
    fs::create_directories(c.output_dir);
    return c;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write " + path.string());
    out << text;
}

int gate(const RunConfig& c, const ingest::PreparedSeries& series) {
    auto report = eligibility(c, series, ModelStore(c.model_store_path()));
    write_file(c.output_dir / "eligibility.json", eligibility_json(report));
    for (const auto& o : report.outcomes)
        if (!o.passed && !o.skipped)
            std::cerr << "ineligible: " << o.rule << " observed " << o.observed << ", threshold " << o.threshold << "\n";
    return report.eligible ? 0 : exit_code(RunStatus::Ineligible);
}

double inventory_for(const RunConfig& c, std::optional<double> s0, const forecast::ForecastGrid& weekly,
                     double max_alpha) {
    if (s0) return *s0;
    if (c.initial_inventory) return *c.initial_inventory;
    return calibrate_inventory(weekly, max_alpha);
}

int solve_and_write(const RunConfig& c, double s0, const std::vector<double>& alphas) {
    const auto weekly = forecast::read_grid(c.output_dir / "forecast_weekly.csv", forecast::Granularity::Week);
    const double inventory = inventory_for(c, s0 > 0 ? std::optional(s0) : std::nullopt, weekly, alphas.back());
    auto problem = opt::PricingProblem::from_grid(weekly, inventory, alphas.front());
    auto results = opt::sweep_alpha(problem, alphas, {c.enumeration_threshold});
    for (const auto& f : write_plans(c.output_dir, problem, results, weekly.buckets)) std::cout << f.string() << "\n";
    bool any = false;
    for (const auto& r : results) {
        std::cout << "alpha " << r.alpha << ": " << opt::to_string(r.outcome.status);
        if (r.outcome.plan) std::cout << ", revenue " << r.outcome.plan->objective;
        std::cout << "  (s0 " << inventory << ")\n";
        any = any || r.outcome.status == opt::SolveStatus::Optimal;
    }
    return any ? 0 : exit_code(RunStatus::Infeasible);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Markdown pricing: demand model, forecast grid and price optimization"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand
    Globals g;
    app.add_option("--config", g.config, "JSON run config")->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "output directory");
    app.add_option("--product", g.product, "product id");

    auto* simulate = app.add_subcommand("simulate", "write a simulated history (transactions, quotes, latent states)");
    std::optional<std::uint64_t> seed;
    simulate->add_option("--seed", seed);

    auto* ingest_cmd = app.add_subcommand("ingest", "aggregate transactions into daily.csv");
    auto* eligibility_cmd = app.add_subcommand("eligibility", "check the eligibility rules");
    auto* train_cmd = app.add_subcommand("train", "fit, evaluate and store a demand model");

    auto* forecast_cmd = app.add_subcommand("forecast", "daily and weekly demand grid from the latest model");
    std::optional<int> weeks, levels;
    forecast_cmd->add_option("--weeks", weeks)->check(CLI::PositiveNumber);
    forecast_cmd->add_option("--levels", levels)->check(CLI::PositiveNumber);

    auto* optimize_cmd = app.add_subcommand("optimize", "solve for one alpha");
    double s0 = 0;
    std::optional<double> alpha;
    optimize_cmd->add_option("--s0", s0, "initial inventory (default: config or calibrated)");
    optimize_cmd->add_option("--alpha", alpha)->check(CLI::Range(0.0, 1.0));

    auto* sweep_cmd = app.add_subcommand("sweep", "solve for several alphas");
    std::vector<double> alphas;
    sweep_cmd->add_option("--alphas", alphas)->delimiter(',');
    sweep_cmd->add_option("--s0", s0, "initial inventory (default: config or calibrated)");

    auto* run_cmd = app.add_subcommand("run", "full pipeline");
    auto* figures_cmd = app.add_subcommand("figures", "figure data and SVGs from a finished run");

    CLI11_PARSE(app, argc, argv);

    try {
        auto c = make_config(g);
        const auto& out = c.output_dir;

        if (*simulate) {
            auto truth = c.simulation ? *c.simulation : sim::reference_product();
            if (!c.simulation) truth.calendar = c.calendar;
            if (seed) truth.seed = *seed;
            truth.validate();
            auto s = sim::generate(truth);
            ingest::write_transactions(out / "transactions.csv", s.transactions);
            ingest::write_competitor_quotes(out / "competitor.csv", s.quotes);
            sim::write_latent(out / "latent.csv", s.latent);
            std::cout << "simulated " << s.latent.size() << " days, " << s.transactions.size() << " transactions\n";
            return 0;
        }
        if (*ingest_cmd) {
            auto series = load_series(c);
            ingest::write_prepared(out / "daily.csv", series);
            std::cout << (out / "daily.csv").string() << ": " << series.size() << " days\n";
            return 0;
        }
        if (*eligibility_cmd) {
            auto series = load_series(c);
            int code = gate(c, series);
            std::cout << (code == 0 ? "eligible" : "ineligible") << "\n";
            return code;
        }
        if (*train_cmd) {
            auto series = load_series(c);
            if (int code = gate(c, series)) return code;
            auto trained = train(c, series);
            int version = ModelStore(c.model_store_path()).save(c.product_id, trained.model);
            auto e = ssm::elasticity(trained.model);
            std::cout << "model v" << version << ": elasticity " << e.estimate << " (se " << e.std_error
                      << ", confidence " << e.confidence << ")\n";
            if (trained.model.metrics)
                std::cout << "holdout rmse_log " << trained.model.metrics->rmse_log << ", mape "
                          << trained.model.metrics->mape_percent << "%\n";
            return 0;
        }
        if (*forecast_cmd) {
            if (weeks) c.horizon_weeks = *weeks;
            if (levels) c.ladder_levels = *levels;
            auto series = load_series(c);
            auto model = ModelStore(c.model_store_path()).load_latest(c.product_id);
            auto grids = forecast_grids(c, model, series);
            forecast::write_grid(out / "forecast_daily.csv", grids.daily);
            forecast::write_grid(out / "forecast_weekly.csv", grids.weekly);
            std::cout << grids.weekly.levels() << " levels x " << grids.weekly.horizon() << " weeks\n";
            return 0;
        }
        if (*optimize_cmd) return solve_and_write(c, s0, {alpha ? *alpha : c.alphas.front()});
        if (*sweep_cmd) {
            if (alphas.empty()) alphas = c.alphas;
            return solve_and_write(c, s0, alphas);
        }
        if (*run_cmd) {
            auto report = run_pipeline(c);
            std::cout << to_string(report.status);
            if (report.model_version) std::cout << ", model v" << report.model_version;
            std::cout << "\n";
            return exit_code(report.status);
        }
        if (*figures_cmd) {
            for (const auto& f : emit_figure_data(out)) std::cout << f.string() << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
