#include "pricing/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <functional>

#include <json.hpp>

#include "pricing/csv.hpp"
#include "pricing/figures.hpp"
#include "pricing/simulate.hpp"

namespace pricing::app {
namespace {

using nlohmann::json;

template <typename F>
auto stage(const std::string& name, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(name, e.what());
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write " + path.string());
    out << text;
    if (!out) throw StorageError("write failed for " + path.string());
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json eligibility_to_json(const ingest::EligibilityReport& r) {
    json rules = json::array();
    for (const auto& o : r.outcomes)
        rules.push_back({{"rule", o.rule},
                         {"observed", number_or_null(o.observed)},
                         {"threshold", o.threshold},
                         {"passed", o.passed},
                         {"skipped", o.skipped}});
    return {{"eligible", r.eligible}, {"rules", rules}};
}

std::string plan_file_name(double alpha) { return "plan_alpha_" + csv::format_number(alpha) + ".csv"; }

} // namespace

int exit_code(RunStatus status) {
    switch (status) {
    case RunStatus::Completed: return 0;
    case RunStatus::Ineligible: return 2;
    case RunStatus::Infeasible: return 3;
    }
    return 1;
}

std::string to_string(RunStatus status) {
    switch (status) {
    case RunStatus::Completed: return "completed";
    case RunStatus::Ineligible: return "ineligible";
    case RunStatus::Infeasible: return "infeasible";
    }
    return "unknown";
}

ingest::PreparedSeries load_series(const RunConfig& config, const std::optional<std::filesystem::path>& write_inputs_to) {
    std::vector<ingest::RawTransaction> transactions;
    std::vector<ingest::CompetitorQuote> quotes;
    if (config.simulation && write_inputs_to) {
        auto simulated = sim::generate(*config.simulation);
        ingest::write_transactions(*write_inputs_to / "transactions.csv", simulated.transactions);
        ingest::write_competitor_quotes(*write_inputs_to / "competitor.csv", simulated.quotes);
        sim::write_latent(*write_inputs_to / "latent.csv", simulated.latent);
        // read back what was written so the run sees exactly the exported files
        transactions = ingest::read_transactions(*write_inputs_to / "transactions.csv", config.calendar.utc_offset_minutes);
        quotes = ingest::read_competitor_quotes(*write_inputs_to / "competitor.csv");
    } else {
        transactions = ingest::read_transactions(config.transactions_path(), config.calendar.utc_offset_minutes);
        if (std::filesystem::exists(config.competitor_path()))
            quotes = ingest::read_competitor_quotes(config.competitor_path());
        else if (config.model.regressors.competitive)
            throw NotFound("competitor file " + config.competitor_path().string() + " is required by the model");
    }
    ingest::PrepareOptions options;
    options.calendar = config.calendar;
    options.outliers = config.outliers;
    return ingest::prepare(transactions, quotes, options);
}

ingest::EligibilityReport eligibility(const RunConfig& config, const ingest::PreparedSeries& series,
                                      const ModelStore& store) {
    std::optional<ingest::ModelQuality> latest;
    if (!store.versions(config.product_id).empty()) latest = ssm::quality(store.load_latest(config.product_id));
    return ingest::check_eligibility(series, latest, config.eligibility);
}

TrainingResult train(const RunConfig& config, const ingest::PreparedSeries& series) {
    const auto h = static_cast<std::size_t>(config.holdout_days);
    if (h >= series.size()) throw InvalidInput("holdout window is as long as the history");

    TrainingResult out;
    std::vector<ingest::DailyObservation> train_days(series.days.begin(),
                                                     series.days.end() - static_cast<std::ptrdiff_t>(h));
    out.holdout.assign(series.days.end() - static_cast<std::ptrdiff_t>(h), series.days.end());
    out.training = ingest::normalize(std::move(train_days));

    auto model = ssm::fit(out.training, config.model, config.fit);
    std::optional<ssm::Metrics> metrics;
    if (!out.holdout.empty()) metrics = ssm::evaluate(model, out.holdout);
    if (!out.holdout.empty())
        model = ssm::condition(model, ingest::normalize_with(series.days, model.mean_demand, model.mean_price));
    model.metrics = metrics;
    out.model = std::move(model);
    return out;
}

Grids forecast_grids(const RunConfig& config, const ssm::FittedModel& model, const ingest::PreparedSeries& series) {
    forecast::ForecastAssumptions assumptions;
    assumptions.calendar = config.calendar;
    assumptions.competitor_price = config.competitor_price;
    assumptions.mean_correction = config.mean_correction;
    const auto ladder = forecast::build_price_ladder(series, config.ladder_levels);
    Grids g;
    g.daily = forecast::forecast_grid(model, ladder, 7 * config.horizon_weeks, assumptions);
    g.weekly = forecast::aggregate_weekly(g.daily);
    return g;
}

double calibrate_inventory(const forecast::ForecastGrid& weekly, double max_alpha) {
    if (!(max_alpha > 0.0)) throw InvalidInput("inventory calibration needs alpha > 0");
    const double most = weekly.demand.colwise().maxCoeff().sum();
    if (!(most > 0.0)) throw InvalidInput("inventory calibration needs positive forecast demand");

    // unconstrained revenue optimum: stock large enough never to bind
    auto problem = opt::PricingProblem::from_grid(weekly, 2.0 * most, 0.0);
    auto best = opt::solve(problem);
    double unconstrained = 0.0;
    for (int t = 0; t < problem.periods(); ++t)
        unconstrained += problem.demand(best.plan->levels[static_cast<std::size_t>(t)], t);

    if (unconstrained < most * (1.0 - 1e-9)) return 0.5 * (unconstrained + most) / max_alpha;
    return most / (1.02 * max_alpha);
}

std::vector<std::filesystem::path> write_plans(const std::filesystem::path& dir, const opt::PricingProblem& problem,
                                               const std::vector<opt::SweepEntry>& results,
                                               const std::vector<Date>& buckets) {
    std::vector<std::filesystem::path> files;
    if (results.size() == 1) {
        opt::write_plan(dir / "plan.csv", problem, results.front().outcome, buckets);
        files.push_back(dir / "plan.csv");
        return files;
    }
    for (const auto& r : results) {
        auto path = dir / plan_file_name(r.alpha);
        opt::PricingProblem p = problem;
        p.min_sell_through = r.alpha;
        opt::write_plan(path, p, r.outcome, buckets, r.alpha);
        files.push_back(path);
    }
    opt::write_sweep_summary(dir / "sweep.csv", problem, results);
    files.push_back(dir / "sweep.csv");
    return files;
}

std::string eligibility_json(const ingest::EligibilityReport& report) {
    return eligibility_to_json(report).dump(2) + "\n";
}

std::string report_json(const RunReport& r) {
    json j;
    j["status"] = to_string(r.status);
    j["product_id"] = r.product_id;
    j["eligibility"] = eligibility_to_json(r.eligibility);
    j["model_version"] = r.model_version;
    if (r.elasticity)
        j["elasticity"] = {{"estimate", r.elasticity->estimate},
                           {"std_error", r.elasticity->std_error},
                           {"confidence", r.elasticity->confidence}};
    if (r.metrics)
        j["metrics"] = {{"rmse_log", r.metrics->rmse_log},
                        {"mape_percent", r.metrics->mape_percent},
                        {"holdout_days", r.metrics->holdout_days}};
    j["initial_inventory"] = r.initial_inventory;
    json results = json::array();
    for (const auto& e : r.results) {
        json row = {{"alpha", e.alpha},
                    {"status", opt::to_string(e.outcome.status)},
                    {"solver", opt::to_string(e.outcome.solver)},
                    {"nodes", e.outcome.nodes}};
        if (e.outcome.plan) {
            row["objective"] = e.outcome.plan->objective;
            row["sell_through"] = e.outcome.plan->sell_through;
            std::vector<int> levels;
            for (int l : e.outcome.plan->levels) levels.push_back(l + 1);
            row["levels"] = levels;
        }
        results.push_back(row);
    }
    j["results"] = results;
    json files = json::array();
    for (const auto& f : r.files) files.push_back(f.filename().string());
    j["files"] = files;
    return j.dump(2) + "\n";
}

RunReport run_pipeline(const RunConfig& config) {
    stage("config", [&] { config.validate(); });
    const auto& out = config.output_dir;
    std::filesystem::create_directories(out);
    const ModelStore store(config.model_store_path());

    RunReport report;
    report.product_id = config.product_id;

    const auto series = stage("ingest", [&] {
        auto s = load_series(config, config.simulation ? std::optional(out) : std::nullopt);
        ingest::write_prepared(out / "daily.csv", s);
        return s;
    });
    report.files.push_back(out / "daily.csv");

    report.eligibility = stage("eligibility", [&] {
        auto e = eligibility(config, series, store);
        write_text(out / "eligibility.json", eligibility_json(e));
        return e;
    });
    report.files.push_back(out / "eligibility.json");
    if (!report.eligibility.eligible) {
        report.status = RunStatus::Ineligible;
        write_text(out / "run_report.json", report_json(report));
        return report;
    }

    auto trained = stage("fit", [&] { return train(config, series); });
    report.metrics = trained.model.metrics;
    report.elasticity = ssm::elasticity(trained.model);
    report.model_version = stage("save", [&] { return store.save(config.product_id, trained.model); });

    const auto grids = stage("forecast", [&] {
        auto g = forecast_grids(config, trained.model, series);
        forecast::write_grid(out / "forecast_daily.csv", g.daily);
        forecast::write_grid(out / "forecast_weekly.csv", g.weekly);
        return g;
    });
    report.files.push_back(out / "forecast_daily.csv");
    report.files.push_back(out / "forecast_weekly.csv");

    stage("optimize", [&] {
        const double max_alpha = config.alphas.back();
        report.initial_inventory =
            config.initial_inventory ? *config.initial_inventory : calibrate_inventory(grids.weekly, max_alpha);
        auto problem = opt::PricingProblem::from_grid(grids.weekly, report.initial_inventory, config.alphas.front());
        report.results = opt::sweep_alpha(problem, config.alphas, {config.enumeration_threshold});
        auto files = write_plans(out, problem, report.results, grids.weekly.buckets);
        report.files.insert(report.files.end(), files.begin(), files.end());
    });
    const bool any_optimal = std::any_of(report.results.begin(), report.results.end(), [](const opt::SweepEntry& e) {
        return e.outcome.status == opt::SolveStatus::Optimal;
    });
    if (!any_optimal) report.status = RunStatus::Infeasible;

    stage("figures", [&] {
        auto files = emit_figure_data(out);
        report.files.insert(report.files.end(), files.begin(), files.end());
    });
    write_text(out / "run_report.json", report_json(report));
    return report;
}

} // namespace pricing::app
