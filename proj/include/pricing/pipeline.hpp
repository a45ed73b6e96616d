#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pricing/config.hpp"
#include "pricing/error.hpp"
#include "pricing/forecast.hpp"
#include "pricing/ingest.hpp"
#include "pricing/model.hpp"
#include "pricing/optimize.hpp"
#include "pricing/store.hpp"

namespace pricing::app {

// An error raised inside a pipeline stage, prefixed with the stage name.
class PipelineError : public Error {
public:
    PipelineError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

enum class RunStatus { Completed, Ineligible, Infeasible };

struct RunReport {
    RunStatus status = RunStatus::Completed;
    std::string product_id;
    ingest::EligibilityReport eligibility;
    int model_version = 0;
    std::optional<ssm::Elasticity> elasticity;
    std::optional<ssm::Metrics> metrics;
    double initial_inventory = 0.0;
    std::vector<opt::SweepEntry> results;
    std::vector<std::filesystem::path> files;
};

// 0 success, 2 ineligible, 3 infeasible.
int exit_code(RunStatus status);
std::string to_string(RunStatus status);

struct TrainingResult {
    ssm::FittedModel model;
    ingest::PreparedSeries training;
    std::vector<ingest::DailyObservation> holdout;
};

// Reads the configured transaction files, or simulates them when the config
// carries a ground truth and `write_inputs_to` is given.
ingest::PreparedSeries load_series(const RunConfig& config,
                                   const std::optional<std::filesystem::path>& write_inputs_to = std::nullopt);

ingest::EligibilityReport eligibility(const RunConfig& config, const ingest::PreparedSeries& series,
                                      const ModelStore& store);

// Fits on all but the last `holdout_days`, evaluates on them, then conditions
// the model on the full history at the fitted hyperparameters.
TrainingResult train(const RunConfig& config, const ingest::PreparedSeries& series);

struct Grids {
    forecast::ForecastGrid daily;
    forecast::ForecastGrid weekly;
};

Grids forecast_grids(const RunConfig& config, const ssm::FittedModel& model, const ingest::PreparedSeries& series);

// Starting inventory for which the largest alpha constrains the revenue
// optimum: midway between the unconstrained plan's sales and the most that
// can be sold, divided by alpha. Falls back to 1.02 * alpha below the maximum
// when the unconstrained plan already sells the most.
double calibrate_inventory(const forecast::ForecastGrid& weekly, double max_alpha);

// Writes plan CSVs (and the sweep summary for several alphas).
std::vector<std::filesystem::path> write_plans(const std::filesystem::path& dir, const opt::PricingProblem& problem,
                                               const std::vector<opt::SweepEntry>& results,
                                               const std::vector<Date>& buckets);

std::string eligibility_json(const ingest::EligibilityReport& report);
std::string report_json(const RunReport& report);

// ingest -> eligibility -> fit -> save -> ladder -> daily grid -> weekly grid
// -> solve or sweep -> exports and figures.
RunReport run_pipeline(const RunConfig& config);

} // namespace pricing::app
