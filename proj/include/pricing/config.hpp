#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pricing/ingest.hpp"
#include "pricing/model.hpp"
#include "pricing/simulate.hpp"

namespace pricing::app {

struct RunConfig {
    std::string product_id = "default";

    // Input files; empty means <output_dir>/transactions.csv and
    // <output_dir>/competitor.csv.
    std::filesystem::path transactions;
    std::filesystem::path competitor;

    ingest::CalendarConfig calendar;
    ingest::EligibilityRules eligibility;
    ingest::OutlierOptions outliers;

    ssm::ModelSpec model;
    ssm::FitOptions fit;
    int holdout_days = 28;

    int ladder_levels = 10;
    int horizon_weeks = 8;
    std::optional<double> competitor_price;
    bool mean_correction = false;

    // Starting inventory; when absent it is calibrated from the weekly grid so
    // that the largest alpha constrains the plan.
    std::optional<double> initial_inventory;
    std::vector<double> alphas{0.4};
    double enumeration_threshold = 1e6;

    std::filesystem::path output_dir = "out";
    std::filesystem::path store_dir;  // empty means <output_dir>/models

    // When set, `run` generates its inputs from this ground truth instead of
    // reading transaction files.
    std::optional<sim::GroundTruth> simulation;
    std::uint64_t seed = 1;

    std::filesystem::path transactions_path() const;
    std::filesystem::path competitor_path() const;
    std::filesystem::path model_store_path() const;

    void validate() const;
};

// Parses the JSON toolkit config. Relative paths resolve against the
// config file's directory.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);

} // namespace pricing::app
