#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pricing/ingest.hpp"
#include "pricing/model.hpp"

namespace pricing::forecast {

struct PriceLadder {
    std::vector<double> levels;  // strictly increasing
    double historical_min = 0.0;
    double historical_max = 0.0;
    int requested_levels = 0;

    std::size_t size() const { return levels.size(); }
};

// Evenly spaced levels from the historical minimum to maximum daily price.
PriceLadder build_price_ladder(const ingest::PreparedSeries& series, int levels);
PriceLadder build_price_ladder(double historical_min, double historical_max, int levels);

struct ForecastAssumptions {
    ingest::CalendarConfig calendar;
    // Per-day competitor minimum over the horizon; falls back to
    // `competitor_price`, then to the last price seen in training.
    std::vector<double> competitor_path;
    std::optional<double> competitor_price;
    // exp(mean + var/2) instead of the median exp(mean)
    bool mean_correction = false;
};

enum class Granularity { Day, Week };

struct ForecastGrid {
    PriceLadder ladder;
    Granularity granularity = Granularity::Day;
    std::vector<Date> buckets;  // first day of each bucket
    Eigen::MatrixXd demand;     // levels x buckets
    Eigen::MatrixXd revenue;    // price * demand

    Eigen::Index levels() const { return demand.rows(); }
    Eigen::Index horizon() const { return demand.cols(); }
};

// Daily demand for the days after the training window at the given prices,
// propagating the final filtered state without updates.
std::vector<double> forecast_demand(const ssm::FittedModel& model, std::span<const double> prices,
                                    const ForecastAssumptions& assumptions);

ForecastGrid forecast_grid(const ssm::FittedModel& model, const PriceLadder& ladder, int horizon_days,
                           const ForecastAssumptions& assumptions);

// Sums whole 7-day blocks; throws when the horizon is not a whole number of weeks.
ForecastGrid aggregate_weekly(const ForecastGrid& daily);

// level,price,bucket,demand,revenue  (level is 1-based)
void write_grid(const std::filesystem::path& path, const ForecastGrid& grid);
ForecastGrid read_grid(const std::filesystem::path& path, Granularity granularity);

} // namespace pricing::forecast
