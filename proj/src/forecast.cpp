#include "pricing/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pricing/csv.hpp"
#include "pricing/error.hpp"

namespace pricing::forecast {

PriceLadder build_price_ladder(double historical_min, double historical_max, int levels) {
    if (!(historical_min > 0.0) || historical_max < historical_min)
        throw InvalidInput("price ladder needs 0 < min <= max");
    PriceLadder ladder;
    ladder.historical_min = historical_min;
    ladder.historical_max = historical_max;
    ladder.requested_levels = levels;
    if (historical_min == historical_max) {
        ladder.levels = {historical_min};
        return ladder;
    }
    if (levels < 2) throw InvalidInput("price ladder needs at least 2 levels when prices vary");
    const double step = (historical_max - historical_min) / (levels - 1);
    for (int i = 0; i < levels; ++i) ladder.levels.push_back(historical_min + i * step);
    ladder.levels.back() = historical_max;
    return ladder;
}

PriceLadder build_price_ladder(const ingest::PreparedSeries& series, int levels) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& d : series.days) {
        if (!d.retail_price || !d.unit_sales || !(*d.unit_sales > 0.0)) continue;
        lo = std::min(lo, *d.retail_price);
        hi = std::max(hi, *d.retail_price);
    }
    if (!std::isfinite(lo)) throw EmptySeries("no priced day to build a ladder from");
    return build_price_ladder(lo, hi, levels);
}

std::vector<double> forecast_demand(const ssm::FittedModel& model, std::span<const double> prices,
                                    const ForecastAssumptions& assumptions) {
    if (prices.empty()) throw InvalidInput("forecast horizon must be >= 1 day");
    for (double p : prices)
        if (!(p > 0.0) || !std::isfinite(p)) throw InvalidInput("forecast prices must be positive");
    if (!assumptions.competitor_path.empty() && assumptions.competitor_path.size() < prices.size())
        throw InvalidInput("competitor path shorter than the forecast horizon");

    const auto layout = model.spec.layout();
    const bool needs_rival = model.spec.regressors.competitive;
    std::optional<double> rival = assumptions.competitor_price ? assumptions.competitor_price
                                                                : model.last_min_other_price;
    if (needs_rival && assumptions.competitor_path.empty() && !rival)
        throw InvalidInput("no competitor price available for the forecast horizon");

    Eigen::VectorXd a = model.state_mean;
    Eigen::MatrixXd P = model.state_covariance;
    const Eigen::VectorXd q = ssm::state_noise_variances(layout, model.hyper);

    std::vector<double> out;
    out.reserve(prices.size());
    for (std::size_t t = 0; t < prices.size(); ++t) {
        const Date day = model.train_end + std::chrono::days{static_cast<int>(t) + 1};
        ssm::apply_transition(layout, model.hyper.rho, a);
        if (assumptions.mean_correction) ssm::predict_covariance(layout, model.hyper.rho, q, P);

        ssm::RegressorRow row;
        row.log_price = std::log(prices[t] / model.mean_price);
        const auto flags = ingest::calendar_features(day, assumptions.calendar);
        row.holiday = flags.is_holiday ? 1.0 : 0.0;
        row.weekend = flags.is_weekend ? 1.0 : 0.0;
        if (needs_rival) {
            const double quote = assumptions.competitor_path.empty() ? *rival : assumptions.competitor_path[t];
            row.competitive = ingest::competitive_indicator(prices[t], quote);
        }
        const auto Z = ssm::observation_row<double>(layout, row);
        double z_hat = Z.dot(a);
        if (assumptions.mean_correction) z_hat += 0.5 * (Z * P * Z.transpose())(0, 0);
        out.push_back(model.mean_demand * std::exp(z_hat));
    }
    return out;
}

ForecastGrid forecast_grid(const ssm::FittedModel& model, const PriceLadder& ladder, int horizon_days,
                           const ForecastAssumptions& assumptions) {
    if (horizon_days < 1) throw InvalidInput("forecast horizon must be >= 1 day");
    if (ladder.levels.empty()) throw InvalidInput("empty price ladder");
    ForecastGrid grid;
    grid.ladder = ladder;
    grid.granularity = Granularity::Day;
    const auto k = static_cast<Eigen::Index>(ladder.size());
    grid.demand.resize(k, horizon_days);
    grid.revenue.resize(k, horizon_days);
    for (int t = 0; t < horizon_days; ++t) grid.buckets.push_back(model.train_end + std::chrono::days{t + 1});

    std::vector<double> prices(static_cast<std::size_t>(horizon_days));
    for (Eigen::Index i = 0; i < k; ++i) {
        const double p = ladder.levels[static_cast<std::size_t>(i)];
        std::fill(prices.begin(), prices.end(), p);
        const auto demand = forecast_demand(model, prices, assumptions);
        for (int t = 0; t < horizon_days; ++t) {
            grid.demand(i, t) = demand[static_cast<std::size_t>(t)];
            grid.revenue(i, t) = p * grid.demand(i, t);
        }
    }
    return grid;
}

ForecastGrid aggregate_weekly(const ForecastGrid& daily) {
    if (daily.granularity != Granularity::Day) throw InvalidInput("aggregate_weekly expects a daily grid");
    if (daily.horizon() == 0 || daily.horizon() % 7 != 0)
        throw InvalidInput("horizon of " + std::to_string(daily.horizon()) + " days is not a whole number of weeks");
    ForecastGrid weekly;
    weekly.ladder = daily.ladder;
    weekly.granularity = Granularity::Week;
    const Eigen::Index weeks = daily.horizon() / 7;
    weekly.demand.resize(daily.levels(), weeks);
    weekly.revenue.resize(daily.levels(), weeks);
    for (Eigen::Index w = 0; w < weeks; ++w) {
        weekly.buckets.push_back(daily.buckets[static_cast<std::size_t>(7 * w)]);
        weekly.demand.col(w) = daily.demand.middleCols(7 * w, 7).rowwise().sum();
    }
    for (Eigen::Index i = 0; i < daily.levels(); ++i)
        weekly.revenue.row(i) = daily.ladder.levels[static_cast<std::size_t>(i)] * weekly.demand.row(i);
    return weekly;
}

void write_grid(const std::filesystem::path& path, const ForecastGrid& grid) {
    std::vector<std::vector<std::string>> rows;
    for (Eigen::Index i = 0; i < grid.levels(); ++i)
        for (Eigen::Index t = 0; t < grid.horizon(); ++t)
            rows.push_back({std::to_string(i + 1), csv::format_number(grid.ladder.levels[static_cast<std::size_t>(i)]),
                            format_date(grid.buckets[static_cast<std::size_t>(t)]),
                            csv::format_number(grid.demand(i, t)), csv::format_number(grid.revenue(i, t))});
    csv::write(path, {"level", "price", "bucket", "demand", "revenue"}, rows);
}

ForecastGrid read_grid(const std::filesystem::path& path, Granularity granularity) {
    const auto table = csv::read(path);
    const std::string src = path.string();
    csv::require_header(table, {"level", "price", "bucket", "demand", "revenue"}, src);

    std::map<int, double> prices;
    std::map<Date, int> bucket_index;
    struct Cell {
        int level;
        Date bucket;
        double demand, revenue;
    };
    std::vector<Cell> cells;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string ctx = src + " row " + std::to_string(r + 1);
        const int level = static_cast<int>(csv::to_double(row[0], ctx));
        const double price = csv::to_double(row[1], ctx);
        if (auto [it, fresh] = prices.emplace(level, price); !fresh && it->second != price)
            throw ParseError(ctx + ": level " + std::to_string(level) + " has two prices");
        const Date bucket = parse_date(row[2]);
        bucket_index.emplace(bucket, 0);
        cells.push_back({level, bucket, csv::to_double(row[3], ctx), csv::to_double(row[4], ctx)});
    }
    if (cells.empty()) throw ParseError(src + ": empty grid");

    ForecastGrid grid;
    grid.granularity = granularity;
    int expected_level = 1;
    for (const auto& [level, price] : prices) {
        if (level != expected_level++) throw ParseError(src + ": price levels must be numbered 1..k");
        grid.ladder.levels.push_back(price);
    }
    for (std::size_t i = 1; i < grid.ladder.levels.size(); ++i)
        if (!(grid.ladder.levels[i] > grid.ladder.levels[i - 1]))
            throw ParseError(src + ": prices must increase with level");
    grid.ladder.historical_min = grid.ladder.levels.front();
    grid.ladder.historical_max = grid.ladder.levels.back();
    grid.ladder.requested_levels = static_cast<int>(grid.ladder.levels.size());
    int b = 0;
    for (auto& [date, idx] : bucket_index) {
        idx = b++;
        grid.buckets.push_back(date);
    }
    const auto k = static_cast<Eigen::Index>(prices.size());
    const auto n = static_cast<Eigen::Index>(grid.buckets.size());
    if (static_cast<Eigen::Index>(cells.size()) != k * n) throw ParseError(src + ": grid is incomplete");
    grid.demand = Eigen::MatrixXd::Constant(k, n, std::numeric_limits<double>::quiet_NaN());
    grid.revenue = grid.demand;
    for (const auto& c : cells) {
        const Eigen::Index i = c.level - 1;
        const Eigen::Index t = bucket_index.at(c.bucket);
        if (!std::isnan(grid.demand(i, t))) throw ParseError(src + ": duplicate grid cell");
        grid.demand(i, t) = c.demand;
        grid.revenue(i, t) = c.revenue;
    }
    return grid;
}

} // namespace pricing::forecast
