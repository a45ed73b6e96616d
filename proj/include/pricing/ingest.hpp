#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pricing/date.hpp"

namespace pricing::ingest {

struct RawTransaction {
    LocalTime timestamp;
    double retail_price = 0.0;
    double quantity = 0.0;
    double discount_amount = 0.0;  // informational only
};

struct CompetitorQuote {
    Date date;
    double min_other_price = 0.0;
};

struct DailyAggregate {
    double unit_sales = 0.0;
    double retail_price = 0.0;  // sales-weighted mean
};

struct CalendarConfig {
    std::set<Date> holidays;
    std::set<unsigned> weekend_days{0, 6};  // std::chrono::weekday::c_encoding(), Sunday = 0
    int utc_offset_minutes = 0;
};

struct CalendarFlags {
    bool is_holiday = false;
    bool is_weekend = false;
};

struct DailyObservation {
    Date date;
    std::optional<double> unit_sales;
    std::optional<double> retail_price;
    std::optional<double> min_other_price;
    bool is_holiday = false;
    bool is_weekend = false;
    std::optional<double> competitive_indicator;
    bool outlier = false;
};

struct PreparedSeries {
    std::vector<DailyObservation> days;
    double mean_demand = 0.0;  // ỹ
    double mean_price = 0.0;   // x̃
    std::vector<std::optional<double>> log_demand_ratio;  // z_t = log(y_t / ỹ)
    std::vector<std::optional<double>> log_price_ratio;   // log(x_t / x̃)

    std::size_t size() const { return days.size(); }
};

struct EligibilityRules {
    int min_days_with_transactions = 90;
    int min_distinct_prices = 5;
    std::optional<double> max_rmse_log;
    std::optional<double> max_mape_percent;
    std::optional<double> min_elasticity_confidence;
    int lookback_days = 730;

    void validate() const;
};

// Model-derived quantities consulted by the eligibility gate when a prior
// model for the product exists.
struct ModelQuality {
    double elasticity = 0.0;
    double elasticity_confidence = 0.0;
    double rmse_log = 0.0;
    double mape_percent = 0.0;
};

struct RuleOutcome {
    std::string rule;
    double observed = 0.0;
    double threshold = 0.0;
    bool passed = false;
    bool skipped = false;
};

struct EligibilityReport {
    bool eligible = false;
    std::vector<RuleOutcome> outcomes;
};

struct OutlierOptions {
    double threshold = 5.0;
    int lookback_days = 730;
};

// Sums quantities and takes the quantity-weighted mean price per local date.
std::map<Date, DailyAggregate> aggregate_daily(const std::vector<RawTransaction>& transactions);

CalendarFlags calendar_features(Date date, const CalendarConfig& calendar);

// retail / (retail + min_other); throws InvalidQuote on non-positive input.
double competitive_indicator(double retail_price, double min_other_price);

// Robust z-score of log(1 + sales) against the median, scaled by 1.4826 MAD.
// When MAD vanishes the mean absolute deviation (scaled by sqrt(pi/2)) is used
// instead; a series with no spread at all yields no flags. Missing entries are
// never flagged and do not enter the statistics.
std::vector<bool> detect_outliers(const std::vector<std::optional<double>>& daily_sales,
                                  const OutlierOptions& options = {});

// One observation per date in [first, last]. Competitor prices carry forward
// from the most recent prior quote.
std::vector<DailyObservation> fill_missing(const std::map<Date, DailyAggregate>& daily,
                                           const std::map<Date, double>& quotes, Date first, Date last);

// Fills calendar flags and competitive_indicator in place.
void annotate(std::vector<DailyObservation>& days, const CalendarConfig& calendar);

// Requires at least one usable day (sales > 0, price > 0, not an outlier).
PreparedSeries normalize(std::vector<DailyObservation> observations);

// Applies an explicit (ỹ, x̃) pair, e.g. the training means carried by a model.
PreparedSeries normalize_with(std::vector<DailyObservation> observations, double mean_demand, double mean_price);

EligibilityReport check_eligibility(const PreparedSeries& series, const std::optional<ModelQuality>& latest_model,
                                    const EligibilityRules& rules);

// Daily minimum over possibly several quotes per date.
std::map<Date, double> daily_min_quotes(const std::vector<CompetitorQuote>& quotes);

struct PrepareOptions {
    CalendarConfig calendar;
    OutlierOptions outliers;
};

// aggregate -> fill -> annotate -> outliers -> normalize.
PreparedSeries prepare(const std::vector<RawTransaction>& transactions, const std::vector<CompetitorQuote>& quotes,
                       const PrepareOptions& options);

std::vector<RawTransaction> read_transactions(const std::filesystem::path& path, int utc_offset_minutes = 0);
std::vector<CompetitorQuote> read_competitor_quotes(const std::filesystem::path& path);
void write_transactions(const std::filesystem::path& path, const std::vector<RawTransaction>& transactions);
void write_competitor_quotes(const std::filesystem::path& path, const std::vector<CompetitorQuote>& quotes);

// Daily feature table: date,unit_sales,retail_price,min_other_price,is_holiday,
// is_weekend,competitive_indicator,outlier,z,log_price_ratio (empty = missing).
void write_prepared(const std::filesystem::path& path, const PreparedSeries& series);

} // namespace pricing::ingest
