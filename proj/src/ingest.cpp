#include "pricing/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "pricing/csv.hpp"
#include "pricing/error.hpp"

namespace pricing::ingest {
namespace {

constexpr double kMadScale = 1.4826;
constexpr double kMeanAdScale = 1.2533141373155003;  // sqrt(pi / 2)

double median(std::vector<double> v) {
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    double upper = *mid;
    if (v.size() % 2 == 1) return upper;
    double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

std::string opt_field(const std::optional<double>& v) { return v ? csv::format_number(*v) : std::string{}; }

} // namespace

void EligibilityRules::validate() const {
    if (min_days_with_transactions < 1 || min_distinct_prices < 1)
        throw InvalidInput("eligibility counts must be >= 1");
    if (lookback_days < 1) throw InvalidInput("eligibility lookback window must be >= 1 day");
}

std::map<Date, DailyAggregate> aggregate_daily(const std::vector<RawTransaction>& transactions) {
    struct Acc {
        double qty = 0.0;
        double revenue = 0.0;
        double min_price = std::numeric_limits<double>::infinity();
        double max_price = -std::numeric_limits<double>::infinity();
    };
    std::map<Date, Acc> acc;
    for (const auto& tx : transactions) {
        if (!(tx.retail_price > 0.0)) throw InvalidInput("transaction with non-positive retail_price");
        if (!(tx.quantity >= 1.0)) throw InvalidInput("transaction with quantity < 1");
        auto& a = acc[local_date(tx.timestamp)];
        a.qty += tx.quantity;
        a.revenue += tx.retail_price * tx.quantity;
        a.min_price = std::min(a.min_price, tx.retail_price);
        a.max_price = std::max(a.max_price, tx.retail_price);
    }
    std::map<Date, DailyAggregate> out;
    for (const auto& [day, a] : acc) {
        // rounding can push the weighted mean a hair outside the observed range
        double price = std::clamp(a.revenue / a.qty, a.min_price, a.max_price);
        out.emplace(day, DailyAggregate{a.qty, price});
    }
    return out;
}

CalendarFlags calendar_features(Date date, const CalendarConfig& calendar) {
    CalendarFlags f;
    f.is_holiday = calendar.holidays.contains(date);
    f.is_weekend = calendar.weekend_days.contains(std::chrono::weekday{date}.c_encoding());
    return f;
}

double competitive_indicator(double retail_price, double min_other_price) {
    if (!(retail_price > 0.0) || !(min_other_price > 0.0) || !std::isfinite(retail_price) ||
        !std::isfinite(min_other_price))
        throw InvalidQuote("competitive indicator needs positive finite prices");
    return retail_price / (retail_price + min_other_price);
}

std::vector<bool> detect_outliers(const std::vector<std::optional<double>>& daily_sales, const OutlierOptions& options) {
    if (daily_sales.empty()) throw EmptySeries("outlier detection on an empty series");
    if (!(options.threshold > 0.0)) throw InvalidInput("outlier threshold must be > 0");

    std::vector<bool> flags(daily_sales.size(), false);
    std::size_t window = static_cast<std::size_t>(std::max(options.lookback_days, 1));
    std::size_t begin = daily_sales.size() > window ? daily_sales.size() - window : 0;

    std::vector<double> logs;
    for (std::size_t t = begin; t < daily_sales.size(); ++t)
        if (daily_sales[t]) logs.push_back(std::log1p(*daily_sales[t]));
    if (logs.empty()) return flags;

    double center = median(logs);
    std::vector<double> dev(logs.size());
    std::transform(logs.begin(), logs.end(), dev.begin(), [&](double v) { return std::abs(v - center); });
    double scale = kMadScale * median(dev);
    if (scale == 0.0) {
        double mean_ad = 0.0;
        for (double d : dev) mean_ad += d;
        scale = kMeanAdScale * mean_ad / static_cast<double>(dev.size());
    }
    if (scale == 0.0) return flags;

    for (std::size_t t = begin; t < daily_sales.size(); ++t) {
        if (!daily_sales[t]) continue;
        double robust_z = std::abs(std::log1p(*daily_sales[t]) - center) / scale;
        flags[t] = robust_z > options.threshold;
    }
    return flags;
}

std::vector<DailyObservation> fill_missing(const std::map<Date, DailyAggregate>& daily,
                                           const std::map<Date, double>& quotes, Date first, Date last) {
    if (last < first) throw InvalidInput("fill_missing: empty date range");
    std::vector<DailyObservation> out;
    out.reserve(static_cast<std::size_t>((last - first).count() + 1));

    std::optional<double> carried;
    auto next_quote = quotes.begin();
    // quotes before the range still seed the carry-forward
    while (next_quote != quotes.end() && next_quote->first < first) carried = (next_quote++)->second;

    for (Date d = first; d <= last; d += std::chrono::days{1}) {
        if (next_quote != quotes.end() && next_quote->first == d) carried = (next_quote++)->second;
        DailyObservation obs;
        obs.date = d;
        if (auto it = daily.find(d); it != daily.end()) {
            obs.unit_sales = it->second.unit_sales;
            obs.retail_price = it->second.retail_price;
        }
        obs.min_other_price = carried;
        out.push_back(obs);
    }
    return out;
}

void annotate(std::vector<DailyObservation>& days, const CalendarConfig& calendar) {
    for (auto& d : days) {
        auto flags = calendar_features(d.date, calendar);
        d.is_holiday = flags.is_holiday;
        d.is_weekend = flags.is_weekend;
        d.competitive_indicator.reset();
        if (d.retail_price && d.min_other_price)
            d.competitive_indicator = competitive_indicator(*d.retail_price, *d.min_other_price);
    }
}

PreparedSeries normalize_with(std::vector<DailyObservation> observations, double mean_demand, double mean_price) {
    if (!(mean_demand > 0.0) || !(mean_price > 0.0)) throw InvalidInput("normalizing constants must be positive");
    PreparedSeries s;
    s.mean_demand = mean_demand;
    s.mean_price = mean_price;
    s.log_demand_ratio.resize(observations.size());
    s.log_price_ratio.resize(observations.size());
    for (std::size_t t = 0; t < observations.size(); ++t) {
        const auto& d = observations[t];
        if (d.retail_price && *d.retail_price > 0.0) s.log_price_ratio[t] = std::log(*d.retail_price / mean_price);
        if (d.unit_sales && *d.unit_sales > 0.0 && s.log_price_ratio[t] && !d.outlier)
            s.log_demand_ratio[t] = std::log(*d.unit_sales / mean_demand);
    }
    s.days = std::move(observations);
    return s;
}

PreparedSeries normalize(std::vector<DailyObservation> observations) {
    double sales_sum = 0.0;
    double price_sum = 0.0;
    std::size_t usable = 0;
    for (const auto& d : observations) {
        if (d.outlier || !d.unit_sales || !d.retail_price) continue;
        if (!(*d.unit_sales > 0.0) || !(*d.retail_price > 0.0)) continue;
        sales_sum += *d.unit_sales;
        price_sum += *d.retail_price;
        ++usable;
    }
    if (usable == 0) throw EmptySeries("no day with positive sales and price to normalize against");
    double n = static_cast<double>(usable);
    return normalize_with(std::move(observations), sales_sum / n, price_sum / n);
}

EligibilityReport check_eligibility(const PreparedSeries& series, const std::optional<ModelQuality>& latest_model,
                                    const EligibilityRules& rules) {
    rules.validate();
    std::size_t window = static_cast<std::size_t>(rules.lookback_days);
    std::size_t begin = series.days.size() > window ? series.days.size() - window : 0;

    int days_with_tx = 0;
    std::set<long long> prices;  // micro-currency units
    for (std::size_t t = begin; t < series.days.size(); ++t) {
        const auto& d = series.days[t];
        if (!d.unit_sales || !(*d.unit_sales > 0.0)) continue;
        ++days_with_tx;
        if (d.retail_price) prices.insert(std::llround(*d.retail_price * 1e6));
    }

    EligibilityReport report;
    auto at_least = [&](std::string rule, double observed, double threshold) {
        report.outcomes.push_back({std::move(rule), observed, threshold, observed >= threshold, false});
    };
    auto at_most = [&](std::string rule, double observed, double threshold) {
        report.outcomes.push_back({std::move(rule), observed, threshold, observed <= threshold, false});
    };
    auto skipped = [&](std::string rule, double threshold) {
        report.outcomes.push_back({std::move(rule), std::numeric_limits<double>::quiet_NaN(), threshold, true, true});
    };

    at_least("min_days_with_transactions", days_with_tx, rules.min_days_with_transactions);
    at_least("min_distinct_prices", static_cast<double>(prices.size()), rules.min_distinct_prices);
    if (rules.min_elasticity_confidence) {
        if (latest_model) at_least("min_elasticity_confidence", latest_model->elasticity_confidence, *rules.min_elasticity_confidence);
        else skipped("min_elasticity_confidence", *rules.min_elasticity_confidence);
    }
    if (rules.max_rmse_log) {
        if (latest_model) at_most("max_rmse_log", latest_model->rmse_log, *rules.max_rmse_log);
        else skipped("max_rmse_log", *rules.max_rmse_log);
    }
    if (rules.max_mape_percent) {
        if (latest_model) at_most("max_mape_percent", latest_model->mape_percent, *rules.max_mape_percent);
        else skipped("max_mape_percent", *rules.max_mape_percent);
    }
    report.eligible = std::all_of(report.outcomes.begin(), report.outcomes.end(),
                                  [](const RuleOutcome& o) { return o.passed; });
    return report;
}

std::map<Date, double> daily_min_quotes(const std::vector<CompetitorQuote>& quotes) {
    std::map<Date, double> out;
    for (const auto& q : quotes) {
        if (!(q.min_other_price > 0.0)) throw InvalidQuote("competitor quote must be > 0 on " + format_date(q.date));
        auto [it, inserted] = out.emplace(q.date, q.min_other_price);
        if (!inserted) it->second = std::min(it->second, q.min_other_price);
    }
    return out;
}

PreparedSeries prepare(const std::vector<RawTransaction>& transactions, const std::vector<CompetitorQuote>& quotes,
                       const PrepareOptions& options) {
    auto daily = aggregate_daily(transactions);
    if (daily.empty()) throw EmptySeries("no transactions");
    auto days = fill_missing(daily, daily_min_quotes(quotes), daily.begin()->first, daily.rbegin()->first);
    annotate(days, options.calendar);

    std::vector<std::optional<double>> sales(days.size());
    for (std::size_t t = 0; t < days.size(); ++t) sales[t] = days[t].unit_sales;
    auto flags = detect_outliers(sales, options.outliers);
    for (std::size_t t = 0; t < days.size(); ++t) days[t].outlier = flags[t];

    return normalize(std::move(days));
}

std::vector<RawTransaction> read_transactions(const std::filesystem::path& path, int utc_offset_minutes) {
    auto table = csv::read(path);
    const std::string src = path.string();
    csv::require_header(table, {"timestamp", "retail_price", "quantity", "discount_amount"}, src);
    std::vector<RawTransaction> out;
    out.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        std::string ctx = src + " row " + std::to_string(i + 1);
        RawTransaction tx;
        tx.timestamp = parse_timestamp(r[0], utc_offset_minutes);
        tx.retail_price = csv::to_double(r[1], ctx);
        tx.quantity = csv::to_double(r[2], ctx);
        tx.discount_amount = r[3].empty() ? 0.0 : csv::to_double(r[3], ctx);
        if (!(tx.retail_price > 0.0)) throw InvalidInput(ctx + ": retail_price must be > 0");
        if (!(tx.quantity >= 1.0)) throw InvalidInput(ctx + ": quantity must be >= 1");
        if (tx.discount_amount < 0.0) throw InvalidInput(ctx + ": discount_amount must be >= 0");
        out.push_back(tx);
    }
    return out;
}

std::vector<CompetitorQuote> read_competitor_quotes(const std::filesystem::path& path) {
    auto table = csv::read(path);
    const std::string src = path.string();
    csv::require_header(table, {"date", "min_other_price"}, src);
    std::vector<CompetitorQuote> out;
    out.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        std::string ctx = src + " row " + std::to_string(i + 1);
        CompetitorQuote q{parse_date(table.rows[i][0]), csv::to_double(table.rows[i][1], ctx)};
        if (!(q.min_other_price > 0.0)) throw InvalidQuote(ctx + ": min_other_price must be > 0");
        out.push_back(q);
    }
    return out;
}

void write_transactions(const std::filesystem::path& path, const std::vector<RawTransaction>& transactions) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(transactions.size());
    for (const auto& tx : transactions) {
        auto day = local_date(tx.timestamp);
        auto minutes = std::chrono::duration_cast<std::chrono::minutes>(tx.timestamp - day).count();
        char hhmm[8];
        std::snprintf(hhmm, sizeof hhmm, "%02d:%02d", static_cast<int>(minutes / 60), static_cast<int>(minutes % 60));
        rows.push_back({format_date(day) + "T" + hhmm, csv::format_number(tx.retail_price),
                        csv::format_number(tx.quantity), csv::format_number(tx.discount_amount)});
    }
    csv::write(path, {"timestamp", "retail_price", "quantity", "discount_amount"}, rows);
}

void write_competitor_quotes(const std::filesystem::path& path, const std::vector<CompetitorQuote>& quotes) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(quotes.size());
    for (const auto& q : quotes) rows.push_back({format_date(q.date), csv::format_number(q.min_other_price)});
    csv::write(path, {"date", "min_other_price"}, rows);
}

void write_prepared(const std::filesystem::path& path, const PreparedSeries& series) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(series.size());
    for (std::size_t t = 0; t < series.size(); ++t) {
        const auto& d = series.days[t];
        rows.push_back({format_date(d.date), opt_field(d.unit_sales), opt_field(d.retail_price),
                        opt_field(d.min_other_price), d.is_holiday ? "1" : "0", d.is_weekend ? "1" : "0",
                        opt_field(d.competitive_indicator), d.outlier ? "1" : "0",
                        opt_field(series.log_demand_ratio[t]), opt_field(series.log_price_ratio[t])});
    }
    csv::write(path,
               {"date", "unit_sales", "retail_price", "min_other_price", "is_holiday", "is_weekend",
                "competitive_indicator", "outlier", "z", "log_price_ratio"},
               rows);
}

} // namespace pricing::ingest
