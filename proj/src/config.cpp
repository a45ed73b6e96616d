#include "pricing/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pricing/error.hpp"

namespace pricing::app {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : j.items())
        if (!allowed.contains(key)) throw ParseError("config: unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

template <typename T>
void read(const json& j, const char* key, std::optional<T>& out) {
    if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

ingest::CalendarConfig parse_calendar(const json& j) {
    reject_unknown(j, {"holidays", "weekend_days", "utc_offset_minutes"}, "calendar");
    ingest::CalendarConfig c;
    if (j.contains("holidays"))
        for (const auto& d : j.at("holidays")) c.holidays.insert(parse_date(d.get<std::string>()));
    if (j.contains("weekend_days")) {
        c.weekend_days.clear();
        for (const auto& d : j.at("weekend_days")) c.weekend_days.insert(parse_weekday(d.get<std::string>()).c_encoding());
    }
    read(j, "utc_offset_minutes", c.utc_offset_minutes);
    return c;
}

sim::GroundTruth parse_simulation(const json& j) {
    reject_unknown(j,
                   {"beta_x", "beta_c", "beta_h", "beta_w", "rho", "sigma_tau", "sigma_omega", "sigma_eta", "periodicity",
                    "mean_demand", "mean_price", "initial_level", "initial_slope", "initial_seasonal", "start", "days",
                    "price", "competitor"},
                   "simulation");
    sim::GroundTruth g = sim::reference_product();
    read(j, "beta_x", g.beta_x);
    read(j, "beta_c", g.beta_c);
    read(j, "beta_h", g.beta_h);
    read(j, "beta_w", g.beta_w);
    read(j, "rho", g.rho);
    read(j, "sigma_tau", g.sigma_tau);
    read(j, "sigma_omega", g.sigma_omega);
    read(j, "sigma_eta", g.sigma_eta);
    read(j, "periodicity", g.periodicity);
    read(j, "mean_demand", g.mean_demand);
    read(j, "mean_price", g.mean_price);
    read(j, "initial_level", g.initial_level);
    read(j, "initial_slope", g.initial_slope);
    read(j, "initial_seasonal", g.initial_seasonal);
    if (j.contains("periodicity") && !j.contains("initial_seasonal")) g.initial_seasonal.clear();
    if (j.contains("start")) g.start = parse_date(j.at("start").get<std::string>());
    read(j, "days", g.days);
    if (j.contains("price")) {
        const auto& p = j.at("price");
        reject_unknown(p, {"sequence", "low", "high", "start", "step_sd", "hold_days"}, "simulation.price");
        read(p, "sequence", g.price.sequence);
        read(p, "low", g.price.low);
        read(p, "high", g.price.high);
        read(p, "start", g.price.start);
        read(p, "step_sd", g.price.step_sd);
        read(p, "hold_days", g.price.hold_days);
    }
    if (j.contains("competitor")) {
        const auto& c = j.at("competitor");
        reject_unknown(c, {"random_walk", "start", "low", "high", "step_sd"}, "simulation.competitor");
        read(c, "random_walk", g.competitor.random_walk);
        read(c, "start", g.competitor.start);
        read(c, "low", g.competitor.low);
        read(c, "high", g.competitor.high);
        read(c, "step_sd", g.competitor.step_sd);
    }
    return g;
}

} // namespace

std::filesystem::path RunConfig::transactions_path() const {
    return transactions.empty() ? output_dir / "transactions.csv" : transactions;
}

std::filesystem::path RunConfig::competitor_path() const {
    return competitor.empty() ? output_dir / "competitor.csv" : competitor;
}

std::filesystem::path RunConfig::model_store_path() const { return store_dir.empty() ? output_dir / "models" : store_dir; }

void RunConfig::validate() const {
    if (product_id.empty()) throw InvalidInput("config: product_id must not be empty");
    eligibility.validate();
    model.validate();
    if (horizon_weeks < 1) throw InvalidInput("config: horizon weeks must be >= 1");
    if (ladder_levels < 1) throw InvalidInput("config: ladder levels must be >= 1");
    if (holdout_days < 0) throw InvalidInput("config: holdout days must be >= 0");
    if (alphas.empty()) throw InvalidInput("config: at least one alpha is required");
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] >= 0.0 && alphas[i] <= 1.0)) throw InvalidInput("config: alpha must lie in [0, 1]");
        if (i > 0 && !(alphas[i] > alphas[i - 1])) throw InvalidInput("config: alphas must be strictly ascending");
    }
    if (initial_inventory && !(*initial_inventory > 0.0)) throw InvalidInput("config: s0 must be > 0");
    if (simulation) simulation->validate();
}

RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    try {
        reject_unknown(j,
                       {"product_id", "seed", "output_dir", "store_dir", "data", "calendar", "eligibility", "outliers",
                        "model", "forecast", "optimize", "simulation"},
                       "top level");
        RunConfig c;
        read(j, "product_id", c.product_id);
        read(j, "seed", c.seed);
        c.fit.seed = c.seed;
        if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
        if (j.contains("store_dir")) c.store_dir = resolve(base_dir, j.at("store_dir").get<std::string>());
        if (j.contains("data")) {
            const auto& d = j.at("data");
            reject_unknown(d, {"transactions", "competitor"}, "data");
            if (d.contains("transactions")) c.transactions = resolve(base_dir, d.at("transactions").get<std::string>());
            if (d.contains("competitor")) c.competitor = resolve(base_dir, d.at("competitor").get<std::string>());
        }
        if (j.contains("simulation")) {
            c.simulation = parse_simulation(j.at("simulation"));
            c.simulation->seed = c.seed;
            c.calendar = c.simulation->calendar;
        }
        if (j.contains("calendar")) {
            c.calendar = parse_calendar(j.at("calendar"));
            if (c.simulation) c.simulation->calendar = c.calendar;
        }
        if (j.contains("eligibility")) {
            const auto& e = j.at("eligibility");
            reject_unknown(e,
                           {"min_days_with_transactions", "min_distinct_prices", "lookback_days", "max_rmse_log",
                            "max_mape_percent", "min_elasticity_confidence"},
                           "eligibility");
            read(e, "min_days_with_transactions", c.eligibility.min_days_with_transactions);
            read(e, "min_distinct_prices", c.eligibility.min_distinct_prices);
            read(e, "lookback_days", c.eligibility.lookback_days);
            read(e, "max_rmse_log", c.eligibility.max_rmse_log);
            read(e, "max_mape_percent", c.eligibility.max_mape_percent);
            read(e, "min_elasticity_confidence", c.eligibility.min_elasticity_confidence);
        }
        if (j.contains("outliers")) {
            const auto& o = j.at("outliers");
            reject_unknown(o, {"threshold", "lookback_days"}, "outliers");
            read(o, "threshold", c.outliers.threshold);
            read(o, "lookback_days", c.outliers.lookback_days);
        }
        if (j.contains("model")) {
            const auto& m = j.at("model");
            reject_unknown(m,
                           {"periodicity", "regressors", "bounds", "diffuse_variance", "observation_ridge", "starts",
                            "max_evaluations", "tolerance", "holdout_days"},
                           "model");
            read(m, "periodicity", c.model.periodicity);
            if (m.contains("regressors")) {
                const auto& r = m.at("regressors");
                reject_unknown(r, {"competitive_indicator", "is_holiday", "is_weekend"}, "model.regressors");
                read(r, "competitive_indicator", c.model.regressors.competitive);
                read(r, "is_holiday", c.model.regressors.holiday);
                read(r, "is_weekend", c.model.regressors.weekend);
            }
            if (m.contains("bounds")) {
                const auto& b = m.at("bounds");
                reject_unknown(b, {"min_variance", "max_variance", "max_abs_rho"}, "model.bounds");
                read(b, "min_variance", c.model.bounds.min_variance);
                read(b, "max_variance", c.model.bounds.max_variance);
                read(b, "max_abs_rho", c.model.bounds.max_abs_rho);
            }
            read(m, "diffuse_variance", c.model.diffuse_variance);
            read(m, "observation_ridge", c.model.observation_ridge);
            read(m, "starts", c.fit.starts);
            read(m, "max_evaluations", c.fit.max_evaluations);
            read(m, "tolerance", c.fit.tolerance);
            read(m, "holdout_days", c.holdout_days);
        }
        if (j.contains("forecast")) {
            const auto& f = j.at("forecast");
            reject_unknown(f, {"levels", "weeks", "competitor_price", "mean_correction"}, "forecast");
            read(f, "levels", c.ladder_levels);
            read(f, "weeks", c.horizon_weeks);
            read(f, "competitor_price", c.competitor_price);
            read(f, "mean_correction", c.mean_correction);
        }
        if (j.contains("optimize")) {
            const auto& o = j.at("optimize");
            reject_unknown(o, {"s0", "alpha", "alphas", "enumeration_threshold"}, "optimize");
            if (o.contains("s0") && !(o.at("s0").is_string() && o.at("s0").get<std::string>() == "auto"))
                c.initial_inventory = o.at("s0").get<double>();
            if (o.contains("alpha")) c.alphas = {o.at("alpha").get<double>()};
            if (o.contains("alphas")) c.alphas = o.at("alphas").get<std::vector<double>>();
            read(o, "enumeration_threshold", c.enumeration_threshold);
        }
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFound("cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    auto base = path.parent_path();
    if (base.empty()) base = ".";
    try {
        return parse_config(buf.str(), base);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

} // namespace pricing::app
