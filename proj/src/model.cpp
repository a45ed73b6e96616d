#include "pricing/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <cstdio>

#include "pricing/nelder_mead.hpp"
#include "pricing/rng.hpp"

namespace pricing::ssm {

std::string regressor_name(Regressor r) {
    switch (r) {
    case Regressor::LogPrice: return "log_price";
    case Regressor::Competitive: return "competitive_indicator";
    case Regressor::Holiday: return "is_holiday";
    case Regressor::Weekend: return "is_weekend";
    }
    return "unknown";
}

StateLayout::StateLayout(int periodicity, RegressorSet regressors) : periodicity_(periodicity), regressors_(regressors) {
    if (periodicity < 2) throw InvalidInput("seasonal periodicity must be >= 2");
}

std::optional<int> StateLayout::coefficient(Regressor r) const {
    int i = coefficient_begin();
    if (r == Regressor::LogPrice) return i;
    ++i;
    if (regressors_.competitive) {
        if (r == Regressor::Competitive) return i;
        ++i;
    } else if (r == Regressor::Competitive) {
        return std::nullopt;
    }
    if (regressors_.holiday) {
        if (r == Regressor::Holiday) return i;
        ++i;
    } else if (r == Regressor::Holiday) {
        return std::nullopt;
    }
    if (regressors_.weekend && r == Regressor::Weekend) return i;
    return std::nullopt;
}

std::vector<Regressor> StateLayout::regressors() const {
    std::vector<Regressor> out{Regressor::LogPrice};
    if (regressors_.competitive) out.push_back(Regressor::Competitive);
    if (regressors_.holiday) out.push_back(Regressor::Holiday);
    if (regressors_.weekend) out.push_back(Regressor::Weekend);
    return out;
}

void ModelSpec::validate() const {
    if (periodicity < 2) throw InvalidInput("periodicity must be >= 2");
    if (!(bounds.min_variance > 0.0) || !(bounds.max_variance > bounds.min_variance))
        throw InvalidInput("variance bounds must satisfy 0 < min < max");
    if (!(bounds.max_abs_rho > 0.0) || !(bounds.max_abs_rho < 1.0))
        throw InvalidInput("rho bound must lie in (0, 1)");
    if (!(diffuse_variance > 0.0)) throw InvalidInput("diffuse variance must be > 0");
    if (observation_ridge < 0.0) throw InvalidInput("observation ridge must be >= 0");
}

StateSpaceMatrices build_state_space(const ModelSpec& spec, const Hyperparams& h, const RegressorRow& row) {
    spec.validate();
    for (double v : {row.log_price, row.competitive, row.holiday, row.weekend})
        if (!std::isfinite(v)) throw InvalidInput("regressor row contains a non-finite value");
    if (row.holiday != 0.0 && row.holiday != 1.0) throw InvalidInput("holiday flag must be 0 or 1");
    if (row.weekend != 0.0 && row.weekend != 1.0) throw InvalidInput("weekend flag must be 0 or 1");
    auto layout = spec.layout();
    return {transition_matrix<double>(layout, h.rho), state_noise_variances(layout, h),
            observation_row<double>(layout, row)};
}

int ObservationSeries::observed() const {
    return static_cast<int>(std::count_if(z.begin(), z.end(), [](const auto& v) { return v.has_value(); }));
}

ObservationSeries observation_series(const ingest::PreparedSeries& series, const ModelSpec& spec) {
    ObservationSeries out;
    out.z = series.log_demand_ratio;
    out.rows.resize(series.size());
    for (std::size_t t = 0; t < series.size(); ++t) {
        const auto& d = series.days[t];
        auto& row = out.rows[t];
        row.log_price = series.log_price_ratio[t].value_or(0.0);
        row.holiday = d.is_holiday ? 1.0 : 0.0;
        row.weekend = d.is_weekend ? 1.0 : 0.0;
        if (spec.regressors.competitive) {
            if (d.competitive_indicator) row.competitive = *d.competitive_indicator;
            else out.z[t].reset();
        }
        if (!series.log_price_ratio[t]) out.z[t].reset();
    }
    return out;
}

double LogLikelihood::diffuse_adjusted() const { return value + 0.5 * diffuse_rank * std::log(kappa); }

int diffuse_rank(const StateLayout& layout, const ObservationSeries& obs) {
    const int m = layout.dimension();
    const int observed = obs.observed();
    if (observed == 0) return 0;
    // Row t is Z_t T^t restricted to the diffuse columns; the AR column is
    // dropped, so rho does not matter.
    Eigen::MatrixXd design(observed, m - 1);
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(m, m);
    int r = 0;
    for (std::size_t t = 0; t < obs.z.size(); ++t) {
        if (t > 0) apply_transition(layout, 0.0, power);
        if (!obs.z[t]) continue;
        Eigen::RowVectorXd full = observation_row<double>(layout, obs.rows[t]) * power;
        int c = 0;
        for (int j = 0; j < m; ++j)
            if (layout.is_diffuse(j)) design(r, c++) = full(j);
        ++r;
    }
    for (int j = 0; j < design.cols(); ++j) {
        double norm = design.col(j).norm();
        if (norm > 0.0) design.col(j) /= norm;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-9);
    return static_cast<int>(qr.rank());
}

namespace {

void check_hyper(const Hyperparams& h) {
    if (!(std::abs(h.rho) < 1.0)) throw InvalidInput("|rho| must be < 1");
    if (!(h.ar_var > 0.0)) throw InvalidInput("AR innovation variance must be > 0");
    if (h.slope_var < 0.0 || h.seasonal_var < 0.0) throw InvalidInput("variances must be >= 0");
}

FilterResult<double> run_filter(const ModelSpec& spec, const Hyperparams& h, const ObservationSeries& obs,
                                bool keep_steps) {
    auto layout = spec.layout();
    Eigen::VectorXd a;
    Eigen::MatrixXd P;
    initial_state(layout, h, spec.diffuse_variance, a, P);
    return kalman_filter<double>(layout, h, obs.z, obs.rows, std::move(a), std::move(P),
                                 {spec.observation_ridge, keep_steps});
}

std::string utc_now() {
    auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    auto day = std::chrono::floor<std::chrono::days>(now);
    auto secs = (now - day).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "T%02lld:%02lld:%02lldZ", static_cast<long long>(secs / 3600),
                  static_cast<long long>((secs / 60) % 60), static_cast<long long>(secs % 60));
    return format_date(day) + buf;
}

std::optional<double> last_competitor_price(const ingest::PreparedSeries& series) {
    for (auto it = series.days.rbegin(); it != series.days.rend(); ++it)
        if (it->min_other_price) return it->min_other_price;
    return std::nullopt;
}

void fill_from_filter(FittedModel& model, const FilterResult<double>& f) {
    auto layout = model.spec.layout();
    model.state_mean = f.a_final;
    model.state_covariance = f.P_final;
    model.loglik = f.loglik;
    model.observations = f.observations;
    model.coefficients.clear();
    for (Regressor r : layout.regressors()) {
        int i = *layout.coefficient(r);
        double var = std::max(f.P_final(i, i), 0.0);
        model.coefficients.push_back({regressor_name(r), f.a_final(i), std::sqrt(var)});
    }
}

// Unconstrained search vector <-> hyperparameters. Fixed components are
// excluded from the search.
class HyperTransform {
public:
    HyperTransform(const ModelSpec& spec, const FitOptions& o) : bounds_(spec.bounds), opts_(o) {}

    int free_count() const {
        return !opts_.fixed_rho + !opts_.fixed_slope_var + !opts_.fixed_seasonal_var + !opts_.fixed_ar_var;
    }

    Hyperparams decode(const Eigen::VectorXd& theta) const {
        Hyperparams h;
        int i = 0;
        h.rho = opts_.fixed_rho ? *opts_.fixed_rho : bounds_.max_abs_rho * std::tanh(theta(i++));
        h.slope_var = opts_.fixed_slope_var ? *opts_.fixed_slope_var : variance(theta(i++));
        h.seasonal_var = opts_.fixed_seasonal_var ? *opts_.fixed_seasonal_var : variance(theta(i++));
        h.ar_var = opts_.fixed_ar_var ? *opts_.fixed_ar_var : variance(theta(i++));
        return h;
    }

    Eigen::VectorXd encode(const Hyperparams& h) const {
        Eigen::VectorXd theta(free_count());
        int i = 0;
        if (!opts_.fixed_rho) theta(i++) = std::atanh(std::clamp(h.rho / bounds_.max_abs_rho, -0.999999, 0.999999));
        if (!opts_.fixed_slope_var) theta(i++) = std::log(h.slope_var);
        if (!opts_.fixed_seasonal_var) theta(i++) = std::log(h.seasonal_var);
        if (!opts_.fixed_ar_var) theta(i++) = std::log(h.ar_var);
        return theta;
    }

    // Initial simplex step and multi-start jitter scale per free component.
    Eigen::VectorXd scale() const {
        Eigen::VectorXd s(free_count());
        int i = 0;
        if (!opts_.fixed_rho) s(i++) = 0.5;
        if (!opts_.fixed_slope_var) s(i++) = 2.0;
        if (!opts_.fixed_seasonal_var) s(i++) = 2.0;
        if (!opts_.fixed_ar_var) s(i++) = 1.0;
        return s;
    }

private:
    double variance(double log_v) const {
        return std::exp(std::clamp(log_v, std::log(bounds_.min_variance), std::log(bounds_.max_variance)));
    }

    HyperBounds bounds_;
    FitOptions opts_;
};

} // namespace

LogLikelihood kalman_loglik(const ModelSpec& spec, const Hyperparams& h, const ObservationSeries& obs) {
    spec.validate();
    check_hyper(h);
    if (obs.observed() == 0) throw EmptySeries("kalman_loglik: every observation is missing");
    // Extended precision: with kappa = 1e7 the collapse of the diffuse
    // variances cancels about seven digits, too many for double when the
    // remaining variances are small.
    using Ext = long double;
    const auto layout = spec.layout();
    const auto he = h.cast<Ext>();
    Vector<Ext> a;
    Matrix<Ext> P;
    initial_state(layout, he, static_cast<Ext>(spec.diffuse_variance), a, P);
    auto f = kalman_filter<Ext>(layout, he, obs.z, obs.rows, std::move(a), std::move(P), {spec.observation_ridge, false});
    return {static_cast<double>(f.loglik), f.observations, diffuse_rank(layout, obs), spec.diffuse_variance};
}

LogLikelihood kalman_loglik(const ModelSpec& spec, const Hyperparams& h, const ingest::PreparedSeries& series) {
    return kalman_loglik(spec, h, observation_series(series, spec));
}

const Coefficient& FittedModel::coefficient(Regressor r) const {
    auto name = regressor_name(r);
    for (const auto& c : coefficients)
        if (c.name == name) return c;
    throw NotFound("model has no coefficient for " + name);
}

bool operator==(const FittedModel& a, const FittedModel& b) {
    auto same_matrix = [](const auto& x, const auto& y) {
        return x.rows() == y.rows() && x.cols() == y.cols() && (x.size() == 0 || x == y);
    };
    const auto& sa = a.spec;
    const auto& sb = b.spec;
    return sa.periodicity == sb.periodicity && sa.regressors.competitive == sb.regressors.competitive &&
           sa.regressors.holiday == sb.regressors.holiday && sa.regressors.weekend == sb.regressors.weekend &&
           sa.bounds.min_variance == sb.bounds.min_variance && sa.bounds.max_variance == sb.bounds.max_variance &&
           sa.bounds.max_abs_rho == sb.bounds.max_abs_rho && sa.diffuse_variance == sb.diffuse_variance &&
           sa.observation_ridge == sb.observation_ridge && a.hyper.rho == b.hyper.rho &&
           a.hyper.slope_var == b.hyper.slope_var && a.hyper.seasonal_var == b.hyper.seasonal_var &&
           a.hyper.ar_var == b.hyper.ar_var && a.coefficients == b.coefficients &&
           same_matrix(a.state_mean, b.state_mean) && same_matrix(a.state_covariance, b.state_covariance) &&
           a.mean_demand == b.mean_demand && a.mean_price == b.mean_price && a.loglik == b.loglik &&
           a.observations == b.observations && a.evaluations == b.evaluations && a.metrics == b.metrics &&
           a.version == b.version && a.fit_timestamp == b.fit_timestamp && a.train_start == b.train_start &&
           a.train_end == b.train_end && a.last_min_other_price == b.last_min_other_price;
}

FittedModel fit(const ingest::PreparedSeries& series, const ModelSpec& spec, const FitOptions& options) {
    spec.validate();
    if (options.starts < 1) throw InvalidInput("fit needs at least one start");
    const auto layout = spec.layout();
    const auto obs = observation_series(series, spec);
    const int observed = obs.observed();
    if (observed <= layout.dimension())
        throw InvalidInput("series too short: " + std::to_string(observed) + " usable days for a state of dimension " +
                           std::to_string(layout.dimension()));

    double z_mean = 0.0;
    for (const auto& z : obs.z)
        if (z) z_mean += *z;
    z_mean /= observed;
    double z_var = 0.0;
    for (const auto& z : obs.z)
        if (z) z_var += (*z - z_mean) * (*z - z_mean);
    z_var = std::max(z_var / observed, 1e-4);

    const HyperTransform transform(spec, options);
    auto objective = [&](const Eigen::VectorXd& theta) {
        try {
            return -run_filter(spec, transform.decode(theta), obs, false).loglik;
        } catch (const NumericalError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    const Eigen::VectorXd base = transform.encode({0.3, 1e-6, 1e-4, 0.5 * z_var});
    const Eigen::VectorXd scale = transform.scale();
    optim::NelderMeadOptions nm;
    nm.max_evaluations = options.max_evaluations;
    nm.f_tolerance = options.tolerance;
    nm.x_tolerance = 1e-4;

    CounterRng rng(options.seed, 0x5EED);
    optim::NelderMeadResult<double> best;
    int best_index = -1;
    int evaluations = 0;
    bool any_converged = false;
    for (int s = 0; s < options.starts; ++s) {
        Eigen::VectorXd start = base;
        if (s > 0)
            for (int i = 0; i < start.size(); ++i) start(i) += scale(i) * rng.normal();
        auto result = optim::nelder_mead<double>(objective, start, scale, nm);
        evaluations += result.evaluations;
        any_converged = any_converged || result.converged;
        // strict improvement keeps the lowest start index on ties
        if (best_index < 0 || result.value < best.value) {
            best = result;
            best_index = s;
        }
    }
    if (!std::isfinite(best.value) || !any_converged)
        throw FitError("hyperparameter search did not converge after " + std::to_string(options.starts) +
                           " starts (best log-likelihood " + std::to_string(-best.value) + ")",
                       -best.value);

    FittedModel model;
    model.spec = spec;
    model.hyper = transform.decode(best.x);
    model.mean_demand = series.mean_demand;
    model.mean_price = series.mean_price;
    model.evaluations = evaluations;
    model.fit_timestamp = utc_now();
    model.train_start = series.days.front().date;
    model.train_end = series.days.back().date;
    model.last_min_other_price = last_competitor_price(series);
    fill_from_filter(model, run_filter(spec, model.hyper, obs, false));
    return model;
}

FittedModel condition(const FittedModel& model, const ingest::PreparedSeries& series) {
    if (series.size() == 0) throw EmptySeries("condition: empty series");
    if (series.mean_demand != model.mean_demand || series.mean_price != model.mean_price)
        throw InvalidInput("condition: series is not normalized with the model's constants");
    auto obs = observation_series(series, model.spec);
    if (obs.observed() == 0) throw EmptySeries("condition: every observation is missing");
    FittedModel out = model;
    out.train_start = series.days.front().date;
    out.train_end = series.days.back().date;
    out.last_min_other_price = last_competitor_price(series);
    fill_from_filter(out, run_filter(model.spec, model.hyper, obs, false));
    return out;
}

Components extract_components(const FittedModel& model, const ingest::PreparedSeries& series) {
    if (series.size() == 0 || series.days.front().date != model.train_start ||
        series.days.back().date != model.train_end ||
        series.size() != static_cast<std::size_t>((model.train_end - model.train_start).count() + 1) ||
        series.mean_demand != model.mean_demand || series.mean_price != model.mean_price)
        throw InvalidInput("extract_components: series does not match the fitted training window");

    const auto layout = model.spec.layout();
    const auto obs = observation_series(series, model.spec);
    const auto filtered = run_filter(model.spec, model.hyper, obs, true);
    const auto smoothed = smooth(layout, model.hyper, filtered, std::span<const RegressorRow>(obs.rows));

    Components c;
    const std::size_t n = series.size();
    c.dates.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
        const auto& a = smoothed.mean[t];
        c.dates.push_back(series.days[t].date);
        c.level.push_back(a(StateLayout::level()));
        c.slope.push_back(a(StateLayout::slope()));
        c.seasonal.push_back(a(StateLayout::seasonal_begin()));
        c.ar.push_back(a(layout.ar()));
        const auto Z = observation_row<double>(layout, obs.rows[t]);
        const int cb = layout.coefficient_begin();
        c.regression.push_back(Z.segment(cb, layout.coefficient_count()).dot(a.segment(cb, layout.coefficient_count())));
        c.states.push_back(a);
    }
    return c;
}

double elasticity_confidence(double estimate, double std_error) {
    if (estimate == 0.0) return 0.0;
    if (!(std_error > 0.0)) return 1.0;
    return std::erf(std::abs(estimate) / (std_error * std::numbers::sqrt2));
}

Elasticity elasticity(const FittedModel& model) {
    const auto& c = model.coefficient(Regressor::LogPrice);
    return {c.estimate, c.std_error, elasticity_confidence(c.estimate, c.std_error)};
}

Metrics evaluate(const FittedModel& model, const std::vector<ingest::DailyObservation>& holdout) {
    if (holdout.empty()) throw EmptySeries("evaluate: empty holdout");
    if (!(holdout.front().date > model.train_end))
        throw InvalidInput("evaluate: holdout must start after the training window");
    for (std::size_t t = 1; t < holdout.size(); ++t)
        if (holdout[t].date != holdout[t - 1].date + std::chrono::days{1})
            throw InvalidInput("evaluate: holdout dates must be contiguous");

    const auto layout = model.spec.layout();
    auto series = ingest::normalize_with(holdout, model.mean_demand, model.mean_price);
    auto obs = observation_series(series, model.spec);

    // predicted state for the first holdout day
    Eigen::VectorXd a = model.state_mean;
    Eigen::MatrixXd P = model.state_covariance;
    const Eigen::VectorXd q = state_noise_variances(layout, model.hyper);
    const auto gap = (holdout.front().date - model.train_end).count();
    for (long long g = 0; g < gap; ++g) {
        apply_transition(layout, model.hyper.rho, a);
        predict_covariance(layout, model.hyper.rho, q, P);
    }
    auto filtered = kalman_filter<double>(layout, model.hyper, obs.z, obs.rows, a, P,
                                          {model.spec.observation_ridge, true});

    double sq = 0.0;
    int n_sq = 0;
    double ape = 0.0;
    int n_ape = 0;
    for (std::size_t t = 0; t < series.size(); ++t) {
        const auto& step = filtered.steps[t];
        const auto& d = series.days[t];
        const double z_hat = observation_row<double>(layout, obs.rows[t]).dot(step.a_pred);
        if (obs.z[t]) {
            sq += (*obs.z[t] - z_hat) * (*obs.z[t] - z_hat);
            ++n_sq;
        }
        bool regressors_ok = series.log_price_ratio[t] && (!model.spec.regressors.competitive || d.competitive_indicator);
        if (d.unit_sales && *d.unit_sales > 0.0 && !d.outlier && regressors_ok) {
            const double y_hat = model.mean_demand * std::exp(z_hat);
            ape += std::abs(y_hat - *d.unit_sales) / *d.unit_sales;
            ++n_ape;
        }
    }
    if (n_ape == 0 || n_sq == 0) throw EmptySeries("evaluate: holdout has no day with positive sales (MAPE undefined)");
    return {std::sqrt(sq / n_sq), 100.0 * ape / n_ape, static_cast<int>(holdout.size())};
}

ingest::ModelQuality quality(const FittedModel& model) {
    auto e = elasticity(model);
    ingest::ModelQuality q;
    q.elasticity = e.estimate;
    q.elasticity_confidence = e.confidence;
    // no holdout means no evidence, which fails any error-metric rule
    q.rmse_log = model.metrics ? model.metrics->rmse_log : std::numeric_limits<double>::infinity();
    q.mape_percent = model.metrics ? model.metrics->mape_percent : std::numeric_limits<double>::infinity();
    return q;
}

} // namespace pricing::ssm
