#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pricing/date.hpp"
#include "pricing/ingest.hpp"
#include "pricing/state_space.hpp"

namespace pricing::ssm {

using Hyperparams = BasicHyperparams<double>;

struct HyperBounds {
    double min_variance = 1e-12;
    double max_variance = 10.0;
    double max_abs_rho = 0.999;
};

struct ModelSpec {
    int periodicity = 7;
    RegressorSet regressors;
    HyperBounds bounds;
    double diffuse_variance = 1e7;   // kappa
    double observation_ridge = 0.0;  // numerical rescue only

    void validate() const;
    StateLayout layout() const { return StateLayout(periodicity, regressors); }
};

struct StateSpaceMatrices {
    Eigen::MatrixXd transition;
    Eigen::VectorXd noise_variances;  // diagonal of Q
    Eigen::RowVectorXd observation;   // Z_t
};

StateSpaceMatrices build_state_space(const ModelSpec& spec, const Hyperparams& h, const RegressorRow& row);

// Observation vector and regressor rows in filter form. A day whose z is
// present but whose enabled regressors are not (no competitor quote yet) is
// treated as missing.
struct ObservationSeries {
    std::vector<std::optional<double>> z;
    std::vector<RegressorRow> rows;

    int observed() const;
};

ObservationSeries observation_series(const ingest::PreparedSeries& series, const ModelSpec& spec);

struct LogLikelihood {
    double value = 0.0;  // Gaussian log-density of the observed z under the kappa prior
    int observations = 0;
    int diffuse_rank = 0;  // diffuse directions the data identify
    double kappa = 0.0;

    // value + rank/2 * log(kappa): stable as kappa grows.
    double diffuse_adjusted() const;
};

LogLikelihood kalman_loglik(const ModelSpec& spec, const Hyperparams& h, const ingest::PreparedSeries& series);
LogLikelihood kalman_loglik(const ModelSpec& spec, const Hyperparams& h, const ObservationSeries& obs);

// Number of linearly independent diffuse directions seen by the observed days.
int diffuse_rank(const StateLayout& layout, const ObservationSeries& obs);

struct FitOptions {
    int starts = 5;
    std::uint64_t seed = 20240601;
    int max_evaluations = 1200;  // per start
    double tolerance = 1e-7;
    std::optional<double> fixed_rho;
    std::optional<double> fixed_slope_var;
    std::optional<double> fixed_seasonal_var;
    std::optional<double> fixed_ar_var;
};

struct Coefficient {
    std::string name;
    double estimate = 0.0;
    double std_error = 0.0;

    bool operator==(const Coefficient&) const = default;
};

struct Metrics {
    double rmse_log = 0.0;
    double mape_percent = 0.0;
    int holdout_days = 0;

    bool operator==(const Metrics&) const = default;
};

struct FittedModel {
    ModelSpec spec;
    Hyperparams hyper;
    std::vector<Coefficient> coefficients;
    Eigen::VectorXd state_mean;        // filtered at the last training day
    Eigen::MatrixXd state_covariance;
    double mean_demand = 0.0;  // ỹ
    double mean_price = 0.0;   // x̃
    double loglik = 0.0;
    int observations = 0;
    int evaluations = 0;
    std::optional<Metrics> metrics;
    int version = 0;
    std::string fit_timestamp;
    Date train_start{};
    Date train_end{};
    std::optional<double> last_min_other_price;

    const Coefficient& coefficient(Regressor r) const;
};

bool operator==(const FittedModel& a, const FittedModel& b);

// Maximum likelihood over (rho, sigma_tau^2, sigma_omega^2, sigma_eta^2) by
// multi-start Nelder-Mead; coefficients are the smoothed coefficient states.
FittedModel fit(const ingest::PreparedSeries& series, const ModelSpec& spec, const FitOptions& options = {});

// Re-runs the filter over `series` at the model's hyperparameters, e.g. to
// extend a model fitted on a training window to the full history. The series
// must be normalized with the model's ỹ and x̃.
FittedModel condition(const FittedModel& model, const ingest::PreparedSeries& series);

struct Components {
    std::vector<Date> dates;
    std::vector<double> level;
    std::vector<double> slope;
    std::vector<double> seasonal;
    std::vector<double> ar;
    std::vector<double> regression;  // sum of beta * regressor
    std::vector<Eigen::VectorXd> states;
};

Components extract_components(const FittedModel& model, const ingest::PreparedSeries& series);

struct Elasticity {
    double estimate = 0.0;
    double std_error = 0.0;
    double confidence = 0.0;  // two-sided Gaussian confidence that the elasticity is non-zero
};

Elasticity elasticity(const FittedModel& model);
double elasticity_confidence(double estimate, double std_error);

// One-step-ahead evaluation on days after the training window.
Metrics evaluate(const FittedModel& model, const std::vector<ingest::DailyObservation>& holdout);

ingest::ModelQuality quality(const FittedModel& model);

} // namespace pricing::ssm
