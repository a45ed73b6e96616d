#include <doctest.h>

#include <cmath>
#include <random>

#include "cases.hpp"
#include "oracles.hpp"
#include "pricing/error.hpp"
#include "pricing/model.hpp"
#include "pricing/simulate.hpp"

using namespace pricing;
using namespace pricing::ssm;
using namespace std::chrono;
using cases::random_case;

namespace {

// Filter where only the AR state is uncertain: everything else starts at a
// known zero and has no noise.
double ar_only_loglik(double rho, const std::vector<std::optional<double>>& z) {
    StateLayout layout(2, {false, false, false});
    Hyperparams h{rho, 0, 0, 1};
    Eigen::VectorXd a = Eigen::VectorXd::Zero(layout.dimension());
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(layout.dimension(), layout.dimension());
    P(layout.ar(), layout.ar()) = 1 / (1 - rho * rho);
    std::vector<RegressorRow> rows(z.size());
    return kalman_filter<double>(layout, h, z, rows, a, P).loglik;
}

double gaussian_logpdf(const Eigen::MatrixXd& S, const Eigen::VectorXd& y) {
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    Eigen::VectorXd w = llt.matrixL().solve(y);
    double logdet = 2 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return -0.5 * (y.size() * std::log(2 * std::numbers::pi) + logdet + w.squaredNorm());
}


ingest::PreparedSeries series_from_z(const std::vector<double>& z, const std::vector<double>& log_price, Date start) {
    ingest::PreparedSeries s;
    s.mean_demand = 1;
    s.mean_price = 1;
    for (std::size_t t = 0; t < z.size(); ++t) {
        ingest::DailyObservation d;
        d.date = start + days{static_cast<int>(t)};
        d.unit_sales = std::exp(z[t]);
        d.retail_price = std::exp(log_price[t]);
        s.days.push_back(d);
        s.log_demand_ratio.push_back(z[t]);
        s.log_price_ratio.push_back(log_price[t]);
    }
    return s;
}

} // namespace

TEST_CASE("state space dimensions and blocks") {
    ModelSpec spec;
    CHECK(spec.layout().dimension() == 13);
    spec.periodicity = 2;
    CHECK(spec.layout().dimension() == 8);

    spec.periodicity = 7;
    auto m = build_state_space(spec, {0.4, 1e-6, 1e-4, 0.01}, {0.1, 0.4, 1, 0});
    CHECK(m.transition(0, 0) == 1);
    CHECK(m.transition(0, 1) == 1);
    CHECK(m.transition(1, 0) == 0);
    CHECK(m.transition(1, 1) == 1);
    CHECK(m.transition(8, 8) == 0.4);
    CHECK(m.observation(9) == 0.1);
    CHECK(m.observation(10) == 0.4);
    CHECK(m.noise_variances.sum() == doctest::Approx(1e-6 + 1e-4 + 0.01));
    CHECK_THROWS_AS(build_state_space(spec, {}, {0, 0, 0.5, 0}), InvalidInput);
    CHECK_THROWS_AS(build_state_space(spec, {}, {NAN, 0, 0, 0}), InvalidInput);
}

TEST_CASE("sparse transition matches the dense matrix") {
    std::mt19937_64 gen(1);
    std::normal_distribution<double> nd;
    for (int k = 2; k <= 8; ++k) {
        StateLayout layout(k, {true, false, true});
        Eigen::MatrixXd M(layout.dimension(), 3);
        for (int i = 0; i < M.size(); ++i) M.data()[i] = nd(gen);
        Eigen::MatrixXd dense = transition_matrix<double>(layout, 0.3) * M;
        apply_transition(layout, 0.3, M);
        CHECK((M - dense).norm() < 1e-14);
    }
}

TEST_CASE("AR-only likelihood examples") {
    CHECK(ar_only_loglik(0.0, {0.0}) == doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-14));
    CHECK(ar_only_loglik(0.0, {0.0}) == doctest::Approx(-0.9189385332).epsilon(1e-10));

    const double rho = 0.5;
    Eigen::MatrixXd S(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) S(i, j) = std::pow(rho, std::abs(i - j)) / (1 - rho * rho);
    Eigen::Vector3d y(0.3, -1.2, 0.7);
    CHECK(ar_only_loglik(rho, {0.3, -1.2, 0.7}) == doctest::Approx(gaussian_logpdf(S, y)).epsilon(1e-12));

    Eigen::Matrix2d S2;
    S2 << S(0, 0), S(0, 2), S(2, 0), S(2, 2);
    CHECK(ar_only_loglik(rho, {0.3, std::nullopt, 0.7}) ==
          doctest::Approx(gaussian_logpdf(S2, Eigen::Vector2d(0.3, 0.7))).epsilon(1e-12));
}

TEST_CASE("kalman_loglik equals the dense joint-Gaussian density") {
    std::mt19937_64 gen(2024);
    double worst = 0;
    for (int rep = 0; rep < 200; ++rep) {
        const int n = 1 + static_cast<int>(gen() % 6);
        auto c = random_case(gen, n);
        const double kf = kalman_loglik(c.spec, c.h, c.obs).value;
        const long double dense = oracle::dense_loglik(c.toy, c.obs.z, c.x);
        worst = std::max(worst, static_cast<double>(std::fabs(kf - dense)));
        CHECK(std::fabs(kf - static_cast<double>(dense)) <= 1e-8);
    }
    MESSAGE("worst |kalman - dense| = " << worst);
}

TEST_CASE("diffuse-adjusted likelihood is invariant to kappa") {
    std::mt19937_64 gen(77);
    for (int rep = 0; rep < 10; ++rep) {
        auto c = random_case(gen, 30 + static_cast<int>(gen() % 40));
        c.h.ar_var = 0.05 + 0.5 * (gen() % 100) / 100.0;
        double base = 0;
        for (double kappa : {1e7, 1e8, 1e9}) {
            c.spec.diffuse_variance = kappa;
            auto ll = kalman_loglik(c.spec, c.h, c.obs);
            CHECK(ll.diffuse_rank <= c.spec.layout().dimension() - 1);
            if (kappa == 1e7) base = ll.diffuse_adjusted();
            else CHECK(std::fabs(ll.diffuse_adjusted() - base) <= 1e-4);
        }
    }
}

TEST_CASE("covariances stay symmetric positive semidefinite") {
    std::mt19937_64 gen(8);
    for (int rep = 0; rep < 10; ++rep) {
        auto c = random_case(gen, 120);
        auto layout = c.spec.layout();
        Eigen::VectorXd a;
        Eigen::MatrixXd P;
        initial_state(layout, c.h, c.spec.diffuse_variance, a, P);
        auto f = kalman_filter<double>(layout, c.h, c.obs.z, c.obs.rows, a, P, {0.0, true});
        for (const auto& s : f.steps) {
            CHECK((s.P_pred - s.P_pred.transpose()).norm() == 0.0);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.P_pred, Eigen::EigenvaluesOnly);
            CHECK(es.eigenvalues().minCoeff() >= -1e-9);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> fin(f.P_final, Eigen::EigenvaluesOnly);
        CHECK(fin.eigenvalues().minCoeff() >= -1e-9);
    }
}

TEST_CASE("one-step prediction errors of the AR-only model are white") {
    for (double rho : {0.0, 0.7}) {
        std::mt19937_64 gen(4);
        std::normal_distribution<double> nd;
        std::vector<std::optional<double>> z;
        double e = nd(gen) / std::sqrt(1 - rho * rho);
        for (int t = 0; t < 1000; ++t) {
            z.push_back(e);
            e = rho * e + nd(gen);
        }
        StateLayout layout(2, {false, false, false});
        Hyperparams h{rho, 0, 0, 1};
        Eigen::VectorXd a = Eigen::VectorXd::Zero(layout.dimension());
        Eigen::MatrixXd P = Eigen::MatrixXd::Zero(layout.dimension(), layout.dimension());
        P(layout.ar(), layout.ar()) = 1 / (1 - rho * rho);
        std::vector<RegressorRow> rows(z.size());
        auto f = kalman_filter<double>(layout, h, z, rows, a, P, {0.0, true});
        std::vector<double> v;
        for (auto& s : f.steps) v.push_back(s.innovation);
        double mean = 0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double num = 0, den = 0;
        for (std::size_t t = 0; t < v.size(); ++t) {
            den += (v[t] - mean) * (v[t] - mean);
            if (t) num += (v[t] - mean) * (v[t - 1] - mean);
        }
        CHECK(std::fabs(num / den) < 0.1);
    }
}

TEST_CASE("fit matches least squares when trend and seasonal are deterministic") {
    // z = mu0 + g0 t + s_(t mod k) + beta x_t + eta_t, eta iid
    std::mt19937_64 gen(12);
    std::normal_distribution<double> nd;
    const int n = 240, k = 7;
    const double season[k] = {0.05, -0.02, -0.04, -0.03, 0.0, 0.02, 0.02};
    ModelSpec spec;
    spec.periodicity = k;
    spec.regressors = {true, true, true};
    auto truth = sim::reference_product();
    Date start = sys_days{2023y / 1 / 2};

    ingest::PreparedSeries s;
    s.mean_demand = 1;
    s.mean_price = 1;
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    for (int t = 0; t < n; ++t) {
        ingest::DailyObservation d;
        d.date = start + days{t};
        double lp = 0.2 * nd(gen), c = 0.5 + 0.1 * nd(gen);
        d.is_holiday = t % 29 == 3;
        d.is_weekend = nd(gen) > 0.8;  // irregular, or it would alias the seasonal dummies
        d.competitive_indicator = c;
        d.retail_price = std::exp(lp);
        double z = 0.3 + 0.001 * t + season[t % k] + truth.beta_x * lp + truth.beta_c * c + truth.beta_h * d.is_holiday +
                   truth.beta_w * d.is_weekend + 0.1 * nd(gen);
        d.unit_sales = std::exp(z);
        s.days.push_back(d);
        s.log_demand_ratio.push_back(z);
        s.log_price_ratio.push_back(lp);

        std::vector<double> row{1.0, double(t)};
        // effect-coded seasonal dummies
        for (int j = 0; j < k - 1; ++j) row.push_back(t % k == j ? 1.0 : (t % k == k - 1 ? -1.0 : 0.0));
        for (double v : {lp, c, double(d.is_holiday), double(d.is_weekend)}) row.push_back(v);
        X.push_back(row);
        y.push_back(z);
    }
    oracle::LMatrix Xm(n, static_cast<int>(X[0].size()));
    oracle::LVector ym(n);
    for (int t = 0; t < n; ++t) {
        for (int j = 0; j < Xm.cols(); ++j) Xm(t, j) = X[t][j];
        ym(t) = y[t];
    }
    auto beta = oracle::ols(Xm, ym);

    FitOptions opts;
    opts.fixed_rho = 0.0;
    opts.fixed_slope_var = 0.0;
    opts.fixed_seasonal_var = 0.0;
    auto model = fit(s, spec, opts);
    const int off = 2 + (k - 1);
    CHECK(std::fabs(model.coefficient(Regressor::LogPrice).estimate - static_cast<double>(beta(off))) < 1e-4);
    CHECK(std::fabs(model.coefficient(Regressor::Competitive).estimate - static_cast<double>(beta(off + 1))) < 1e-4);
    CHECK(std::fabs(model.coefficient(Regressor::Holiday).estimate - static_cast<double>(beta(off + 2))) < 1e-4);
    CHECK(std::fabs(model.coefficient(Regressor::Weekend).estimate - static_cast<double>(beta(off + 3))) < 1e-4);
}

TEST_CASE("fit rejects series shorter than the state") {
    std::vector<double> z(10, 0.1), lp(10, 0.0);
    for (int i = 0; i < 10; ++i) lp[i] = 0.1 * i;
    ModelSpec spec;
    CHECK_THROWS_AS(fit(series_from_z(z, lp, sys_days{2023y / 1 / 1}), spec), InvalidInput);
}

TEST_CASE("pure trend: smoothed seasonal vanishes and components reconstruct z") {
    const int n = 120;
    std::vector<double> z, lp;
    for (int t = 0; t < n; ++t) {
        z.push_back(0.1 + 0.002 * t);
        lp.push_back(0.05 * std::sin(0.7 * t) + 0.03 * std::cos(1.9 * t));
    }
    auto s = series_from_z(z, lp, sys_days{2023y / 1 / 1});
    ModelSpec spec;
    spec.regressors = {false, false, false};
    FitOptions opts;
    opts.fixed_rho = 0.0;
    opts.fixed_slope_var = 0.0;
    opts.fixed_seasonal_var = 0.0;
    auto model = fit(s, spec, opts);
    auto c = extract_components(model, s);
    for (int t = 0; t < n; ++t) {
        CHECK(std::fabs(c.seasonal[t]) < 1e-6);
        CHECK(std::fabs(c.level[t] + c.seasonal[t] + c.ar[t] + c.regression[t] - z[t]) < 1e-6);
    }
}

TEST_CASE("seasonal windows sum to zero when the seasonal has no noise") {
    auto truth = sim::reference_product();
    truth.days = 200;
    truth.sigma_omega = 0;
    truth.seed = 5;
    auto simulated = sim::generate(truth);
    ingest::PrepareOptions po;
    po.calendar = truth.calendar;
    auto s = ingest::prepare(simulated.transactions, simulated.quotes, po);
    FitOptions opts;
    opts.fixed_seasonal_var = 0.0;
    auto model = fit(s, ModelSpec{}, opts);
    auto c = extract_components(model, s);
    const int k = 7;
    for (std::size_t t = k - 1; t < c.seasonal.size(); ++t) {
        double sum = 0;
        for (int j = 0; j < k; ++j) sum += c.seasonal[t - j];
        CHECK(std::fabs(sum) < 1e-6);
    }
}

TEST_CASE("fit is deterministic and recovers the price elasticity") {
    auto truth = sim::reference_product();
    truth.seed = 3;
    auto simulated = sim::generate(truth);
    ingest::PrepareOptions po;
    po.calendar = truth.calendar;
    auto s = ingest::prepare(simulated.transactions, simulated.quotes, po);
    auto a = fit(s, ModelSpec{});
    auto b = fit(s, ModelSpec{});
    b.fit_timestamp = a.fit_timestamp;
    CHECK(a == b);
    auto report = sim::recovery_report(truth, a);
    CHECK(report.entry("beta_x").pass.value_or(false));
    CHECK(report.passed());
}

TEST_CASE("elasticity confidence") {
    CHECK(elasticity_confidence(-1.96, 1.0) == doctest::Approx(0.95).epsilon(1e-4));
    CHECK(elasticity_confidence(-1.96 * 0.3, 0.3) == doctest::Approx(std::erf(1.96 / std::sqrt(2.0))));
    CHECK(elasticity_confidence(0.0, 0.5) == 0.0);
    CHECK(elasticity_confidence(-1.5, 1e-300) == 1.0);
    CHECK(elasticity_confidence(-1.5, 0.0) == 1.0);
}

namespace {

// Zero-noise model predicting ln(10 / mean_demand) every day.
FittedModel constant_model(double mean_demand) {
    FittedModel m;
    m.spec.regressors = {false, false, false};
    auto layout = m.spec.layout();
    m.hyper = {0.0, 0.0, 0.0, 1e-12};
    m.mean_demand = mean_demand;
    m.mean_price = 20;
    m.state_mean = Eigen::VectorXd::Zero(layout.dimension());
    m.state_mean(0) = std::log(10.0 / mean_demand);
    m.state_covariance = Eigen::MatrixXd::Zero(layout.dimension(), layout.dimension());
    m.coefficients = {{"log_price", 0.0, 0.0}};
    m.train_start = sys_days{2023y / 1 / 1};
    m.train_end = sys_days{2023y / 1 / 31};
    return m;
}

std::vector<ingest::DailyObservation> holdout(double sales, int n) {
    std::vector<ingest::DailyObservation> out;
    for (int t = 0; t < n; ++t) {
        ingest::DailyObservation d;
        d.date = sys_days{2023y / 2 / 1} + days{t};
        d.unit_sales = sales;
        d.retail_price = 20;
        out.push_back(d);
    }
    return out;
}

} // namespace

TEST_CASE("evaluate metrics") {
    auto m = constant_model(12.0);
    auto half = evaluate(m, holdout(20, 14));
    CHECK(half.mape_percent == doctest::Approx(50.0).epsilon(1e-9));
    CHECK(half.rmse_log == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    CHECK(half.holdout_days == 14);

    auto exact = evaluate(m, holdout(10, 14));
    CHECK(exact.mape_percent == doctest::Approx(0.0));
    CHECK(exact.rmse_log == doctest::Approx(0.0));

    CHECK_THROWS_AS(evaluate(m, holdout(0, 14)), EmptySeries);
    auto early = holdout(10, 3);
    early[0].date = m.train_end;
    CHECK_THROWS_AS(evaluate(m, early), InvalidInput);
}

TEST_CASE("quality treats a model without holdout metrics as failing error rules") {
    auto m = constant_model(10.0);
    auto q = quality(m);
    CHECK(std::isinf(q.rmse_log));
    m.metrics = Metrics{0.1, 8.0, 28};
    CHECK(quality(m).rmse_log == 0.1);
}
