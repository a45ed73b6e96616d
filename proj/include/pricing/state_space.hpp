#pragma once

// Linear-Gaussian structural demand model in state-space form.
//
//   z_t     = Z_t a_t                       (no observation noise)
//   a_{t+1} = T a_t + eta_t,  eta_t ~ N(0, diag(Q))
//
// State vector, in order:
//   level, slope                       local linear trend
//   s_t, s_{t-1}, ..., s_{t-k+2}       dummy seasonal of period k
//   e_t                                AR(1) disturbance
//   beta_x [, beta_c] [, beta_h] [, beta_w]   static regression coefficients
//
// Everything below is templated on the scalar so the same recursions can be
// run in extended precision.

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pricing/error.hpp"

namespace pricing::ssm {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

enum class Regressor { LogPrice, Competitive, Holiday, Weekend };

std::string regressor_name(Regressor r);

struct RegressorSet {
    bool competitive = true;
    bool holiday = true;
    bool weekend = true;

    int count() const { return 1 + competitive + holiday + weekend; }
};

// One day's explanatory values: log(x_t / x̃), c_t, h_t, w_t.
struct RegressorRow {
    double log_price = 0.0;
    double competitive = 0.0;
    double holiday = 0.0;
    double weekend = 0.0;
};

class StateLayout {
public:
    StateLayout(int periodicity, RegressorSet regressors);

    int periodicity() const { return periodicity_; }
    int dimension() const { return coefficient_begin() + regressors_.count(); }
    const RegressorSet& regressor_set() const { return regressors_; }

    static constexpr int level() { return 0; }
    static constexpr int slope() { return 1; }
    static constexpr int seasonal_begin() { return 2; }
    int seasonal_count() const { return periodicity_ - 1; }
    int ar() const { return seasonal_begin() + seasonal_count(); }
    int coefficient_begin() const { return ar() + 1; }
    int coefficient_count() const { return regressors_.count(); }

    // Index of a coefficient state, or nullopt when the regressor is disabled.
    std::optional<int> coefficient(Regressor r) const;
    std::vector<Regressor> regressors() const;

    bool is_diffuse(int index) const { return index != ar(); }

private:
    int periodicity_;
    RegressorSet regressors_;
};

template <typename Scalar>
struct BasicHyperparams {
    Scalar rho = 0;           // AR(1) coefficient
    Scalar slope_var = 0;     // sigma_tau^2
    Scalar seasonal_var = 0;  // sigma_omega^2
    Scalar ar_var = 1;        // sigma_eta^2

    template <typename Other>
    BasicHyperparams<Other> cast() const {
        return {static_cast<Other>(rho), static_cast<Other>(slope_var), static_cast<Other>(seasonal_var),
                static_cast<Other>(ar_var)};
    }
};

template <typename Scalar>
Matrix<Scalar> transition_matrix(const StateLayout& layout, Scalar rho) {
    const int m = layout.dimension();
    Matrix<Scalar> T = Matrix<Scalar>::Zero(m, m);
    T(StateLayout::level(), StateLayout::level()) = 1;
    T(StateLayout::level(), StateLayout::slope()) = 1;
    T(StateLayout::slope(), StateLayout::slope()) = 1;
    const int s0 = StateLayout::seasonal_begin();
    for (int j = 0; j < layout.seasonal_count(); ++j) T(s0, s0 + j) = -1;
    for (int j = 1; j < layout.seasonal_count(); ++j) T(s0 + j, s0 + j - 1) = 1;
    T(layout.ar(), layout.ar()) = rho;
    for (int i = layout.coefficient_begin(); i < m; ++i) T(i, i) = 1;
    return T;
}

// Diagonal of the state noise covariance.
template <typename Scalar>
Vector<Scalar> state_noise_variances(const StateLayout& layout, const BasicHyperparams<Scalar>& h) {
    Vector<Scalar> q = Vector<Scalar>::Zero(layout.dimension());
    q(StateLayout::slope()) = h.slope_var;
    q(StateLayout::seasonal_begin()) = h.seasonal_var;
    q(layout.ar()) = h.ar_var;
    return q;
}

template <typename Scalar>
RowVector<Scalar> observation_row(const StateLayout& layout, const RegressorRow& x) {
    RowVector<Scalar> Z = RowVector<Scalar>::Zero(layout.dimension());
    Z(StateLayout::level()) = 1;
    Z(StateLayout::seasonal_begin()) = 1;
    Z(layout.ar()) = 1;
    auto put = [&](Regressor r, double v) {
        if (auto i = layout.coefficient(r)) Z(*i) = static_cast<Scalar>(v);
    };
    put(Regressor::LogPrice, x.log_price);
    put(Regressor::Competitive, x.competitive);
    put(Regressor::Holiday, x.holiday);
    put(Regressor::Weekend, x.weekend);
    return Z;
}

// M <- T M, exploiting the sparsity of T. Works on vectors and matrices.
template <typename Derived>
void apply_transition(const StateLayout& layout, typename Derived::Scalar rho, Eigen::MatrixBase<Derived>& M) {
    M.row(StateLayout::level()) += M.row(StateLayout::slope());
    const int s0 = StateLayout::seasonal_begin();
    const int ns = layout.seasonal_count();
    if (ns > 0) {
        auto lead = (-M.middleRows(s0, ns).colwise().sum()).eval();
        for (int j = ns - 1; j >= 1; --j) M.row(s0 + j) = M.row(s0 + j - 1);
        M.row(s0) = lead;
    }
    M.row(layout.ar()) *= rho;
}

// P <- T P T' + diag(q); P symmetric on entry and exit.
template <typename Scalar>
void predict_covariance(const StateLayout& layout, Scalar rho, const Vector<Scalar>& q, Matrix<Scalar>& P) {
    apply_transition(layout, rho, P);
    P.transposeInPlace();
    apply_transition(layout, rho, P);
    P.diagonal() += q;
    P = (0.5 * (P + P.transpose())).eval();
}

// Prior for a_1: mean zero, variance kappa on diffuse states and the
// stationary variance on the AR disturbance.
template <typename Scalar>
void initial_state(const StateLayout& layout, const BasicHyperparams<Scalar>& h, Scalar kappa, Vector<Scalar>& a,
                   Matrix<Scalar>& P) {
    const int m = layout.dimension();
    a = Vector<Scalar>::Zero(m);
    P = Matrix<Scalar>::Zero(m, m);
    for (int i = 0; i < m; ++i) P(i, i) = kappa;
    P(layout.ar(), layout.ar()) = h.ar_var / (1 - h.rho * h.rho);
}

template <typename Scalar>
struct FilterStep {
    Vector<Scalar> a_pred;  // a_{t|t-1}
    Matrix<Scalar> P_pred;  // P_{t|t-1}
    bool observed = false;
    Scalar innovation = 0;           // v_t
    Scalar innovation_variance = 0;  // F_t
};

template <typename Scalar>
struct FilterResult {
    Scalar loglik = 0;
    int observations = 0;
    Vector<Scalar> a_final;  // a_{n|n}
    Matrix<Scalar> P_final;  // P_{n|n}
    std::vector<FilterStep<Scalar>> steps;  // filled when requested
};

struct FilterOptions {
    double observation_ridge = 0.0;
    bool keep_steps = false;
};

// Runs the prediction/update recursion over z. Days with z missing only
// predict. `rows` must have the same length as `z`.
template <typename Scalar>
FilterResult<Scalar> kalman_filter(const StateLayout& layout, const BasicHyperparams<Scalar>& h,
                                   std::span<const std::optional<double>> z, std::span<const RegressorRow> rows,
                                   Vector<Scalar> a, Matrix<Scalar> P, const FilterOptions& options = {}) {
    if (z.size() != rows.size()) throw InvalidInput("kalman_filter: observation/regressor length mismatch");
    const Scalar log_2pi = std::log(2 * std::numbers::pi_v<Scalar>);
    const Vector<Scalar> q = state_noise_variances(layout, h);
    const Scalar ridge = static_cast<Scalar>(options.observation_ridge);

    FilterResult<Scalar> out;
    if (options.keep_steps) out.steps.reserve(z.size());
    Vector<Scalar> PZ(layout.dimension());

    for (std::size_t t = 0; t < z.size(); ++t) {
        if (t > 0) {
            apply_transition(layout, h.rho, a);
            predict_covariance(layout, h.rho, q, P);
        }
        FilterStep<Scalar> step;
        if (options.keep_steps) {
            step.a_pred = a;
            step.P_pred = P;
        }
        if (z[t]) {
            const RowVector<Scalar> Z = observation_row<Scalar>(layout, rows[t]);
            PZ.noalias() = P * Z.transpose();
            const Scalar F = Z.dot(PZ) + ridge;
            if (!(F > 0))
                throw NumericalError("non-positive innovation variance " + std::to_string(static_cast<double>(F)) +
                                     " at step " + std::to_string(t));
            const Scalar v = static_cast<Scalar>(*z[t]) - Z.dot(a);
            a.noalias() += PZ * (v / F);
            P.noalias() -= (PZ / F) * PZ.transpose();
            P = (0.5 * (P + P.transpose())).eval();
            out.loglik -= Scalar(0.5) * (log_2pi + std::log(F) + v * v / F);
            ++out.observations;
            step.observed = true;
            step.innovation = v;
            step.innovation_variance = F;
        }
        if (options.keep_steps) out.steps.push_back(std::move(step));
    }
    out.a_final = std::move(a);
    out.P_final = std::move(P);
    return out;
}

template <typename Scalar>
struct SmootherResult {
    std::vector<Vector<Scalar>> mean;      // E[a_t | all data]
    std::vector<Matrix<Scalar>> variance;  // Var[a_t | all data]
};

// Fixed-interval smoother in the backward (r_t, N_t) form, which needs no
// inversion of the predicted covariances.
template <typename Scalar>
SmootherResult<Scalar> smooth(const StateLayout& layout, const BasicHyperparams<Scalar>& h,
                              const FilterResult<Scalar>& filtered, std::span<const RegressorRow> rows) {
    const std::size_t n = filtered.steps.size();
    if (n != rows.size()) throw InvalidInput("smooth: filter steps were not kept or length mismatch");
    const int m = layout.dimension();
    const Matrix<Scalar> T = transition_matrix<Scalar>(layout, h.rho);

    SmootherResult<Scalar> out;
    out.mean.resize(n);
    out.variance.resize(n);
    Vector<Scalar> r = Vector<Scalar>::Zero(m);
    Matrix<Scalar> N = Matrix<Scalar>::Zero(m, m);

    for (std::size_t t = n; t-- > 0;) {
        const auto& s = filtered.steps[t];
        // r, N arrive as r_t, N_t (information from t+1 onward), leave as r_{t-1}, N_{t-1}
        if (t + 1 < n) {
            r = (T.transpose() * r).eval();
            N = (T.transpose() * N * T).eval();
        }
        if (s.observed) {
            const RowVector<Scalar> Z = observation_row<Scalar>(layout, rows[t]);
            const Vector<Scalar> PZ = s.P_pred * Z.transpose();
            const Scalar F = s.innovation_variance;
            // L = I - PZ Z / F maps the predicted to the filtered state at t
            const Matrix<Scalar> L = Matrix<Scalar>::Identity(m, m) - (PZ / F) * Z;
            r = (Z.transpose() * (s.innovation / F) + L.transpose() * r).eval();
            N = (Z.transpose() * Z / F + L.transpose() * N * L).eval();
        }
        out.mean[t] = s.a_pred + s.P_pred * r;
        Matrix<Scalar> V = s.P_pred - s.P_pred * N * s.P_pred;
        out.variance[t] = 0.5 * (V + V.transpose());
    }
    return out;
}

} // namespace pricing::ssm
