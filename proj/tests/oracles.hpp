#pragma once

// Reference computations that share no code with the library.

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// Structural model written out from its definition:
//   z_t = mu_t + s_t + e_t + sum_j beta_j x_jt
//   mu_{t+1} = mu_t + g_t, g_{t+1} = g_t + tau, s_{t+1} = -sum_{j<k-1} s_{t-j} + omega,
//   e_{t+1} = rho e_t + eta, beta static.
// State: [mu, g, s_t .. s_{t-k+2}, e, beta_1..beta_r].
struct Toy {
    int k = 7;
    int regressors = 4;
    long double rho = 0, var_tau = 0, var_omega = 0, var_eta = 1;
    long double kappa = 1e7L;

    int dim() const { return 2 + (k - 1) + 1 + regressors; }
    int ar() const { return 2 + (k - 1); }

    LMatrix T() const {
        LMatrix t = LMatrix::Zero(dim(), dim());
        t(0, 0) = 1;
        t(0, 1) = 1;
        t(1, 1) = 1;
        for (int j = 0; j < k - 1; ++j) t(2, 2 + j) = -1;
        for (int j = 3; j < 2 + (k - 1); ++j) t(j, j - 1) = 1;
        t(ar(), ar()) = rho;
        for (int j = ar() + 1; j < dim(); ++j) t(j, j) = 1;
        return t;
    }
    LMatrix Q() const {
        LMatrix q = LMatrix::Zero(dim(), dim());
        q(1, 1) = var_tau;
        q(2, 2) = var_omega;
        q(ar(), ar()) = var_eta;
        return q;
    }
    LMatrix P1() const {
        LMatrix p = LMatrix::Identity(dim(), dim()) * kappa;
        p(ar(), ar()) = var_eta / (1 - rho * rho);
        return p;
    }
    // x holds the regressor values for one day
    Eigen::Matrix<long double, 1, Eigen::Dynamic> Z(const std::vector<double>& x) const {
        Eigen::Matrix<long double, 1, Eigen::Dynamic> z = Eigen::Matrix<long double, 1, Eigen::Dynamic>::Zero(dim());
        z(0) = 1;
        z(2) = 1;
        z(ar()) = 1;
        for (int j = 0; j < regressors; ++j) z(ar() + 1 + j) = x[static_cast<std::size_t>(j)];
        return z;
    }
};

// Log-density of the observed z under the joint Gaussian implied by
// unrolling the state recursion: Cov(a_i, a_j) = V_i (T')^{j-i} for i <= j.
inline long double dense_loglik(const Toy& m, const std::vector<std::optional<double>>& z,
                                const std::vector<std::vector<double>>& x) {
    const int n = static_cast<int>(z.size());
    const LMatrix T = m.T(), Q = m.Q();
    std::vector<LMatrix> V(static_cast<std::size_t>(n));
    V[0] = m.P1();
    for (int t = 1; t < n; ++t) V[t] = T * V[t - 1] * T.transpose() + Q;

    std::vector<int> idx;
    for (int t = 0; t < n; ++t)
        if (z[t]) idx.push_back(t);
    const int p = static_cast<int>(idx.size());
    LMatrix S(p, p);
    LVector y(p);
    for (int a = 0; a < p; ++a) {
        const int i = idx[a];
        y(a) = *z[i];
        for (int b = a; b < p; ++b) {
            const int j = idx[b];
            LMatrix C = V[i];
            for (int s = i; s < j; ++s) C = (C * T.transpose()).eval();
            S(a, b) = S(b, a) = (m.Z(x[i]) * C * m.Z(x[j]).transpose())(0, 0);
        }
    }
    Eigen::LLT<LMatrix> llt(S);
    const LVector w = llt.matrixL().solve(y);
    long double logdet = 0;
    for (int a = 0; a < p; ++a) logdet += 2 * std::log(llt.matrixL()(a, a));
    return -0.5L * (p * std::log(2 * std::numbers::pi_v<long double>) + logdet + w.squaredNorm());
}

// Normal equations in long double.
inline LVector ols(const LMatrix& X, const LVector& y) {
    const LMatrix XtX = X.transpose() * X;
    return XtX.ldlt().solve(X.transpose() * y);
}

// Exhaustive plan search, odometer order with level 0 fastest-varying in the
// last period, so the first optimum met is the lexicographically smallest.
struct Plan {
    bool feasible = false;
    std::vector<int> levels;
    double objective = 0;
};

inline Plan enumerate(const Eigen::MatrixXd& demand, const Eigen::MatrixXd& revenue, double s0, double alpha,
                      double tol = 1e-9) {
    const int k = static_cast<int>(demand.rows()), n = static_cast<int>(demand.cols());
    std::vector<int> l(static_cast<std::size_t>(n), 0);
    Plan best;
    while (true) {
        double stock = s0, r = 0;
        bool ok = true;
        for (int t = 0; t < n; ++t) {
            stock -= demand(l[t], t);
            r += revenue(l[t], t);
            if (stock < -tol) ok = false;
        }
        if (ok && stock > (1 - alpha) * s0 + tol) ok = false;
        if (ok && (!best.feasible || r > best.objective)) best = {true, l, r};
        int t = n - 1;
        while (t >= 0 && ++l[t] == k) l[t--] = 0;
        if (t < 0) break;
    }
    return best;
}

} // namespace oracle
