#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace pricing::optim {

template <typename Scalar>
struct NelderMeadResult {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
    Scalar value = std::numeric_limits<Scalar>::infinity();
    int evaluations = 0;
    bool converged = false;
};

struct NelderMeadOptions {
    int max_evaluations = 1000;
    double f_tolerance = 1e-8;  // spread of simplex values, relative to 1 + |best value|
    double x_tolerance = 1e-6;  // simplex extent, infinity norm
};

// Minimizes f from x0 with an axis-aligned initial simplex of the given step
// sizes. Non-finite values are treated as +inf.
template <typename Scalar, typename F>
NelderMeadResult<Scalar> nelder_mead(F&& f, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x0,
                                     const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& step,
                                     const NelderMeadOptions& options = {}) {
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    const int n = static_cast<int>(x0.size());
    NelderMeadResult<Scalar> out;

    auto eval = [&](const Vec& x) {
        ++out.evaluations;
        Scalar v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<Scalar>::infinity();
    };

    if (n == 0) {
        out.x = x0;
        out.value = eval(x0);
        out.converged = true;
        return out;
    }

    std::vector<Vec> simplex(n + 1, x0);
    std::vector<Scalar> values(n + 1);
    for (int i = 0; i < n; ++i) simplex[i + 1](i) += step(i);
    for (int i = 0; i <= n; ++i) values[i] = eval(simplex[i]);

    std::vector<int> order(n + 1);
    while (true) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return values[a] < values[b]; });
        const int best = order.front();
        const int worst = order.back();
        const int second_worst = order[n - 1];

        Scalar extent = 0;
        for (int i = 0; i <= n; ++i) extent = std::max(extent, (simplex[i] - simplex[best]).cwiseAbs().maxCoeff());
        const Scalar spread = values[worst] - values[best];
        const Scalar f_tol = options.f_tolerance * (1 + std::abs(values[best]));
        if (std::isfinite(values[worst]) && spread <= f_tol && extent <= options.x_tolerance) {
            out.converged = true;
            break;
        }
        if (std::isfinite(values[best]) && std::isfinite(values[worst]) && spread <= f_tol * 1e-3) {
            // flat enough that further shrinking cannot change the value
            out.converged = true;
            break;
        }
        if (out.evaluations >= options.max_evaluations) break;

        Vec centroid = Vec::Zero(n);
        for (int i = 0; i <= n; ++i)
            if (i != worst) centroid += simplex[i];
        centroid /= static_cast<Scalar>(n);

        const Vec reflected = centroid + (centroid - simplex[worst]);
        const Scalar fr = eval(reflected);
        if (fr < values[best]) {
            const Vec expanded = centroid + 2 * (centroid - simplex[worst]);
            const Scalar fe = eval(expanded);
            if (fe < fr) {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second_worst]) {
            simplex[worst] = reflected;
            values[worst] = fr;
            continue;
        }
        const bool outside = fr < values[worst];
        const Vec contracted = outside ? Vec(centroid + Scalar(0.5) * (reflected - centroid))
                                       : Vec(centroid + Scalar(0.5) * (simplex[worst] - centroid));
        const Scalar fc = eval(contracted);
        if (fc < (outside ? fr : values[worst])) {
            simplex[worst] = contracted;
            values[worst] = fc;
            continue;
        }
        for (int i = 0; i <= n; ++i) {
            if (i == best) continue;
            simplex[i] = simplex[best] + Scalar(0.5) * (simplex[i] - simplex[best]);
            values[i] = eval(simplex[i]);
        }
    }

    int best = 0;
    for (int i = 1; i <= n; ++i)
        if (values[i] < values[best]) best = i;
    out.x = simplex[best];
    out.value = values[best];
    return out;
}

} // namespace pricing::optim
