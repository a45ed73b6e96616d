#pragma once

// Random likelihood cases shared by the unit tests and the acceptance run.

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "pricing/model.hpp"

namespace cases {

using namespace pricing::ssm;

struct RandomCase {
    ModelSpec spec;
    Hyperparams h;
    ObservationSeries obs;
    oracle::Toy toy;
    std::vector<std::vector<double>> x;
};

inline RandomCase random_case(std::mt19937_64& gen, int n) {
    std::uniform_real_distribution<double> u(0, 1);
    RandomCase c;
    c.spec.periodicity = 2 + static_cast<int>(gen() % 3);
    c.spec.regressors = {u(gen) < 0.5, u(gen) < 0.5, u(gen) < 0.5};
    c.h = {-0.95 + 1.9 * u(gen), std::pow(10.0, -4 + 4 * u(gen)), std::pow(10.0, -4 + 4 * u(gen)),
           std::pow(10.0, -3 + 3 * u(gen))};
    c.toy.k = c.spec.periodicity;
    c.toy.regressors = c.spec.regressors.count();
    c.toy.rho = c.h.rho;
    c.toy.var_tau = c.h.slope_var;
    c.toy.var_omega = c.h.seasonal_var;
    c.toy.var_eta = c.h.ar_var;
    std::normal_distribution<double> nd;
    for (int t = 0; t < n; ++t) {
        RegressorRow r{0.3 * nd(gen), u(gen), double(u(gen) < 0.3), double(u(gen) < 0.3)};
        std::vector<double> xt{r.log_price};
        if (c.spec.regressors.competitive) xt.push_back(r.competitive);
        if (c.spec.regressors.holiday) xt.push_back(r.holiday);
        if (c.spec.regressors.weekend) xt.push_back(r.weekend);
        c.x.push_back(xt);
        c.obs.rows.push_back(r);
        c.obs.z.push_back(u(gen) < 0.2 ? std::nullopt : std::optional(0.5 * nd(gen)));
    }
    if (c.obs.observed() == 0) c.obs.z[0] = 0.1;
    return c;
}

} // namespace cases
