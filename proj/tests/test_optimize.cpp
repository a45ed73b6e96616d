#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "pricing/error.hpp"
#include "pricing/optimize.hpp"

using namespace pricing;
using namespace pricing::opt;

namespace {

PricingProblem make(std::vector<double> prices, Eigen::MatrixXd demand, double s0, double alpha) {
    PricingProblem p;
    p.prices = std::move(prices);
    p.demand = std::move(demand);
    p.revenue = p.demand;
    for (Eigen::Index i = 0; i < p.demand.rows(); ++i) p.revenue.row(i) *= p.prices[static_cast<std::size_t>(i)];
    p.initial_inventory = s0;
    p.min_sell_through = alpha;
    return p;
}

// Small integer prices and demands so that revenue ties are common.
PricingProblem random_problem(std::mt19937_64& gen, bool integral) {
    std::uniform_int_distribution<int> kk(2, 4), nn(3, 8), dd(0, 6);
    std::uniform_real_distribution<double> u(0, 1);
    const int k = kk(gen), n = nn(gen);
    std::vector<double> prices;
    double p = 1;
    for (int i = 0; i < k; ++i) prices.push_back(p += integral ? 1 + static_cast<int>(gen() % 3) : 0.5 + 3 * u(gen));
    Eigen::MatrixXd d(k, n);
    for (int t = 0; t < n; ++t) {
        // higher price, lower demand
        double level = integral ? dd(gen) + 3 * k : 5 + 20 * u(gen);
        for (int i = 0; i < k; ++i) {
            d(i, t) = std::max(0.0, level);
            level -= integral ? static_cast<int>(gen() % 3) : 4 * u(gen);
        }
    }
    double total_max = d.colwise().maxCoeff().sum();
    double s0 = total_max * (0.5 + u(gen));
    if (integral) s0 = std::round(s0);
    return make(prices, d, std::max(s0, 1.0), u(gen));
}

void check_plan_valid(const PricingProblem& p, const PricingPlan& plan) {
    REQUIRE(static_cast<int>(plan.levels.size()) == p.periods());
    double stock = p.initial_inventory, objective = 0;
    for (int t = 0; t < p.periods(); ++t) {
        const int i = plan.levels[static_cast<std::size_t>(t)];
        REQUIRE(i >= 0);
        REQUIRE(i < p.levels());
        stock -= p.demand(i, t);
        objective += p.revenue(i, t);
        CHECK(plan.inventory[static_cast<std::size_t>(t + 1)] == stock);
        CHECK(stock >= -kFeasibilityTolerance);
    }
    CHECK(stock <= (1 - p.min_sell_through) * p.initial_inventory + kFeasibilityTolerance);
    CHECK(plan.objective == objective);
}

} // namespace

TEST_CASE("solve examples") {
    Eigen::MatrixXd d(2, 1);
    d << 1, 1;
    auto two = make({5, 7}, d, 10, 0);
    auto r = solve(two);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.plan->levels == std::vector<int>{1});
    CHECK(r.plan->objective == 7);

    Eigen::MatrixXd small = Eigen::MatrixXd::Constant(2, 2, 1.0);
    small(0, 0) = 2;
    small(0, 1) = 2;
    auto hopeless = make({1, 2}, small, 10, 0.5);
    CHECK(solve(hopeless).status == SolveStatus::Infeasible);
    CHECK(brute_force(hopeless).status == SolveStatus::Infeasible);
}

TEST_CASE("brute_force examples") {
    Eigen::MatrixXd d(1, 3);
    d << 3, 3, 3;
    CHECK(brute_force(make({4}, d, 10, 0.5)).status == SolveStatus::Optimal);
    CHECK(brute_force(make({4}, d, 10, 0.95)).status == SolveStatus::Infeasible);
    CHECK(brute_force(make({4}, d, 8, 0.0)).status == SolveStatus::Infeasible);  // S_3 < 0

    // zero demand: every plan has zero revenue, the first level wins the tie
    auto zero = make({1, 2, 3}, Eigen::MatrixXd::Zero(3, 4), 10, 0);
    auto z = brute_force(zero);
    REQUIRE(z.status == SolveStatus::Optimal);
    CHECK(z.plan->levels == std::vector<int>(4, 0));
    CHECK(solve(zero).plan->levels == z.plan->levels);

    // inventory never binds: per-period argmax
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(0.1, 1);
    Eigen::MatrixXd dd(3, 5);
    for (int i = 0; i < dd.size(); ++i) dd.data()[i] = u(gen);
    auto loose = make({1, 2, 3}, dd, 1e6, 0);
    auto b = brute_force(loose);
    for (int t = 0; t < 5; ++t) {
        Eigen::Index best;
        loose.revenue.col(t).maxCoeff(&best);
        CHECK(b.plan->levels[static_cast<std::size_t>(t)] == best);
    }
}

TEST_CASE("solve agrees with brute_force and the independent enumerator") {
    std::mt19937_64 gen(99);
    int optimal = 0, infeasible = 0;
    for (int rep = 0; rep < 300; ++rep) {
        auto p = random_problem(gen, rep % 2 == 0);
        auto reference = oracle::enumerate(p.demand, p.revenue, p.initial_inventory, p.min_sell_through);
        auto bf = brute_force(p);
        for (double threshold : {1e6, 0.0}) {
            auto s = solve(p, {threshold});
            CHECK(s.solver == (threshold > 0 ? SolverKind::Enumeration : SolverKind::BranchAndBound));
            REQUIRE(s.status == bf.status);
            REQUIRE((s.status == SolveStatus::Optimal) == reference.feasible);
            if (s.plan) {
                CHECK(s.plan->objective == bf.plan->objective);
                CHECK(s.plan->objective == reference.objective);
                CHECK(s.plan->levels == bf.plan->levels);
                CHECK(s.plan->levels == reference.levels);
                check_plan_valid(p, *s.plan);
            }
        }
        (bf.status == SolveStatus::Optimal ? optimal : infeasible)++;
    }
    CHECK(optimal > 50);
    CHECK(infeasible > 20);
}

TEST_CASE("k = 3, n = 8 instance against brute force") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(1, 10);
    Eigen::MatrixXd d(3, 8);
    for (int t = 0; t < 8; ++t) {
        d(0, t) = u(gen) + 10;
        d(1, t) = d(0, t) - u(gen) / 2;
        d(2, t) = d(1, t) - u(gen) / 2;
    }
    auto p = make({10, 15, 20}, d, d.row(1).sum(), 0.9);
    auto s = solve(p, {0});
    auto b = brute_force(p);
    REQUIRE(s.status == b.status);
    if (s.plan) CHECK(s.plan->objective == b.plan->objective);
}

TEST_CASE("scaling prices scales revenue and keeps the plan") {
    std::mt19937_64 gen(31);
    for (int rep = 0; rep < 50; ++rep) {
        auto p = random_problem(gen, true);
        auto a = solve(p);
        auto q = p;
        for (auto& price : q.prices) price *= 4;  // exact in binary
        q.revenue *= 4;
        auto b = solve(q);
        REQUIRE(a.status == b.status);
        if (a.plan) {
            CHECK(a.plan->levels == b.plan->levels);
            CHECK(b.plan->objective == 4 * a.plan->objective);
        }
    }
}

TEST_CASE("sell_through") {
    PricingPlan plan;
    plan.inventory = {100, 90, 80};
    CHECK(sell_through(plan, 100) == 0.2);
    plan.inventory = {100, 100};
    CHECK(sell_through(plan, 100) == 0.0);
    plan.inventory = {100, 0};
    CHECK(sell_through(plan, 100) == 1.0);
}

TEST_CASE("sweep_alpha") {
    std::mt19937_64 gen(5);
    const std::vector<double> alphas{0.0, 0.4, 0.5, 0.6, 0.7, 0.9, 1.0};
    for (int rep = 0; rep < 100; ++rep) {
        auto p = random_problem(gen, rep % 2 == 1);
        auto sweep = sweep_alpha(p, alphas);
        REQUIRE(sweep.size() == alphas.size());
        bool seen_infeasible = false;
        double last = std::numeric_limits<double>::infinity();
        for (const auto& e : sweep) {
            if (seen_infeasible) CHECK(e.outcome.status == SolveStatus::Infeasible);
            if (e.outcome.status == SolveStatus::Infeasible) {
                seen_infeasible = true;
                continue;
            }
            CHECK(e.outcome.plan->objective <= last);
            last = e.outcome.plan->objective;
        }
        // alpha = 0 only needs S_t >= 0
        auto a0 = p;
        a0.min_sell_through = 0;
        auto ref = oracle::enumerate(p.demand, p.revenue, p.initial_inventory, 0.0);
        REQUIRE(sweep[0].outcome.status == (ref.feasible ? SolveStatus::Optimal : SolveStatus::Infeasible));
        if (ref.feasible) CHECK(sweep[0].outcome.plan->levels == ref.levels);
    }
    auto p = random_problem(gen, true);
    CHECK_THROWS_AS(sweep_alpha(p, std::vector<double>{0.5, 0.4}), InvalidInput);
    CHECK_THROWS_AS(sweep_alpha(p, std::vector<double>{1.5}), InvalidInput);
}

TEST_CASE("ten levels over eight weeks is solved by branch and bound") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0.8, 1.2);
    const int k = 10, n = 8;
    std::vector<double> prices;
    for (int i = 0; i < k; ++i) prices.push_back(10 + 2 * i);
    Eigen::MatrixXd d(k, n);
    for (int t = 0; t < n; ++t)
        for (int i = 0; i < k; ++i) d(i, t) = 100 * u(gen) * std::pow(prices[static_cast<std::size_t>(i)] / 20.0, -0.6);
    double max_total = d.colwise().maxCoeff().sum();
    auto p = make(prices, d, max_total / 0.75, 0.7);
    auto s = solve(p);
    CHECK(s.solver == SolverKind::BranchAndBound);
    REQUIRE(s.status == SolveStatus::Optimal);
    check_plan_valid(p, *s.plan);
    CHECK(s.nodes < 20'000'000);
}

TEST_CASE("invalid problems are rejected") {
    Eigen::MatrixXd d = Eigen::MatrixXd::Constant(2, 2, 1.0);
    auto p = make({1, 2}, d, 10, 0.5);
    p.revenue(0, 0) = 5;
    CHECK_THROWS_AS(solve(p), InvalidInput);
    auto q = make({1, 2}, d, 0, 0.5);
    CHECK_THROWS_AS(solve(q), InvalidInput);
    auto r = make({1, 2}, d, 10, 1.5);
    CHECK_THROWS_AS(solve(r), InvalidInput);
}
