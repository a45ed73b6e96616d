#include "pricing/optimize.hpp"

#include <cmath>

#include "pricing/csv.hpp"
#include "pricing/error.hpp"
#include "pricing/forecast.hpp"

namespace pricing::opt {
namespace {

// Depth-first search over periods, trying levels in ascending order so the
// first optimum found is the lexicographically smallest one. Later candidates
// replace the incumbent only on strict improvement.
class Search {
public:
    Search(const PricingProblem& p, bool prune) : p_(p), prune_(prune), n_(p.periods()), k_(p.levels()) {
        max_revenue_after_.assign(static_cast<std::size_t>(n_ + 1), 0.0);
        max_demand_after_.assign(static_cast<std::size_t>(n_ + 1), 0.0);
        min_demand_after_.assign(static_cast<std::size_t>(n_ + 1), 0.0);
        for (int t = n_ - 1; t >= 0; --t) {
            const auto u = static_cast<std::size_t>(t);
            max_revenue_after_[u] = max_revenue_after_[u + 1] + p.revenue.col(t).maxCoeff();
            max_demand_after_[u] = max_demand_after_[u + 1] + p.demand.col(t).maxCoeff();
            min_demand_after_[u] = min_demand_after_[u + 1] + p.demand.col(t).minCoeff();
        }
        s0_ = p.initial_inventory;
        floor_ = p.min_sell_through * s0_;
        ceiling_ = (1.0 - p.min_sell_through) * s0_ + kFeasibilityTolerance;
        margin_ = 1e-9 * (1.0 + s0_);
        current_.assign(static_cast<std::size_t>(n_), 0);
    }

    void run() { visit(0, 0.0, s0_, 0.0); }

    bool found() const { return found_; }
    const std::vector<int>& best() const { return best_; }
    long long nodes() const { return nodes_; }

private:
    void visit(int t, double revenue, double stock, double sold) {
        ++nodes_;
        if (t == n_) {
            if (stock > ceiling_) return;
            if (!found_ || revenue > best_value_) {
                found_ = true;
                best_value_ = revenue;
                best_ = current_;
            }
            return;
        }
        const auto u = static_cast<std::size_t>(t);
        if (prune_) {
            if (found_ && revenue + max_revenue_after_[u] < best_value_ - 1e-9 * (1.0 + std::abs(best_value_))) return;
            if (sold + max_demand_after_[u] < floor_ - kFeasibilityTolerance - margin_) return;
            if (sold + min_demand_after_[u] > s0_ + kFeasibilityTolerance + margin_) return;
        }
        for (int i = 0; i < k_; ++i) {
            const double next_stock = stock - p_.demand(i, t);
            if (next_stock < -kFeasibilityTolerance) continue;
            current_[u] = i;
            visit(t + 1, revenue + p_.revenue(i, t), next_stock, sold + p_.demand(i, t));
        }
    }

    const PricingProblem& p_;
    bool prune_;
    int n_;
    int k_;
    double s0_ = 0.0;
    double floor_ = 0.0;
    double ceiling_ = 0.0;
    double margin_ = 0.0;
    std::vector<double> max_revenue_after_, max_demand_after_, min_demand_after_;
    std::vector<int> current_;
    std::vector<int> best_;
    double best_value_ = 0.0;
    bool found_ = false;
    long long nodes_ = 0;
};

PricingPlan make_plan(const PricingProblem& p, const std::vector<int>& levels) {
    PricingPlan plan;
    plan.levels = levels;
    plan.inventory.push_back(p.initial_inventory);
    for (int t = 0; t < p.periods(); ++t) {
        const int i = levels[static_cast<std::size_t>(t)];
        plan.objective += p.revenue(i, t);
        plan.inventory.push_back(plan.inventory.back() - p.demand(i, t));
    }
    plan.sell_through = sell_through(plan, p.initial_inventory);
    return plan;
}

double combinations(const PricingProblem& p) { return std::pow(static_cast<double>(p.levels()), p.periods()); }

} // namespace

std::string to_string(SolveStatus s) { return s == SolveStatus::Optimal ? "optimal" : "infeasible"; }
std::string to_string(SolverKind s) { return s == SolverKind::Enumeration ? "enumeration" : "branch-and-bound"; }

void PricingProblem::validate() const {
    if (demand.rows() < 1 || demand.cols() < 1) throw InvalidInput("pricing problem needs >= 1 level and period");
    if (static_cast<Eigen::Index>(prices.size()) != demand.rows())
        throw InvalidInput("pricing problem: price count does not match demand rows");
    if (revenue.rows() != demand.rows() || revenue.cols() != demand.cols())
        throw InvalidInput("pricing problem: revenue and demand shapes differ");
    if (!(initial_inventory > 0.0) || !std::isfinite(initial_inventory))
        throw InvalidInput("starting inventory must be > 0");
    if (!(min_sell_through >= 0.0 && min_sell_through <= 1.0))
        throw InvalidInput("minimum sell-through must lie in [0, 1]");
    for (Eigen::Index i = 0; i < demand.rows(); ++i) {
        for (Eigen::Index t = 0; t < demand.cols(); ++t) {
            const double d = demand(i, t);
            if (!(d >= 0.0) || !std::isfinite(d)) throw InvalidInput("demand must be finite and >= 0");
            const double r = prices[static_cast<std::size_t>(i)] * d;
            if (std::abs(revenue(i, t) - r) > 1e-9 * std::max(1.0, std::abs(r)))
                throw InvalidInput("revenue must equal price * demand");
        }
    }
}

PricingProblem PricingProblem::from_grid(const forecast::ForecastGrid& grid, double s0, double alpha) {
    PricingProblem p;
    p.prices = grid.ladder.levels;
    p.demand = grid.demand;
    p.revenue = grid.revenue;
    p.initial_inventory = s0;
    p.min_sell_through = alpha;
    p.validate();
    return p;
}

SolveOutcome solve(const PricingProblem& problem, const SolveOptions& options) {
    problem.validate();
    const bool enumerate = combinations(problem) <= options.enumeration_threshold;
    Search search(problem, !enumerate);
    search.run();
    SolveOutcome out;
    out.solver = enumerate ? SolverKind::Enumeration : SolverKind::BranchAndBound;
    out.nodes = search.nodes();
    if (search.found()) {
        out.status = SolveStatus::Optimal;
        out.plan = make_plan(problem, search.best());
    }
    return out;
}

SolveOutcome brute_force(const PricingProblem& problem) {
    problem.validate();
    if (combinations(problem) > 1e7) throw InvalidInput("brute_force: instance exceeds 1e7 candidate plans");
    const int k = problem.levels();
    const int n = problem.periods();
    const double s0 = problem.initial_inventory;
    const double max_remaining = (1.0 - problem.min_sell_through) * s0;

    std::vector<int> seq(static_cast<std::size_t>(n), 0);
    std::optional<std::vector<int>> best;
    double best_value = 0.0;
    long long candidates = 0;
    while (true) {
        ++candidates;
        double value = 0.0;
        double stock = s0;
        bool ok = true;
        for (int t = 0; t < n; ++t) {
            const int i = seq[static_cast<std::size_t>(t)];
            value += problem.revenue(i, t);
            stock -= problem.demand(i, t);
            if (stock < -kFeasibilityTolerance) ok = false;
        }
        if (stock > max_remaining + kFeasibilityTolerance) ok = false;
        if (ok && (!best || value > best_value)) {
            best = seq;
            best_value = value;
        }
        // odometer increment, last period fastest: lexicographic order
        int t = n - 1;
        while (t >= 0 && ++seq[static_cast<std::size_t>(t)] == k) seq[static_cast<std::size_t>(t--)] = 0;
        if (t < 0) break;
    }
    SolveOutcome out;
    out.solver = SolverKind::Enumeration;
    out.nodes = candidates;
    if (best) {
        out.status = SolveStatus::Optimal;
        out.plan = make_plan(problem, *best);
    }
    return out;
}

double sell_through(const PricingPlan& plan, double initial_inventory) {
    if (!(initial_inventory > 0.0)) throw InvalidInput("starting inventory must be > 0");
    const double remaining = plan.inventory.empty() ? initial_inventory : plan.inventory.back();
    return (initial_inventory - remaining) / initial_inventory;
}

std::vector<SweepEntry> sweep_alpha(const PricingProblem& problem, std::span<const double> alphas,
                                    const SolveOptions& options) {
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] >= 0.0 && alphas[i] <= 1.0)) throw InvalidInput("sweep alphas must lie in [0, 1]");
        if (i > 0 && alphas[i] < alphas[i - 1]) throw InvalidInput("sweep alphas must be sorted ascending");
    }
    std::vector<SweepEntry> out;
    for (double alpha : alphas) {
        PricingProblem p = problem;
        p.min_sell_through = alpha;
        out.push_back({alpha, solve(p, options)});
    }
    return out;
}

double mean_price(const PricingProblem& problem, const PricingPlan& plan) {
    double sum = 0.0;
    for (int i : plan.levels) sum += problem.prices[static_cast<std::size_t>(i)];
    return plan.levels.empty() ? 0.0 : sum / static_cast<double>(plan.levels.size());
}

void write_plan(const std::filesystem::path& path, const PricingProblem& problem, const SolveOutcome& outcome,
                const std::vector<Date>& buckets, std::optional<double> alpha) {
    if (static_cast<int>(buckets.size()) != problem.periods())
        throw InvalidInput("write_plan: bucket labels do not match the horizon");
    std::vector<std::string> header{"bucket", "level", "price", "demand", "revenue", "remaining_inventory"};
    if (alpha) header.insert(header.begin(), "alpha");
    std::vector<std::vector<std::string>> rows;
    if (outcome.plan) {
        const auto& plan = *outcome.plan;
        for (int t = 0; t < problem.periods(); ++t) {
            const int i = plan.levels[static_cast<std::size_t>(t)];
            std::vector<std::string> row{format_date(buckets[static_cast<std::size_t>(t)]), std::to_string(i + 1),
                                         csv::format_number(problem.prices[static_cast<std::size_t>(i)]),
                                         csv::format_number(problem.demand(i, t)),
                                         csv::format_number(problem.revenue(i, t)),
                                         csv::format_number(plan.inventory[static_cast<std::size_t>(t + 1)])};
            if (alpha) row.insert(row.begin(), csv::format_number(*alpha));
            rows.push_back(std::move(row));
        }
    }
    csv::write(path, header, rows);
}

void write_sweep_summary(const std::filesystem::path& path, const PricingProblem& problem,
                         const std::vector<SweepEntry>& sweep) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& e : sweep) {
        if (e.outcome.plan)
            rows.push_back({csv::format_number(e.alpha), to_string(e.outcome.status),
                            csv::format_number(e.outcome.plan->objective),
                            csv::format_number(e.outcome.plan->sell_through),
                            csv::format_number(mean_price(problem, *e.outcome.plan))});
        else
            rows.push_back({csv::format_number(e.alpha), to_string(e.outcome.status), "", "", ""});
    }
    csv::write(path, {"alpha", "status", "objective", "sell_through", "mean_price"}, rows);
}

} // namespace pricing::opt
