#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pricing/date.hpp"

namespace pricing::forecast {
struct ForecastGrid;
}

namespace pricing::opt {

// Constraint slack, in units of inventory.
inline constexpr double kFeasibilityTolerance = 1e-9;

// Choose one price level per period to maximize total revenue, without
// replenishment, ending with at most (1 - alpha) * s0 units in stock.
struct PricingProblem {
    std::vector<double> prices;  // p_i
    Eigen::MatrixXd demand;      // d_it, levels x periods
    Eigen::MatrixXd revenue;     // r_it = p_i d_it
    double initial_inventory = 0.0;  // s0
    double min_sell_through = 0.0;   // alpha

    int levels() const { return static_cast<int>(demand.rows()); }
    int periods() const { return static_cast<int>(demand.cols()); }
    void validate() const;

    static PricingProblem from_grid(const forecast::ForecastGrid& grid, double s0, double alpha);
};

struct PricingPlan {
    std::vector<int> levels;       // 0-based level per period
    std::vector<double> inventory;  // S_0 = s0, S_t = S_{t-1} - d_t; size periods + 1
    double objective = 0.0;
    double sell_through = 0.0;
};

enum class SolveStatus { Optimal, Infeasible };
enum class SolverKind { Enumeration, BranchAndBound };

std::string to_string(SolveStatus s);
std::string to_string(SolverKind s);

struct SolveOutcome {
    SolveStatus status = SolveStatus::Infeasible;
    std::optional<PricingPlan> plan;
    long long nodes = 0;
    SolverKind solver = SolverKind::Enumeration;
};

struct SolveOptions {
    // k^n at or below this is enumerated exhaustively, above it is searched
    // by branch-and-bound.
    double enumeration_threshold = 1e6;
};

// Exact; among optimal plans returns the lexicographically smallest level
// sequence.
SolveOutcome solve(const PricingProblem& problem, const SolveOptions& options = {});

// Reference solver: checks every one of the k^n sequences (k^n <= 1e7).
SolveOutcome brute_force(const PricingProblem& problem);

// (s0 - S_n) / s0
double sell_through(const PricingPlan& plan, double initial_inventory);

struct SweepEntry {
    double alpha = 0.0;
    SolveOutcome outcome;
};

std::vector<SweepEntry> sweep_alpha(const PricingProblem& problem, std::span<const double> alphas,
                                    const SolveOptions& options = {});

// Mean selected price over the plan's periods.
double mean_price(const PricingProblem& problem, const PricingPlan& plan);

// bucket,level,price,demand,revenue,remaining_inventory; with `alpha` set an
// alpha column leads each row. Infeasible outcomes produce the header only.
void write_plan(const std::filesystem::path& path, const PricingProblem& problem, const SolveOutcome& outcome,
                const std::vector<Date>& buckets, std::optional<double> alpha = std::nullopt);

// alpha,status,objective,sell_through,mean_price
void write_sweep_summary(const std::filesystem::path& path, const PricingProblem& problem,
                         const std::vector<SweepEntry>& sweep);

} // namespace pricing::opt
