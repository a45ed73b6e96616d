#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pricing/date.hpp"
#include "pricing/ingest.hpp"
#include "pricing/model.hpp"

namespace pricing::sim {

struct PricePolicy {
    // Explicit daily prices; when empty a reflected random walk on [low, high]
    // is used, moving every `hold_days` days.
    std::vector<double> sequence;
    double low = 10.0;
    double high = 30.0;
    double start = 20.0;
    double step_sd = 1.0;
    int hold_days = 3;
};

struct CompetitorProcess {
    bool random_walk = true;
    double start = 20.0;
    double low = 12.0;
    double high = 28.0;
    double step_sd = 0.3;
};

struct GroundTruth {
    double beta_x = -1.5;
    double beta_c = -0.8;
    double beta_h = 0.3;
    double beta_w = 0.2;
    double rho = 0.4;
    double sigma_tau = 0.001;
    double sigma_omega = 0.01;
    double sigma_eta = 0.1;
    int periodicity = 7;
    double mean_demand = 50.0;  // ỹ
    double mean_price = 20.0;   // x̃
    double initial_level = 0.0;
    double initial_slope = 0.0;
    std::vector<double> initial_seasonal;  // s_0, s_{-1}, ..., s_{-(k-2)}; empty = zeros
    PricePolicy price;
    CompetitorProcess competitor;
    ingest::CalendarConfig calendar;
    Date start = Date{std::chrono::year{2022} / 1 / 1};
    int days = 730;
    std::uint64_t seed = 1;

    void validate() const;
};

struct LatentDay {
    Date date;
    double level = 0.0;     // mu_t
    double slope = 0.0;     // gamma_t
    double seasonal = 0.0;  // s_t
    double ar = 0.0;        // epsilon_t
    double z = 0.0;
    double price = 0.0;
    double competitor_price = 0.0;
    double units = 0.0;
};

struct Simulation {
    std::vector<ingest::RawTransaction> transactions;
    std::vector<ingest::CompetitorQuote> quotes;
    std::vector<LatentDay> latent;
};

Simulation generate(const GroundTruth& truth);

struct RecoveryEntry {
    std::string parameter;
    double truth = 0.0;
    double estimate = 0.0;
    std::optional<double> std_error;
    std::optional<double> error_in_se;  // |estimate - truth| / se
    std::optional<bool> pass;           // only for flagged parameters
};

struct RecoveryReport {
    std::vector<RecoveryEntry> entries;

    const RecoveryEntry& entry(const std::string& parameter) const;
    // All flagged parameters within 2 standard errors.
    bool passed() const;
};

RecoveryReport recovery_report(const GroundTruth& truth, const ssm::FittedModel& fitted);

// The in-repo reference product: two years of daily history.
GroundTruth reference_product();

// date,mu,gamma,seasonal,epsilon,z
void write_latent(const std::filesystem::path& path, const std::vector<LatentDay>& latent);

} // namespace pricing::sim
