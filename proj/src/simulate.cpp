#include "pricing/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "pricing/csv.hpp"
#include "pricing/error.hpp"
#include "pricing/rng.hpp"

namespace pricing::sim {
namespace {

double reflect(double x, double lo, double hi) {
    if (hi <= lo) return lo;
    const double width = hi - lo;
    double y = std::fmod(x - lo, 2.0 * width);
    if (y < 0) y += 2.0 * width;
    return lo + (y <= width ? y : 2.0 * width - y);
}

double round_cents(double x) { return std::round(x * 100.0) / 100.0; }

} // namespace

void GroundTruth::validate() const {
    if (periodicity < 2) throw InvalidInput("ground truth periodicity must be >= 2");
    if (!(std::abs(rho) < 1.0)) throw InvalidInput("ground truth |rho| must be < 1");
    if (sigma_tau < 0 || sigma_omega < 0 || sigma_eta < 0) throw InvalidInput("ground truth noise scales must be >= 0");
    if (!(mean_demand > 0.0) || !(mean_price > 0.0)) throw InvalidInput("ground truth ỹ and x̃ must be > 0");
    if (days < 1) throw InvalidInput("ground truth horizon must be >= 1 day");
    if (!initial_seasonal.empty() && static_cast<int>(initial_seasonal.size()) != periodicity - 1)
        throw InvalidInput("initial seasonal states must have k-1 entries");
    if (price.sequence.empty() && !(price.low > 0.0 && price.high >= price.low))
        throw InvalidInput("price random walk needs 0 < low <= high");
    for (double p : price.sequence)
        if (!(p > 0.0)) throw InvalidInput("price sequence entries must be > 0");
    if (!price.sequence.empty() && static_cast<int>(price.sequence.size()) < days)
        throw InvalidInput("price sequence shorter than the simulated horizon");
    if (!(competitor.start > 0.0) || (competitor.random_walk && !(competitor.low > 0.0 && competitor.high >= competitor.low)))
        throw InvalidInput("competitor process must stay positive");
    if (price.hold_days < 1) throw InvalidInput("price hold_days must be >= 1");
}

Simulation generate(const GroundTruth& truth) {
    truth.validate();
    // independent streams so that e.g. changing the price policy leaves the
    // latent noise unchanged
    CounterRng noise(truth.seed, 1);
    CounterRng prices(truth.seed, 2);
    CounterRng rivals(truth.seed, 3);
    CounterRng baskets(truth.seed, 4);

    const int k = truth.periodicity;
    std::vector<double> seasonal(static_cast<std::size_t>(k - 1), 0.0);  // s_t, s_{t-1}, ...
    if (!truth.initial_seasonal.empty()) seasonal = truth.initial_seasonal;
    double level = truth.initial_level;
    double slope = truth.initial_slope;
    double ar = truth.rho == 0.0 && truth.sigma_eta == 0.0
                    ? 0.0
                    : truth.sigma_eta / std::sqrt(1.0 - truth.rho * truth.rho) * noise.normal();
    double price = reflect(truth.price.start, truth.price.low, truth.price.high);
    double rival = truth.competitor.start;

    Simulation out;
    out.latent.reserve(static_cast<std::size_t>(truth.days));
    for (int t = 0; t < truth.days; ++t) {
        const Date day = truth.start + std::chrono::days{t};
        if (t > 0) {
            level += slope;
            slope += truth.sigma_tau * noise.normal();
            double lead = truth.sigma_omega * noise.normal();
            for (double s : seasonal) lead -= s;
            std::rotate(seasonal.rbegin(), seasonal.rbegin() + 1, seasonal.rend());
            seasonal.front() = lead;
            ar = truth.rho * ar + truth.sigma_eta * noise.normal();

            if (truth.competitor.random_walk)
                rival = reflect(rival + truth.competitor.step_sd * rivals.normal(), truth.competitor.low,
                                truth.competitor.high);
        }
        if (!truth.price.sequence.empty()) {
            price = truth.price.sequence[static_cast<std::size_t>(t)];
        } else if (t > 0 && t % truth.price.hold_days == 0) {
            price = round_cents(reflect(price + truth.price.step_sd * prices.normal(), truth.price.low, truth.price.high));
        } else if (t == 0) {
            price = round_cents(price);
        }
        const double quote = round_cents(rival);

        const auto flags = ingest::calendar_features(day, truth.calendar);
        const double c = price / (price + quote);
        const double z = truth.beta_x * std::log(price / truth.mean_price) + truth.beta_c * c +
                         truth.beta_h * (flags.is_holiday ? 1.0 : 0.0) + truth.beta_w * (flags.is_weekend ? 1.0 : 0.0) +
                         level + seasonal.front() + ar;
        const double units = std::round(truth.mean_demand * std::exp(z));

        out.latent.push_back({day, level, slope, seasonal.front(), ar, z, price, quote, units});
        out.quotes.push_back({day, quote});

        // split the day's units across 1-3 same-price baskets at distinct hours
        auto remaining = static_cast<long long>(units);
        if (remaining <= 0) continue;
        const int parts = static_cast<int>(std::min<long long>(remaining, baskets.uniform_int(1, 3)));
        int hour = baskets.uniform_int(8, 12);
        for (int p = 0; p < parts; ++p) {
            long long qty = remaining;
            if (p + 1 < parts) {
                const long long max_here = remaining - (parts - p - 1);
                qty = 1 + static_cast<long long>(baskets.next() % static_cast<std::uint64_t>(max_here));
            }
            remaining -= qty;
            const int minute = baskets.uniform_int(0, 59);
            ingest::RawTransaction tx;
            tx.timestamp = day + std::chrono::hours{hour} + std::chrono::minutes{minute};
            tx.retail_price = price;
            tx.quantity = static_cast<double>(qty);
            tx.discount_amount = 0.0;
            out.transactions.push_back(tx);
            hour += baskets.uniform_int(1, 3);
        }
    }
    return out;
}

const RecoveryEntry& RecoveryReport::entry(const std::string& parameter) const {
    for (const auto& e : entries)
        if (e.parameter == parameter) return e;
    throw NotFound("recovery report has no entry for " + parameter);
}

bool RecoveryReport::passed() const {
    return std::all_of(entries.begin(), entries.end(), [](const RecoveryEntry& e) { return !e.pass || *e.pass; });
}

RecoveryReport recovery_report(const GroundTruth& truth, const ssm::FittedModel& fitted) {
    RecoveryReport report;
    auto add_coefficient = [&](const std::string& name, ssm::Regressor r, double value) {
        auto layout = fitted.spec.layout();
        if (!layout.coefficient(r)) return;
        const auto& c = fitted.coefficient(r);
        RecoveryEntry e{name, value, c.estimate, c.std_error, std::nullopt, std::nullopt};
        if (c.std_error > 0.0) {
            e.error_in_se = std::abs(c.estimate - value) / c.std_error;
            e.pass = *e.error_in_se <= 2.0;
        } else {
            e.pass = c.estimate == value;
        }
        report.entries.push_back(e);
    };
    add_coefficient("beta_x", ssm::Regressor::LogPrice, truth.beta_x);
    add_coefficient("beta_c", ssm::Regressor::Competitive, truth.beta_c);
    add_coefficient("beta_h", ssm::Regressor::Holiday, truth.beta_h);
    add_coefficient("beta_w", ssm::Regressor::Weekend, truth.beta_w);

    // hyperparameters carry no standard error; reported without a verdict
    report.entries.push_back({"rho", truth.rho, fitted.hyper.rho, std::nullopt, std::nullopt, std::nullopt});
    report.entries.push_back(
        {"sigma_tau", truth.sigma_tau, std::sqrt(fitted.hyper.slope_var), std::nullopt, std::nullopt, std::nullopt});
    report.entries.push_back(
        {"sigma_omega", truth.sigma_omega, std::sqrt(fitted.hyper.seasonal_var), std::nullopt, std::nullopt, std::nullopt});
    report.entries.push_back(
        {"sigma_eta", truth.sigma_eta, std::sqrt(fitted.hyper.ar_var), std::nullopt, std::nullopt, std::nullopt});
    return report;
}

GroundTruth reference_product() {
    GroundTruth g;
    g.initial_seasonal = {0.05, -0.02, -0.04, -0.03, 0.0, 0.02};
    for (int year : {2022, 2023}) {
        for (auto [m, d] : {std::pair{1u, 1u}, {2u, 14u}, {5u, 30u}, {7u, 4u}, {9u, 5u}, {11u, 24u}, {11u, 25u},
                            {12u, 24u}, {12u, 25u}, {12u, 31u}})
            g.calendar.holidays.insert(Date{std::chrono::year{year} / std::chrono::month{m} / std::chrono::day{d}});
    }
    return g;
}

void write_latent(const std::filesystem::path& path, const std::vector<LatentDay>& latent) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(latent.size());
    for (const auto& d : latent)
        rows.push_back({format_date(d.date), csv::format_number(d.level), csv::format_number(d.slope),
                        csv::format_number(d.seasonal), csv::format_number(d.ar), csv::format_number(d.z)});
    csv::write(path, {"date", "mu", "gamma", "seasonal", "epsilon", "z"}, rows);
}

} // namespace pricing::sim
