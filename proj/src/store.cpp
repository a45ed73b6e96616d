#include "pricing/store.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <json.hpp>

#include "pricing/error.hpp"

namespace pricing::app {
namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

void check_product_id(const std::string& id) {
    if (id.empty() || id == "." || id == ".." || id.find_first_of("/\\") != std::string::npos)
        throw InvalidInput("invalid product id '" + id + "'");
}

json vector_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::VectorXd vector_from(const json& j) {
    auto v = j.get<std::vector<double>>();
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd matrix_from(const json& j) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j.at(static_cast<std::size_t>(i));
        if (static_cast<Eigen::Index>(row.size()) != cols) throw std::invalid_argument("ragged matrix");
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

// RAII advisory lock on a product directory.
class DirectoryLock {
public:
    explicit DirectoryLock(const std::filesystem::path& dir) {
        const auto path = (dir / ".lock").string();
        fd_ = ::open(path.c_str(), O_RDWR | O_CREAT, 0644);
        if (fd_ < 0) throw StorageError("cannot open lock file " + path);
        if (::flock(fd_, LOCK_EX) != 0) {
            ::close(fd_);
            throw StorageError("cannot lock " + path);
        }
    }
    ~DirectoryLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    DirectoryLock(const DirectoryLock&) = delete;
    DirectoryLock& operator=(const DirectoryLock&) = delete;

private:
    int fd_ = -1;
};

} // namespace

std::string serialize_model(const ssm::FittedModel& m) {
    json j;
    j["format_version"] = kFormatVersion;
    j["version"] = m.version;
    j["fit_timestamp"] = m.fit_timestamp;
    j["train_start"] = format_date(m.train_start);
    j["train_end"] = format_date(m.train_end);
    j["spec"] = {{"periodicity", m.spec.periodicity},
                 {"regressors",
                  {{"competitive_indicator", m.spec.regressors.competitive},
                   {"is_holiday", m.spec.regressors.holiday},
                   {"is_weekend", m.spec.regressors.weekend}}},
                 {"bounds",
                  {{"min_variance", m.spec.bounds.min_variance},
                   {"max_variance", m.spec.bounds.max_variance},
                   {"max_abs_rho", m.spec.bounds.max_abs_rho}}},
                 {"diffuse_variance", m.spec.diffuse_variance},
                 {"observation_ridge", m.spec.observation_ridge}};
    j["hyperparams"] = {{"rho", m.hyper.rho},
                        {"slope_var", m.hyper.slope_var},
                        {"seasonal_var", m.hyper.seasonal_var},
                        {"ar_var", m.hyper.ar_var}};
    json coefs = json::array();
    for (const auto& c : m.coefficients)
        coefs.push_back({{"name", c.name}, {"estimate", c.estimate}, {"std_error", c.std_error}});
    j["coefficients"] = coefs;
    j["state_mean"] = vector_json(m.state_mean);
    j["state_covariance"] = matrix_json(m.state_covariance);
    j["mean_demand"] = m.mean_demand;
    j["mean_price"] = m.mean_price;
    j["loglik"] = m.loglik;
    j["observations"] = m.observations;
    j["evaluations"] = m.evaluations;
    j["metrics"] = m.metrics ? json{{"rmse_log", m.metrics->rmse_log},
                                    {"mape_percent", m.metrics->mape_percent},
                                    {"holdout_days", m.metrics->holdout_days}}
                             : json(nullptr);
    j["last_min_other_price"] = m.last_min_other_price ? json(*m.last_min_other_price) : json(nullptr);
    return j.dump(2) + "\n";
}

ssm::FittedModel deserialize_model(std::string_view text, const std::string& source) {
    try {
        const json j = json::parse(text);
        if (j.at("format_version").get<int>() != kFormatVersion)
            throw ParseError(source + ": unsupported model format version");
        ssm::FittedModel m;
        m.version = j.at("version").get<int>();
        m.fit_timestamp = j.at("fit_timestamp").get<std::string>();
        m.train_start = parse_date(j.at("train_start").get<std::string>());
        m.train_end = parse_date(j.at("train_end").get<std::string>());
        const auto& s = j.at("spec");
        m.spec.periodicity = s.at("periodicity").get<int>();
        m.spec.regressors.competitive = s.at("regressors").at("competitive_indicator").get<bool>();
        m.spec.regressors.holiday = s.at("regressors").at("is_holiday").get<bool>();
        m.spec.regressors.weekend = s.at("regressors").at("is_weekend").get<bool>();
        m.spec.bounds.min_variance = s.at("bounds").at("min_variance").get<double>();
        m.spec.bounds.max_variance = s.at("bounds").at("max_variance").get<double>();
        m.spec.bounds.max_abs_rho = s.at("bounds").at("max_abs_rho").get<double>();
        m.spec.diffuse_variance = s.at("diffuse_variance").get<double>();
        m.spec.observation_ridge = s.at("observation_ridge").get<double>();
        const auto& h = j.at("hyperparams");
        m.hyper = {h.at("rho").get<double>(), h.at("slope_var").get<double>(), h.at("seasonal_var").get<double>(),
                   h.at("ar_var").get<double>()};
        for (const auto& c : j.at("coefficients"))
            m.coefficients.push_back(
                {c.at("name").get<std::string>(), c.at("estimate").get<double>(), c.at("std_error").get<double>()});
        m.state_mean = vector_from(j.at("state_mean"));
        m.state_covariance = matrix_from(j.at("state_covariance"));
        m.mean_demand = j.at("mean_demand").get<double>();
        m.mean_price = j.at("mean_price").get<double>();
        m.loglik = j.at("loglik").get<double>();
        m.observations = j.at("observations").get<int>();
        m.evaluations = j.at("evaluations").get<int>();
        if (const auto& mt = j.at("metrics"); !mt.is_null())
            m.metrics = ssm::Metrics{mt.at("rmse_log").get<double>(), mt.at("mape_percent").get<double>(),
                                     mt.at("holdout_days").get<int>()};
        if (const auto& p = j.at("last_min_other_price"); !p.is_null()) m.last_min_other_price = p.get<double>();

        m.spec.validate();
        const int dim = m.spec.layout().dimension();
        if (m.state_mean.size() != dim || m.state_covariance.rows() != dim || m.state_covariance.cols() != dim)
            throw ParseError(source + ": state dimension does not match the model spec");
        return m;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError(source + ": " + e.what());
    }
}

ModelStore::ModelStore(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path ModelStore::model_path(const std::string& product_id, int version) const {
    check_product_id(product_id);
    return root_ / product_id / ("model_v" + std::to_string(version) + ".json");
}

std::vector<int> ModelStore::versions(const std::string& product_id) const {
    check_product_id(product_id);
    std::vector<int> out;
    const auto dir = root_ / product_id;
    if (!std::filesystem::is_directory(dir)) return out;
    static const std::regex pattern(R"(model_v([1-9][0-9]*)\.json)");
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        std::smatch m;
        const auto name = entry.path().filename().string();
        if (std::regex_match(name, m, pattern)) out.push_back(std::stoi(m[1].str()));
    }
    std::sort(out.begin(), out.end());
    return out;
}

int ModelStore::save(const std::string& product_id, const ssm::FittedModel& model) const {
    check_product_id(product_id);
    const auto dir = root_ / product_id;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw StorageError("cannot create " + dir.string() + ": " + ec.message());

    DirectoryLock lock(dir);
    const auto existing = versions(product_id);
    const int version = existing.empty() ? 1 : existing.back() + 1;
    ssm::FittedModel stored = model;
    stored.version = version;
    const auto text = serialize_model(stored);

    const auto path = model_path(product_id, version);
    // "x": fail rather than replace an existing file
    std::FILE* f = std::fopen(path.c_str(), "wx");
    if (!f) throw StorageError("refusing to overwrite or cannot create " + path.string());
    const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
    const bool closed = std::fclose(f) == 0;
    if (!ok || !closed) throw StorageError("write failed for " + path.string());
    return version;
}

ssm::FittedModel ModelStore::load(const std::string& product_id, int version) const {
    const auto path = model_path(product_id, version);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFound("no model version " + std::to_string(version) + " for product '" + product_id + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return deserialize_model(buf.str(), path.string());
}

ssm::FittedModel ModelStore::load_latest(const std::string& product_id) const {
    const auto v = versions(product_id);
    if (v.empty()) throw NotFound("no stored model for product '" + product_id + "'");
    return load(product_id, v.back());
}

} // namespace pricing::app
