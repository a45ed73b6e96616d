#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pricing/model.hpp"

namespace pricing::app {

// Versioned JSON document with every FittedModel field at full precision.
std::string serialize_model(const ssm::FittedModel& model);
ssm::FittedModel deserialize_model(std::string_view text, const std::string& source);

// Filesystem model store: <root>/<product_id>/model_v<version>.json.
// Versions start at 1, only ever increase, and files are never overwritten.
class ModelStore {
public:
    explicit ModelStore(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    // Persists `model` under the next version and returns that version.
    int save(const std::string& product_id, const ssm::FittedModel& model) const;

    ssm::FittedModel load_latest(const std::string& product_id) const;
    ssm::FittedModel load(const std::string& product_id, int version) const;

    // Ascending.
    std::vector<int> versions(const std::string& product_id) const;

    std::filesystem::path model_path(const std::string& product_id, int version) const;

private:
    std::filesystem::path root_;
};

} // namespace pricing::app
