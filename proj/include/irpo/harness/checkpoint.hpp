#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "irpo/errors.hpp"
#include "irpo/numerics/linalg.hpp"

namespace irpo {

namespace fs = std::filesystem;

struct Checkpoint {
    std::string agent;
    std::uint64_t seed = 0;
    int iteration = 0;
    std::uint64_t samples = 0;
    ParamVector base;
    ParamVector output;
};

inline nlohmann::json to_json_vector(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vec from_json_vector(const nlohmann::json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline nlohmann::json checkpoint_json(const Checkpoint& c) {
    return {{"agent", c.agent},   {"seed", c.seed},
            {"iteration", c.iteration}, {"samples", c.samples},
            {"base", to_json_vector(c.base)}, {"output", to_json_vector(c.output)}};
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    try {
        Checkpoint c;
        c.agent = j.at("agent").get<std::string>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.iteration = j.at("iteration").get<int>();
        c.samples = j.at("samples").get<std::uint64_t>();
        c.base = from_json_vector(j.at("base"));
        c.output = from_json_vector(j.at("output"));
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed checkpoint: ") + e.what());
    }
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << j.dump(1) << '\n';
}

inline nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

/// Writes checkpoint_<iteration>.json into `dir` and keeps only the newest `keep`.
class CheckpointWriter {
public:
    CheckpointWriter(fs::path dir, int every = 10, std::size_t keep = 3)
        : dir_(std::move(dir)), every_(every), keep_(keep) {
        fs::create_directories(dir_);
    }

    void offer(const Checkpoint& c) {
        if (every_ <= 0 || c.iteration % every_ != 0) return;
        const fs::path path = dir_ / ("checkpoint_" + std::to_string(c.iteration) + ".json");
        write_json(path, checkpoint_json(c));
        written_.push_back(path);
        while (written_.size() > keep_) {
            fs::remove(written_.front());
            written_.erase(written_.begin());
        }
    }

    const std::vector<fs::path>& retained() const { return written_; }

private:
    fs::path dir_;
    int every_;
    std::size_t keep_;
    std::vector<fs::path> written_;
};

}  // namespace irpo
