#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "errors.hpp"

namespace aplab {

/// Collects CSV artifacts of one run and writes them with a manifest.
class RunArtifacts {
  public:
    explicit RunArtifacts(std::filesystem::path dir) : dir_(std::move(dir)) {}

    void add(const std::string &name, const std::string &body) {
        std::filesystem::create_directories(dir_);
        std::ofstream f(dir_ / name, std::ios::binary);
        if (!f)
            throw std::runtime_error("cannot write " + (dir_ / name).string());
        f << body;
        files_.push_back(name);
    }

    /// Manifest with config echo, seed, operator digest and file list; the only timestamped file.
    void manifest(const std::string &subcommand, const RunConfig &cfg, const std::string &operator_hash) {
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::ostringstream os;
        os << "subcommand = " << subcommand << '\n';
        os << "timestamp = " << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ") << '\n';
        os << "seed = " << cfg.seed << '\n';
        os << "operator_hash = " << operator_hash << '\n';
        os << "files = ";
        for (std::size_t i = 0; i < files_.size(); ++i)
            os << (i ? "," : "") << files_[i];
        os << "\n\n# config\n" << to_ini(cfg);
        std::filesystem::create_directories(dir_);
        std::ofstream f(dir_ / "manifest.txt", std::ios::binary);
        f << os.str();
    }

    const std::filesystem::path &dir() const { return dir_; }

  private:
    std::filesystem::path dir_;
    std::vector<std::string> files_;
};

} // namespace aplab
