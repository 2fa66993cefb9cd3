#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "xrr/core.hpp"

namespace testutil {

/// Self-deleting scratch directory under the system temp root.
class TempDir {
public:
    TempDir() {
        static std::mt19937_64 rng{std::random_device{}()};
        path_ = std::filesystem::temp_directory_path() /
                ("xrr_test_" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string str() const { return path_.string(); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

inline xrr::Document doc(std::string id, std::string text, std::string domain = "") {
    return {std::move(id), std::move(text), std::move(domain)};
}

inline xrr::Query query(std::string id, std::string text, std::string domain = "") {
    xrr::Query q;
    q.id = std::move(id);
    q.text = std::move(text);
    q.domain = std::move(domain);
    return q;
}

} // namespace testutil
