#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dwlab/config.hpp"
#include "dwlab/errors.hpp"

namespace dwlab::lab {

inline constexpr int schema_version = 1;
inline constexpr const char* tool_version = "0.1.0";

enum class Kind { gen, train, difficulty, bound, check, report };

const char* to_string(Kind k);
Kind kind_from_string(const std::string& s);

/// Invalid command line or configuration: exit status 2, nothing written.
class UsageError : public SpecificationError {
public:
    using SpecificationError::SpecificationError;
};

/// Inputs to the reporter disagree (e.g. mixed schema versions).
class ReportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ArtifactRecord {
    std::string path;  // relative to the output directory
    std::string sha256;
    std::size_t bytes = 0;
};

struct RunManifest {
    std::string kind;
    std::string config_digest;
    std::string tool_version = lab::tool_version;
    std::string started_at;
    std::string finished_at;
    std::uint64_t seed = 0;
    int schema_version = lab::schema_version;
    std::vector<ArtifactRecord> artifacts;

    json to_json() const;
    static RunManifest from_json(const json& j);
};

struct RunOptions {
    /// Relative dataset and report input paths resolve against this directory.
    std::filesystem::path base_dir = ".";
    std::filesystem::path out_dir = "out";
    /// Worker cap for the estimators; 0 keeps the configured value.
    std::size_t jobs = 0;
};

/// Everything a run will write, computed before anything touches the disk.
struct ArtifactSet {
    std::vector<std::pair<std::string, std::string>> files;  // name, content

    void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
};

/// Computes the artifacts of one experiment. Throws UsageError for invalid
/// configurations and lets runtime failures propagate.
ArtifactSet compute(Kind kind, const json& config, const RunOptions& opts);

/// compute() followed by atomic emission of every artifact and then the
/// manifest, which lists each artifact with its SHA-256.
RunManifest run(Kind kind, const json& config, const RunOptions& opts);

/// Builds the report bundle from run directories (each holding a manifest).
ArtifactSet build_report(const std::vector<std::filesystem::path>& inputs);

/// Full command-line entry point; returns the process exit status.
int main(int argc, char** argv);

}  // namespace dwlab::lab
