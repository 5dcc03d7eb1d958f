#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace arforge::pipeline {

/// Hex FNV-1a 64 of a file's bytes.
std::string hash_file(const std::filesystem::path &path);

struct StageRecord {
    std::map<std::string, std::string> inputs;  // path -> content hash
    std::map<std::string, std::string> outputs; // path -> content hash
    std::uint64_t seed = 0;
    std::string settings; // hash of the stage's configuration slice
    double wall_seconds = 0.0;
};

/// Per-stage record persisted as JSON in the run directory. A stage whose
/// inputs, seed and settings are unchanged and whose outputs still hash to
/// the recorded values can be skipped.
class StageLedger {
  public:
    explicit StageLedger(std::filesystem::path file);

    /// Loads the file when present; a missing file is an empty ledger.
    void load();
    void save() const;

    bool is_current(const std::string &stage, const std::vector<std::filesystem::path> &inputs, std::uint64_t seed,
                    const std::string &settings) const;

    void record(const std::string &stage, const std::vector<std::filesystem::path> &inputs,
                const std::vector<std::filesystem::path> &outputs, std::uint64_t seed, const std::string &settings,
                double wall_seconds);

    std::optional<StageRecord> find(const std::string &stage) const;
    const std::map<std::string, StageRecord> &records() const { return records_; }

  private:
    std::filesystem::path file_;
    std::map<std::string, StageRecord> records_;
};

} // namespace arforge::pipeline
