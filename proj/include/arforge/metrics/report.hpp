#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace arforge::metrics {

/// Quality of one repair model on its dev set.
struct ArQualityReport {
    std::string name;           // e.g. "EN2EN"
    double bleu_before = 0.0;   // noisy vs clean
    double bleu_after = 0.0;    // repaired vs clean
    double change_rate = 0.0;
    double better_rate = 0.0;
    std::size_t sentences = 0;
};

/// Scores noisy/repaired/clean dev triples. Throws MetricError on empty or
/// misaligned input.
ArQualityReport assess_repair(std::string name, std::span<const std::string> noisy,
                              std::span<const std::string> repaired, std::span<const std::string> clean);

struct StrategyRow {
    std::string strategy; // config id, e.g. "BTR_ADD"
    std::string label;    // e.g. "BASE + BTR-ADD"
    double bleu = 0.0;
    double delta = 0.0;   // bleu - BASE bleu
};

struct ExperimentReport {
    std::vector<StrategyRow> strategies;
    std::vector<ArQualityReport> repairs;
};

nlohmann::json to_json(const ArQualityReport &report);
nlohmann::json to_json(const ExperimentReport &report);
ExperimentReport report_from_json(const nlohmann::json &doc);

/// Canonical JSON (sorted keys, two-space indent, trailing newline).
std::string render_json(const ExperimentReport &report);

/// "EN2EN | 47.02 | 58.47 | 79.40% | 72.17%"; the name is left-aligned and
/// padded to `name_width`.
std::string format_repair_row(const ArQualityReport &report, std::size_t name_width = 0);
/// "BASE + BTR-ADD | 29.29 | +1.77"
std::string format_strategy_row(const StrategyRow &row, std::size_t label_width = 0);

/// Fixed-width text tables: strategies (BLEU, Δ) then repair quality
/// (BLEU S_s, BLEU S_sr, CR, BR).
std::string render_table(const ExperimentReport &report);

} // namespace arforge::metrics
