#include "arforge/metrics/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "arforge/metrics/bleu.hpp"
#include "arforge/metrics/rates.hpp"

namespace arforge::metrics {

namespace {

std::string fixed2(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", value);
    return buf;
}

std::string signed2(double value) {
    if (std::abs(value) < 0.005) return "+0.00";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%+.2f", value);
    return buf;
}

std::string percent2(double rate) { return fixed2(100.0 * rate) + "%"; }

std::string pad(const std::string &text, std::size_t width) {
    return text.size() >= width ? text : text + std::string(width - text.size(), ' ');
}

} // namespace

ArQualityReport assess_repair(std::string name, std::span<const std::string> noisy,
                              std::span<const std::string> repaired, std::span<const std::string> clean) {
    ArQualityReport report;
    report.name = std::move(name);
    report.bleu_before = corpus_bleu(noisy, clean).score;
    report.bleu_after = corpus_bleu(repaired, clean).score;
    report.change_rate = change_rate(noisy, repaired);
    report.better_rate = better_rate(noisy, repaired, clean);
    report.sentences = noisy.size();
    return report;
}

nlohmann::json to_json(const ArQualityReport &r) {
    return {{"name", r.name},
            {"bleu_before", r.bleu_before},
            {"bleu_after", r.bleu_after},
            {"change_rate", r.change_rate},
            {"better_rate", r.better_rate},
            {"sentences", r.sentences}};
}

nlohmann::json to_json(const ExperimentReport &report) {
    nlohmann::json doc;
    doc["strategies"] = nlohmann::json::array();
    for (const auto &row : report.strategies)
        doc["strategies"].push_back(
            {{"strategy", row.strategy}, {"label", row.label}, {"bleu", row.bleu}, {"delta", row.delta}});
    doc["repairs"] = nlohmann::json::array();
    for (const auto &r : report.repairs) doc["repairs"].push_back(to_json(r));
    return doc;
}

ExperimentReport report_from_json(const nlohmann::json &doc) {
    ExperimentReport report;
    for (const auto &row : doc.at("strategies"))
        report.strategies.push_back({row.at("strategy").get<std::string>(), row.at("label").get<std::string>(),
                                     row.at("bleu").get<double>(), row.at("delta").get<double>()});
    for (const auto &r : doc.at("repairs"))
        report.repairs.push_back({r.at("name").get<std::string>(), r.at("bleu_before").get<double>(),
                                  r.at("bleu_after").get<double>(), r.at("change_rate").get<double>(),
                                  r.at("better_rate").get<double>(), r.at("sentences").get<std::size_t>()});
    return report;
}

std::string render_json(const ExperimentReport &report) { return to_json(report).dump(2) + "\n"; }

std::string format_repair_row(const ArQualityReport &r, std::size_t name_width) {
    return pad(r.name, name_width) + " | " + fixed2(r.bleu_before) + " | " + fixed2(r.bleu_after) + " | " +
           percent2(r.change_rate) + " | " + percent2(r.better_rate);
}

std::string format_strategy_row(const StrategyRow &row, std::size_t label_width) {
    return pad(row.label, label_width) + " | " + fixed2(row.bleu) + " | " + signed2(row.delta);
}

std::string render_table(const ExperimentReport &report) {
    std::string out;
    if (!report.strategies.empty()) {
        std::size_t width = std::string("Model").size();
        for (const auto &row : report.strategies) width = std::max(width, row.label.size());
        const std::string header = pad("Model", width) + " | BLEU  | Δ";
        out += header + "\n" + std::string(width + 16, '-') + "\n";
        for (const auto &row : report.strategies) out += format_strategy_row(row, width) + "\n";
    }
    if (!report.repairs.empty()) {
        if (!out.empty()) out += "\n";
        std::size_t width = std::string("Model").size();
        for (const auto &r : report.repairs) width = std::max(width, r.name.size());
        out += pad("Model", width) + " | BLEU S_s | BLEU S_sr | CR | BR\n";
        out += std::string(width + 40, '-') + "\n";
        for (const auto &r : report.repairs) out += format_repair_row(r, width) + "\n";
    }
    return out;
}

} // namespace arforge::metrics
