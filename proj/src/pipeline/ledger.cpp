#include "arforge/pipeline/ledger.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "json.hpp"

#include "arforge/numerics/rng.hpp"

namespace arforge::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

std::string hash_file(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(numerics::fnv1a64(bytes)));
    return buf;
}

StageLedger::StageLedger(fs::path file) : file_(std::move(file)) {}

void StageLedger::load() {
    records_.clear();
    std::ifstream in(file_);
    if (!in) return;
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception &e) {
        throw std::runtime_error("corrupt ledger " + file_.string() + ": " + e.what());
    }
    for (auto it = doc.at("stages").begin(); it != doc.at("stages").end(); ++it) {
        StageRecord r;
        r.inputs = it->at("inputs").get<std::map<std::string, std::string>>();
        r.outputs = it->at("outputs").get<std::map<std::string, std::string>>();
        r.seed = it->at("seed").get<std::uint64_t>();
        r.settings = it->at("settings").get<std::string>();
        r.wall_seconds = it->at("wall_seconds").get<double>();
        records_[it.key()] = std::move(r);
    }
}

void StageLedger::save() const {
    json stages = json::object();
    for (const auto &[name, r] : records_)
        stages[name] = {{"inputs", r.inputs},
                        {"outputs", r.outputs},
                        {"seed", r.seed},
                        {"settings", r.settings},
                        {"wall_seconds", r.wall_seconds}};
    if (!file_.parent_path().empty()) fs::create_directories(file_.parent_path());
    const fs::path tmp = file_.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << json{{"stages", stages}}.dump(2) << "\n";
    }
    fs::rename(tmp, file_);
}

bool StageLedger::is_current(const std::string &stage, const std::vector<fs::path> &inputs, std::uint64_t seed,
                             const std::string &settings) const {
    auto it = records_.find(stage);
    if (it == records_.end()) return false;
    const StageRecord &r = it->second;
    if (r.seed != seed || r.settings != settings || r.inputs.size() != inputs.size()) return false;
    for (const auto &path : inputs) {
        auto rec = r.inputs.find(path.string());
        if (rec == r.inputs.end() || !fs::exists(path) || hash_file(path) != rec->second) return false;
    }
    for (const auto &[path, hash] : r.outputs)
        if (!fs::exists(path) || hash_file(path) != hash) return false;
    return true;
}

void StageLedger::record(const std::string &stage, const std::vector<fs::path> &inputs,
                         const std::vector<fs::path> &outputs, std::uint64_t seed, const std::string &settings,
                         double wall_seconds) {
    StageRecord r;
    for (const auto &p : inputs) r.inputs[p.string()] = hash_file(p);
    for (const auto &p : outputs) r.outputs[p.string()] = hash_file(p);
    r.seed = seed;
    r.settings = settings;
    r.wall_seconds = wall_seconds;
    records_[stage] = std::move(r);
    save();
}

std::optional<StageRecord> StageLedger::find(const std::string &stage) const {
    auto it = records_.find(stage);
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

} // namespace arforge::pipeline
