#include "arforge/corpus/corpus.hpp"

#include <fstream>

#include "arforge/util/utf8.hpp"

namespace arforge::corpus {

std::vector<std::string> read_lines(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorpusError("cannot read " + path.string());
    std::vector<std::string> lines;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!util::valid_utf8(line))
            throw CorpusError(path.string() + ":" + std::to_string(number) + ": invalid UTF-8");
        lines.push_back(std::move(line));
    }
    return lines;
}

namespace {

bool blank(std::string_view line) { return util::trim_right(line).empty(); }

} // namespace

std::string_view to_string(Language language) { return language == Language::source ? "source" : "target"; }

std::string_view to_string(Provenance provenance) {
    switch (provenance) {
    case Provenance::authentic: return "authentic";
    case Provenance::synthetic: return "synthetic";
    case Provenance::repaired: return "repaired";
    }
    return "?";
}

std::string_view to_string(Origin origin) { return origin == Origin::bilingual ? "bilingual" : "monolingual"; }

std::string_view to_string(PairKind kind) {
    switch (kind) {
    case PairKind::authentic: return "authentic";
    case PairKind::ft: return "ft";
    case PairKind::bt: return "bt";
    case PairKind::ftr: return "ftr";
    case PairKind::btr: return "btr";
    case PairKind::ar_source: return "ar_source";
    case PairKind::ar_target: return "ar_target";
    }
    return "?";
}

std::string notation(const MonolingualCorpus &corpus) {
    std::string out = corpus.language == Language::source ? "S" : "T";
    switch (corpus.provenance) {
    case Provenance::authentic: out += "_a"; break;
    case Provenance::synthetic: out += "_s"; break;
    case Provenance::repaired: out += "_sr"; break;
    }
    out += corpus.origin == Origin::bilingual ? "^b" : "^m";
    return out;
}

std::pair<SideTags, SideTags> expected_tags(PairKind kind) {
    using L = Language;
    using P = Provenance;
    constexpr Origin b = Origin::bilingual, m = Origin::monolingual;
    switch (kind) {
    case PairKind::authentic: return {{L::source, P::authentic, b}, {L::target, P::authentic, b}};
    case PairKind::ft: return {{L::source, P::authentic, m}, {L::target, P::synthetic, m}};
    case PairKind::bt: return {{L::source, P::synthetic, m}, {L::target, P::authentic, m}};
    case PairKind::ftr: return {{L::source, P::authentic, m}, {L::target, P::repaired, m}};
    case PairKind::btr: return {{L::source, P::repaired, m}, {L::target, P::authentic, m}};
    case PairKind::ar_source: return {{L::source, P::synthetic, m}, {L::source, P::authentic, m}};
    case PairKind::ar_target: return {{L::target, P::synthetic, m}, {L::target, P::authentic, m}};
    }
    throw CorpusError("unknown pair kind");
}

void validate(const ParallelCorpus &corpus) {
    if (corpus.source.size() != corpus.target.size())
        throw CorpusError("aligned-length mismatch: source has " + std::to_string(corpus.source.size()) +
                          " lines, target has " + std::to_string(corpus.target.size()));
    const auto [src, tgt] = expected_tags(corpus.kind);
    auto check = [&](const MonolingualCorpus &side, const SideTags &tags, const char *which) {
        if (side.language != tags.language || side.provenance != tags.provenance || side.origin != tags.origin)
            throw CorpusError(std::string(which) + " side tagged " + notation(side) + " is inconsistent with pair kind " +
                              std::string(to_string(corpus.kind)));
        for (const auto &line : side.lines)
            if (line.find('\n') != std::string::npos) throw CorpusError("embedded newline in corpus line");
    };
    check(corpus.source, src, "source");
    check(corpus.target, tgt, "target");
}

MonolingualCorpus load_monolingual(const std::filesystem::path &path, Language language, Provenance provenance,
                                   Origin origin) {
    MonolingualCorpus corpus{{}, language, provenance, origin};
    for (auto &line : read_lines(path))
        if (!blank(line)) corpus.lines.push_back(std::move(line));
    return corpus;
}

ParallelCorpus make_parallel(std::vector<std::string> source, std::vector<std::string> target, PairKind kind) {
    const auto [src, tgt] = expected_tags(kind);
    ParallelCorpus corpus{{std::move(source), src.language, src.provenance, src.origin},
                          {std::move(target), tgt.language, tgt.provenance, tgt.origin},
                          kind};
    validate(corpus);
    return corpus;
}

ParallelCorpus load_parallel(const std::filesystem::path &source_path, const std::filesystem::path &target_path,
                             PairKind kind) {
    auto src = read_lines(source_path);
    auto tgt = read_lines(target_path);
    if (src.size() != tgt.size())
        throw CorpusError("aligned-length mismatch: " + source_path.string() + " has " + std::to_string(src.size()) +
                          " lines, " + target_path.string() + " has " + std::to_string(tgt.size()));
    std::vector<std::string> keep_src, keep_tgt;
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (blank(src[i]) || blank(tgt[i])) continue;
        keep_src.push_back(std::move(src[i]));
        keep_tgt.push_back(std::move(tgt[i]));
    }
    return make_parallel(std::move(keep_src), std::move(keep_tgt), kind);
}

ParallelCorpus load_parallel_tsv(const std::filesystem::path &path, PairKind kind) {
    std::vector<std::string> src, tgt;
    std::size_t number = 0;
    for (auto &line : read_lines(path)) {
        ++number;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
            throw CorpusError(path.string() + ":" + std::to_string(number) + ": expected exactly one tab");
        std::string s = line.substr(0, tab), t = line.substr(tab + 1);
        if (blank(s) || blank(t)) continue;
        src.push_back(std::move(s));
        tgt.push_back(std::move(t));
    }
    return make_parallel(std::move(src), std::move(tgt), kind);
}

void write_lines(const std::filesystem::path &path, const std::vector<std::string> &lines) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CorpusError("cannot write " + path.string());
    for (const auto &line : lines) {
        if (line.find('\n') != std::string::npos) throw CorpusError("embedded newline while writing " + path.string());
        out << line << '\n';
    }
    if (!out) throw CorpusError("write failed for " + path.string());
}

void write_parallel_tsv(const std::filesystem::path &path, const ParallelCorpus &corpus) {
    validate(corpus);
    std::vector<std::string> lines;
    lines.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (corpus.source.lines[i].find('\t') != std::string::npos || corpus.target.lines[i].find('\t') != std::string::npos)
            throw CorpusError("tab inside a TSV field at pair " + std::to_string(i + 1));
        lines.push_back(corpus.source.lines[i] + '\t' + corpus.target.lines[i]);
    }
    write_lines(path, lines);
}

} // namespace arforge::corpus
