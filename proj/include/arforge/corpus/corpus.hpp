#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace arforge::corpus {

class CorpusError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class Language { source, target };
enum class Provenance { authentic, synthetic, repaired };
enum class Origin { bilingual, monolingual };

/// One side of the data, tagged with where it came from.
struct MonolingualCorpus {
    std::vector<std::string> lines;
    Language language = Language::source;
    Provenance provenance = Provenance::authentic;
    Origin origin = Origin::bilingual;

    std::size_t size() const { return lines.size(); }
};

enum class PairKind { authentic, ft, bt, ftr, btr, ar_source, ar_target };

/// Aligned pairs. For the AR kinds both sides are in the same language:
/// `source` holds the noisy round-trip output and `target` the clean text.
struct ParallelCorpus {
    MonolingualCorpus source;
    MonolingualCorpus target;
    PairKind kind = PairKind::authentic;

    std::size_t size() const { return source.size(); }
};

std::string_view to_string(Language language);
std::string_view to_string(Provenance provenance);
std::string_view to_string(Origin origin);
std::string_view to_string(PairKind kind);

/// Notation such as "S_a^b" or "T_sr^m".
std::string notation(const MonolingualCorpus &corpus);

/// Expected (source, target) tags for a pair kind.
struct SideTags {
    Language language;
    Provenance provenance;
    Origin origin;
};
std::pair<SideTags, SideTags> expected_tags(PairKind kind);

/// Throws CorpusError when the sides differ in length, contain newlines, or
/// carry tags inconsistent with `kind`.
void validate(const ParallelCorpus &corpus);

/// One sentence per line; blank lines dropped. Throws CorpusError on invalid
/// UTF-8 (with the line number) or an unreadable file.
MonolingualCorpus load_monolingual(const std::filesystem::path &path, Language language, Provenance provenance,
                                   Origin origin);

/// Two line-aligned files. Pairs where either side is blank are dropped
/// together. Throws CorpusError naming both line counts on misalignment.
ParallelCorpus load_parallel(const std::filesystem::path &source_path, const std::filesystem::path &target_path,
                             PairKind kind);

/// "source<TAB>target" per line; exactly one tab.
ParallelCorpus load_parallel_tsv(const std::filesystem::path &path, PairKind kind);

/// Every line verbatim, blank ones included (pipeline artifacts keep their
/// alignment even when a translation comes out empty).
std::vector<std::string> read_lines(const std::filesystem::path &path);

void write_lines(const std::filesystem::path &path, const std::vector<std::string> &lines);
void write_parallel_tsv(const std::filesystem::path &path, const ParallelCorpus &corpus);

/// Builds a corpus from in-memory pairs, tagged per `kind`.
ParallelCorpus make_parallel(std::vector<std::string> source, std::vector<std::string> target, PairKind kind);

} // namespace arforge::corpus
