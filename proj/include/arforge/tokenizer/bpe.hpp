#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace arforge::tokenizer {

inline constexpr int kPadId = 0;
inline constexpr int kBosId = 1;
inline constexpr int kEosId = 2;
inline constexpr int kUnkId = 3;
inline constexpr std::size_t kReservedCount = 4;

/// Suffix marking the final subword of a word.
inline constexpr std::string_view kEndOfWord = "</w>";
/// Rendering of the unknown token in decoded text.
inline constexpr std::string_view kUnkText = "<unk>";

/// One merge rule over subword contents (end-of-word markers excluded).
struct Merge {
    std::string left;
    std::string right;
    auto operator<=>(const Merge &) const = default;
};

struct MergeTable {
    std::vector<Merge> merges; // learning order, most frequent first
    std::size_t num_merges = 0; // requested at learning time
};

/// Bijection between subword tokens and ids. Ids 0..3 are PAD, BOS, EOS, UNK.
/// Tokens are subword contents, suffixed with "</w>" when word-final.
class Vocabulary {
  public:
    Vocabulary();

    /// Appends `token` if new; returns its id.
    int add(const std::string &token);

    std::optional<int> find(std::string_view token) const;
    /// UNK when absent.
    int id_of(std::string_view token) const;
    /// Throws std::out_of_range for ids >= size().
    const std::string &symbol_of(int id) const;

    std::size_t size() const { return symbols_.size(); }
    std::optional<std::size_t> max_size() const { return max_size_; }
    void set_max_size(std::optional<std::size_t> cap) { max_size_ = cap; }
    const std::vector<std::string> &symbols() const { return symbols_; }

    bool operator==(const Vocabulary &other) const { return symbols_ == other.symbols_; }

  private:
    std::vector<std::string> symbols_;
    std::unordered_map<std::string, int> ids_;
    std::optional<std::size_t> max_size_;
};

using TokenizedSentence = std::vector<int>;

struct BpeModel {
    MergeTable table;
    Vocabulary vocab;
};

struct BpeOptions {
    std::size_t num_merges = 300;
    std::optional<std::size_t> vocab_cap = 1000;
};

/// Learns a joint merge table over every line of every corpus (words are
/// whitespace-separated). Each step merges the most frequent adjacent pair;
/// ties go to the lexicographically smallest (left, right). Pair counts treat
/// a word-final symbol like any other; the final subword keeps the
/// end-of-word marker after merging.
///
/// The vocabulary holds the reserved ids, then every base character and
/// every merge result, each in plain and "</w>" form. With a cap, only the
/// most frequent tokens of the segmented corpus survive.
BpeModel learn_merges(std::span<const std::vector<std::string>> corpora, const BpeOptions &options);

/// Subword tokens of one word after applying the first `limit` merges
/// (all merges when limit is npos).
std::vector<std::string> segment_word(std::string_view word, const MergeTable &table,
                                      std::size_t limit = std::string_view::npos);

/// Whitespace-split, segmented, mapped to ids (UNK for missing tokens). No
/// BOS/EOS.
TokenizedSentence encode(std::string_view text, const MergeTable &table, const Vocabulary &vocab);

/// Concatenates subwords, closing a word at each "</w>" token and joining
/// words with single spaces. UNK renders as "<unk>"; PAD/BOS/EOS are skipped.
/// Throws std::out_of_range for ids outside the vocabulary.
std::string decode(std::span<const int> ids, const Vocabulary &vocab);

/// Holds the merge ranks so repeated encodes skip rebuilding them; otherwise
/// identical to encode(). Immutable after construction.
class Encoder {
  public:
    Encoder(const MergeTable &table, const Vocabulary &vocab);
    TokenizedSentence encode(std::string_view text) const;
    std::string decode(std::span<const int> ids) const { return tokenizer::decode(ids, vocab_); }
    const Vocabulary &vocab() const { return vocab_; }

  private:
    const MergeTable &table_;
    const Vocabulary &vocab_;
    std::unordered_map<std::string, std::size_t> ranks_;
};

/// "left right" per line, learning order.
void save_merges(const std::filesystem::path &path, const MergeTable &table);
MergeTable load_merges(const std::filesystem::path &path);

/// "symbol<TAB>id" per line, id order.
void save_vocabulary(const std::filesystem::path &path, const Vocabulary &vocab);
Vocabulary load_vocabulary(const std::filesystem::path &path);

} // namespace arforge::tokenizer
