#include "arforge/tokenizer/bpe.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "arforge/util/utf8.hpp"

namespace arforge::tokenizer {

namespace {

const std::string kReserved[kReservedCount] = {"<pad>", "<s>", "</s>", "<unk>"};

std::string pair_key(std::string_view left, std::string_view right) {
    std::string key;
    key.reserve(left.size() + right.size() + 1);
    key.append(left);
    key.push_back('\0');
    key.append(right);
    return key;
}

using RankMap = std::unordered_map<std::string, std::size_t>;

RankMap build_ranks(const MergeTable &table) {
    RankMap ranks;
    for (std::size_t i = 0; i < table.merges.size(); ++i)
        ranks.emplace(pair_key(table.merges[i].left, table.merges[i].right), i);
    return ranks;
}

// Repeatedly merges the lowest-ranked adjacent pair, all occurrences at once.
std::vector<std::string> apply_merges(std::vector<std::string> symbols, const RankMap &ranks,
                                      const std::vector<Merge> &merges, std::size_t limit) {
    while (symbols.size() > 1) {
        std::size_t best = std::numeric_limits<std::size_t>::max();
        for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
            auto it = ranks.find(pair_key(symbols[i], symbols[i + 1]));
            if (it != ranks.end() && it->second < limit) best = std::min(best, it->second);
        }
        if (best == std::numeric_limits<std::size_t>::max()) break;
        const std::string &left = merges[best].left;
        const std::string &right = merges[best].right;
        std::vector<std::string> merged;
        merged.reserve(symbols.size());
        for (std::size_t i = 0; i < symbols.size(); ++i) {
            if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
                merged.push_back(left + right);
                ++i;
            } else {
                merged.push_back(symbols[i]);
            }
        }
        symbols = std::move(merged);
    }
    return symbols;
}

std::vector<std::string> finalize(std::vector<std::string> pieces) {
    if (!pieces.empty()) pieces.back().append(kEndOfWord);
    return pieces;
}

std::vector<int> to_ids(const std::vector<std::string> &tokens, const Vocabulary &vocab) {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto &t : tokens) ids.push_back(vocab.id_of(t));
    return ids;
}

bool ends_with_marker(std::string_view token) {
    return token.size() >= kEndOfWord.size() && token.substr(token.size() - kEndOfWord.size()) == kEndOfWord;
}

} // namespace

Vocabulary::Vocabulary() {
    for (const auto &r : kReserved) add(r);
}

int Vocabulary::add(const std::string &token) {
    if (auto it = ids_.find(token); it != ids_.end()) return it->second;
    const int id = static_cast<int>(symbols_.size());
    symbols_.push_back(token);
    ids_.emplace(token, id);
    return id;
}

std::optional<int> Vocabulary::find(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

int Vocabulary::id_of(std::string_view token) const { return find(token).value_or(kUnkId); }

const std::string &Vocabulary::symbol_of(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= symbols_.size())
        throw std::out_of_range("vocabulary: unknown id " + std::to_string(id));
    return symbols_[static_cast<std::size_t>(id)];
}

BpeModel learn_merges(std::span<const std::vector<std::string>> corpora, const BpeOptions &options) {
    std::map<std::string, long> word_counts;
    for (const auto &corpus : corpora)
        for (const auto &line : corpus)
            for (auto &word : util::split_whitespace(line)) ++word_counts[word];
    if (word_counts.empty()) throw std::invalid_argument("learn_merges: corpus is empty");
    if (options.vocab_cap && *options.vocab_cap < kReservedCount)
        throw std::invalid_argument("learn_merges: vocabulary cap smaller than the reserved ids");

    std::vector<std::vector<std::string>> words;
    std::vector<long> counts;
    std::set<std::string> characters;
    for (const auto &[word, count] : word_counts) {
        words.push_back(util::utf8_characters(word));
        counts.push_back(count);
        characters.insert(words.back().begin(), words.back().end());
    }

    MergeTable table;
    table.num_merges = options.num_merges;
    while (table.merges.size() < options.num_merges) {
        std::map<std::pair<std::string, std::string>, long> pair_counts;
        for (std::size_t w = 0; w < words.size(); ++w)
            for (std::size_t i = 0; i + 1 < words[w].size(); ++i) pair_counts[{words[w][i], words[w][i + 1]}] += counts[w];
        if (pair_counts.empty()) break;
        // map order is lexicographic, so the first maximum wins ties
        auto best = pair_counts.begin();
        for (auto it = pair_counts.begin(); it != pair_counts.end(); ++it)
            if (it->second > best->second) best = it;
        const auto [left, right] = best->first;
        table.merges.push_back({left, right});
        for (auto &symbols : words) {
            std::vector<std::string> merged;
            merged.reserve(symbols.size());
            for (std::size_t i = 0; i < symbols.size(); ++i) {
                if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
                    merged.push_back(left + right);
                    ++i;
                } else {
                    merged.push_back(symbols[i]);
                }
            }
            symbols = std::move(merged);
        }
    }

    // Canonical token order: characters, then merge results, plain form first.
    std::vector<std::string> candidates;
    std::set<std::string> seen;
    auto push_forms = [&](const std::string &content) {
        for (std::string token : {content, content + std::string(kEndOfWord)})
            if (seen.insert(token).second) candidates.push_back(token);
    };
    for (const auto &c : characters) push_forms(c);
    for (const auto &m : table.merges) push_forms(m.left + m.right);

    std::vector<std::string> kept = candidates;
    if (options.vocab_cap && kept.size() > *options.vocab_cap - kReservedCount) {
        std::map<std::string, long> freq;
        for (std::size_t w = 0; w < words.size(); ++w)
            for (const auto &token : finalize(words[w])) freq[token] += counts[w];
        std::vector<std::size_t> order(candidates.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return freq[candidates[a]] > freq[candidates[b]];
        });
        order.resize(*options.vocab_cap - kReservedCount);
        std::sort(order.begin(), order.end());
        kept.clear();
        for (auto i : order) kept.push_back(candidates[i]);
    }

    BpeModel model;
    model.table = std::move(table);
    for (const auto &token : kept) model.vocab.add(token);
    model.vocab.set_max_size(options.vocab_cap);
    return model;
}

std::vector<std::string> segment_word(std::string_view word, const MergeTable &table, std::size_t limit) {
    return finalize(apply_merges(util::utf8_characters(word), build_ranks(table), table.merges, limit));
}

TokenizedSentence encode(std::string_view text, const MergeTable &table, const Vocabulary &vocab) {
    return Encoder(table, vocab).encode(text);
}

Encoder::Encoder(const MergeTable &table, const Vocabulary &vocab)
    : table_(table), vocab_(vocab), ranks_(build_ranks(table)) {}

TokenizedSentence Encoder::encode(std::string_view text) const {
    TokenizedSentence ids;
    for (const auto &word : util::split_whitespace(text)) {
        auto pieces = finalize(apply_merges(util::utf8_characters(word), ranks_, table_.merges, table_.merges.size()));
        auto word_ids = to_ids(pieces, vocab_);
        ids.insert(ids.end(), word_ids.begin(), word_ids.end());
    }
    return ids;
}

std::string decode(std::span<const int> ids, const Vocabulary &vocab) {
    std::string out, word;
    auto flush = [&] {
        if (word.empty()) return;
        if (!out.empty()) out.push_back(' ');
        out += word;
        word.clear();
    };
    for (int id : ids) {
        const std::string &token = vocab.symbol_of(id);
        if (id == kPadId || id == kBosId || id == kEosId) continue;
        if (id == kUnkId) {
            word.append(kUnkText);
            continue;
        }
        if (ends_with_marker(token)) {
            word.append(token, 0, token.size() - kEndOfWord.size());
            flush();
        } else {
            word.append(token);
        }
    }
    flush();
    return out;
}

void save_merges(const std::filesystem::path &path, const MergeTable &table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write merge table " + path.string());
    for (const auto &m : table.merges) out << m.left << ' ' << m.right << '\n';
}

MergeTable load_merges(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read merge table " + path.string());
    MergeTable table;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto sp = line.find(' ');
        if (sp == std::string::npos || sp == 0 || sp + 1 == line.size() || line.find(' ', sp + 1) != std::string::npos)
            throw std::runtime_error(path.string() + ":" + std::to_string(number) + ": expected \"left right\"");
        table.merges.push_back({line.substr(0, sp), line.substr(sp + 1)});
    }
    table.num_merges = table.merges.size();
    return table;
}

void save_vocabulary(const std::filesystem::path &path, const Vocabulary &vocab) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write vocabulary " + path.string());
    for (std::size_t i = 0; i < vocab.size(); ++i) out << vocab.symbols()[i] << '\t' << i << '\n';
}

Vocabulary load_vocabulary(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read vocabulary " + path.string());
    Vocabulary vocab;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        const auto tab = line.rfind('\t');
        if (tab == std::string::npos)
            throw std::runtime_error(path.string() + ":" + std::to_string(number + 1) + ": expected \"symbol<TAB>id\"");
        const std::string symbol = line.substr(0, tab);
        const std::size_t id = std::stoul(line.substr(tab + 1));
        if (id != number)
            throw std::runtime_error(path.string() + ": ids must be dense and ordered, found " + std::to_string(id) +
                                     " at line " + std::to_string(number + 1));
        if (number < kReservedCount) {
            if (symbol != kReserved[number])
                throw std::runtime_error(path.string() + ": reserved id " + std::to_string(id) + " must be " +
                                         kReserved[number]);
        } else if (vocab.add(symbol) != static_cast<int>(id)) {
            throw std::runtime_error(path.string() + ": duplicate symbol " + symbol);
        }
        ++number;
    }
    return vocab;
}

} // namespace arforge::tokenizer
