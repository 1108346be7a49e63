#pragma once

// Whitespace/punctuation tokenizer and a frequency-filtered vocabulary.
// Specials occupy ids 0..3; content ids are dense above them.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "evdet/types.hpp"

namespace evdet {

inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            cur += char(std::tolower(static_cast<unsigned char>(ch)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kCls = 2;
    static constexpr int kSep = 3;
    static constexpr int kNumSpecials = 4;

    Vocabulary() {
        for (const char* s : {"<pad>", "<unk>", "<cls>", "<sep>"}) add_token(s);
    }

    int size() const { return int(tokens_.size()); }

    int id_of(const std::string& token) const {
        auto it = index_.find(token);
        return it == index_.end() ? kUnk : it->second;
    }

    const std::string& token_of(int id) const { return tokens_.at(std::size_t(id)); }

    std::vector<int> encode(const std::string& text) const {
        std::vector<int> ids;
        for (const auto& t : tokenize(text)) ids.push_back(id_of(t));
        return ids;
    }

    void add_token(const std::string& token) {
        if (index_.emplace(token, int(tokens_.size())).second) tokens_.push_back(token);
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw ParseError("cannot open vocabulary file '" + path + "' for writing");
        for (const auto& t : tokens_) out << t << "\n";
    }

    static Vocabulary load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open vocabulary file '" + path + "'");
        Vocabulary v;
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            if (line_no < kNumSpecials) {
                if (line != v.tokens_[std::size_t(line_no)])
                    throw ValidationError("vocabulary file is missing the special tokens header");
            } else {
                v.add_token(line);
            }
            ++line_no;
        }
        return v;
    }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

// Counts tokens over the training blocks; frequency order (count desc, token asc)
// keeps ids stable across runs.
inline Vocabulary build_vocab(const std::vector<MessageBlock>& blocks, int min_count = 1) {
    if (min_count < 1) throw ValidationError("build_vocab: min_count must be >= 1");
    std::map<std::string, std::int64_t> counts;
    for (const auto& b : blocks)
        for (const auto& m : b.messages)
            for (const auto& t : tokenize(m.text)) ++counts[t];
    if (counts.empty()) throw ValidationError("build_vocab: empty corpus");

    std::vector<std::pair<std::string, std::int64_t>> ordered(counts.begin(), counts.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    Vocabulary v;
    for (const auto& [tok, cnt] : ordered)
        if (cnt >= min_count) v.add_token(tok);
    if (v.size() == Vocabulary::kNumSpecials)
        throw ValidationError("build_vocab: no token meets min_count");
    return v;
}

}  // namespace evdet
