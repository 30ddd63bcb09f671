#pragma once

// String algorithms used by the recommenders and the provenance diff.

#include "promptaid/core.hpp"
#include "promptaid/stopwords.hpp"

#include <cstdint>
#include <ranges>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace promptaid {

/// Decode UTF-8 into code points. Malformed bytes decode as themselves so
/// that arbitrary byte strings still have a well-defined distance.
inline std::u32string decode_utf8(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        const auto b0 = static_cast<unsigned char>(s[i]);
        int len = b0 < 0x80 ? 1 : (b0 >> 5) == 0x6 ? 2 : (b0 >> 4) == 0xe ? 3 : (b0 >> 3) == 0x1e ? 4 : 0;
        bool ok = len > 0 && i + static_cast<std::size_t>(len) <= s.size();
        char32_t cp = len == 1 ? b0 : len == 2 ? (b0 & 0x1f) : len == 3 ? (b0 & 0x0f) : (b0 & 0x07);
        for (int k = 1; ok && k < len; ++k) {
            const auto b = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
            if ((b >> 6) != 0x2) ok = false;
            cp = (cp << 6) | (b & 0x3f);
        }
        if (!ok) {
            out.push_back(b0);
            ++i;
        } else {
            out.push_back(cp);
            i += static_cast<std::size_t>(len);
        }
    }
    return out;
}

/// Unit-cost edit distance between two sequences (two-row DP).
template <typename T>
std::size_t edit_distance(std::span<const T> a, std::span<const T> b) {
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

/// Character-level Levenshtein distance over Unicode code points.
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
    const auto ua = decode_utf8(a);
    const auto ub = decode_utf8(b);
    return edit_distance<char32_t>(ua, ub);
}

namespace detail {
constexpr bool is_word_byte(unsigned char c) noexcept {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '\'' || c >= 0x80;
}
} // namespace detail

/// Lowercased maximal runs of letters, digits and apostrophes. Apostrophes
/// at the edges of a run are trimmed; runs that are only apostrophes vanish.
inline std::vector<std::string> tokenize_words(std::string_view s) {
    std::vector<std::string> words;
    std::string cur;
    auto flush = [&] {
        const auto first = cur.find_first_not_of('\'');
        if (first != std::string::npos) {
            const auto last = cur.find_last_not_of('\'');
            words.push_back(cur.substr(first, last - first + 1));
        }
        cur.clear();
    };
    for (char ch : s) {
        const auto c = static_cast<unsigned char>(ch);
        if (detail::is_word_byte(c)) {
            cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
        } else {
            flush();
        }
    }
    flush();
    return words;
}

/// Non-stopwords of a template; the placeholder's "text" token is dropped.
inline std::vector<std::string> content_words(std::string_view s) {
    std::vector<std::string> out;
    for (auto& w : tokenize_words(s)) {
        if (w != "text" && !is_stopword(w)) out.push_back(std::move(w));
    }
    return out;
}

/// Suffix-stripping stem used to collapse words with the same root.
///
/// Plural step (first matching rule): sses -> ss, ies -> i, ss -> ss, s -> "".
/// Then a trailing "ing" or "ed" is removed when at least three characters
/// remain. Note "categories" -> "categori" while "category" is unchanged,
/// so those two are different keys.
inline std::string lemma_key(std::string_view word) {
    std::string w;
    w.reserve(word.size());
    for (char c : word) w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    auto ends = [&](std::string_view suf) { return w.size() >= suf.size() && std::string_view(w).ends_with(suf); };
    if (ends("sses")) {
        w.resize(w.size() - 2);
    } else if (ends("ies")) {
        w.resize(w.size() - 2);
    } else if (ends("ss")) {
        // unchanged
    } else if (ends("s") && w.size() > 1) {
        w.pop_back();
    }
    if (ends("ing") && w.size() - 3 >= 3) {
        w.resize(w.size() - 3);
    } else if (ends("ed") && w.size() - 2 >= 3) {
        w.resize(w.size() - 2);
    }
    return w;
}

enum class DiffStatus { Kept, Added, Removed };

constexpr std::string_view to_string(DiffStatus s) noexcept {
    switch (s) {
    case DiffStatus::Kept: return "kept";
    case DiffStatus::Added: return "added";
    case DiffStatus::Removed: return "removed";
    }
    return "kept";
}

struct WordDiffEntry {
    std::string word;
    DiffStatus status;
    bool operator==(const WordDiffEntry&) const = default;
};

struct WordDiff {
    std::vector<WordDiffEntry> entries;

    std::vector<std::string> words_with(DiffStatus s) const {
        std::vector<std::string> out;
        for (const auto& e : entries)
            if (e.status == s) out.push_back(e.word);
        return out;
    }
};

/// LCS alignment of the two token sequences. Matches are taken as early in
/// `a` as possible; when both a removal and an addition keep the LCS length,
/// the removal is emitted first.
inline WordDiff word_diff(std::string_view a, std::string_view b) {
    const auto ta = tokenize_words(a);
    const auto tb = tokenize_words(b);
    const std::size_t n = ta.size(), m = tb.size();
    // suffix LCS lengths
    std::vector<std::vector<std::uint32_t>> lcs(n + 1, std::vector<std::uint32_t>(m + 1, 0));
    for (std::size_t i = n; i-- > 0;)
        for (std::size_t j = m; j-- > 0;)
            lcs[i][j] = ta[i] == tb[j] ? lcs[i + 1][j + 1] + 1 : std::max(lcs[i + 1][j], lcs[i][j + 1]);

    WordDiff d;
    std::size_t i = 0, j = 0;
    while (i < n || j < m) {
        if (i < n && j < m && ta[i] == tb[j] && lcs[i][j] == lcs[i + 1][j + 1] + 1) {
            d.entries.push_back({ta[i], DiffStatus::Kept});
            ++i, ++j;
        } else if (i < n && (j == m || lcs[i + 1][j] >= lcs[i][j + 1])) {
            d.entries.push_back({ta[i], DiffStatus::Removed});
            ++i;
        } else {
            d.entries.push_back({tb[j], DiffStatus::Added});
            ++j;
        }
    }
    return d;
}

inline void to_json(json& j, const WordDiff& d) {
    j = json::array();
    for (const auto& e : d.entries) j.push_back(json{{"word", e.word}, {"status", to_string(e.status)}});
}

} // namespace promptaid
