#pragma once

// Embedded English stopword list. data/stopwords.txt carries the same words,
// one per line; tests keep the two in sync.

#include <algorithm>
#include <iterator>
#include <string_view>

namespace promptaid {

inline constexpr std::string_view kStopwords[] = {
    "a",       "about",   "above",   "after",   "again",   "against", "all",     "also",
    "am",      "an",      "and",     "any",     "are",     "as",      "at",      "be",
    "because", "been",    "before",  "being",   "below",   "best",    "between", "both",
    "but",     "by",      "can",     "could",   "did",     "do",      "does",    "doing",
    "down",    "during",  "each",    "either",  "else",    "ever",    "few",     "following",
    "for",     "from",    "further", "given",   "had",     "has",     "have",    "having",
    "he",      "her",     "here",    "hers",    "herself", "him",     "himself", "his",
    "how",     "i",       "if",      "in",      "into",    "is",      "it",      "it's",
    "its",     "itself",  "just",    "least",   "let",     "like",    "likely",  "may",
    "me",      "might",   "more",    "most",    "must",    "my",      "myself",  "neither",
    "no",      "nor",     "not",     "now",     "of",      "off",     "on",      "once",
    "one",     "only",    "or",      "other",   "our",     "ours",    "ourselves", "out",
    "over",    "own",     "please",  "rather",  "same",    "shall",   "she",     "should",
    "so",      "some",    "such",    "than",    "that",    "the",     "their",   "theirs",
    "them",    "themselves", "then", "there",   "these",   "they",    "this",    "those",
    "through", "to",      "too",     "under",   "until",   "up",      "upon",    "very",
    "was",     "we",      "were",    "what",    "when",    "where",   "whether", "which",
    "while",   "who",     "whom",    "whose",   "why",     "will",    "with",    "within",
    "would",   "yet",     "you",     "your",    "yours",   "yourself", "yourselves", "whatever",
};

inline bool is_stopword(std::string_view lowered_word) noexcept {
    return std::find(std::begin(kStopwords), std::end(kStopwords), lowered_word) != std::end(kStopwords);
}

} // namespace promptaid
