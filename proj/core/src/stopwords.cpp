#include "gctm/corpus.hpp"

namespace gctm {

// English stopword list v1 (NLTK-derived; apostrophe forms reduced to the
// fragments the tokenizer actually produces). Mirrored in
// data/stopwords_en.txt. Do not edit without bumping the version note:
// preprocessing must stay reproducible across checkouts.
const std::vector<std::string>& PreprocessConfig::builtin_stopwords() {
  static const std::vector<std::string> kWords = {
      "i",       "me",      "my",       "myself",  "we",        "our",
      "ours",    "ourselves", "you",    "your",    "yours",     "yourself",
      "yourselves", "he",   "him",      "his",     "himself",   "she",
      "her",     "hers",    "herself",  "it",      "its",       "itself",
      "they",    "them",    "their",    "theirs",  "themselves", "what",
      "which",   "who",     "whom",     "this",    "that",      "these",
      "those",   "am",      "is",       "are",     "was",       "were",
      "be",      "been",    "being",    "have",    "has",       "had",
      "having",  "do",      "does",     "did",     "doing",     "a",
      "an",      "the",     "and",      "but",     "if",        "or",
      "because", "as",      "until",    "while",   "of",        "at",
      "by",      "for",     "with",     "about",   "against",   "between",
      "into",    "through", "during",   "before",  "after",     "above",
      "below",   "to",      "from",     "up",      "down",      "in",
      "out",     "on",      "off",      "over",    "under",     "again",
      "further", "then",    "once",     "here",    "there",     "when",
      "where",   "why",     "how",      "all",     "any",       "both",
      "each",    "few",     "more",     "most",    "other",     "some",
      "such",    "no",      "nor",      "not",     "only",      "own",
      "same",    "so",      "than",     "too",     "very",      "s",
      "t",       "can",     "will",     "just",    "don",       "should",
      "now",     "d",       "ll",       "m",       "o",         "re",
      "ve",      "y",       "ain",      "aren",    "couldn",    "didn",
      "doesn",   "hadn",    "hasn",     "haven",   "isn",       "ma",
      "mightn",  "mustn",   "needn",    "shan",    "shouldn",   "wasn",
      "weren",   "won",     "wouldn",
  };
  return kWords;
}

PreprocessConfig PreprocessConfig::defaults() {
  PreprocessConfig cfg;
  cfg.stopwords.insert(builtin_stopwords().begin(), builtin_stopwords().end());
  return cfg;
}

}  // namespace gctm
