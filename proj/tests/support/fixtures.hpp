#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gctm/corpus.hpp"
#include "gctm/rng.hpp"

namespace gctm::test {

// Letter-only word for (topic, index): digits would be stripped by
// preprocessing. "waa".."wzz" style, always >= 4 chars, never a stopword.
inline std::string planted_word(int topic, int index) {
  std::string w = "w";
  w += static_cast<char>('a' + topic % 26);
  w += static_cast<char>('a' + (index / 26) % 26);
  w += static_cast<char>('a' + index % 26);
  return w;
}

struct PlantedCorpusConfig {
  int n_docs = 200;
  int n_topics = 4;
  int words_per_topic = 25;
  int doc_len = 40;
  // Probability that a token is drawn from a random other topic.
  double noise = 0.05;
  std::uint64_t seed = 7;
};

// Synthetic corpus with planted topic structure: each document draws most
// tokens from one topic's word group. Within-topic pairs co-occur heavily
// (positive NPMI); cross-topic pairs co-occur rarely (negative NPMI).
// Labels name the planted topic, giving a separable classification target.
inline std::vector<RawDocument> make_planted_corpus(const PlantedCorpusConfig& cfg) {
  Rng rng(cfg.seed);
  std::vector<RawDocument> docs;
  docs.reserve(static_cast<std::size_t>(cfg.n_docs));
  for (int d = 0; d < cfg.n_docs; ++d) {
    const int topic = d % cfg.n_topics;
    std::string text;
    for (int t = 0; t < cfg.doc_len; ++t) {
      int source = topic;
      if (rng.uniform() < cfg.noise && cfg.n_topics > 1) {
        source = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.n_topics)));
      }
      const int index = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.words_per_topic)));
      if (!text.empty()) text += ' ';
      text += planted_word(source, index);
    }
    RawDocument doc;
    doc.id = "doc" + std::to_string(d);
    doc.text = std::move(text);
    doc.label = "topic" + std::to_string(topic);
    docs.push_back(std::move(doc));
  }
  return docs;
}

inline Corpus make_planted_ready(const PlantedCorpusConfig& cfg, double train = 0.6,
                                 double val = 0.2, double test = 0.2,
                                 std::uint64_t split_seed = 13) {
  return build_corpus(make_planted_corpus(cfg), PreprocessConfig::defaults(),
                      cfg.n_topics * cfg.words_per_topic, train, val, test, split_seed);
}

}  // namespace gctm::test
