#include "gctm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gctm/error.hpp"
#include "gctm/rng.hpp"

namespace gctm {

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "?";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "validation" || s == "val") return Split::kValidation;
  if (s == "test") return Split::kTest;
  throw FormatError("unknown split name: " + s);
}

// --- Vocabulary -------------------------------------------------------------

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    auto [_, inserted] = index_.emplace(words_[i], static_cast<int>(i));
    if (!inserted) throw FormatError("duplicate vocabulary word: " + words_[i]);
  }
}

int Vocabulary::id_of(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? -1 : it->second;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open for writing: " + path);
  for (const std::string& w : words_) out << w << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open: " + path);
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) words.push_back(line);
  }
  return Vocabulary(std::move(words));
}

// --- Corpus -----------------------------------------------------------------

Split Corpus::split_of(const std::string& doc_id) const {
  auto it = splits.find(doc_id);
  if (it == splits.end()) throw FormatError("doc id without split assignment: " + doc_id);
  return it->second;
}

std::vector<int> Corpus::doc_indices(Split s) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    if (split_of(documents[i].id) == s) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::size_t Corpus::count(Split s) const { return doc_indices(s).size(); }

void Corpus::reindex() {
  token_ids.assign(documents.size(), {});
  for (std::size_t d = 0; d < documents.size(); ++d) {
    std::vector<std::string> kept;
    kept.reserve(documents[d].tokens.size());
    for (const std::string& tok : documents[d].tokens) {
      int id = vocabulary.id_of(tok);
      if (id >= 0) {
        kept.push_back(tok);
        token_ids[d].push_back(id);
      }
    }
    documents[d].tokens = std::move(kept);
  }
}

// --- tokenize_and_clean -----------------------------------------------------

std::vector<std::string> tokenize_and_clean(const std::string& raw_text,
                                            const PreprocessConfig& rules) {
  std::vector<std::string> tokens;
  std::string current;
  bool has_digit = false;
  auto flush = [&] {
    if (!current.empty()) {
      const bool too_short = current.size() < rules.min_token_length;
      const bool digits = rules.remove_digit_tokens && has_digit;
      if (!too_short && !digits && rules.stopwords.find(current) == rules.stopwords.end()) {
        tokens.push_back(current);
      }
      current.clear();
    }
    has_digit = false;
  };
  for (unsigned char c : raw_text) {
    if (std::isalnum(c)) {
      if (std::isdigit(c)) has_digit = true;
      current.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();  // punctuation and whitespace end the token; pure-punct runs vanish
    }
  }
  flush();
  return tokens;
}

// --- build_vocabulary -------------------------------------------------------

Vocabulary build_vocabulary(const std::vector<const Document*>& train_docs, int max_size) {
  if (max_size <= 0) throw ConfigError("vocabulary max_size must be positive");
  std::unordered_map<std::string, std::int64_t> df;
  std::unordered_set<std::string> seen;
  for (const Document* doc : train_docs) {
    seen.clear();
    for (const std::string& tok : doc->tokens) {
      if (seen.insert(tok).second) ++df[tok];
    }
  }
  std::vector<std::pair<std::string, std::int64_t>> ranked(df.begin(), df.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (static_cast<int>(ranked.size()) > max_size) ranked.resize(static_cast<std::size_t>(max_size));
  std::vector<std::string> words;
  words.reserve(ranked.size());
  for (auto& [w, _] : ranked) words.push_back(std::move(w));
  return Vocabulary(std::move(words));
}

// --- split_corpus -----------------------------------------------------------

std::unordered_map<std::string, Split> split_corpus(const std::vector<RawDocument>& docs,
                                                    double train_ratio, double val_ratio,
                                                    double test_ratio, std::uint64_t seed) {
  const double sum = train_ratio + val_ratio + test_ratio;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("split ratios sum to " + std::to_string(sum) + ", expected 1");
  }
  if (train_ratio < 0 || val_ratio < 0 || test_ratio < 0) {
    throw ConfigError("split ratios must be nonnegative");
  }
  std::vector<std::size_t> order(docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const auto n = static_cast<double>(docs.size());
  const auto n_train = static_cast<std::size_t>(std::llround(n * train_ratio));
  const auto n_train_val = static_cast<std::size_t>(std::llround(n * (train_ratio + val_ratio)));
  std::unordered_map<std::string, Split> out;
  out.reserve(docs.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    Split s = pos < n_train          ? Split::kTrain
              : pos < n_train_val    ? Split::kValidation
                                     : Split::kTest;
    if (!out.emplace(docs[order[pos]].id, s).second) {
      throw FormatError("duplicate doc id: " + docs[order[pos]].id);
    }
  }
  return out;
}

// --- tf-idf / bow -----------------------------------------------------------

namespace {

std::vector<std::int64_t> train_document_frequency(const Corpus& corpus) {
  std::vector<std::int64_t> df(static_cast<std::size_t>(corpus.vocabulary.size()), 0);
  std::unordered_set<int> seen;
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    if (corpus.split_of(corpus.documents[d].id) != Split::kTrain) continue;
    seen.clear();
    for (int id : corpus.token_ids[d]) {
      if (seen.insert(id).second) ++df[static_cast<std::size_t>(id)];
    }
  }
  return df;
}

}  // namespace

SparseMatrix compute_tfidf(const Corpus& corpus) {
  const int v = corpus.vocabulary.size();
  const auto df = train_document_frequency(corpus);
  const auto n_train = static_cast<double>(corpus.count(Split::kTrain));
  std::vector<double> idf(static_cast<std::size_t>(v));
  for (int i = 0; i < v; ++i) {
    idf[static_cast<std::size_t>(i)] =
        std::log((1.0 + n_train) / (1.0 + static_cast<double>(df[static_cast<std::size_t>(i)]))) + 1.0;
  }
  std::vector<SparseMatrix::Entry> entries;
  std::unordered_map<int, int> tf;
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    tf.clear();
    for (int id : corpus.token_ids[d]) ++tf[id];
    for (auto [id, count] : tf) {
      entries.push_back({static_cast<int>(d), id,
                         static_cast<double>(count) * idf[static_cast<std::size_t>(id)]});
    }
  }
  return SparseMatrix::from_triplets(static_cast<int>(corpus.documents.size()), v,
                                     std::move(entries));
}

SparseMatrix compute_bow(const Corpus& corpus) {
  std::vector<SparseMatrix::Entry> entries;
  std::unordered_map<int, int> tf;
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    tf.clear();
    for (int id : corpus.token_ids[d]) ++tf[id];
    for (auto [id, count] : tf) {
      entries.push_back({static_cast<int>(d), id, static_cast<double>(count)});
    }
  }
  return SparseMatrix::from_triplets(static_cast<int>(corpus.documents.size()),
                                     corpus.vocabulary.size(), std::move(entries));
}

// --- count_cooccurrence -----------------------------------------------------

CooccurrenceStats count_cooccurrence(const Corpus& corpus, int window_length) {
  if (window_length < 2) throw ConfigError("window_length must be >= 2");
  const int v = corpus.vocabulary.size();
  std::unordered_map<std::uint64_t, std::int64_t> pair_counts;
  std::vector<std::int64_t> word_counts(static_cast<std::size_t>(v), 0);
  std::int64_t total_windows = 0;

  std::vector<int> present;  // distinct word ids in the current window
  std::unordered_set<int> in_window;
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    if (corpus.split_of(corpus.documents[d].id) != Split::kTrain) continue;
    const std::vector<int>& ids = corpus.token_ids[d];
    if (ids.empty()) continue;
    const auto n = static_cast<int>(ids.size());
    const int n_windows = n < window_length ? 1 : n - window_length + 1;
    for (int start = 0; start < n_windows; ++start) {
      const int end = std::min(start + window_length, n);
      present.clear();
      in_window.clear();
      for (int p = start; p < end; ++p) {
        if (in_window.insert(ids[p]).second) present.push_back(ids[p]);
      }
      ++total_windows;
      for (std::size_t a = 0; a < present.size(); ++a) {
        ++word_counts[static_cast<std::size_t>(present[a])];
        for (std::size_t b = a + 1; b < present.size(); ++b) {
          int i = present[a], j = present[b];
          if (i > j) std::swap(i, j);
          ++pair_counts[static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(v) +
                        static_cast<std::uint64_t>(j)];
        }
      }
    }
  }

  std::vector<SparseMatrix::Entry> entries;
  entries.reserve(pair_counts.size() * 2);
  for (auto [key, count] : pair_counts) {
    const int i = static_cast<int>(key / static_cast<std::uint64_t>(v));
    const int j = static_cast<int>(key % static_cast<std::uint64_t>(v));
    entries.push_back({i, j, static_cast<double>(count)});
    entries.push_back({j, i, static_cast<double>(count)});
  }
  CooccurrenceStats stats;
  stats.window_length = window_length;
  stats.pair_counts = SparseMatrix::from_triplets(v, v, std::move(entries));
  stats.word_counts = std::move(word_counts);
  stats.total_windows = total_windows;
  return stats;
}

// --- embeddings -------------------------------------------------------------

std::vector<std::string> DocEmbeddingTable::missing_ids(
    const std::vector<std::string>& required) const {
  std::vector<std::string> missing;
  for (const std::string& id : required) {
    if (!has(id)) missing.push_back(id);
  }
  return missing;
}

void DocEmbeddingTable::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open for writing: " + path);
  out << "dim=" << dim << '\n';
  char buf[40];
  for (const auto& [id, vec] : vectors) {
    out << id;
    for (int i = 0; i < vec.size(); ++i) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), vec[i],
                                     std::chars_format::general, 17);
      out << '\t';
      out.write(buf, ptr - buf);
    }
    out << '\n';
  }
}

DocEmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open embeddings file: " + path);
  std::string header;
  if (!std::getline(in, header) || header.rfind("dim=", 0) != 0) {
    throw FormatError("embeddings file must start with 'dim=<int>': " + path);
  }
  DocEmbeddingTable table;
  table.dim = std::stoi(header.substr(4));
  if (table.dim <= 0) throw FormatError("bad embedding dim in " + path);

  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string id;
    if (!std::getline(ls, id, '\t')) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": missing doc id");
    }
    Eigen::VectorXd vec(table.dim);
    int got = 0;
    std::string field;
    while (std::getline(ls, field, '\t')) {
      if (got >= table.dim) {
        throw FormatError(path + ":" + std::to_string(line_no) + ": row has more than " +
                          std::to_string(table.dim) + " values");
      }
      vec[got++] = std::stod(field);
    }
    if (got != table.dim) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": row has " +
                        std::to_string(got) + " values, expected " +
                        std::to_string(table.dim));
    }
    if (!table.vectors.emplace(id, std::move(vec)).second) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": duplicate doc id " + id);
    }
  }
  return table;
}

// --- jsonl corpus -----------------------------------------------------------

std::vector<RawDocument> load_jsonl_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open corpus file: " + path);
  std::vector<RawDocument> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("text")) {
      throw FormatError(path + ":" + std::to_string(line_no) +
                        ": expected {\"id\", \"text\", [\"label\"]}");
    }
    RawDocument doc;
    doc.id = j["id"].get<std::string>();
    doc.text = j["text"].get<std::string>();
    if (j.contains("label") && !j["label"].is_null()) {
      doc.label = j["label"].get<std::string>();
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

Corpus build_corpus(const std::vector<RawDocument>& raw, const PreprocessConfig& rules,
                    int vocab_size, double train_ratio, double val_ratio,
                    double test_ratio, std::uint64_t split_seed) {
  Corpus corpus;
  corpus.documents.reserve(raw.size());
  for (const RawDocument& rd : raw) {
    corpus.documents.push_back({rd.id, tokenize_and_clean(rd.text, rules), rd.label});
  }
  corpus.splits = split_corpus(raw, train_ratio, val_ratio, test_ratio, split_seed);

  std::vector<const Document*> train_docs;
  for (const Document& doc : corpus.documents) {
    if (corpus.split_of(doc.id) == Split::kTrain) train_docs.push_back(&doc);
  }
  corpus.vocabulary = build_vocabulary(train_docs, vocab_size);
  corpus.reindex();
  return corpus;
}

}  // namespace gctm
