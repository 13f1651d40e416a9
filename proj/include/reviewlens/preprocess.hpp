#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "reviewlens/core.hpp"

namespace reviewlens::preprocess {

struct EmptyVocabulary : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One lowercase term per line; '#' starts a comment line.
std::unordered_set<std::string> load_word_list(const std::filesystem::path& path);

struct StopList {
  std::unordered_set<std::string> standard_stopwords;
  std::unordered_set<std::string> custom_stopwords = {"app", "html"};
  std::unordered_set<std::string> common_word_list;

  bool contains(const std::string& token) const {
    return standard_stopwords.count(token) || custom_stopwords.count(token) ||
           common_word_list.count(token);
  }

  static StopList load(const std::filesystem::path& standard_path,
                       const std::filesystem::path& custom_path,
                       const std::filesystem::path& common_path);
};

// Rule-based suffix stripper with an exception table. Exceptions win over
// rules; the rule order is fixed and the result is idempotent.
class Lemmatizer {
 public:
  Lemmatizer() = default;
  static Lemmatizer from_file(const std::filesystem::path& exceptions_path);

  std::string lemmatize(const std::string& token) const;

  void add_exception(const std::string& form, const std::string& lemma) {
    exceptions_[form] = lemma;
  }

 private:
  std::unordered_map<std::string, std::string> exceptions_;
};

using NounLexicon = std::unordered_set<std::string>;

struct TokenDoc {
  std::string doc_id;
  std::vector<std::string> tokens;
  bool empty_after_preprocess = false;

  json to_json() const;
  static TokenDoc from_json(const json& j);
};

struct PreprocessOptions {
  bool lowercase = true;
  bool drop_stopwords = true;
  bool drop_numeric = true;
  bool lemmatize = true;
  bool noun_filter = true;
};

std::vector<std::string> tokenize(const std::string& text, bool lowercase = true);

TokenDoc preprocess_doc(const std::string& doc_id, const std::string& text,
                        const StopList& stoplist, const Lemmatizer& lemmatizer,
                        const NounLexicon& noun_lexicon,
                        const PreprocessOptions& options = {});

struct Vocabulary {
  struct TermInfo {
    int term_id = 0;
    long document_frequency = 0;
    long corpus_frequency = 0;
  };
  std::unordered_map<std::string, TermInfo> terms;
  std::vector<std::string> id_to_term;  // index = term_id

  std::size_t size() const { return id_to_term.size(); }

  json to_json() const;  // terms emitted in term_id order
  static Vocabulary from_json(const json& j);
};

Vocabulary build_vocabulary(const std::vector<TokenDoc>& docs,
                            long min_document_frequency = 1);

}  // namespace reviewlens::preprocess
