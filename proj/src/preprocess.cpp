#include "reviewlens/preprocess.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace reviewlens::preprocess {

namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool contains_digit(const std::string& s) {
  return std::any_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isdigit(c); });
}

}  // namespace

std::unordered_set<std::string> load_word_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open word list " + path.string());
  std::unordered_set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.insert(line);
  }
  return out;
}

StopList StopList::load(const std::filesystem::path& standard_path,
                        const std::filesystem::path& custom_path,
                        const std::filesystem::path& common_path) {
  StopList s;
  s.standard_stopwords = load_word_list(standard_path);
  s.custom_stopwords = load_word_list(custom_path);
  s.common_word_list = load_word_list(common_path);
  return s;
}

Lemmatizer Lemmatizer::from_file(const std::filesystem::path& exceptions_path) {
  Lemmatizer l;
  std::ifstream in(exceptions_path);
  if (!in) throw std::runtime_error("cannot open lemma exceptions " + exceptions_path.string());
  std::string form, lemma;
  while (in >> form >> lemma) l.exceptions_[form] = lemma;
  return l;
}

std::string Lemmatizer::lemmatize(const std::string& token) const {
  auto it = exceptions_.find(token);
  if (it != exceptions_.end()) return it->second;
  const std::size_t n = token.size();
  if (ends_with(token, "ies") && n >= 5) return token.substr(0, n - 3) + "y";
  for (std::string_view suf : {"sses", "xes", "ches", "shes", "oes"}) {
    if (ends_with(token, suf)) return token.substr(0, n - 2);
  }
  if (ends_with(token, "ibility") && n >= 10) return token.substr(0, n - 7);
  if (ends_with(token, "ible") && n >= 8) return token.substr(0, n - 4);
  if (ends_with(token, "s") && !ends_with(token, "ss") && !ends_with(token, "us") &&
      !ends_with(token, "is") && n >= 3)
    return token.substr(0, n - 1);
  return token;
}

std::vector<std::string> tokenize(const std::string& text, bool lowercase) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(lowercase ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

TokenDoc preprocess_doc(const std::string& doc_id, const std::string& text,
                        const StopList& stoplist, const Lemmatizer& lemmatizer,
                        const NounLexicon& noun_lexicon,
                        const PreprocessOptions& options) {
  TokenDoc doc;
  doc.doc_id = doc_id;
  for (std::string& tok : tokenize(text, options.lowercase)) {
    if (options.drop_stopwords && stoplist.contains(tok)) continue;
    if (options.drop_numeric && contains_digit(tok)) continue;
    std::string lemma = options.lemmatize ? lemmatizer.lemmatize(tok) : std::move(tok);
    if (options.noun_filter && !noun_lexicon.count(lemma)) continue;
    doc.tokens.push_back(std::move(lemma));
  }
  doc.empty_after_preprocess = doc.tokens.empty();
  return doc;
}

json TokenDoc::to_json() const {
  json j;
  j["doc_id"] = doc_id;
  j["tokens"] = tokens;
  j["empty_after_preprocess"] = empty_after_preprocess;
  return j;
}

TokenDoc TokenDoc::from_json(const json& j) {
  TokenDoc d;
  d.doc_id = j.at("doc_id").get<std::string>();
  d.tokens = j.at("tokens").get<std::vector<std::string>>();
  d.empty_after_preprocess = j.value("empty_after_preprocess", d.tokens.empty());
  return d;
}

Vocabulary build_vocabulary(const std::vector<TokenDoc>& docs,
                            long min_document_frequency) {
  struct Counts {
    long df = 0;
    long cf = 0;
    std::size_t first_seen = 0;
  };
  std::unordered_map<std::string, Counts> counts;
  std::size_t order = 0;
  for (const auto& doc : docs) {
    std::unordered_set<std::string> seen_in_doc;
    for (const auto& tok : doc.tokens) {
      auto [it, inserted] = counts.try_emplace(tok);
      if (inserted) it->second.first_seen = order++;
      ++it->second.cf;
      if (seen_in_doc.insert(tok).second) ++it->second.df;
    }
  }
  std::vector<std::pair<std::string, Counts>> kept;
  for (auto& [term, c] : counts)
    if (c.df >= min_document_frequency) kept.emplace_back(term, c);
  if (kept.empty()) throw EmptyVocabulary("no term meets the document frequency floor");
  std::sort(kept.begin(), kept.end(),
            [](const auto& a, const auto& b) { return a.second.first_seen < b.second.first_seen; });
  Vocabulary v;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    Vocabulary::TermInfo info;
    info.term_id = static_cast<int>(i);
    info.document_frequency = kept[i].second.df;
    info.corpus_frequency = kept[i].second.cf;
    v.terms[kept[i].first] = info;
    v.id_to_term.push_back(kept[i].first);
  }
  return v;
}

json Vocabulary::to_json() const {
  json terms_json = json::array();
  for (std::size_t i = 0; i < id_to_term.size(); ++i) {
    const TermInfo& info = terms.at(id_to_term[i]);
    terms_json.push_back({{"term", id_to_term[i]},
                          {"df", info.document_frequency},
                          {"cf", info.corpus_frequency}});
  }
  return json{{"terms", terms_json}};
}

Vocabulary Vocabulary::from_json(const json& j) {
  Vocabulary v;
  int id = 0;
  for (const auto& tj : j.at("terms")) {
    TermInfo info;
    info.term_id = id++;
    info.document_frequency = tj.at("df").get<long>();
    info.corpus_frequency = tj.at("cf").get<long>();
    const std::string term = tj.at("term").get<std::string>();
    v.terms[term] = info;
    v.id_to_term.push_back(term);
  }
  return v;
}

}  // namespace reviewlens::preprocess
