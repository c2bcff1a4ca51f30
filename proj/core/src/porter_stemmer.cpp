// Porter, M.F. (1980) "An algorithm for suffix stripping", Program 14(3).
// Implements the published rules without the later departures of the
// reference C implementation (no "logi" rule, "abli" -> "able").

#include <array>
#include <string>
#include <string_view>
#include <utility>

#include "topictrend/corpus.hpp"

namespace topictrend::corpus {

namespace {

class Stemmer {
 public:
  explicit Stemmer(std::string_view word) : w_(word) {}

  std::string run() {
    if (w_.size() <= 2) return w_;
    step1a();
    step1b();
    step1c();
    step2();
    step3();
    step4();
    step5a();
    step5b();
    return w_;
  }

 private:
  std::string w_;

  bool consonant(std::size_t i) const {
    switch (w_[i]) {
      case 'a':
      case 'e':
      case 'i':
      case 'o':
      case 'u':
        return false;
      case 'y':
        return i == 0 ? true : !consonant(i - 1);
      default:
        return true;
    }
  }

  // m in [C](VC)^m[V] for the prefix w_[0, len).
  int measure(std::size_t len) const {
    int m = 0;
    std::size_t i = 0;
    while (i < len && consonant(i)) ++i;
    while (i < len) {
      while (i < len && !consonant(i)) ++i;
      if (i >= len) break;
      while (i < len && consonant(i)) ++i;
      ++m;
    }
    return m;
  }

  bool has_vowel(std::size_t len) const {
    for (std::size_t i = 0; i < len; ++i)
      if (!consonant(i)) return true;
    return false;
  }

  bool double_consonant(std::size_t len) const {
    return len >= 2 && w_[len - 1] == w_[len - 2] && consonant(len - 1);
  }

  // *o: stem ends consonant-vowel-consonant, last not w, x or y.
  bool cvc(std::size_t len) const {
    if (len < 3) return false;
    if (!consonant(len - 1) || consonant(len - 2) || !consonant(len - 3)) return false;
    const char c = w_[len - 1];
    return c != 'w' && c != 'x' && c != 'y';
  }

  bool ends_with(std::string_view s) const {
    return w_.size() >= s.size() && std::string_view(w_).substr(w_.size() - s.size()) == s;
  }

  std::size_t stem_len(std::string_view suffix) const { return w_.size() - suffix.size(); }

  void replace_suffix(std::string_view suffix, std::string_view repl) {
    w_.replace(w_.size() - suffix.size(), suffix.size(), repl);
  }

  template <std::size_t N>
  const std::pair<std::string_view, std::string_view>* longest_match(
      const std::array<std::pair<std::string_view, std::string_view>, N>& rules) const {
    const std::pair<std::string_view, std::string_view>* best = nullptr;
    for (const auto& r : rules)
      if (ends_with(r.first) && (best == nullptr || r.first.size() > best->first.size())) best = &r;
    return best;
  }

  void step1a() {
    if (ends_with("sses")) replace_suffix("sses", "ss");
    else if (ends_with("ies")) replace_suffix("ies", "i");
    else if (ends_with("ss")) return;
    else if (ends_with("s")) replace_suffix("s", "");
  }

  void step1b() {
    bool second_or_third = false;
    if (ends_with("eed")) {
      if (measure(stem_len("eed")) > 0) replace_suffix("eed", "ee");
      return;
    }
    if (ends_with("ed") && has_vowel(stem_len("ed"))) {
      replace_suffix("ed", "");
      second_or_third = true;
    } else if (ends_with("ing") && has_vowel(stem_len("ing"))) {
      replace_suffix("ing", "");
      second_or_third = true;
    }
    if (!second_or_third) return;
    if (ends_with("at")) replace_suffix("at", "ate");
    else if (ends_with("bl")) replace_suffix("bl", "ble");
    else if (ends_with("iz")) replace_suffix("iz", "ize");
    else if (double_consonant(w_.size())) {
      const char c = w_.back();
      if (c != 'l' && c != 's' && c != 'z') w_.pop_back();
    } else if (measure(w_.size()) == 1 && cvc(w_.size())) {
      w_ += 'e';
    }
  }

  void step1c() {
    if (ends_with("y") && has_vowel(stem_len("y"))) w_.back() = 'i';
  }

  void step2() {
    static constexpr std::array<std::pair<std::string_view, std::string_view>, 20> rules{{
        {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},   {"anci", "ance"},
        {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},     {"entli", "ent"},
        {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
        {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
        {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},   {"biliti", "ble"},
    }};
    if (const auto* r = longest_match(rules); r && measure(stem_len(r->first)) > 0)
      replace_suffix(r->first, r->second);
  }

  void step3() {
    static constexpr std::array<std::pair<std::string_view, std::string_view>, 7> rules{{
        {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
        {"ical", "ic"},  {"ful", ""},   {"ness", ""},
    }};
    if (const auto* r = longest_match(rules); r && measure(stem_len(r->first)) > 0)
      replace_suffix(r->first, r->second);
  }

  void step4() {
    static constexpr std::array<std::pair<std::string_view, std::string_view>, 19> rules{{
        {"al", ""},  {"ance", ""}, {"ence", ""}, {"er", ""},  {"ic", ""},   {"able", ""}, {"ible", ""},
        {"ant", ""}, {"ement", ""}, {"ment", ""}, {"ent", ""}, {"ion", ""}, {"ou", ""},   {"ism", ""},
        {"ate", ""}, {"iti", ""},  {"ous", ""},  {"ive", ""}, {"ize", ""},
    }};
    const auto* r = longest_match(rules);
    if (r == nullptr) return;
    const std::size_t len = stem_len(r->first);
    if (measure(len) <= 1) return;
    if (r->first == "ion" && !(len > 0 && (w_[len - 1] == 's' || w_[len - 1] == 't'))) return;
    replace_suffix(r->first, "");
  }

  void step5a() {
    if (!ends_with("e")) return;
    const std::size_t len = stem_len("e");
    const int m = measure(len);
    if (m > 1 || (m == 1 && !cvc(len))) w_.pop_back();
  }

  void step5b() {
    if (measure(w_.size()) > 1 && double_consonant(w_.size()) && w_.back() == 'l') w_.pop_back();
  }
};

}  // namespace

std::string porter_stem(std::string_view word) { return Stemmer(word).run(); }

}  // namespace topictrend::corpus
