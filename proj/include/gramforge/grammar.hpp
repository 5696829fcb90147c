#pragma once

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gramforge/error.hpp"
#include "gramforge/tokens.hpp"

namespace gramforge {

enum class Direction : char { left = '-', right = '+' };

inline Direction opposite(Direction d) {
  return d == Direction::left ? Direction::right : Direction::left;
}

// A typed slot on a word. The label names the peer owner (a word or a
// category) the link must reach, in the given direction.
struct Connector {
  std::string label;
  Direction dir = Direction::right;

  Connector flipped() const { return {label, opposite(dir)}; }
  std::string text() const { return label + static_cast<char>(dir); }

  friend bool operator==(const Connector&, const Connector&) = default;
  friend auto operator<=>(const Connector&, const Connector&) = default;
};

// Conjunction of connectors. Within each direction the order is by
// nearness: the first left connector links to the closest word on the left,
// and likewise on the right. An empty disjunct lets a word stand unlinked.
struct Disjunct {
  std::vector<Connector> connectors;

  std::vector<Connector> side(Direction d) const {
    std::vector<Connector> out;
    for (const auto& c : connectors)
      if (c.dir == d) out.push_back(c);
    return out;
  }

  Disjunct flipped() const {
    Disjunct out;
    for (const auto& c : connectors) out.connectors.push_back(c.flipped());
    return out;
  }

  std::string text() const {
    if (connectors.empty()) return "()";
    std::string out;
    for (std::size_t i = 0; i < connectors.size(); ++i) {
      if (i) out += " & ";
      out += connectors[i].text();
    }
    return out;
  }

  friend bool operator==(const Disjunct&, const Disjunct&) = default;
  friend auto operator<=>(const Disjunct&, const Disjunct&) = default;
};

struct Rule {
  std::string owner;
  std::vector<Disjunct> disjuncts;

  std::string text() const {
    std::string out = owner + ": ";
    for (std::size_t i = 0; i < disjuncts.size(); ++i) {
      if (i) out += " | ";
      out += disjuncts[i].text();
    }
    return out;
  }

  // Disjunct order carries no meaning, so equality is multiset equality.
  friend bool operator==(const Rule& a, const Rule& b) {
    if (a.owner != b.owner || a.disjuncts.size() != b.disjuncts.size()) return false;
    auto x = a.disjuncts, y = b.disjuncts;
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    return x == y;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline Disjunct parse_disjunct(std::string_view text) {
  const auto body = trim(text);
  Disjunct d;
  if (body == "()" || body.empty()) return d;
  for (const auto& part : split(body, '&')) {
    auto c = trim(part);
    if (c.size() < 2 || (c.back() != '+' && c.back() != '-'))
      throw GrammarError("malformed connector '" + c + "'");
    const Direction dir = c.back() == '+' ? Direction::right : Direction::left;
    c.pop_back();
    d.connectors.push_back({trim(c), dir});
  }
  return d;
}

}  // namespace detail

// "owner: a- & b+ | c+" (a trailing ';' is allowed).
inline Rule parse_rule(std::string_view text) {
  auto body = detail::trim(text);
  if (!body.empty() && body.back() == ';') body.pop_back();
  const auto colon = body.find(": ");
  const auto pos = colon != std::string::npos ? colon : body.rfind(':');
  if (pos == std::string::npos || pos == 0) throw GrammarError("rule lacks 'owner:' prefix: '" + body + "'");
  Rule r;
  r.owner = detail::trim(std::string_view(body).substr(0, pos));
  for (const auto& alt : detail::split(std::string_view(body).substr(pos + 1), '|'))
    r.disjuncts.push_back(detail::parse_disjunct(alt));
  if (r.owner.empty()) throw GrammarError("rule has an empty owner");
  return r;
}

// Link-grammar dictionary: rules keyed by owner, plus a lexicon mapping
// category owners to member words. A word owns its own rule unless it is
// covered by a category. An optional terminator token (e.g. ".") closes every
// generated sentence and is accepted unlinked in final position.
class Grammar {
 public:
  const std::map<std::string, Rule>& rules() const noexcept { return rules_; }
  const std::map<std::string, std::vector<std::string>>& lexicon() const noexcept { return lexicon_; }
  const std::optional<std::string>& terminator() const noexcept { return terminator_; }
  void set_terminator(std::optional<std::string> t) { terminator_ = std::move(t); }
  bool empty() const noexcept { return rules_.empty(); }

  bool has_owner(const std::string& owner) const { return rules_.count(owner) > 0; }

  const Rule* rule(const std::string& owner) const {
    auto it = rules_.find(owner);
    return it == rules_.end() ? nullptr : &it->second;
  }
  Rule* rule(const std::string& owner) {
    auto it = rules_.find(owner);
    return it == rules_.end() ? nullptr : &it->second;
  }

  // Merges disjuncts into the owner's rule, skipping ones already present.
  void add_rule(const Rule& r) {
    auto& target = rules_[r.owner];
    target.owner = r.owner;
    for (const auto& d : r.disjuncts)
      if (std::find(target.disjuncts.begin(), target.disjuncts.end(), d) == target.disjuncts.end())
        target.disjuncts.push_back(d);
  }

  // Adds the rule verbatim (duplicates kept). Used by mutation, which must be
  // reversible position by position.
  Rule& rule_slot(const std::string& owner) {
    auto& target = rules_[owner];
    target.owner = owner;
    return target;
  }

  void set_category(const std::string& category, std::vector<std::string> words) {
    lexicon_[category] = std::move(words);
  }

  bool is_category(const std::string& owner) const { return lexicon_.count(owner) > 0; }

  // Words an owner stands for.
  std::vector<std::string> words_of(const std::string& owner) const {
    if (auto it = lexicon_.find(owner); it != lexicon_.end()) return it->second;
    return {owner};
  }

  // Owners (with rules) a surface word can take.
  std::vector<std::string> owners_of(const std::string& word) const {
    std::vector<std::string> out;
    for (const auto& [cat, words] : lexicon_)
      if (rules_.count(cat) && std::find(words.begin(), words.end(), word) != words.end())
        out.push_back(cat);
    if (rules_.count(word) && !lexicon_.count(word)) out.push_back(word);
    return out;
  }

  // Closed dictionary: every connector label names an owner with a rule.
  void validate() const {
    for (const auto& [owner, r] : rules_) {
      std::set<Disjunct> seen;
      for (const auto& d : r.disjuncts) {
        if (!seen.insert(d).second)
          throw GrammarError("duplicate disjunct '" + d.text() + "' in rule for '" + owner + "'");
        for (const auto& c : d.connectors)
          if (!rules_.count(c.label))
            throw GrammarError("connector '" + c.text() + "' of '" + owner +
                               "' names an owner with no rule");
      }
    }
  }

  std::size_t disjunct_count() const {
    std::size_t n = 0;
    for (const auto& [_, r] : rules_) n += r.disjuncts.size();
    return n;
  }

  std::size_t connector_count() const {
    std::size_t n = 0;
    for (const auto& [_, r] : rules_)
      for (const auto& d : r.disjuncts) n += d.connectors.size();
    return n;
  }

  std::string text() const {
    std::ostringstream out;
    if (terminator_) out << "#terminator " << *terminator_ << "\n";
    for (const auto& [cat, words] : lexicon_) out << "#category " << cat << ": " << join(words) << "\n";
    for (const auto& [owner, r] : rules_) out << r.text() << ";\n";
    return out.str();
  }

  nlohmann::json lexicon_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [cat, words] : lexicon_) j[cat] = words;
    return j;
  }

  void load_lexicon(const nlohmann::json& j) {
    for (const auto& [cat, words] : j.items()) lexicon_[cat] = words.get<std::vector<std::string>>();
  }

  friend bool operator==(const Grammar& a, const Grammar& b) {
    return a.rules_ == b.rules_ && a.lexicon_ == b.lexicon_ && a.terminator_ == b.terminator_;
  }

 private:
  std::map<std::string, Rule> rules_;
  std::map<std::string, std::vector<std::string>> lexicon_;
  std::optional<std::string> terminator_;
};

// Dictionary text: one "owner: disjunct | disjunct ...;" block per owner,
// blocks may span lines, '%' starts a comment, "()" is the empty disjunct,
// "#terminator <token>" declares the sentence terminator and
// "#category NAME: w1 w2 ..." lets owner NAME stand for those words.
inline Grammar parse_grammar(std::istream& in) {
  Grammar g;
  std::string line, body;
  while (std::getline(in, line)) {
    if (auto pct = line.find('%'); pct != std::string::npos) line.erase(pct);
    const auto t = detail::trim(line);
    if (t.rfind("#terminator", 0) == 0) {
      const auto tok = detail::trim(std::string_view(t).substr(11));
      if (tok.empty()) throw GrammarError("#terminator needs a token");
      g.set_terminator(tok);
      continue;
    }
    if (t.rfind("#category", 0) == 0) {
      const auto rest = std::string_view(t).substr(9);
      const auto colon = rest.find(':');
      if (colon == std::string_view::npos) throw GrammarError("#category needs 'NAME: word word ...'");
      const auto name = detail::trim(rest.substr(0, colon));
      std::vector<std::string> words;
      std::istringstream ws{std::string(rest.substr(colon + 1))};
      for (std::string w; ws >> w;) words.push_back(w);
      if (name.empty() || words.empty()) throw GrammarError("#category needs a name and at least one word");
      g.set_category(name, std::move(words));
      continue;
    }
    body += line;
    body += '\n';
  }
  for (const auto& block : detail::split(body, ';')) {
    if (detail::trim(block).empty()) continue;
    auto r = parse_rule(block);
    if (const Rule* existing = g.rule(r.owner)) {
      for (const auto& d : r.disjuncts)
        if (std::find(existing->disjuncts.begin(), existing->disjuncts.end(), d) !=
            existing->disjuncts.end())
          throw GrammarError("duplicate disjunct '" + d.text() + "' for '" + r.owner + "'");
    }
    g.add_rule(r);
  }
  g.validate();
  return g;
}

inline Grammar parse_grammar(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_grammar(in);
}

// Flips every connector of `rule` (which must be part of `grammar`) and, in
// each peer owner's rule, every connector that names the rule's owner, so the
// peers keep linking with the mutated rule. Applying it twice restores the
// grammar.
inline std::pair<Rule, Grammar> mutate_rule(const Rule& rule, const Grammar& grammar) {
  const Rule* current = grammar.rule(rule.owner);
  if (!current) throw GrammarError("rule owner '" + rule.owner + "' is not in the grammar");

  Grammar adjusted = grammar;
  Rule& slot = adjusted.rule_slot(rule.owner);
  std::vector<bool> mutated(slot.disjuncts.size(), false);
  Rule flipped{rule.owner, {}};
  for (const auto& d : rule.disjuncts) {
    std::size_t at = slot.disjuncts.size();
    for (std::size_t i = 0; i < slot.disjuncts.size(); ++i)
      if (!mutated[i] && slot.disjuncts[i] == d) {
        at = i;
        break;
      }
    if (at == slot.disjuncts.size())
      throw GrammarError("disjunct '" + d.text() + "' is not part of the rule for '" + rule.owner + "'");
    slot.disjuncts[at] = d.flipped();
    mutated[at] = true;
    flipped.disjuncts.push_back(d.flipped());
  }

  std::set<std::string> peers;
  for (const auto& d : rule.disjuncts)
    for (const auto& c : d.connectors) {
      const Rule* peer = grammar.rule(c.label);
      if (!peer) throw GrammarError("connector '" + c.text() + "' names an owner with no rule");
      bool found = false;
      for (std::size_t i = 0; i < peer->disjuncts.size() && !found; ++i) {
        if (c.label == rule.owner && i < mutated.size() && mutated[i]) continue;
        for (const auto& pc : peer->disjuncts[i].connectors)
          if (pc.label == rule.owner && pc.dir == opposite(c.dir)) found = true;
      }
      if (!found)
        throw GrammarError("counterpart of '" + rule.owner + ": " + c.text() + "' is absent from '" +
                           c.label + "'");
      peers.insert(c.label);
    }

  for (const auto& p : peers) {
    Rule& peer = adjusted.rule_slot(p);
    for (std::size_t i = 0; i < peer.disjuncts.size(); ++i) {
      if (p == rule.owner && mutated[i]) continue;
      for (auto& c : peer.disjuncts[i].connectors)
        if (c.label == rule.owner) c.dir = opposite(c.dir);
    }
  }
  return {std::move(flipped), std::move(adjusted)};
}

}  // namespace gramforge
