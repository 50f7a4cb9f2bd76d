#pragma once

// Independent checkers used by the unit tests and the acceptance runner.

#include <set>
#include <tuple>
#include <string>
#include <string_view>
#include <vector>

#include "betr/grammar.hpp"

namespace oracle {

// Earley recognizer over characters with multi-character terminals; left
// recursion is fine. True iff `text` derives from the grammar's start rule.
inline bool derivable(const betr::Grammar& g, std::string_view text) {
  struct Item {
    int rule, alt, dot;
    std::size_t origin;
    bool operator<(const Item& o) const {
      return std::tie(rule, alt, dot, origin) < std::tie(o.rule, o.alt, o.dot, o.origin);
    }
  };
  const auto& rules = g.rules();
  const std::size_t n = text.size();
  std::vector<std::set<Item>> chart(n + 1);
  std::vector<std::vector<Item>> queue(n + 1);
  // items at each position waiting on a rule
  std::vector<std::vector<std::vector<Item>>> waiting(n + 1, std::vector<std::vector<Item>>(rules.size()));
  auto add = [&](std::size_t at, Item it) {
    if (chart[at].insert(it).second) queue[at].push_back(it);
  };
  for (int a = 0; a < static_cast<int>(rules[0].alternatives.size()); ++a) add(0, {0, a, 0, 0});

  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t q = 0; q < queue[i].size(); ++q) {
      const Item it = queue[i][q];
      const auto& syms = rules[static_cast<std::size_t>(it.rule)].alternatives[static_cast<std::size_t>(it.alt)].symbols;
      if (it.dot == static_cast<int>(syms.size())) {
        // complete: advance every item in origin waiting on this rule
        const auto& ws = waiting[it.origin][static_cast<std::size_t>(it.rule)];
        for (std::size_t k = 0; k < ws.size(); ++k) add(i, {ws[k].rule, ws[k].alt, ws[k].dot + 1, ws[k].origin});
        continue;
      }
      const auto& s = syms[static_cast<std::size_t>(it.dot)];
      if (s.terminal) {
        if (text.substr(i, s.text.size()) == s.text) add(i + s.text.size(), {it.rule, it.alt, it.dot + 1, it.origin});
      } else {
        waiting[i][static_cast<std::size_t>(s.rule)].push_back(it);
        const auto& r = rules[static_cast<std::size_t>(s.rule)];
        for (int a = 0; a < static_cast<int>(r.alternatives.size()); ++a) add(i, {s.rule, a, 0, i});
        // nullable rules do not occur in these grammars
      }
    }
  }
  for (const auto& it : chart[n])
    if (it.rule == 0 && it.origin == 0 &&
        it.dot == static_cast<int>(rules[0].alternatives[static_cast<std::size_t>(it.alt)].symbols.size()))
      return true;
  return false;
}

// Every `[X]` closed by a matching `[/X]` in nesting order.
inline bool tags_balanced(std::string_view text) {
  std::vector<std::string_view> stack;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '[') continue;
    const auto close = text.find(']', i);
    if (close == std::string_view::npos) return false;
    auto tag = text.substr(i + 1, close - i - 1);
    if (!tag.empty() && tag.front() == '/') {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
    } else {
      stack.push_back(tag);
    }
    i = close;
  }
  return stack.empty();
}

// All strings a rule can derive; only for non-recursive rules.
inline std::vector<std::string> expand(const betr::Grammar& g, int rule) {
  std::vector<std::string> out;
  for (const auto& alt : g.rules()[static_cast<std::size_t>(rule)].alternatives) {
    std::vector<std::string> partial{""};
    for (const auto& s : alt.symbols) {
      std::vector<std::string> next;
      if (s.terminal) {
        for (auto& p : partial) next.push_back(p + s.text);
      } else {
        for (const auto& p : partial)
          for (const auto& tail : expand(g, s.rule)) next.push_back(p + tail);
      }
      partial = std::move(next);
    }
    out.insert(out.end(), partial.begin(), partial.end());
  }
  return out;
}

// Leaf identifiers reachable through the condition and action rules.
inline std::set<std::string> leaf_vocabulary(const betr::Grammar& g) {
  std::set<std::string> names;
  for (const char* rule : {"<postconditiont>", "<preconditiont>", "<constraintt>", "<conditiont>", "<action>"}) {
    const auto* r = g.find(rule);
    if (!r) continue;
    const int idx = static_cast<int>(r - g.rules().data());
    for (auto& s : expand(g, idx)) names.insert(std::move(s));
  }
  return names;
}

}  // namespace oracle
