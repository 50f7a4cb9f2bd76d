#include "betr/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace betr {

namespace {

constexpr int kUnbounded = std::numeric_limits<int>::max() / 4;
constexpr std::size_t kMaxLanguageSize = 4096;
constexpr char kOpaque = '\x01';

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_nonterminal_name(std::string_view s) {
  if (s.size() < 3 || s.front() != '<' || s.back() != '>') return false;
  return std::none_of(s.begin() + 1, s.end() - 1, [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '<' || c == '>';
  });
}

// Rule body text with the source line of every character, so that errors in
// alternatives spanning several lines still report the right line.
struct PendingRule {
  std::string name;
  std::size_t line = 0;
  std::string body;
  std::vector<std::size_t> body_lines;
};

std::vector<Symbol> parse_alternative(std::string_view alt, const std::size_t* lines) {
  std::vector<Symbol> out;
  std::string run;
  auto flush = [&] {
    if (!run.empty()) out.push_back(Symbol{true, std::move(run), -1});
    run.clear();
  };
  for (std::size_t i = 0; i < alt.size(); ++i) {
    const char c = alt[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (c == '<') {
      flush();
      const auto close = alt.find('>', i);
      if (close == std::string_view::npos)
        throw GrammarError("unterminated non-terminal", lines[i]);
      const auto name = alt.substr(i, close - i + 1);
      if (!is_nonterminal_name(name))
        throw GrammarError("malformed non-terminal '" + std::string(name) + "'", lines[i]);
      out.push_back(Symbol{false, std::string(name), -1});
      i = close;
    } else if (c == '>') {
      throw GrammarError("stray '>'", lines[i]);
    } else {
      run.push_back(c);
    }
  }
  flush();
  return out;
}

}  // namespace

const Rule* Grammar::find(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &rules_[it->second];
}

Grammar parse_grammar(std::string_view text) {
  std::vector<PendingRule> pending;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    auto line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;

    std::string_view body;
    if (const auto def = line.find("::="); def != std::string_view::npos) {
      const auto lhs = trim(line.substr(0, def));
      if (!is_nonterminal_name(lhs))
        throw GrammarError("expected '<name> ::=' but found '" + std::string(lhs) + "'", line_no);
      PendingRule r;
      r.name = std::string(lhs);
      r.line = line_no;
      pending.push_back(std::move(r));
      body = line.substr(def + 3);
    } else {
      if (pending.empty()) throw GrammarError("continuation line before any rule", line_no);
      body = line;
      pending.back().body.push_back(' ');
      pending.back().body_lines.push_back(line_no);
    }
    pending.back().body.append(body);
    pending.back().body_lines.insert(pending.back().body_lines.end(), body.size(), line_no);
  }
  if (pending.empty()) throw GrammarError("grammar has no rules", 0);

  Grammar g;
  for (const auto& p : pending) {
    if (g.index_.count(p.name)) throw GrammarError("duplicate rule " + p.name, p.line);
    g.index_.emplace(p.name, static_cast<int>(g.rules_.size()));
    Rule rule;
    rule.name = p.name;
    std::size_t start = 0;
    const std::string_view body = p.body;
    while (start <= body.size()) {
      auto bar = body.find('|', start);
      if (bar == std::string_view::npos) bar = body.size();
      const auto alt = body.substr(start, bar - start);
      const std::size_t alt_line = alt.empty() ? p.line : p.body_lines[start];
      auto symbols = parse_alternative(alt, p.body_lines.data() + start);
      if (symbols.empty()) throw GrammarError("empty alternative in rule " + p.name, alt_line);
      rule.alternatives.push_back(Production{std::move(symbols), 0});
      start = bar + 1;
    }
    g.rules_.push_back(std::move(rule));
  }

  for (std::size_t r = 0; r < g.rules_.size(); ++r) {
    for (auto& alt : g.rules_[r].alternatives) {
      for (auto& s : alt.symbols) {
        if (s.terminal) continue;
        const auto it = g.index_.find(s.text);
        if (it == g.index_.end())
          throw GrammarError("undefined non-terminal " + s.text + " referenced by " + g.rules_[r].name,
                             pending[r].line);
        s.rule = it->second;
      }
    }
  }

  g.analyze();
  g.collect_vocabulary();
  return g;
}

Grammar load_grammar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open grammar file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_grammar(ss.str());
}

void Grammar::analyze() {
  for (auto& r : rules_) r.min_height = kUnbounded;
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto& r : rules_) {
      for (auto& alt : r.alternatives) {
        int h = 1;
        for (const auto& s : alt.symbols) {
          const int child = s.terminal ? 1 : rules_[s.rule].min_height;
          h = std::max(h, child >= kUnbounded ? kUnbounded : 1 + child);
        }
        alt.min_height = h;
        if (h < r.min_height) {
          r.min_height = h;
          changed = true;
        }
      }
    }
  }
  for (const auto& r : rules_) {
    if (r.min_height >= kUnbounded) throw GrammarError("rule " + r.name + " cannot derive a finite string", 0);
  }

  const auto n = rules_.size();
  for (std::size_t a = 0; a < n; ++a) {
    std::vector<bool> seen(n, false);
    std::vector<int> todo;
    for (const auto& alt : rules_[a].alternatives)
      for (const auto& s : alt.symbols)
        if (!s.terminal) todo.push_back(s.rule);
    while (!todo.empty()) {
      const int r = todo.back();
      todo.pop_back();
      if (seen[r]) continue;
      seen[r] = true;
      for (const auto& alt : rules_[r].alternatives)
        for (const auto& s : alt.symbols)
          if (!s.terminal && !seen[s.rule]) todo.push_back(s.rule);
    }
    rules_[a].recursive = seen[a];
  }
}

void Grammar::collect_vocabulary() {
  const auto n = rules_.size();
  // finite[r]: r derives a finite language (reaches no recursive rule)
  std::vector<int> finite(n, -1);
  std::function<bool(int)> is_finite = [&](int r) -> bool {
    if (finite[r] >= 0) return finite[r] == 1;
    finite[r] = 0;  // provisional, breaks cycles
    bool ok = !rules_[r].recursive;
    for (const auto& alt : rules_[r].alternatives)
      for (const auto& s : alt.symbols)
        if (ok && !s.terminal) ok = is_finite(s.rule);
    finite[r] = ok ? 1 : 0;
    return ok;
  };

  std::vector<std::optional<std::vector<std::string>>> lang(n);
  std::function<std::vector<std::string>(const Production&)> expand;
  std::function<const std::vector<std::string>&(int)> language = [&](int r) -> const std::vector<std::string>& {
    if (!lang[r]) {
      std::vector<std::string> out;
      for (const auto& alt : rules_[r].alternatives) {
        auto part = expand(alt);
        out.insert(out.end(), part.begin(), part.end());
      }
      lang[r] = std::move(out);
    }
    return *lang[r];
  };
  expand = [&](const Production& alt) {
    std::vector<std::string> acc{""};
    for (const auto& s : alt.symbols) {
      std::vector<std::string> next;
      if (s.terminal || !is_finite(s.rule)) {
        const std::string piece = s.terminal ? s.text : std::string(1, kOpaque);
        for (auto& a : acc) next.push_back(a + piece);
      } else {
        for (const auto& a : acc)
          for (const auto& b : language(s.rule)) {
            if (next.size() >= kMaxLanguageSize) break;
            next.push_back(a + b);
          }
      }
      acc = std::move(next);
    }
    return acc;
  };

  static constexpr std::string_view kLeafTags[] = {"PostCnd", "PreCnd", "Cnstr", "Act"};
  for (const auto& r : rules_) {
    for (const auto& alt : r.alternatives) {
      for (const auto& str : expand(alt)) {
        for (auto tag : kLeafTags) {
          const std::string open = "[" + std::string(tag) + "]";
          const std::string close = "[/" + std::string(tag) + "]";
          std::size_t at = 0;
          while ((at = str.find(open, at)) != std::string::npos) {
            const auto name_begin = at + open.size();
            const auto name_end = str.find('[', name_begin);
            at = name_begin;
            if (name_end == std::string::npos || str.compare(name_end, close.size(), close) != 0) continue;
            const auto name = str.substr(name_begin, name_end - name_begin);
            if (name.empty() || name.find(kOpaque) != std::string::npos || name == "DummyNode") continue;
            vocabulary_.insert(name);
          }
        }
      }
    }
  }
}

Genome random_genome(std::size_t length, Rng& rng) {
  if (length == 0) throw std::invalid_argument("genome length must be positive");
  Genome g;
  g.codons.resize(length);
  for (auto& c : g.codons) c = static_cast<std::uint32_t>(rng.below(kCodonRange));
  return g;
}

std::optional<PhenotypeExpr> map_genotype(const Genome& genome, const Grammar& grammar,
                                          const MappingOptions& options) {
  if (genome.codons.empty()) return std::nullopt;

  struct Frame {
    const Symbol* symbol;
    int depth;
  };
  const Symbol root{false, grammar.start_symbol(), 0};
  std::vector<Frame> stack;
  stack.reserve(64);
  stack.push_back({&root, 1});

  PhenotypeExpr out;
  out.text.reserve(512);
  out.derivation_depth = 1;
  std::size_t index = 0;
  int wraps = 0;
  std::vector<const Production*> eligible;

  const auto& rules = grammar.rules();
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    if (f.symbol->terminal) {
      out.text += f.symbol->text;
      continue;
    }
    const Rule& rule = rules[f.symbol->rule];
    // children land at depth + 1; on the last level only terminal-only
    // alternatives remain, anything else is chosen freely
    eligible.clear();
    const bool last_level = f.depth + 1 >= options.max_tree_depth;
    for (const auto& alt : rule.alternatives)
      if (!last_level || std::all_of(alt.symbols.begin(), alt.symbols.end(), [](const Symbol& s) { return s.terminal; }))
        eligible.push_back(&alt);
    if (eligible.empty()) return std::nullopt;

    const Production* chosen = eligible.front();
    if (eligible.size() > 1) {
      if (index == genome.codons.size()) {
        if (++wraps > options.max_wraps) return std::nullopt;
        index = 0;
      }
      chosen = eligible[genome.codons[index++] % eligible.size()];
      ++out.codons_used;
    }
    const int child_depth = f.depth + 1;
    out.derivation_depth = std::max(out.derivation_depth, child_depth);
    for (auto it = chosen->symbols.rbegin(); it != chosen->symbols.rend(); ++it)
      stack.push_back({&*it, child_depth});
  }
  return out;
}

}  // namespace betr
