#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "betr/rng.hpp"

namespace betr {

/// Fixed-length codon sequence; the evolvable genotype.
struct Genome {
  std::vector<std::uint32_t> codons;

  std::size_t size() const { return codons.size(); }
  bool operator==(const Genome&) const = default;
};

inline constexpr unsigned kCodonBits = 8;
inline constexpr std::uint32_t kCodonRange = 1u << kCodonBits;

/// Raised for malformed grammar sources. `line()` is 1-based, 0 when the
/// problem is not tied to a line (e.g. a dangling non-terminal).
class GrammarError : public std::runtime_error {
 public:
  GrammarError(const std::string& what, std::size_t line) : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct Symbol {
  bool terminal = true;
  std::string text;  // terminal text, or the non-terminal name including <>
  int rule = -1;     // rule index for non-terminals

  bool operator==(const Symbol&) const = default;
};

struct Production {
  std::vector<Symbol> symbols;
  // Minimum parse-tree height of any derivation starting with this
  // production, counting the expanded non-terminal itself as one level.
  int min_height = 0;
};

struct Rule {
  std::string name;
  std::vector<Production> alternatives;
  int min_height = 0;
  bool recursive = false;  // can derive a string containing itself
};

/// BNF grammar. Rule 0 is the start symbol.
class Grammar {
 public:
  const std::vector<Rule>& rules() const { return rules_; }
  std::size_t rule_count() const { return rules_.size(); }
  const Rule& start() const { return rules_.front(); }
  const std::string& start_symbol() const { return rules_.front().name; }
  const Rule* find(std::string_view name) const;

  /// Distinct behavior leaf identifiers ("IsCarrying_Food", "Explore", ...)
  /// the grammar can place inside condition/action tags. DummyNode excluded.
  const std::set<std::string>& behavior_vocabulary() const { return vocabulary_; }

  friend Grammar parse_grammar(std::string_view text);

 private:
  void analyze();
  void collect_vocabulary();

  std::vector<Rule> rules_;
  std::unordered_map<std::string, int> index_;
  std::set<std::string> vocabulary_;
};

/// Parses `<name> ::= alt | alt` lines. Lines without `::=` continue the
/// previous rule; `#` starts a comment; whitespace between symbols is ignored.
Grammar parse_grammar(std::string_view text);
Grammar load_grammar(const std::string& path);

/// Serialized behavior-tree expression produced by the mapper.
struct PhenotypeExpr {
  std::string text;
  int derivation_depth = 0;
  std::size_t codons_used = 0;
};

struct MappingOptions {
  int max_tree_depth = 10;
  int max_wraps = 3;
};

Genome random_genome(std::size_t length, Rng& rng);

/// Leftmost derivation driven by codons. A non-terminal with k eligible
/// alternatives consumes one codon c and picks alternative c mod k; with a
/// single eligible alternative no codon is consumed. Depth counts the start
/// symbol as 1; when the children of a non-terminal would sit at
/// max_tree_depth, only terminal-only alternatives are eligible. Returns
/// nullopt for an invalid individual (wrap limit exhausted or no eligible
/// alternative).
std::optional<PhenotypeExpr> map_genotype(const Genome& genome, const Grammar& grammar,
                                          const MappingOptions& options = {});

}  // namespace betr
