#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace noncomp::corpus {

using PhraseId = std::int64_t;
using SentenceId = std::int64_t;

struct Token {
  std::string text;
  bool is_punct = false;
};

/// True iff every character is non-alphanumeric. Bytes >= 0x80 (UTF-8
/// letters) count as alphanumeric.
bool is_punctuation(std::string_view token);

Token make_token(std::string text);

/// Half-open token range [start, end).
struct Span {
  int start = 0;
  int end = 0;

  int size() const { return end - start; }
  bool empty() const { return end <= start; }
  bool contains(const Span& other) const {
    return start <= other.start && other.end <= end;
  }
  friend auto operator<=>(const Span&, const Span&) = default;
};

struct TreeNode {
  int node_id = 0;    // 1-based, as in the parent-pointer row
  int parent_id = 0;  // 0 for the root
  Span span;
  PhraseId phrase_id = -1;
};

struct SentimentTree {
  SentenceId sentence_id = 0;
  std::vector<Token> tokens;
  std::vector<TreeNode> nodes;  // nodes[i].node_id == i + 1

  const TreeNode& node(int node_id) const;
  const TreeNode& root() const;
  std::vector<int> children(int node_id) const;
  int non_punct_count(Span span) const;
  std::string text(Span span) const;
};

struct PhraseRecord {
  PhraseId phrase_id = 0;
  std::string text;
  double sst_value = 0.0;
  std::vector<int> raw_ticks;
};

struct RawStats {
  double mean_ticks = 0.0;
  double std_ticks = 0.0;
};

enum class StdMode { Population, Sample };

/// Mean and standard deviation of the 25-point slider ticks.
/// Sample mode needs at least two ticks.
RawStats raw_stats(const PhraseRecord& phrase,
                   StdMode mode = StdMode::Population);

class Corpus {
 public:
  std::vector<SentimentTree> trees;

  const PhraseRecord* find_phrase(PhraseId id) const;
  const PhraseRecord* find_phrase(std::string_view text) const;
  const SentimentTree* find_tree(SentenceId id) const;

  void add_phrase(PhraseRecord record);
  std::size_t phrase_count() const { return phrases_.size(); }
  const std::map<PhraseId, PhraseRecord>& phrases() const { return phrases_; }

 private:
  std::map<PhraseId, PhraseRecord> phrases_;
  std::unordered_map<std::string, PhraseId> by_text_;
};

struct CorpusFiles {
  std::filesystem::path sentences;
  std::filesystem::path trees;
  std::filesystem::path dictionary;
  std::filesystem::path sentiment;
  std::filesystem::path raw_annotations;
};

Corpus parse_corpus(const CorpusFiles& files);

/// Builds the node table for one parent-pointer row. Leaves are nodes
/// 1..n_tokens in token order. Throws a structural error naming the
/// sentence on cycles, multiple or missing roots, and out-of-range parents.
std::vector<TreeNode> build_nodes(SentenceId sentence_id,
                                  const std::vector<int>& parents,
                                  int n_tokens);

std::vector<int> parse_parent_row(SentenceId sentence_id,
                                  std::string_view row);

std::string phrase_text(const SentimentTree& tree, int node_id);

// Linguistic sidecar: constituent labels, child spans and NE flags produced
// by an external parser.

enum class PhraseLabel { NP, VP, PP, SBAR, OTHER };

const char* to_string(PhraseLabel label);
std::optional<PhraseLabel> parse_label(std::string_view s);

struct SidecarEntry {
  PhraseLabel label = PhraseLabel::OTHER;
  std::vector<Span> child_spans;
  bool has_named_entity = false;
};

struct LinguisticSidecar {
  std::map<SentenceId, std::map<Span, SidecarEntry>> sentences;

  const SidecarEntry* find(SentenceId sentence, Span span) const;
  bool covers(SentenceId sentence) const {
    return sentences.count(sentence) != 0;
  }
};

/// Reads `sentence_id<TAB>start<TAB>end<TAB>label<TAB>has_ne` rows with an
/// optional sixth column of explicit child spans (`s-e;s-e`). Without it,
/// children are the maximal listed spans nested in the entry, with any
/// uncovered token filling in as a one-token child.
LinguisticSidecar parse_sidecar(const std::filesystem::path& path);
LinguisticSidecar parse_sidecar_lines(const std::vector<std::string>& lines);

}  // namespace noncomp::corpus
