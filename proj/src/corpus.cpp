#include "noncomp/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "noncomp/error.hpp"
#include "noncomp/text.hpp"

namespace noncomp::corpus {

namespace {

Error structural(SentenceId sentence_id, const std::string& what) {
  return Error(ErrorCode::Structural,
               "sentence " + std::to_string(sentence_id) + ": " + what);
}

Error row_error(ErrorCode code, const std::filesystem::path& path,
                std::size_t line_no, const std::string& what) {
  return Error(code, path.filename().string() + ":" +
                         std::to_string(line_no) + ": " + what);
}

}  // namespace

bool is_punctuation(std::string_view token) {
  if (token.empty()) return false;
  return std::none_of(token.begin(), token.end(), [](char c) {
    const auto u = static_cast<unsigned char>(c);
    return u >= 0x80 || std::isalnum(u);
  });
}

Token make_token(std::string text) {
  Token t;
  t.is_punct = is_punctuation(text);
  t.text = std::move(text);
  return t;
}

const TreeNode& SentimentTree::node(int node_id) const {
  if (node_id < 1 || node_id > static_cast<int>(nodes.size())) {
    throw Error(ErrorCode::Validation,
                "sentence " + std::to_string(sentence_id) +
                    ": unknown node " + std::to_string(node_id));
  }
  return nodes[static_cast<std::size_t>(node_id - 1)];
}

const TreeNode& SentimentTree::root() const {
  for (const auto& n : nodes) {
    if (n.parent_id == 0) return n;
  }
  throw structural(sentence_id, "tree has no root");
}

std::vector<int> SentimentTree::children(int node_id) const {
  std::vector<int> out;
  for (const auto& n : nodes) {
    if (n.parent_id == node_id) out.push_back(n.node_id);
  }
  std::sort(out.begin(), out.end(), [this](int a, int b) {
    return node(a).span.start < node(b).span.start;
  });
  return out;
}

int SentimentTree::non_punct_count(Span span) const {
  int count = 0;
  for (int i = span.start; i < span.end; ++i) {
    if (!tokens[static_cast<std::size_t>(i)].is_punct) ++count;
  }
  return count;
}

std::string SentimentTree::text(Span span) const {
  if (span.empty() || span.start < 0 ||
      span.end > static_cast<int>(tokens.size())) {
    throw Error(ErrorCode::Validation,
                "sentence " + std::to_string(sentence_id) +
                    ": invalid span [" + std::to_string(span.start) + "," +
                    std::to_string(span.end) + ")");
  }
  std::string out;
  for (int i = span.start; i < span.end; ++i) {
    if (i > span.start) out += ' ';
    out += tokens[static_cast<std::size_t>(i)].text;
  }
  return out;
}

std::string phrase_text(const SentimentTree& tree, int node_id) {
  return tree.text(tree.node(node_id).span);
}

RawStats raw_stats(const PhraseRecord& phrase, StdMode mode) {
  const auto& ticks = phrase.raw_ticks;
  if (ticks.empty()) {
    throw Error(ErrorCode::Validation,
                "phrase " + std::to_string(phrase.phrase_id) +
                    " has no raw annotations");
  }
  const auto n = static_cast<double>(ticks.size());
  if (mode == StdMode::Sample && ticks.size() < 2) {
    throw Error(ErrorCode::Validation,
                "sample std needs two ticks for phrase " +
                    std::to_string(phrase.phrase_id));
  }
  const double mean = std::accumulate(ticks.begin(), ticks.end(), 0.0) / n;
  double ss = 0.0;
  for (int t : ticks) ss += (t - mean) * (t - mean);
  const double denom = mode == StdMode::Population ? n : n - 1.0;
  return {mean, std::sqrt(ss / denom)};
}

const PhraseRecord* Corpus::find_phrase(PhraseId id) const {
  auto it = phrases_.find(id);
  return it == phrases_.end() ? nullptr : &it->second;
}

const PhraseRecord* Corpus::find_phrase(std::string_view text) const {
  auto it = by_text_.find(text::normalize(text));
  return it == by_text_.end() ? nullptr : find_phrase(it->second);
}

const SentimentTree* Corpus::find_tree(SentenceId id) const {
  for (const auto& t : trees) {
    if (t.sentence_id == id) return &t;
  }
  return nullptr;
}

void Corpus::add_phrase(PhraseRecord record) {
  if (phrases_.count(record.phrase_id)) {
    throw Error(ErrorCode::Validation,
                "duplicate phrase id " + std::to_string(record.phrase_id));
  }
  by_text_.emplace(text::normalize(record.text), record.phrase_id);
  auto id = record.phrase_id;
  phrases_.emplace(id, std::move(record));
}

std::vector<int> parse_parent_row(SentenceId sentence_id,
                                  std::string_view row) {
  const char delim = row.find('|') != std::string_view::npos ? '|' : ',';
  std::vector<int> parents;
  for (const auto& field : text::split(text::trim(row), delim)) {
    std::int64_t v = 0;
    if (!text::parse_int(field, v) || v < 0) {
      throw structural(sentence_id,
                       "bad parent pointer '" + field + "'");
    }
    parents.push_back(static_cast<int>(v));
  }
  return parents;
}

std::vector<TreeNode> build_nodes(SentenceId sentence_id,
                                  const std::vector<int>& parents,
                                  int n_tokens) {
  const int n_nodes = static_cast<int>(parents.size());
  if (n_nodes == 0) throw structural(sentence_id, "empty parent-pointer row");

  for (int i = 0; i < n_nodes; ++i) {
    const int p = parents[static_cast<std::size_t>(i)];
    if (p < 0 || p > n_nodes) {
      throw structural(sentence_id, "parent index " + std::to_string(p) +
                                        " of node " + std::to_string(i + 1) +
                                        " out of range");
    }
    if (p == i + 1) {
      throw structural(sentence_id,
                       "node " + std::to_string(i + 1) + " is its own parent");
    }
  }

  // Walk up from every node; more than n_nodes steps means a cycle.
  std::vector<int> depth(static_cast<std::size_t>(n_nodes), -1);
  for (int start = 1; start <= n_nodes; ++start) {
    int cur = start;
    int steps = 0;
    while (cur != 0) {
      if (++steps > n_nodes) {
        throw structural(sentence_id, "cycle through node " +
                                          std::to_string(start));
      }
      cur = parents[static_cast<std::size_t>(cur - 1)];
    }
    depth[static_cast<std::size_t>(start - 1)] = steps;
  }

  const auto roots = std::count(parents.begin(), parents.end(), 0);
  if (roots != 1) {
    throw structural(sentence_id, roots == 0 ? "no root"
                                             : "multiple roots (" +
                                                   std::to_string(roots) + ")");
  }

  std::vector<int> child_count(static_cast<std::size_t>(n_nodes), 0);
  for (int p : parents) {
    if (p) ++child_count[static_cast<std::size_t>(p - 1)];
  }
  if (n_tokens < 1 || n_tokens > n_nodes) {
    throw structural(sentence_id, std::to_string(n_tokens) +
                                      " tokens for " +
                                      std::to_string(n_nodes) + " nodes");
  }
  for (int i = 0; i < n_nodes; ++i) {
    const bool is_leaf = child_count[static_cast<std::size_t>(i)] == 0;
    if (is_leaf != (i < n_tokens)) {
      throw structural(sentence_id,
                       "leaves must be exactly nodes 1.." +
                           std::to_string(n_tokens) + " (node " +
                           std::to_string(i + 1) + ")");
    }
  }

  std::vector<TreeNode> nodes(static_cast<std::size_t>(n_nodes));
  for (int i = 0; i < n_nodes; ++i) {
    auto& n = nodes[static_cast<std::size_t>(i)];
    n.node_id = i + 1;
    n.parent_id = parents[static_cast<std::size_t>(i)];
    n.span = i < n_tokens ? Span{i, i + 1} : Span{-1, -1};
  }

  // Deepest first, so every child span is final before its parent reads it.
  std::vector<int> order(static_cast<std::size_t>(n_nodes));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return depth[static_cast<std::size_t>(a)] >
           depth[static_cast<std::size_t>(b)];
  });
  std::vector<std::vector<Span>> child_spans(static_cast<std::size_t>(n_nodes));
  for (int idx : order) {
    auto& n = nodes[static_cast<std::size_t>(idx)];
    if (idx >= n_tokens) {
      auto& kids = child_spans[static_cast<std::size_t>(idx)];
      std::sort(kids.begin(), kids.end());
      for (std::size_t k = 1; k < kids.size(); ++k) {
        if (kids[k].start != kids[k - 1].end) {
          throw structural(sentence_id, "node " + std::to_string(n.node_id) +
                                            " has a non-contiguous span");
        }
      }
      n.span = {kids.front().start, kids.back().end};
    }
    if (n.parent_id) {
      child_spans[static_cast<std::size_t>(n.parent_id - 1)].push_back(n.span);
    }
  }
  return nodes;
}

Corpus parse_corpus(const CorpusFiles& files) {
  Corpus corpus;

  // dictionary: phrase|id, split on the last '|'
  const auto dict_lines = text::read_lines(files.dictionary);
  std::map<PhraseId, std::string> dict;
  for (std::size_t i = 0; i < dict_lines.size(); ++i) {
    const auto& line = dict_lines[i];
    if (text::trim(line).empty()) continue;
    const auto bar = line.rfind('|');
    std::int64_t id = 0;
    if (bar == std::string::npos ||
        !text::parse_int(std::string_view(line).substr(bar + 1), id)) {
      throw row_error(ErrorCode::Parse, files.dictionary, i + 1,
                      "expected 'phrase|phrase_id'");
    }
    if (!dict.emplace(id, line.substr(0, bar)).second) {
      throw row_error(ErrorCode::Validation, files.dictionary, i + 1,
                      "duplicate phrase id " + std::to_string(id));
    }
  }

  std::map<PhraseId, double> values;
  const auto sent_lines = text::read_lines(files.sentiment);
  for (std::size_t i = 0; i < sent_lines.size(); ++i) {
    if (text::trim(sent_lines[i]).empty()) continue;
    const auto fields = text::split(sent_lines[i], '|');
    std::int64_t id = 0;
    double v = 0.0;
    if (fields.size() != 2 || !text::parse_int(fields[0], id) ||
        !text::parse_double(fields[1], v)) {
      if (i == 0) continue;  // header row
      throw row_error(ErrorCode::Parse, files.sentiment, i + 1,
                      "expected 'phrase_id|value'");
    }
    if (v < 0.0 || v > 1.0) {
      throw row_error(ErrorCode::Validation, files.sentiment, i + 1,
                      "sentiment value outside [0,1]");
    }
    values[id] = v;
  }

  std::map<PhraseId, std::vector<int>> ticks;
  const auto raw_lines = text::read_lines(files.raw_annotations);
  for (std::size_t i = 0; i < raw_lines.size(); ++i) {
    if (text::trim(raw_lines[i]).empty()) continue;
    const auto fields = text::split(raw_lines[i], '|');
    std::int64_t id = 0;
    if (fields.size() != 2 || !text::parse_int(fields[0], id)) {
      if (i == 0) continue;
      throw row_error(ErrorCode::Parse, files.raw_annotations, i + 1,
                      "expected 'phrase_id|t1,t2,t3'");
    }
    std::vector<int> row;
    for (const auto& t : text::split(fields[1], ',')) {
      std::int64_t tick = 0;
      if (!text::parse_int(t, tick)) {
        throw row_error(ErrorCode::Parse, files.raw_annotations, i + 1,
                        "bad tick '" + t + "'");
      }
      if (tick < 1 || tick > 25) {
        throw row_error(ErrorCode::Validation, files.raw_annotations, i + 1,
                        "tick " + std::to_string(tick) + " outside 1..25");
      }
      row.push_back(static_cast<int>(tick));
    }
    ticks[id] = std::move(row);
  }

  for (auto& [id, phrase] : dict) {
    auto v = values.find(id);
    if (v == values.end()) {
      throw Error(ErrorCode::Validation,
                  "phrase id " + std::to_string(id) + " has no sentiment value");
    }
    PhraseRecord rec;
    rec.phrase_id = id;
    rec.text = std::move(phrase);
    rec.sst_value = v->second;
    if (auto t = ticks.find(id); t != ticks.end()) rec.raw_ticks = t->second;
    corpus.add_phrase(std::move(rec));
  }

  // sentences: index<TAB>sentence, optional header row
  std::vector<std::pair<SentenceId, std::string>> sentences;
  const auto sentence_lines = text::read_lines(files.sentences);
  for (std::size_t i = 0; i < sentence_lines.size(); ++i) {
    const auto& line = sentence_lines[i];
    if (text::trim(line).empty()) continue;
    const auto tab = line.find('\t');
    std::int64_t id = 0;
    if (tab == std::string::npos ||
        !text::parse_int(std::string_view(line).substr(0, tab), id)) {
      if (i == 0) continue;
      throw row_error(ErrorCode::Parse, files.sentences, i + 1,
                      "expected 'index<TAB>sentence'");
    }
    sentences.emplace_back(id, line.substr(tab + 1));
  }

  const auto tree_lines = text::read_lines(files.trees);
  std::size_t row = 0;
  for (const auto& line : tree_lines) {
    if (text::trim(line).empty()) continue;
    if (row >= sentences.size()) {
      throw Error(ErrorCode::Structural,
                  "tree file has more rows than the sentence file (" +
                      std::to_string(sentences.size()) + ")");
    }
    const auto& [sid, sentence] = sentences[row++];
    SentimentTree tree;
    tree.sentence_id = sid;
    for (auto& tok : text::split_ws(sentence)) {
      tree.tokens.push_back(make_token(std::move(tok)));
    }
    tree.nodes = build_nodes(sid, parse_parent_row(sid, line),
                             static_cast<int>(tree.tokens.size()));
    for (auto& node : tree.nodes) {
      const auto phrase = tree.text(node.span);
      const auto* rec = corpus.find_phrase(phrase);
      if (!rec) {
        throw Error(ErrorCode::MissingPhrase,
                    "sentence " + std::to_string(sid) + ": phrase '" + phrase +
                        "' not in dictionary");
      }
      node.phrase_id = rec->phrase_id;
    }
    corpus.trees.push_back(std::move(tree));
  }
  return corpus;
}

const char* to_string(PhraseLabel label) {
  switch (label) {
    case PhraseLabel::NP: return "NP";
    case PhraseLabel::VP: return "VP";
    case PhraseLabel::PP: return "PP";
    case PhraseLabel::SBAR: return "SBAR";
    case PhraseLabel::OTHER: return "OTHER";
  }
  return "OTHER";
}

std::optional<PhraseLabel> parse_label(std::string_view s) {
  for (auto l : {PhraseLabel::NP, PhraseLabel::VP, PhraseLabel::PP,
                 PhraseLabel::SBAR, PhraseLabel::OTHER}) {
    if (s == to_string(l)) return l;
  }
  return std::nullopt;
}

const SidecarEntry* LinguisticSidecar::find(SentenceId sentence,
                                            Span span) const {
  auto s = sentences.find(sentence);
  if (s == sentences.end()) return nullptr;
  auto e = s->second.find(span);
  return e == s->second.end() ? nullptr : &e->second;
}

namespace {

bool partitions(const Span& parent, std::vector<Span> kids) {
  if (kids.empty()) return false;
  std::sort(kids.begin(), kids.end());
  if (kids.front().start != parent.start || kids.back().end != parent.end) {
    return false;
  }
  for (std::size_t k = 0; k < kids.size(); ++k) {
    if (kids[k].empty()) return false;
    if (k && kids[k].start != kids[k - 1].end) return false;
  }
  return true;
}

}  // namespace

LinguisticSidecar parse_sidecar_lines(const std::vector<std::string>& lines) {
  LinguisticSidecar sidecar;
  std::map<SentenceId, std::map<Span, bool>> explicit_children;

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (text::trim(line).empty()) continue;
    const auto where = "sidecar:" + std::to_string(i + 1) + ": ";
    const auto f = text::split(line, '\t');
    std::int64_t sid = 0, start = 0, end = 0, ne = 0;
    if (f.size() < 5 || f.size() > 6 || !text::parse_int(f[0], sid) ||
        !text::parse_int(f[1], start) || !text::parse_int(f[2], end) ||
        !text::parse_int(f[4], ne)) {
      if (i == 0) continue;  // header row
      throw Error(ErrorCode::Parse,
                  where + "expected sentence_id, start, end, label, has_ne");
    }
    const auto label = parse_label(text::trim(f[3]));
    if (!label) {
      throw Error(ErrorCode::Validation,
                  where + "label '" + f[3] + "' not in {NP,VP,PP,SBAR,OTHER}");
    }
    if (ne != 0 && ne != 1) {
      throw Error(ErrorCode::Validation, where + "has_ne must be 0 or 1");
    }
    if (start < 0 || end <= start) {
      throw Error(ErrorCode::Validation, where + "empty or negative span");
    }
    const Span span{static_cast<int>(start), static_cast<int>(end)};
    auto& entries = sidecar.sentences[sid];
    auto [it, inserted] = entries.try_emplace(span);
    if (!inserted) {
      // unary chain: the first (outermost) label wins, NE flags accumulate
      it->second.has_named_entity |= ne == 1;
      continue;
    }
    it->second.label = *label;
    it->second.has_named_entity = ne == 1;
    if (f.size() == 6 && !text::trim(f[5]).empty()) {
      for (const auto& part : text::split(text::trim(f[5]), ';')) {
        const auto se = text::split(part, '-');
        std::int64_t cs = 0, ce = 0;
        if (se.size() != 2 || !text::parse_int(se[0], cs) ||
            !text::parse_int(se[1], ce)) {
          throw Error(ErrorCode::Parse, where + "bad child span '" + part + "'");
        }
        it->second.child_spans.push_back(
            {static_cast<int>(cs), static_cast<int>(ce)});
      }
      if (!partitions(span, it->second.child_spans)) {
        throw Error(ErrorCode::Validation,
                    where + "child spans do not partition the parent span");
      }
      std::sort(it->second.child_spans.begin(), it->second.child_spans.end());
      explicit_children[sid][span] = true;
    }
  }

  for (auto& [sid, entries] : sidecar.sentences) {
    std::vector<Span> spans;
    for (const auto& [span, entry] : entries) spans.push_back(span);
    for (std::size_t a = 0; a < spans.size(); ++a) {
      for (std::size_t b = a + 1; b < spans.size(); ++b) {
        const auto& x = spans[a];
        const auto& y = spans[b];
        const bool overlap = x.start < y.end && y.start < x.end;
        if (overlap && !x.contains(y) && !y.contains(x)) {
          throw Error(ErrorCode::Structural,
                      "sidecar sentence " + std::to_string(sid) +
                          ": crossing constituents");
        }
      }
    }
    for (auto& [span, entry] : entries) {
      if (explicit_children[sid].count(span)) continue;
      std::vector<Span> kids;
      for (const auto& s : spans) {
        if (s == span || !span.contains(s)) continue;
        const bool maximal = std::none_of(
            spans.begin(), spans.end(), [&](const Span& o) {
              return o != span && o != s && span.contains(o) && o.contains(s);
            });
        if (maximal) kids.push_back(s);
      }
      std::sort(kids.begin(), kids.end());
      std::vector<Span> filled;
      int pos = span.start;
      for (const auto& k : kids) {
        for (; pos < k.start; ++pos) filled.push_back({pos, pos + 1});
        filled.push_back(k);
        pos = k.end;
      }
      for (; pos < span.end; ++pos) filled.push_back({pos, pos + 1});
      entry.child_spans = std::move(filled);
    }
  }
  return sidecar;
}

LinguisticSidecar parse_sidecar(const std::filesystem::path& path) {
  return parse_sidecar_lines(text::read_lines(path));
}

}  // namespace noncomp::corpus
