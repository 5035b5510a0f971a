#include "noncomp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "noncomp/error.hpp"
#include "noncomp/text.hpp"

namespace noncomp::analysis {

const char* symbol(Polarity p) {
  switch (p) {
    case Polarity::Negative: return "-";
    case Polarity::Neutral: return "~";
    case Polarity::Positive: return "+";
  }
  return "~";
}

std::string CompositionType::str() const {
  return std::string(symbol(sign_A)) + symbol(sign_B);
}

Polarity polarity(double sentiment, const PolarityThresholds& t) {
  if (!(sentiment >= 0.0 && sentiment <= 6.0)) {
    throw Error(ErrorCode::Validation,
                "sentiment " + std::to_string(sentiment) + " outside [0,6]");
  }
  if (sentiment < t.neutral_low) return Polarity::Negative;
  if (sentiment > t.neutral_high) return Polarity::Positive;
  return Polarity::Neutral;
}

CompositionType composition_type(double s_A, double s_B,
                                 const PolarityThresholds& t) {
  return {polarity(s_A, t), polarity(s_B, t)};
}

const char* to_string(Grouping g) {
  switch (g) {
    case Grouping::CompositionType: return "composition_type";
    case Grouping::LengthPair: return "length_pair";
    case Grouping::CategoryPair: return "category_pair";
    case Grouping::Figurative: return "figurative";
  }
  return "composition_type";
}

Grouping parse_grouping(std::string_view s) {
  for (auto g : kAllGroupings) {
    if (s == to_string(g)) return g;
  }
  throw Error(ErrorCode::Validation, "unknown grouping '" + std::string(s) + "'");
}

std::map<PhraseId, CandidateMeta> candidate_meta(
    const std::vector<select::CandidatePhrase>& candidates,
    const std::map<PhraseId, bool>& figurative) {
  std::map<PhraseId, CandidateMeta> out;
  for (const auto& c : candidates) {
    CandidateMeta m;
    if (!c.study1_A || !c.study1_B) {
      throw Error(ErrorCode::Validation,
                  "candidate " + std::to_string(c.phrase_id) +
                      " lacks Study-1 sentiments");
    }
    m.study1_A = *c.study1_A;
    m.study1_B = *c.study1_B;
    m.len_A = c.side_A.token_count_nonpunct;
    m.len_B = c.side_B.token_count_nonpunct;
    m.label_A = c.side_A.label;
    m.label_B = c.side_B.label;
    if (auto f = figurative.find(c.phrase_id); f != figurative.end()) {
      m.figurative = f->second;
    }
    out.emplace(c.phrase_id, m);
  }
  return out;
}

double quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw Error(ErrorCode::Validation, "quantile of empty data");
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

struct GroupKey {
  int order = 0;
  std::string label;
  friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
};

GroupKey key_for(const CandidateMeta& m, Grouping g, const PolarityThresholds& t) {
  switch (g) {
    case Grouping::CompositionType: {
      const auto ct = composition_type(m.study1_A, m.study1_B, t);
      return {static_cast<int>(ct.sign_A) * 3 + static_cast<int>(ct.sign_B),
              ct.str()};
    }
    case Grouping::LengthPair:
      return {m.len_A * 100 + m.len_B,
              std::to_string(m.len_A) + "-" + std::to_string(m.len_B)};
    case Grouping::CategoryPair:
      return {static_cast<int>(m.label_A) * 10 + static_cast<int>(m.label_B),
              std::string(corpus::to_string(m.label_A)) + "-" +
                  corpus::to_string(m.label_B)};
    case Grouping::Figurative:
      return {m.figurative ? 1 : 0, m.figurative ? "figurative" : "literal"};
  }
  return {};
}

}  // namespace

std::vector<GroupStats> group_stats(const ratings::KeyedVector& values,
                                    const std::map<PhraseId, CandidateMeta>& meta,
                                    Grouping grouping,
                                    const PolarityThresholds& thresholds) {
  std::map<GroupKey, std::vector<double>> groups;
  for (const auto& [key, v] : values) {
    auto m = meta.find(key.candidate);
    if (m == meta.end()) {
      throw Error(ErrorCode::Validation,
                  "no grouping metadata for candidate " +
                      std::to_string(key.candidate));
    }
    groups[key_for(m->second, grouping, thresholds)].push_back(v);
  }
  std::vector<GroupStats> out;
  for (auto& [key, vals] : groups) {
    std::sort(vals.begin(), vals.end());
    GroupStats s;
    s.key = key.label;
    s.n = vals.size();
    s.mean = std::accumulate(vals.begin(), vals.end(), 0.0) /
             static_cast<double>(vals.size());
    s.median = quantile(vals, 0.5);
    s.q1 = quantile(vals, 0.25);
    s.q3 = quantile(vals, 0.75);
    s.min = vals.front();
    s.max = vals.back();
    out.push_back(std::move(s));
  }
  return out;
}

FigurativeTags load_figurative_tags(const std::vector<std::string>& lines,
                                    const std::vector<PhraseId>& candidates) {
  FigurativeTags out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const auto where = "figurative:" + std::to_string(i + 1) + ": ";
    const auto f = text::split_ws(lines[i]);
    std::int64_t id = 0, tag = 0;
    if (f.size() != 2 || !text::parse_int(f[0], id) ||
        !text::parse_int(f[1], tag) || (tag != 0 && tag != 1)) {
      if (i == 0 && f.size() == 2 && !text::parse_int(f[0], id)) continue;
      throw Error(ErrorCode::Parse,
                  where + "expected 'candidate_id<TAB>figurative(0/1)'");
    }
    auto [it, fresh] = out.tags.try_emplace(id, tag == 1);
    if (!fresh && it->second != (tag == 1)) {
      throw Error(ErrorCode::Validation,
                  where + "conflicting tags for candidate " + std::to_string(id));
    }
  }
  for (auto id : candidates) {
    if (!out.tags.count(id)) {
      out.tags[id] = false;
      out.warnings.push_back("candidate " + std::to_string(id) +
                             " untagged; treated as literal");
    }
  }
  return out;
}

FigurativeTags load_figurative_tags(const std::filesystem::path& path,
                                    const std::vector<PhraseId>& candidates) {
  return load_figurative_tags(text::read_lines(path), candidates);
}

std::string groups_csv(const std::vector<GroupStats>& groups) {
  std::ostringstream out;
  out << "group,n,mean,median,q1,q3,min,max\n";
  for (const auto& g : groups) {
    out << g.key << ',' << g.n << ',' << text::fixed(g.mean, 4) << ','
        << text::fixed(g.median, 4) << ',' << text::fixed(g.q1, 4) << ','
        << text::fixed(g.q3, 4) << ',' << text::fixed(g.min, 4) << ','
        << text::fixed(g.max, 4) << '\n';
  }
  return out.str();
}

}  // namespace noncomp::analysis
