#include "noncomp/ratings.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "noncomp/error.hpp"
#include "noncomp/text.hpp"

namespace noncomp::ratings {

Aggregate aggregate_sentiment(const study::ResponseSet& responses,
                              const study::ItemCatalog& catalog,
                              int min_annotations) {
  if (min_annotations < 1) {
    throw Error(ErrorCode::Config, "min_annotations must be >= 1");
  }
  struct Acc {
    int sum = 0;
    int n = 0;
    int flags = 0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& r : responses.responses) {
    if (r.excluded) continue;
    auto it = catalog.find(r.item_id);
    if (it == catalog.end() || it->second.kind == study::ItemKind::Practice) {
      continue;
    }
    auto& a = acc[r.item_id];
    a.sum += r.label;
    ++a.n;
    if (r.ungrammatical) ++a.flags;
  }
  Aggregate out;
  for (const auto& [id, item] : catalog) {
    if (item.kind == study::ItemKind::Practice) continue;
    auto it = acc.find(id);
    if (it == acc.end() || it->second.n < min_annotations) {
      out.omitted.push_back(id);
      continue;
    }
    PhraseSentiment s;
    s.item_id = id;
    s.n_annotations = it->second.n;
    s.mean_label = static_cast<double>(it->second.sum) / it->second.n;
    s.n_flags = it->second.flags;
    s.flagged_ungrammatical = it->second.flags > 0;
    out.sentiments.emplace(id, s);
  }
  return out;
}

namespace {

struct SideResult {
  double rating = 0.0;
  bool excluded = false;
  std::string reason;
  int used = 0;
  bool touches_flag = false;
};

SideResult rate_side(const SentimentMap& sentiments, const CandidatePhrase& c,
                     select::Side side, const PhraseSentiment& natural,
                     const RatingsConfig& config) {
  SideResult out;
  const auto role =
      side == select::Side::A ? study::Role::ControlA : study::Role::ControlB;
  const auto n_controls = static_cast<int>(c.selected(side).size());
  double sum = 0.0;
  int missing = 0;
  int dropped = 0;
  for (int n = 1; n <= n_controls; ++n) {
    auto it = sentiments.find(study::combination_id(c.phrase_id, role, n));
    if (it == sentiments.end()) {
      ++missing;
      continue;
    }
    if (it->second.flagged_ungrammatical) {
      out.touches_flag = true;
      if (config.drop_flagged_controls) {
        ++dropped;
        continue;
      }
    }
    sum += it->second.mean_label;
    ++out.used;
  }
  if (config.clean_scope == CleanScope::NaturalOnly) out.touches_flag = false;
  if (natural.flagged_ungrammatical) out.touches_flag = true;
  if (out.used < config.min_controls) {
    out.excluded = true;
    out.reason = std::to_string(out.used) + " usable controls (" +
                 std::to_string(missing) + " missing, " +
                 std::to_string(dropped) + " flagged)";
    return out;
  }
  out.rating = natural.mean_label - sum / out.used;
  return out;
}

}  // namespace

std::vector<NonCompRating> compute_ratings(
    const SentimentMap& sentiments, const std::vector<CandidatePhrase>& candidates,
    const RatingsConfig& config) {
  std::vector<NonCompRating> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) {
    NonCompRating r;
    r.candidate_id = c.phrase_id;
    r.text_A = c.side_A.text;
    r.text_B = c.side_B.text;
    auto nat = sentiments.find(
        study::combination_id(c.phrase_id, study::Role::Natural));
    if (nat == sentiments.end()) {
      r.excluded_A = r.excluded_B = true;
      r.reason_A = r.reason_B = "natural phrase has no sentiment";
      r.clean_A = r.clean_B = false;
      out.push_back(std::move(r));
      continue;
    }
    r.sentiment_AB = nat->second.mean_label;
    const auto a = rate_side(sentiments, c, select::Side::A, nat->second, config);
    const auto b = rate_side(sentiments, c, select::Side::B, nat->second, config);
    r.rating_A = a.rating;
    r.excluded_A = a.excluded;
    r.reason_A = a.reason;
    r.controls_used_A = a.used;
    r.clean_A = !a.excluded && !a.touches_flag;
    r.rating_B = b.rating;
    r.excluded_B = b.excluded;
    r.reason_B = b.reason;
    r.controls_used_B = b.used;
    r.clean_B = !b.excluded && !b.touches_flag;
    out.push_back(std::move(r));
  }
  return out;
}

const char* to_string(Variant v) {
  switch (v) {
    case Variant::All: return "All";
    case Variant::AllAbs: return "AllAbs";
    case Variant::Max: return "Max";
    case Variant::MaxAbs: return "MaxAbs";
    case Variant::AllClean: return "AllClean";
  }
  return "All";
}

Variant parse_variant(std::string_view s) {
  for (auto v : kAllVariants) {
    if (s == to_string(v)) return v;
  }
  throw Error(ErrorCode::Validation, "unknown rating variant '" +
                                         std::string(s) + "'");
}

std::string RatingKey::str() const {
  auto out = std::to_string(candidate);
  if (side != '*') {
    out += ':';
    out += side;
  }
  return out;
}

std::optional<double> max_rating(const NonCompRating& r) {
  if (r.excluded_A && r.excluded_B) return std::nullopt;
  if (r.excluded_B) return r.rating_A;
  if (r.excluded_A) return r.rating_B;
  return std::abs(r.rating_B) > std::abs(r.rating_A) ? r.rating_B : r.rating_A;
}

KeyedVector to_variant(const std::vector<NonCompRating>& ratings,
                       Variant variant) {
  KeyedVector out;
  for (const auto& r : ratings) {
    switch (variant) {
      case Variant::All:
      case Variant::AllAbs:
      case Variant::AllClean: {
        const bool absolute = variant == Variant::AllAbs;
        const bool clean = variant == Variant::AllClean;
        if (!r.excluded_A && (!clean || r.clean_A)) {
          out[{r.candidate_id, 'A'}] = absolute ? std::abs(r.rating_A) : r.rating_A;
        }
        if (!r.excluded_B && (!clean || r.clean_B)) {
          out[{r.candidate_id, 'B'}] = absolute ? std::abs(r.rating_B) : r.rating_B;
        }
        break;
      }
      case Variant::Max:
      case Variant::MaxAbs:
        if (auto m = max_rating(r)) {
          out[{r.candidate_id, '*'}] = variant == Variant::MaxAbs ? std::abs(*m) : *m;
        }
        break;
    }
  }
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string precise(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string ratings_csv(const std::vector<NonCompRating>& ratings) {
  std::ostringstream out;
  out << "candidate_id,text_A,text_B,rating_A,rating_B,max,max_abs,clean_A,"
         "clean_B,sentiment_AB\n";
  for (const auto& r : ratings) {
    const auto m = max_rating(r);
    out << r.candidate_id << ',' << csv_field(r.text_A) << ','
        << csv_field(r.text_B) << ','
        << (r.excluded_A ? "" : text::fixed(r.rating_A)) << ','
        << (r.excluded_B ? "" : text::fixed(r.rating_B)) << ','
        << (m ? text::fixed(*m) : "") << ','
        << (m ? text::fixed(std::abs(*m)) : "") << ',' << (r.clean_A ? 1 : 0)
        << ',' << (r.clean_B ? 1 : 0) << ','
        << (r.sentiment_AB ? text::fixed(*r.sentiment_AB) : "") << '\n';
  }
  return out.str();
}

std::string variant_csv(const KeyedVector& values) {
  std::ostringstream out;
  out << "key,value\n";
  for (const auto& [key, v] : values) out << key.str() << ',' << precise(v) << '\n';
  return out.str();
}

}  // namespace noncomp::ratings
