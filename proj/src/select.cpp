#include "noncomp/select.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "noncomp/error.hpp"
#include "noncomp/rng.hpp"
#include "noncomp/text.hpp"

namespace noncomp::select {

namespace {

// Decimal inputs such as 0.35 are not exact in binary; this slack keeps
// "midpoint rounds up" and "within tolerance" true to their decimal reading.
constexpr double kSlack = 1e-9;

}  // namespace

void SelectConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::Config, what);
  };
  if (std_threshold < 0) fail("std_threshold must be >= 0");
  if (min_len < 1 || max_len < min_len) fail("need 1 <= min_len <= max_len");
  if (pool_size < 1) fail("pool_size must be positive");
  if (curated_per_side < 1) fail("curated_per_side must be positive");
  if (final_controls < 1 || final_controls > curated_per_side) {
    fail("need 1 <= final_controls <= curated_per_side");
  }
  if (min_valid_controls < final_controls ||
      min_valid_controls > curated_per_side) {
    fail("need final_controls <= min_valid_controls <= curated_per_side");
  }
  if (control_tolerance < 0) fail("control_tolerance must be >= 0");
}

int bucket(double sst_value) {
  if (!(sst_value >= 0.0 && sst_value <= 1.0)) {
    throw Error(ErrorCode::Validation,
                "sentiment value " + std::to_string(sst_value) +
                    " outside [0,1]");
  }
  return std::min(10, static_cast<int>(std::floor(sst_value * 10.0 + 0.5 + kSlack)));
}

std::vector<const ControlEntry*> CandidatePhrase::selected(Side s) const {
  std::vector<const ControlEntry*> out;
  for (const auto& c : controls(s)) {
    if (c.selected_for_study2) out.push_back(&c);
  }
  return out;
}

namespace {

struct Admission {
  bool ok = false;
  Subphrase sub;
};

Admission admit(const corpus::Corpus& corpus, const corpus::SentimentTree& tree,
                const corpus::Span& span, const corpus::SidecarEntry& entry,
                const SelectConfig& config) {
  Admission a;
  if (entry.has_named_entity) return a;
  const int len = tree.non_punct_count(span);
  if (len < config.min_len || len > config.max_len) return a;
  const auto* rec = corpus.find_phrase(tree.text(span));
  if (!rec) return a;
  a.sub.phrase_id = rec->phrase_id;
  a.sub.text = rec->text;
  a.sub.sst_value = rec->sst_value;
  a.sub.sentiment_bucket = bucket(rec->sst_value);
  a.sub.label = entry.label;
  a.sub.token_count_nonpunct = len;
  a.sub.source_sentence_id = tree.sentence_id;
  a.ok = true;
  return a;
}

void check_coverage(const corpus::Corpus& corpus,
                    const corpus::LinguisticSidecar& sidecar) {
  std::vector<std::string> missing;
  for (const auto& t : corpus.trees) {
    if (!sidecar.covers(t.sentence_id)) {
      missing.push_back(std::to_string(t.sentence_id));
    }
  }
  if (!missing.empty()) {
    throw Error(ErrorCode::Coverage,
                "sidecar lacks sentences: " + text::join(missing, ","));
  }
}

void check_span(const corpus::SentimentTree& tree, const corpus::Span& span) {
  if (span.end > static_cast<int>(tree.tokens.size())) {
    throw Error(ErrorCode::Validation,
                "sidecar span [" + std::to_string(span.start) + "," +
                    std::to_string(span.end) + ") exceeds sentence " +
                    std::to_string(tree.sentence_id));
  }
}

}  // namespace

std::vector<Subphrase> admitted_subphrases(
    const corpus::Corpus& corpus, const corpus::LinguisticSidecar& sidecar,
    const SelectConfig& config) {
  check_coverage(corpus, sidecar);
  std::vector<Subphrase> out;
  std::set<PhraseId> seen;
  for (const auto& tree : corpus.trees) {
    for (const auto& [span, entry] : sidecar.sentences.at(tree.sentence_id)) {
      check_span(tree, span);
      auto a = admit(corpus, tree, span, entry, config);
      if (a.ok && seen.insert(a.sub.phrase_id).second) {
        out.push_back(std::move(a.sub));
      }
    }
  }
  return out;
}

std::vector<CandidatePhrase> find_candidates(
    const corpus::Corpus& corpus, const corpus::LinguisticSidecar& sidecar,
    const SelectConfig& config) {
  check_coverage(corpus, sidecar);
  std::vector<CandidatePhrase> out;
  std::set<PhraseId> seen;
  for (const auto& tree : corpus.trees) {
    const auto& entries = sidecar.sentences.at(tree.sentence_id);
    for (const auto& [span, entry] : entries) {
      check_span(tree, span);
      if (entry.child_spans.size() != 2) continue;
      if (entry.has_named_entity) continue;
      const auto* rec = corpus.find_phrase(tree.text(span));
      if (!rec || rec->raw_ticks.empty()) continue;
      if (config.std_mode == corpus::StdMode::Sample &&
          rec->raw_ticks.size() < 2) {
        continue;
      }
      if (corpus::raw_stats(*rec, config.std_mode).std_ticks >
          config.std_threshold) {
        continue;
      }
      const auto* left = sidecar.find(tree.sentence_id, entry.child_spans[0]);
      const auto* right = sidecar.find(tree.sentence_id, entry.child_spans[1]);
      if (!left || !right) continue;
      auto a = admit(corpus, tree, entry.child_spans[0], *left, config);
      auto b = admit(corpus, tree, entry.child_spans[1], *right, config);
      if (!a.ok || !b.ok) continue;
      if (!seen.insert(rec->phrase_id).second) continue;
      CandidatePhrase c;
      c.phrase_id = rec->phrase_id;
      c.text = rec->text;
      c.sentence_id = tree.sentence_id;
      c.side_A = std::move(a.sub);
      c.side_B = std::move(b.sub);
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<CandidatePhrase> build_pools(std::vector<CandidatePhrase> candidates,
                                         const std::vector<Subphrase>& subphrases,
                                         std::uint64_t seed, int pool_size) {
  std::map<std::pair<int, PhraseLabel>, std::vector<const Subphrase*>> groups;
  for (const auto& s : subphrases) {
    groups[{s.sentiment_bucket, s.label}].push_back(&s);
  }
  for (auto& cand : candidates) {
    for (Side side : {Side::A, Side::B}) {
      const auto& target = cand.side(side);
      std::vector<const Subphrase*> eligible;
      if (auto g = groups.find({target.sentiment_bucket, target.label});
          g != groups.end()) {
        for (const auto* s : g->second) {
          if (s->source_sentence_id == cand.sentence_id) continue;
          if (s->phrase_id == target.phrase_id || s->text == target.text) {
            continue;
          }
          eligible.push_back(s);
        }
      }
      Engine eng(derive_seed(seed, static_cast<std::uint64_t>(cand.phrase_id),
                             side == Side::A ? 1 : 2));
      const auto take = std::min(eligible.size(),
                                 static_cast<std::size_t>(pool_size));
      // partial Fisher-Yates: the first `take` slots become the sample
      for (std::size_t i = 0; i < take; ++i) {
        const auto j = i + static_cast<std::size_t>(
                               uniform_below(eng, eligible.size() - i));
        std::swap(eligible[i], eligible[j]);
      }
      eligible.resize(take);
      std::sort(eligible.begin(), eligible.end(),
                [](const Subphrase* x, const Subphrase* y) {
                  return x->phrase_id < y->phrase_id;
                });
      auto& pool = cand.controls(side);
      pool.clear();
      for (const auto* s : eligible) pool.push_back(ControlEntry{*s, {}, {}, false});
    }
    cand.curated = false;
  }
  return candidates;
}

std::string export_curation(const std::vector<CandidatePhrase>& candidates) {
  std::ostringstream out;
  out << "candidate_phrase_id\tside\tcontrol_phrase_id\tkeep\tedited_text\n";
  for (const auto& c : candidates) {
    for (Side side : {Side::A, Side::B}) {
      for (const auto& ctrl : c.controls(side)) {
        out << c.phrase_id << '\t' << to_string(side) << '\t'
            << ctrl.subphrase.phrase_id << '\t'
            << (c.curated ? 1 : 0) << '\t' << ctrl.edited_text.value_or("")
            << '\n';
      }
    }
  }
  return out.str();
}

void export_curation(const std::vector<CandidatePhrase>& candidates,
                     const std::filesystem::path& path) {
  text::write_file(path, export_curation(candidates));
}

std::vector<CandidatePhrase> import_curation(
    const std::vector<CandidatePhrase>& candidates,
    const std::vector<std::string>& lines, int per_side) {
  std::map<PhraseId, std::size_t> index;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    index[candidates[i].phrase_id] = i;
  }
  struct Kept {
    std::vector<ControlEntry> a, b;
  };
  std::map<PhraseId, Kept> kept;

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (text::trim(line).empty()) continue;
    const auto where = "curation:" + std::to_string(i + 1) + ": ";
    const auto f = text::split(line, '\t');
    std::int64_t cid = 0, ctrl_id = 0, keep = 0;
    if (f.size() < 4 || f.size() > 5 || !text::parse_int(f[0], cid) ||
        !text::parse_int(f[2], ctrl_id) || !text::parse_int(f[3], keep)) {
      if (i == 0) continue;  // header
      throw Error(ErrorCode::Parse, where + "expected 5 tab-separated columns");
    }
    const auto side_s = text::trim(f[1]);
    if (side_s != "A" && side_s != "B") {
      throw Error(ErrorCode::Validation, where + "side must be A or B");
    }
    if (keep != 0 && keep != 1) {
      throw Error(ErrorCode::Validation, where + "keep must be 0 or 1");
    }
    auto ci = index.find(cid);
    if (ci == index.end()) {
      throw Error(ErrorCode::Validation,
                  where + "unknown candidate " + std::to_string(cid));
    }
    const Side side = side_s == "A" ? Side::A : Side::B;
    const auto& cand = candidates[ci->second];
    const auto& pool = cand.controls(side);
    auto it = std::find_if(pool.begin(), pool.end(), [&](const ControlEntry& e) {
      return e.subphrase.phrase_id == ctrl_id;
    });
    if (it == pool.end()) {
      throw Error(ErrorCode::Validation,
                  where + "control " + std::to_string(ctrl_id) +
                      " is not in the pool of candidate " + std::to_string(cid) +
                      " side " + std::string(side_s));
    }
    if (keep == 0) continue;
    const auto& target = cand.side(side);
    if (it->subphrase.sentiment_bucket != target.sentiment_bucket ||
        it->subphrase.label != target.label) {
      throw Error(ErrorCode::Validation,
                  where + "control " + std::to_string(ctrl_id) +
                      " does not match the target's bucket/label");
    }
    ControlEntry entry{it->subphrase, {}, {}, false};
    if (f.size() == 5) {
      const auto edit = text::normalize(f[4]);
      if (!edit.empty()) entry.edited_text = edit;
    }
    auto& list = side == Side::A ? kept[cid].a : kept[cid].b;
    for (const auto& prev : list) {
      if (prev.subphrase.phrase_id == ctrl_id) {
        throw Error(ErrorCode::Validation,
                    where + "control " + std::to_string(ctrl_id) +
                        " kept twice");
      }
    }
    list.push_back(std::move(entry));
  }

  std::vector<CandidatePhrase> out;
  for (const auto& cand : candidates) {
    auto k = kept.find(cand.phrase_id);
    if (k == kept.end()) continue;  // dropped
    const auto na = static_cast<int>(k->second.a.size());
    const auto nb = static_cast<int>(k->second.b.size());
    if (na != per_side || nb != per_side) {
      throw Error(ErrorCode::Validation,
                  "candidate " + std::to_string(cand.phrase_id) + " keeps " +
                      std::to_string(na) + "+" + std::to_string(nb) +
                      " controls, expected " + std::to_string(per_side) +
                      " per side");
    }
    auto c = cand;
    c.controls_A = std::move(k->second.a);
    c.controls_B = std::move(k->second.b);
    c.curated = true;
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<CandidatePhrase> import_curation(
    const std::vector<CandidatePhrase>& candidates,
    const std::filesystem::path& path, int per_side) {
  return import_curation(candidates, text::read_lines(path), per_side);
}

FilterResult filter_by_study1(const std::vector<CandidatePhrase>& candidates,
                              const Study1Sentiments& sentiments,
                              const SelectConfig& config) {
  config.validate();
  std::set<std::string> missing;
  auto lookup = [&](const std::string& raw) -> double {
    const auto t = text::normalize(raw);
    auto it = sentiments.find(t);
    if (it == sentiments.end()) {
      missing.insert(t);
      return 0.0;
    }
    return it->second;
  };

  FilterResult result;
  for (const auto& cand : candidates) {
    if (!cand.curated) {
      throw Error(ErrorCode::Validation,
                  "candidate " + std::to_string(cand.phrase_id) +
                      " is not curated");
    }
    auto c = cand;
    c.study1_A = lookup(c.side_A.text);
    c.study1_B = lookup(c.side_B.text);
    bool survives = true;
    for (Side side : {Side::A, Side::B}) {
      const double target = side == Side::A ? *c.study1_A : *c.study1_B;
      auto& controls = c.controls(side);
      // distances quantized to 1e-9 so ties between thirds compare equal
      std::vector<std::pair<std::int64_t, std::size_t>> valid;
      for (std::size_t i = 0; i < controls.size(); ++i) {
        auto& ctrl = controls[i];
        ctrl.study1_sentiment = lookup(ctrl.display_text());
        ctrl.selected_for_study2 = false;
        const double d = std::abs(*ctrl.study1_sentiment - target);
        if (d <= config.control_tolerance + kSlack) {
          valid.emplace_back(std::llround(d / kSlack), i);
        }
      }
      if (static_cast<int>(valid.size()) < config.min_valid_controls) {
        survives = false;
        continue;
      }
      // smallest distance first; equal distances keep curation order
      std::stable_sort(valid.begin(), valid.end(),
                       [](const auto& x, const auto& y) {
                         return x.first < y.first;
                       });
      for (int n = 0; n < config.final_controls; ++n) {
        controls[valid[static_cast<std::size_t>(n)].second]
            .selected_for_study2 = true;
      }
    }
    if (survives) {
      result.survivors.push_back(std::move(c));
    } else {
      result.discarded.push_back(cand.phrase_id);
    }
  }
  if (!missing.empty()) {
    std::vector<std::string> list(missing.begin(), missing.end());
    if (list.size() > 10) list.resize(10), list.push_back("...");
    throw Error(ErrorCode::Validation,
                "missing Study-1 sentiment for " +
                    std::to_string(missing.size()) + " phrase(s): " +
                    text::join(list, " | "));
  }
  return result;
}

}  // namespace noncomp::select
