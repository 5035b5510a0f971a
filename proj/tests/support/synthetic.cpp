#include "synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "noncomp/error.hpp"
#include "noncomp/evalharness.hpp"
#include "noncomp/io.hpp"
#include "noncomp/rng.hpp"
#include "noncomp/text.hpp"

namespace noncomp::synthetic {

namespace fs = std::filesystem;

namespace {

struct Phrase {
  std::int64_t id;
  std::string text;
  double sst;
  std::vector<int> ticks;
};

class Builder {
 public:
  std::int64_t phrase(const std::string& text, double sst, bool spread = false) {
    if (auto it = ids_.find(text); it != ids_.end()) return it->second;
    const int t = 1 + static_cast<int>(std::lround(sst * 24));
    std::vector<int> ticks = spread ? std::vector<int>{1, 13, 25}
                                    : std::vector<int>{std::max(1, t - 1), t,
                                                       std::min(25, t + 1)};
    const auto id = static_cast<std::int64_t>(phrases_.size()) + 1;
    phrases_.push_back({id, text, sst, ticks});
    ids_.emplace(text, id);
    return id;
  }

  std::int64_t sentence(const std::vector<std::string>& words, std::vector<int> parents) {
    sentences_.push_back(text::join(words, " "));
    parents_.push_back(std::move(parents));
    return static_cast<std::int64_t>(sentences_.size());
  }

  void sidecar(std::int64_t sid, int start, int end, const char* label) {
    sidecar_.push_back(std::to_string(sid) + "\t" + std::to_string(start) + "\t" +
                       std::to_string(end) + "\t" + label + "\t0");
  }

  const std::vector<Phrase>& phrases() const { return phrases_; }

  void write(const pipeline::CorpusInputs& in) const {
    std::ostringstream s, t, d, v, r, c;
    s << "sentence_index\tsentence\n";
    for (std::size_t i = 0; i < sentences_.size(); ++i) s << i + 1 << '\t' << sentences_[i] << '\n';
    for (const auto& p : parents_) {
      for (std::size_t i = 0; i < p.size(); ++i) t << (i ? "|" : "") << p[i];
      t << '\n';
    }
    v << "phrase ids|sentiment values\n";
    for (const auto& p : phrases_) {
      d << p.text << '|' << p.id << '\n';
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6f", p.sst);
      v << p.id << '|' << buf << '\n';
      r << p.id << '|' << p.ticks[0] << ',' << p.ticks[1] << ',' << p.ticks[2] << '\n';
    }
    for (const auto& line : sidecar_) c << line << '\n';
    text::write_file(in.sentences, s.str());
    text::write_file(in.trees, t.str());
    text::write_file(in.dictionary, d.str());
    text::write_file(in.sentiment, v.str());
    text::write_file(in.raw_annotations, r.str());
    text::write_file(in.sidecar, c.str());
  }

 private:
  std::map<std::string, std::int64_t> ids_;
  std::vector<Phrase> phrases_;
  std::vector<std::string> sentences_;
  std::vector<std::vector<int>> parents_;
  std::vector<std::string> sidecar_;
};

struct Side {
  int len;
  double sst;
  const char* label;
};

// Sentence "A B" with right-branching A and B joined at the root. Returns
// the root phrase id.
std::int64_t binary_sentence(Builder& b, int index, const Side& a, const Side& bside,
                             double root_sst, bool spread_root) {
  const int k = a.len;
  const int n = a.len + bside.len;
  std::vector<std::string> words;
  for (int i = 0; i < n; ++i) {
    words.push_back("w" + std::to_string(index) + "t" + std::to_string(i));
  }
  // leaves 1..n, A chain n+1..n+k-1, B chain n+k..2n-2, root 2n-1
  std::vector<int> parents(static_cast<std::size_t>(2 * n - 1));
  auto set = [&](int node, int parent) { parents[static_cast<std::size_t>(node - 1)] = parent; };
  const int root = 2 * n - 1;
  auto chain = [&](int first_token, int len, int first_node) {
    for (int j = 0; j < len - 1; ++j) {
      const int node = first_node + j;
      set(first_token + j + 1, node);
      set(node, j == 0 ? root : node - 1);
    }
    set(first_token + len, first_node + len - 2);
  };
  chain(0, k, n + 1);
  chain(k, bside.len, n + k);
  set(root, 0);

  auto span_text = [&](int s, int e) {
    return text::join(std::vector<std::string>(words.begin() + s, words.begin() + e), " ");
  };
  for (int i = 0; i < n; ++i) b.phrase(words[static_cast<std::size_t>(i)], 0.5);
  b.phrase(span_text(0, k), a.sst);
  for (int j = 1; j < k - 1; ++j) b.phrase(span_text(j, k), 0.5);
  b.phrase(span_text(k, n), bside.sst);
  for (int j = 1; j < bside.len - 1; ++j) b.phrase(span_text(k + j, n), 0.5);
  const auto root_id = b.phrase(span_text(0, n), root_sst, spread_root);

  const auto sid = b.sentence(words, parents);
  b.sidecar(sid, 0, n, "OTHER");
  b.sidecar(sid, 0, k, a.label);
  b.sidecar(sid, k, n, bside.label);
  return root_id;
}

const char* kLabels[] = {"NP", "VP", "PP"};
const double kJitter[] = {-0.03, 0.0, 0.03};

Side good_side(int j, bool first) {
  if (first) {
    return {3 + j % 4, (2 + j % 7) / 10.0 + kJitter[(j / 49) % 3], kLabels[j % 3]};
  }
  return {3 + (j / 4) % 3, (2 + (j / 7) % 7) / 10.0 + kJitter[(j / 21) % 3],
          kLabels[(j / 3 + 1) % 3]};
}

std::int64_t candidate_of(const std::string& item_id) {
  // c<id>_<role>
  const auto us = item_id.find('_');
  std::int64_t id = 0;
  if (item_id.empty() || item_id[0] != 'c' || us == std::string::npos ||
      !text::parse_int(std::string_view(item_id).substr(1, us - 1), id)) {
    throw Error(ErrorCode::Validation, "not a combination id: " + item_id);
  }
  return id;
}

int clamp_label(int v) { return std::max(0, std::min(6, v)); }

std::string probs_line(const std::string& id, int seed, double mu) {
  double p[7];
  double sum = 0;
  for (int c = 0; c < 7; ++c) {
    p[c] = std::exp(-(c - mu) * (c - mu));
    sum += p[c];
  }
  std::string out = id + "\t" + std::to_string(seed);
  char buf[32];
  for (double v : p) {
    std::snprintf(buf, sizeof buf, "\t%.9f", v / sum);
    out += buf;
  }
  return out + "\n";
}

}  // namespace

Corpus write_corpus(const fs::path& dir, const CorpusSpec& spec) {
  Corpus out;
  out.inputs = pipeline::CorpusInputs::in_dir(dir);
  Builder b;
  int index = 0;
  std::ostringstream tags;

  for (int j = 0; j < spec.good_candidates; ++j) {
    const auto a = good_side(j, true);
    const auto bs = good_side(j, false);
    const auto id = binary_sentence(b, index++, a, bs, (a.sst + bs.sst) / 2, false);
    const bool planted = j % 9 == 0;
    if (planted) out.planted.insert(id);
    tags << id << '\t' << (planted ? 1 : 0) << '\n';
  }
  // Each bad group is a private (bucket, SBAR) pool of five, so every
  // member's controls are exactly the other four; the perceived labels
  // below leave no member with three controls within tolerance.
  const double bad_sst[] = {0.02, 0.1, 0.98};
  const int bad_perceived[] = {0, 6, 0, 6, 3};
  std::vector<std::pair<std::string, int>> overrides;
  for (int g = 0; g < spec.bad_groups; ++g) {
    for (int m = 0; m < 5; ++m) {
      const Side a{3 + m % 3, bad_sst[g % 3], "SBAR"};
      const Side bs{4, 0.5, "NP"};
      const int at = index;
      binary_sentence(b, index++, a, bs, 0.3, false);
      std::vector<std::string> words;
      for (int i = 0; i < a.len; ++i) words.push_back("w" + std::to_string(at) + "t" + std::to_string(i));
      overrides.emplace_back(text::join(words, " "), bad_perceived[m]);
    }
  }
  for (int i = 0; i < spec.noisy_sentences; ++i) {
    const int j = 1000 + i;
    const auto a = good_side(j, true);
    const auto bs = good_side(j, false);
    binary_sentence(b, index++, a, bs, 0.5, true);
  }
  for (int c = 0; c < spec.practice_sentences; ++c) {
    std::vector<std::string> words;
    for (int i = 0; i < 3; ++i) words.push_back("w" + std::to_string(index) + "t" + std::to_string(i));
    ++index;
    for (const auto& w : words) b.phrase(w, 0.5);
    b.phrase(words[0] + " " + words[1], 0.5);
    b.phrase(text::join(words, " "), (c % 7 + 0.5) / 7.0);
    const auto sid = b.sentence(words, {4, 4, 5, 5, 0});
    b.sidecar(sid, 0, 3, "OTHER");
  }

  for (const auto& p : b.phrases()) out.perceived[p.text] = eval::sst7_convert(p.sst);
  for (const auto& [t, label] : overrides) out.perceived[t] = label;
  fs::create_directories(dir);
  b.write(out.inputs);
  out.figurative_tags = dir / "figurative.tsv";
  text::write_file(out.figurative_tags, tags.str());
  out.expected_candidates = spec.good_candidates + 5 * spec.bad_groups;
  out.expected_survivors = spec.good_candidates;
  return out;
}

int combination_label(const Corpus& corpus, const std::string& item_id,
                      const std::vector<std::string>& segments, bool with_effect) {
  if (segments.size() != 2) throw Error(ErrorCode::Validation, "combination needs two segments");
  const int a = corpus.perceived.at(segments[0]);
  const int b = corpus.perceived.at(segments[1]);
  int label = static_cast<int>(std::floor((a + b) / 2.0 + 0.5));
  const bool natural = item_id.size() > 3 && item_id.compare(item_id.size() - 3, 3, "_AB") == 0;
  if (with_effect && natural && corpus.planted.count(candidate_of(item_id))) {
    label += label >= 3 ? -3 : 3;
  }
  return clamp_label(label);
}

void simulate_responses(const pipeline::Workspace& ws, int phase, const Corpus& corpus,
                        const Annotators& annotators) {
  const auto sid = pipeline::study_id(phase);
  const auto def = io::definition_from_json(
      io::load_json(ws.file(sid + "_batches.json")),
      io::load_json(ws.file(sid + "_practice.json")));
  std::string out;
  std::int64_t ts = 1000;
  for (std::size_t slot = 0; slot < def.batches.size(); ++slot) {
    const auto participant = def.study_id + "-p" + std::to_string(slot);
    const bool spammer = annotators.spammer_slots.count(static_cast<int>(slot)) > 0;
    Engine eng(derive_seed(annotators.seed, slot, static_cast<std::uint64_t>(phase)));
    auto emit = [&](const std::string& item, int label, bool flag) {
      study::Response r{participant, item, label, flag, ts++, false};
      out += io::response_to_json(r).dump() + "\n";
    };
    for (const auto& p : def.practice) emit(p.item_id, spammer ? 0 : *p.reference, false);
    for (const auto& item : def.batches[slot]) {
      int label = 0;
      bool flag = false;
      if (spammer) {
        label = static_cast<int>(uniform_below(eng, 7));
      } else {
        label = phase == 1 ? corpus.perceived.at(item.segments.at(0))
                           : combination_label(corpus, item.item_id, item.segments, true);
        if (phase == 2 && uniform_unit(eng) < annotators.noise) {
          label = clamp_label(label + (uniform_below(eng, 2) ? 1 : -1));
        }
        const auto& id = item.item_id;
        flag = item.allow_flag && id.size() > 3 &&
               id.compare(id.size() - 3, 3, "_B2") == 0 && candidate_of(id) % 11 == 0;
      }
      emit(item.item_id, label, flag);
    }
  }
  text::write_file(ws.file(sid + "_responses.jsonl"), out);
}

void write_predictions(const pipeline::Workspace& ws, const Corpus& corpus,
                       const fs::path& out, std::uint64_t seed) {
  const auto items = io::items_from_json(io::load_json(ws.file("study2_items.json")));
  std::string body;
  for (int s = 0; s < 3; ++s) {
    Engine eng(derive_seed(seed, static_cast<std::uint64_t>(s), 0));
    for (const auto& item : items) {
      const double mu = combination_label(corpus, item.item_id, item.segments, false) +
                        (uniform_unit(eng) - 0.5);
      body += probs_line(item.item_id, s, mu);
    }
  }
  text::write_file(out, body);
}

void write_sst_predictions(const pipeline::Workspace& ws, const fs::path& out,
                           std::uint64_t seed) {
  const auto subs = io::subphrases_from_json(io::load_json(ws.file("subphrases.json")));
  std::string body;
  for (int s = 0; s < 3; ++s) {
    Engine eng(derive_seed(seed, static_cast<std::uint64_t>(s), 1));
    for (const auto& sub : subs) {
      const double mu = eval::sst7_convert(sub.sst_value) + 1.5 * (uniform_unit(eng) - 0.5);
      body += probs_line(std::to_string(sub.phrase_id), s, mu);
    }
  }
  text::write_file(out, body);
}

void run_pipeline(const pipeline::Workspace& ws, const Corpus& corpus,
                  const PipelineConfig& cfg, const Annotators& annotators) {
  pipeline::corpus_validate(ws, cfg, corpus.inputs);
  pipeline::select_candidates(ws, cfg);
  pipeline::pools_build(ws, cfg);
  pipeline::pools_export(ws, cfg, true);
  pipeline::pools_import(ws, cfg, std::nullopt);
  pipeline::study_gen(ws, cfg, 1);
  simulate_responses(ws, 1, corpus, annotators);
  pipeline::study_gate(ws, cfg, 1);
  pipeline::study_alpha(ws, cfg, 1);
  pipeline::study_filter(ws, cfg);
  pipeline::study_gen(ws, cfg, 2);
  simulate_responses(ws, 2, corpus, annotators);
  pipeline::study_gate(ws, cfg, 2);
  pipeline::study_alpha(ws, cfg, 2);
  pipeline::ratings_compute(ws, cfg);
  write_predictions(ws, corpus, ws.file("model_compositional.tsv"), cfg.seed);
  write_sst_predictions(ws, ws.file("model_compositional_sst.tsv"), cfg.seed);
  pipeline::eval_run(ws, cfg,
                     {{"compositional", ws.file("model_compositional.tsv"),
                       ws.file("model_compositional_sst.tsv")}});
  pipeline::analyze(ws, cfg, corpus.figurative_tags);
}

}  // namespace noncomp::synthetic
