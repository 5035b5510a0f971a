#include "noncomp/study.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "noncomp/error.hpp"
#include "noncomp/evalharness.hpp"
#include "noncomp/rng.hpp"
#include "noncomp/text.hpp"

namespace noncomp::study {

const char* to_string(ItemKind kind) {
  switch (kind) {
    case ItemKind::Subphrase: return "subphrase";
    case ItemKind::Combination: return "combination";
    case ItemKind::Practice: return "practice";
  }
  return "subphrase";
}

const char* to_string(Role role) {
  switch (role) {
    case Role::None: return "none";
    case Role::Natural: return "natural";
    case Role::ControlA: return "control_A";
    case Role::ControlB: return "control_B";
  }
  return "none";
}

std::string StudyItem::display_text() const { return text::join(segments, " "); }

std::string combination_id(PhraseId candidate, Role role, int index) {
  auto id = "c" + std::to_string(candidate) + "_";
  switch (role) {
    case Role::Natural: return id + "AB";
    case Role::ControlA: return id + "A" + std::to_string(index);
    case Role::ControlB: return id + "B" + std::to_string(index);
    case Role::None: break;
  }
  throw Error(ErrorCode::Validation, "combination id needs a combination role");
}

namespace {

std::string padded(const std::string& prefix, std::size_t n) {
  auto digits = std::to_string(n);
  if (digits.size() < 5) digits.insert(0, 5 - digits.size(), '0');
  return prefix + digits;
}

}  // namespace

std::vector<StudyItem> make_items(const std::vector<CandidatePhrase>& candidates,
                                  int phase) {
  if (phase != 1 && phase != 2) {
    throw Error(ErrorCode::Validation, "phase must be 1 or 2");
  }
  std::vector<StudyItem> items;
  for (const auto& c : candidates) {
    if (!c.curated) {
      throw Error(ErrorCode::Validation,
                  "candidate " + std::to_string(c.phrase_id) +
                      " is not curated");
    }
  }

  if (phase == 1) {
    std::set<std::string> seen;
    auto add = [&](const std::string& raw) {
      auto t = text::normalize(raw);
      if (!seen.insert(t).second) return;
      StudyItem item;
      item.item_id = padded("s1_", items.size() + 1);
      item.phase = 1;
      item.kind = ItemKind::Subphrase;
      item.segments = {std::move(t)};
      items.push_back(std::move(item));
    };
    for (const auto& c : candidates) {
      add(c.side_A.text);
      add(c.side_B.text);
      for (const auto& ctrl : c.controls_A) add(ctrl.display_text());
      for (const auto& ctrl : c.controls_B) add(ctrl.display_text());
    }
    return items;
  }

  for (const auto& c : candidates) {
    const auto sel_a = c.selected(select::Side::A);
    const auto sel_b = c.selected(select::Side::B);
    if (sel_a.empty() || sel_b.empty() || sel_a.size() != sel_b.size()) {
      throw Error(ErrorCode::Validation,
                  "candidate " + std::to_string(c.phrase_id) +
                      " has no Study-1 control selection");
    }
    auto combo = [&](Role role, int index, std::string a, std::string b,
                     PhraseId control) {
      StudyItem item;
      item.item_id = combination_id(c.phrase_id, role, index);
      item.phase = 2;
      item.kind = ItemKind::Combination;
      item.segments = {text::normalize(a), text::normalize(b)};
      item.candidate_id = c.phrase_id;
      item.role = role;
      item.control_index = index;
      item.control_phrase_id = control;
      item.allow_flag = true;
      items.push_back(std::move(item));
    };
    combo(Role::Natural, 0, c.side_A.text, c.side_B.text, -1);
    int n = 0;
    for (const auto* ctrl : sel_a) {
      combo(Role::ControlA, ++n, ctrl->display_text(), c.side_B.text,
            ctrl->subphrase.phrase_id);
    }
    n = 0;
    for (const auto* ctrl : sel_b) {
      combo(Role::ControlB, ++n, c.side_A.text, ctrl->display_text(),
            ctrl->subphrase.phrase_id);
    }
  }
  return items;
}

std::vector<StudyItem> make_practice_items(
    const std::vector<select::Subphrase>& pool, int phase, int count,
    std::uint64_t seed, const std::set<std::string>& exclude) {
  std::vector<std::vector<const select::Subphrase*>> by_class(kNumLabels);
  for (const auto& s : pool) {
    if (exclude.count(text::normalize(s.text))) continue;
    by_class[static_cast<std::size_t>(eval::sst7_convert(s.sst_value))]
        .push_back(&s);
  }
  Engine eng(derive_seed(seed, 0x70726163ULL, static_cast<std::uint64_t>(phase)));
  for (auto& cls : by_class) shuffle(std::span(cls), eng);

  std::vector<const select::Subphrase*> picked;
  // one per class first, then round-robin over what is left
  for (std::size_t round = 0; static_cast<int>(picked.size()) < count; ++round) {
    bool any = false;
    for (auto& cls : by_class) {
      if (round < cls.size() && static_cast<int>(picked.size()) < count) {
        picked.push_back(cls[round]);
        any = true;
      }
    }
    if (!any) break;
  }
  if (static_cast<int>(picked.size()) < count) {
    throw Error(ErrorCode::Validation,
                "only " + std::to_string(picked.size()) +
                    " practice phrases available, need " +
                    std::to_string(count));
  }
  std::vector<StudyItem> items;
  for (const auto* s : picked) {
    StudyItem item;
    item.item_id = "p" + std::to_string(phase) + "_" +
                   std::to_string(items.size() + 1);
    item.phase = phase;
    item.kind = ItemKind::Practice;
    item.segments = {text::normalize(s->text)};
    item.reference = eval::sst7_convert(s->sst_value);
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<Batch> assign_batches(const std::vector<std::string>& item_ids,
                                  int n_participants, int annotations_per_item,
                                  std::uint64_t seed) {
  if (annotations_per_item < 1) {
    throw Error(ErrorCode::Infeasible, "annotations_per_item must be >= 1");
  }
  if (n_participants < annotations_per_item) {
    throw Error(ErrorCode::Infeasible,
                std::to_string(n_participants) +
                    " participants cannot give every item " +
                    std::to_string(annotations_per_item) +
                    " distinct annotators");
  }
  std::set<std::string> distinct(item_ids.begin(), item_ids.end());
  if (distinct.size() != item_ids.size()) {
    throw Error(ErrorCode::Validation, "duplicate item ids");
  }

  std::vector<std::string> order = item_ids;
  Engine eng(derive_seed(seed, 0x62617463ULL));
  shuffle(std::span(order), eng);

  // Cut the K-fold repetition of the order into P contiguous chunks. A chunk
  // holds at most ceil(U*K/P) <= U consecutive slots, and copies of one item
  // sit exactly U slots apart, so no chunk sees an item twice.
  const std::size_t u = order.size();
  const std::size_t total = u * static_cast<std::size_t>(annotations_per_item);
  const auto p = static_cast<std::size_t>(n_participants);
  const std::size_t base = total / p;
  const std::size_t extra = total % p;

  std::vector<Batch> batches(p);
  std::size_t pos = 0;
  for (std::size_t b = 0; b < p; ++b) {
    const std::size_t size = base + (b < extra ? 1 : 0);
    auto& batch = batches[b];
    batch.batch_id = static_cast<int>(b);
    batch.participant_slot = static_cast<int>(b);
    batch.item_ids.reserve(size);
    for (std::size_t k = 0; k < size; ++k, ++pos) {
      batch.item_ids.push_back(order[pos % u]);
    }
    Engine within(derive_seed(seed, 0x77697468ULL, b));
    shuffle(std::span(batch.item_ids), within);
  }
  return batches;
}

StudyDefinition make_definition(const std::string& study_id, int phase,
                                const std::vector<Batch>& batches,
                                const std::vector<StudyItem>& items,
                                const std::vector<StudyItem>& practice) {
  auto served = [](const StudyItem& item) {
    return ServedItem{item.item_id, item.segments, item.allow_flag,
                      item.reference};
  };
  std::map<std::string, const StudyItem*> by_id;
  for (const auto& item : items) by_id[item.item_id] = &item;
  StudyDefinition def;
  def.study_id = study_id;
  def.phase = phase;
  for (const auto& p : practice) def.practice.push_back(served(p));
  def.batches.resize(batches.size());
  for (const auto& b : batches) {
    if (b.participant_slot < 0 ||
        b.participant_slot >= static_cast<int>(batches.size())) {
      throw Error(ErrorCode::Validation, "participant slot out of range");
    }
    auto& slot = def.batches[static_cast<std::size_t>(b.participant_slot)];
    for (const auto& id : b.item_ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw Error(ErrorCode::Validation, "batch names unknown item " + id);
      }
      slot.push_back(served(*it->second));
    }
  }
  return def;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::optional<double> spearman(std::span<const double> x,
                               std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::Validation, "spearman: length mismatch");
  }
  if (x.size() < 2) return std::nullopt;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx <= 0 || syy <= 0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

QualityReport quality_gate(std::span<const int> responses,
                           std::span<const int> references,
                           const GateConfig& config) {
  if (responses.size() != references.size()) {
    throw Error(ErrorCode::Validation, "quality gate: length mismatch");
  }
  if (responses.size() < 2) {
    throw Error(ErrorCode::Validation,
                "quality gate needs at least two practice responses");
  }
  QualityReport r;
  std::vector<double> x, y;
  double abs_err = 0.0;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    abs_err += std::abs(responses[i] - references[i]);
    x.push_back(responses[i]);
    y.push_back(references[i]);
  }
  r.mae = abs_err / static_cast<double>(responses.size());
  r.spearman_rho = spearman(x, y);
  r.pass = r.mae <= config.max_mae && r.spearman_rho &&
           *r.spearman_rho >= config.min_rho;
  return r;
}

QualityReport quality_gate(const std::map<std::string, int>& practice_responses,
                           const std::map<std::string, int>& reference_labels,
                           const GateConfig& config) {
  std::vector<int> resp, ref;
  for (const auto& [item, label] : practice_responses) {
    auto it = reference_labels.find(item);
    if (it == reference_labels.end()) {
      throw Error(ErrorCode::Validation,
                  "no reference label for practice item " + item);
    }
    resp.push_back(label);
    ref.push_back(it->second);
  }
  return quality_gate(resp, ref, config);
}

bool ResponseSet::is_excluded(const std::string& participant) const {
  auto it = gate.find(participant);
  return it != gate.end() && !it->second.pass;
}

std::map<std::string, std::vector<int>> ResponseSet::labels_by_item(
    const std::map<std::string, StudyItem>& catalog) const {
  std::map<std::string, std::vector<int>> out;
  for (const auto& r : responses) {
    if (r.excluded) continue;
    auto it = catalog.find(r.item_id);
    if (it == catalog.end() || it->second.kind == ItemKind::Practice) continue;
    out[r.item_id].push_back(r.label);
  }
  return out;
}

ItemCatalog make_catalog(const std::vector<StudyItem>& items,
                         const std::vector<StudyItem>& practice) {
  ItemCatalog catalog;
  for (const auto* list : {&items, &practice}) {
    for (const auto& item : *list) {
      if (!catalog.emplace(item.item_id, item).second) {
        throw Error(ErrorCode::Validation, "duplicate item id " + item.item_id);
      }
    }
  }
  return catalog;
}

ResponseSet ingest_responses(const std::vector<std::string>& lines,
                             const ItemCatalog& catalog,
                             const GateConfig& gate) {
  ResponseSet set;
  std::map<std::pair<std::string, std::string>, std::size_t> position;

  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const auto where = "responses:" + std::to_string(i + 1) + ": ";
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Parse, where + e.what());
    }
    Response r;
    try {
      r.participant_id = row.at("participant_id").get<std::string>();
      r.item_id = row.at("item_id").get<std::string>();
      const auto& label = row.at("label");
      if (!label.is_number_integer()) {
        throw Error(ErrorCode::Validation, where + "label must be an integer");
      }
      const auto value = label.get<std::int64_t>();
      if (value < 0 || value >= kNumLabels) {
        throw Error(ErrorCode::Validation,
                    where + "label " + std::to_string(value) +
                        " outside 0..6");
      }
      r.label = static_cast<int>(value);
      r.ungrammatical = row.value("ungrammatical", false);
      r.ts = row.value("ts", std::int64_t{0});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Parse, where + e.what());
    }
    auto item = catalog.find(r.item_id);
    if (item == catalog.end()) {
      throw Error(ErrorCode::Validation, where + "unknown item " + r.item_id);
    }
    if (r.ungrammatical && !item->second.allow_flag) {
      throw Error(ErrorCode::Validation,
                  where + "ungrammatical flag on item " + r.item_id +
                      " which does not allow it");
    }
    const auto key = std::make_pair(r.participant_id, r.item_id);
    if (auto p = position.find(key); p != position.end()) {
      set.warnings.push_back(where + "duplicate response of " +
                             r.participant_id + " to " + r.item_id +
                             "; keeping the last");
      set.responses[p->second] = std::move(r);
    } else {
      position.emplace(key, set.responses.size());
      set.responses.push_back(std::move(r));
    }
  }

  std::map<std::string, std::map<std::string, int>> practice;
  std::map<std::string, int> references;
  for (const auto& [id, item] : catalog) {
    if (item.kind == ItemKind::Practice && item.reference) {
      references[id] = *item.reference;
    }
  }
  std::set<std::string> participants;
  for (const auto& r : set.responses) {
    participants.insert(r.participant_id);
    if (catalog.at(r.item_id).kind == ItemKind::Practice) {
      practice[r.participant_id][r.item_id] = r.label;
    }
  }
  for (const auto& p : participants) {
    auto it = practice.find(p);
    if (it == practice.end() || it->second.size() < 2) {
      set.ungated.insert(p);
      continue;
    }
    auto report = quality_gate(it->second, references, gate);
    report.participant_id = p;
    set.gate.emplace(p, std::move(report));
  }
  for (auto& r : set.responses) r.excluded = set.is_excluded(r.participant_id);
  return set;
}

ResponseSet ingest_responses(const std::filesystem::path& path,
                             const ItemCatalog& catalog,
                             const GateConfig& gate) {
  return ingest_responses(text::read_lines(path), catalog, gate);
}

}  // namespace noncomp::study
