#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "noncomp/select.hpp"

namespace noncomp::study {

using select::CandidatePhrase;
using select::PhraseId;

constexpr int kNumLabels = 7;  // 0 = very negative .. 6 = very positive

enum class ItemKind { Subphrase, Combination, Practice };
const char* to_string(ItemKind kind);

/// Which slot of a candidate's seven Study-2 combinations an item fills.
enum class Role { None, Natural, ControlA, ControlB };
const char* to_string(Role role);

struct StudyItem {
  std::string item_id;
  int phase = 1;
  ItemKind kind = ItemKind::Subphrase;
  std::vector<std::string> segments;
  PhraseId candidate_id = -1;  // combination items only
  Role role = Role::None;
  int control_index = 0;       // 1..3 for ControlA / ControlB
  PhraseId control_phrase_id = -1;
  bool allow_flag = false;
  std::optional<int> reference;  // practice items only

  std::string display_text() const;
};

/// Stable id of a Study-2 combination item.
std::string combination_id(PhraseId candidate, Role role, int index = 0);

/// Phase 1: one item per distinct displayed subphrase (targets and all
/// curated controls). Phase 2: seven combinations per candidate, "A B",
/// three "A'n B" and three "A B'n".
std::vector<StudyItem> make_items(const std::vector<CandidatePhrase>& candidates,
                                  int phase);

/// Picks `count` practice subphrases, one per 7-point class while classes
/// last, with the SST-7 class as the reference label. Texts in `exclude`
/// are never picked.
std::vector<StudyItem> make_practice_items(
    const std::vector<select::Subphrase>& pool, int phase, int count,
    std::uint64_t seed, const std::set<std::string>& exclude = {});

struct Batch {
  int batch_id = 0;
  int participant_slot = 0;
  std::vector<std::string> item_ids;
};

/// Each item lands in exactly `annotations_per_item` distinct batches and
/// batch sizes differ by at most one.
std::vector<Batch> assign_batches(const std::vector<std::string>& item_ids,
                                  int n_participants, int annotations_per_item,
                                  std::uint64_t seed);

/// What the annotation service serves: practice items plus one batch per
/// participant slot.
struct ServedItem {
  std::string item_id;
  std::vector<std::string> segments;
  bool allow_flag = false;
  std::optional<int> reference;
};

struct StudyDefinition {
  std::string study_id;
  int phase = 1;
  std::vector<ServedItem> practice;
  std::vector<std::vector<ServedItem>> batches;  // index = participant slot
};

StudyDefinition make_definition(const std::string& study_id, int phase,
                                const std::vector<Batch>& batches,
                                const std::vector<StudyItem>& items,
                                const std::vector<StudyItem>& practice);

// Quality gate on practice answers.

struct GateConfig {
  double max_mae = 1.0;
  double min_rho = 0.8;
};

struct QualityReport {
  std::string participant_id;
  double mae = 0.0;
  std::optional<double> spearman_rho;
  bool pass = false;
};

/// Spearman's rho with average ranks for ties; nullopt when either side is
/// constant or the inputs are shorter than two.
std::optional<double> spearman(std::span<const double> x,
                               std::span<const double> y);

QualityReport quality_gate(std::span<const int> responses,
                           std::span<const int> references,
                           const GateConfig& config = {});

/// Keyed form: every practice response needs a reference label.
QualityReport quality_gate(const std::map<std::string, int>& practice_responses,
                           const std::map<std::string, int>& reference_labels,
                           const GateConfig& config = {});

// Agreement.

struct AgreementReport {
  double alpha = 0.0;
  std::size_t n_items = 0;      // items with >= 2 responses
  std::size_t n_responses = 0;  // pairable responses
  std::string scale = "ordinal";
};

/// Krippendorff's alpha with the ordinal metric over categories
/// 0..n_categories-1. Each inner vector holds one item's labels.
AgreementReport krippendorff_alpha_ordinal(
    const std::vector<std::vector<int>>& units, int n_categories = kNumLabels);

// Responses.

struct Response {
  std::string participant_id;
  std::string item_id;
  int label = 0;
  bool ungrammatical = false;
  std::int64_t ts = 0;
  bool excluded = false;
};

struct ResponseSet {
  std::vector<Response> responses;
  std::vector<std::string> warnings;
  std::map<std::string, QualityReport> gate;  // participants with practice data
  std::set<std::string> ungated;              // participants without practice data

  bool is_excluded(const std::string& participant) const;
  /// Labels of non-excluded, non-practice responses grouped by item.
  std::map<std::string, std::vector<int>> labels_by_item(
      const std::map<std::string, StudyItem>& catalog) const;
};

using ItemCatalog = std::map<std::string, StudyItem>;

ItemCatalog make_catalog(const std::vector<StudyItem>& items,
                         const std::vector<StudyItem>& practice);

/// Parses JSONL rows {participant_id, item_id, label, ungrammatical, ts}.
/// Duplicate (participant, item) pairs keep the last row; participants
/// failing the practice gate stay in the set marked excluded.
ResponseSet ingest_responses(const std::vector<std::string>& lines,
                             const ItemCatalog& catalog,
                             const GateConfig& gate = {});
ResponseSet ingest_responses(const std::filesystem::path& path,
                             const ItemCatalog& catalog,
                             const GateConfig& gate = {});

}  // namespace noncomp::study
