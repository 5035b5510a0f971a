#pragma once

// Reference implementations written straight from the textbook formulas,
// sharing no code with the library they check.

#include <cmath>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace noncomp::oracle {

/// Krippendorff's ordinal alpha via the pairwise form
/// alpha = 1 - D_o / D_e, with D_o averaged within units and D_e over all
/// pairs of pooled pairable values.
inline std::optional<double> alpha_ordinal_pairwise(const std::vector<std::vector<int>>& units,
                                                    int n_categories = 7) {
  std::vector<int> pooled;
  std::vector<const std::vector<int>*> pairable;
  for (const auto& u : units) {
    if (u.size() < 2) continue;
    pairable.push_back(&u);
    pooled.insert(pooled.end(), u.begin(), u.end());
  }
  if (pairable.empty()) return std::nullopt;
  std::vector<double> n_g(static_cast<std::size_t>(n_categories), 0.0);
  for (int v : pooled) n_g[static_cast<std::size_t>(v)] += 1.0;
  auto d2 = [&](int a, int b) {
    if (a == b) return 0.0;
    const int lo = a < b ? a : b;
    const int hi = a < b ? b : a;
    double s = 0.0;
    for (int g = lo; g <= hi; ++g) s += n_g[static_cast<std::size_t>(g)];
    s -= (n_g[static_cast<std::size_t>(lo)] + n_g[static_cast<std::size_t>(hi)]) / 2.0;
    return s * s;
  };
  const double n = static_cast<double>(pooled.size());
  double d_o = 0.0;
  for (const auto* u : pairable) {
    double s = 0.0;
    for (std::size_t i = 0; i < u->size(); ++i) {
      for (std::size_t j = 0; j < u->size(); ++j) {
        if (i != j) s += d2((*u)[i], (*u)[j]);
      }
    }
    d_o += s / static_cast<double>(u->size() - 1);
  }
  d_o /= n;
  double d_e = 0.0;
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    for (std::size_t j = 0; j < pooled.size(); ++j) {
      if (i != j) d_e += d2(pooled[i], pooled[j]);
    }
  }
  d_e /= n * (n - 1.0);
  if (d_o == 0.0) return 1.0;
  return 1.0 - d_o / d_e;
}

/// One candidate's side as the definition states it: s(AB) minus the mean
/// over the usable control combinations.
struct SideOracle {
  bool excluded = true;
  double rating = 0.0;
  bool touches_flag = false;
};

struct Combo {
  double mean = 0.0;
  bool flagged = false;
};

inline SideOracle side_rating(const std::optional<Combo>& natural,
                              const std::vector<std::optional<Combo>>& controls,
                              int min_controls, bool drop_flagged) {
  SideOracle out;
  if (!natural) return out;
  out.touches_flag = natural->flagged;
  double sum = 0.0;
  int used = 0;
  for (const auto& c : controls) {
    if (!c) continue;
    if (c->flagged) out.touches_flag = true;
    if (c->flagged && drop_flagged) continue;
    sum += c->mean;
    ++used;
  }
  if (used < min_controls) return out;
  out.excluded = false;
  out.rating = natural->mean - sum / used;
  return out;
}

/// Larger-magnitude side, ties to A; a lone usable side wins outright.
inline std::optional<double> max_of(const SideOracle& a, const SideOracle& b) {
  if (a.excluded && b.excluded) return std::nullopt;
  if (a.excluded) return b.rating;
  if (b.excluded) return a.rating;
  return std::fabs(b.rating) > std::fabs(a.rating) ? b.rating : a.rating;
}

}  // namespace noncomp::oracle
