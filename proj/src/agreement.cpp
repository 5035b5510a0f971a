#include <vector>

#include "noncomp/error.hpp"
#include "noncomp/study.hpp"

namespace noncomp::study {

AgreementReport krippendorff_alpha_ordinal(
    const std::vector<std::vector<int>>& units, int n_categories) {
  const auto k = static_cast<std::size_t>(n_categories);
  // coincidence matrix o[c][k]: each ordered pair of values within a unit
  // contributes 1 / (m_u - 1)
  std::vector<std::vector<double>> o(k, std::vector<double>(k, 0.0));
  AgreementReport report;
  for (const auto& unit : units) {
    for (int v : unit) {
      if (v < 0 || v >= n_categories) {
        throw Error(ErrorCode::Validation,
                    "label " + std::to_string(v) + " outside 0.." +
                        std::to_string(n_categories - 1));
      }
    }
    if (unit.size() < 2) continue;
    ++report.n_items;
    report.n_responses += unit.size();
    const double w = 1.0 / static_cast<double>(unit.size() - 1);
    for (std::size_t i = 0; i < unit.size(); ++i) {
      for (std::size_t j = 0; j < unit.size(); ++j) {
        if (i != j) {
          o[static_cast<std::size_t>(unit[i])][static_cast<std::size_t>(unit[j])] += w;
        }
      }
    }
  }
  if (report.n_items == 0) {
    throw Error(ErrorCode::Undefined, "no item has two or more responses");
  }

  std::vector<double> marg(k, 0.0);
  double n = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t d = 0; d < k; ++d) marg[c] += o[c][d];
    n += marg[c];
  }

  // ordinal metric: (sum_{g=c..d} n_g - (n_c + n_d) / 2)^2
  auto delta2 = [&](std::size_t c, std::size_t d) {
    if (c > d) std::swap(c, d);
    double s = 0.0;
    for (std::size_t g = c; g <= d; ++g) s += marg[g];
    s -= (marg[c] + marg[d]) / 2.0;
    return s * s;
  };

  double observed = 0.0;
  double expected = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t d = 0; d < k; ++d) {
      if (c == d) continue;
      const double dd = delta2(c, d);
      observed += o[c][d] * dd;
      expected += marg[c] * marg[d] * dd;
    }
  }
  if (observed == 0.0) {
    report.alpha = 1.0;
  } else {
    report.alpha = 1.0 - (n - 1.0) * observed / expected;
  }
  return report;
}

}  // namespace noncomp::study
