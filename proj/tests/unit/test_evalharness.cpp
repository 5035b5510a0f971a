#include <doctest.h>

#include <cmath>

#include "noncomp/error.hpp"
#include "noncomp/evalharness.hpp"
#include "tables.hpp"

using namespace noncomp;
using namespace noncomp::eval;

namespace {

ProbVector one_hot(int c) {
  ProbVector p{};
  p[static_cast<std::size_t>(c)] = 1.0;
  return p;
}

// Macro-F1 from per-class precision and recall.
double f1_oracle(const std::vector<int>& labels, const std::vector<int>& preds) {
  std::set<int> classes(labels.begin(), labels.end());
  classes.insert(preds.begin(), preds.end());
  double sum = 0;
  for (int c : classes) {
    double tp = 0, pred_c = 0, true_c = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (preds[i] == c) ++pred_c;
      if (labels[i] == c) ++true_c;
      if (preds[i] == c && labels[i] == c) ++tp;
    }
    const double p = pred_c > 0 ? tp / pred_c : 0;
    const double r = true_c > 0 ? tp / true_c : 0;
    sum += p + r > 0 ? 2 * p * r / (p + r) : 0;
  }
  return sum / static_cast<double>(classes.size());
}

std::map<std::string, int> keyed(const std::vector<int>& v) {
  std::map<std::string, int> out;
  for (std::size_t i = 0; i < v.size(); ++i) out["k" + std::to_string(100 + i)] = v[i];
  return out;
}

}  // namespace

TEST_CASE("sst7_convert") {
  CHECK(sst7_convert(0.0) == 0);
  CHECK(sst7_convert(1.0) == 6);
  CHECK(sst7_convert(0.5) == 3);
  CHECK(sst7_convert(0.142) == 0);
  CHECK(sst7_convert(0.143) == 1);
  CHECK_THROWS_AS(sst7_convert(1.01), Error);
  CHECK_THROWS_AS(sst7_convert(-0.1), Error);
}

TEST_CASE("read_predictions") {
  const auto sets = read_predictions(
      std::vector<std::string>{"item_id\tseed\tp0\tp1\tp2\tp3\tp4\tp5\tp6",
                               "x\t1\t0\t0\t0\t1\t0\t0\t0", "x\t2\t0\t0\t0\t0\t0\t1\t0"},
      "m");
  REQUIRE(sets.size() == 2);
  CHECK(sets[1].seed == 2);
  CHECK(sets[1].rows.at("x")[5] == 1.0);
  CHECK_THROWS_AS(read_predictions(std::vector<std::string>{"h", "x\t1\t0.5\t0\t0\t0\t0\t0\t0"}, "m"),
                  Error);
  CHECK_THROWS_AS(read_predictions(std::vector<std::string>{"h", "x\t1\t-1\t2\t0\t0\t0\t0\t0"}, "m"),
                  Error);
  CHECK_THROWS_AS(read_predictions(std::vector<std::string>{"h", "x\t1\t1\t0"}, "m"), Error);
}

TEST_CASE("seed_average examples") {
  ProbVector uniform;
  uniform.fill(1.0 / 7.0);
  auto avg = seed_average({{"m", 1, {{"u", uniform}, {"h", one_hot(5)}, {"t", one_hot(2)}}},
                           {"m", 2, {{"u", uniform}, {"h", one_hot(5)}, {"t", one_hot(4)}}}});
  CHECK(avg.at("u").expected_sentiment == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(avg.at("h").expected_sentiment == 5.0);
  CHECK(avg.at("h").argmax_class == 5);
  CHECK(avg.at("t").probs[2] == 0.5);
  CHECK(avg.at("t").probs[4] == 0.5);
  CHECK(avg.at("t").expected_sentiment == 3.0);
  CHECK(avg.at("t").argmax_class == 2);
  CHECK_THROWS_AS(seed_average({}), Error);
  CHECK_THROWS_AS(seed_average({{"m", 1, {{"a", uniform}}}, {"m", 2, {{"b", uniform}}}}), Error);
}

TEST_CASE("seed_average with one seed is the identity") {
  Engine eng(4);
  ModelPredictionSet set{"m", 1, {}};
  for (int i = 0; i < 20; ++i) {
    ProbVector p{};
    double s = 0;
    for (auto& v : p) s += v = uniform_unit(eng);
    for (auto& v : p) v /= s;
    set.rows["i" + std::to_string(i)] = p;
  }
  const auto avg = seed_average({set});
  for (const auto& [id, p] : set.rows) CHECK(avg.at(id).probs == p);
}

TEST_CASE("pearson fixtures and affine invariance") {
  const std::vector<double> x{1, 2, 3}, y{2, 2, 5};
  CHECK(std::abs(pearson(x, y) - 3.0 / std::sqrt(12.0)) < 1e-12);
  CHECK(std::abs(pearson(x, y) - 0.8660) < 1e-4);
  CHECK(pearson(x, x) == doctest::Approx(1.0));
  CHECK(pearson(x, std::vector<double>{-1, -2, -3}) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 1, 1}), Error);
  CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{2}), Error);

  Engine eng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = 3 + uniform_below(eng, 40);
    std::vector<double> a(n), b(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = uniform_unit(eng) * 10 - 5;
      b[i] = a[i] * 0.5 + uniform_unit(eng) * 4;
    }
    const double scale = 0.1 + uniform_unit(eng) * 20;
    const double shift = uniform_unit(eng) * 100 - 50;
    for (std::size_t i = 0; i < n; ++i) t[i] = scale * a[i] + shift;
    const double r = pearson(a, b);
    CHECK(std::abs(pearson(t, b) - r) < 1e-9);
    for (auto& v : t) v = -v;
    CHECK(std::abs(pearson(t, b) + r) < 1e-9);
    CHECK(std::abs(r) <= 1.0);
  }
}

TEST_CASE("keyed pearson uses the key intersection") {
  ratings::KeyedVector x{{{1, 'A'}, 1}, {{2, 'A'}, 2}, {{3, 'A'}, 3}, {{4, 'A'}, 9}};
  ratings::KeyedVector y{{{1, 'A'}, 2}, {{2, 'A'}, 2}, {{3, 'A'}, 5}, {{5, 'B'}, 0}};
  const auto c = pearson(x, y);
  CHECK(c.n_pairs == 3);
  CHECK(c.n_mismatch == 2);
  CHECK(std::abs(c.r - 3.0 / std::sqrt(12.0)) < 1e-12);
}

TEST_CASE("macro_f1 fixtures") {
  CHECK(macro_f1(keyed({0, 3, 6}), keyed({0, 3, 6})) == 1.0);
  CHECK(macro_f1(keyed({6, 6}), keyed({0, 0})) == 0.0);
  CHECK(macro_f1(keyed({0, 1, 1}), keyed({0, 0, 1})) == 2.0 / 3.0);
  CHECK_THROWS_AS(macro_f1({}, {}), Error);
  CHECK_THROWS_AS(macro_f1(keyed({7}), keyed({0})), Error);
}

TEST_CASE("macro_f1 matches precision/recall arithmetic and ignores order") {
  Engine eng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = 1 + uniform_below(eng, 30);
    std::vector<int> l(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      l[i] = static_cast<int>(uniform_below(eng, 7));
      p[i] = uniform_unit(eng) < 0.5 ? l[i] : static_cast<int>(uniform_below(eng, 7));
    }
    const double f = macro_f1(keyed(p), keyed(l));
    CHECK(std::abs(f - f1_oracle(l, p)) < 1e-12);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    shuffle(std::span(order), eng);
    std::vector<int> l2(n), p2(n);
    for (std::size_t i = 0; i < n; ++i) l2[i] = l[order[i]], p2[i] = p[order[i]];
    CHECK(std::abs(macro_f1(keyed(p2), keyed(l2)) - f) < 1e-12);
  }
}

TEST_CASE("human labels round to the nearest class") {
  CHECK(human_label(16.0 / 3.0) == 5);
  CHECK(human_label(3.0) == 3);
  CHECK(human_label(17.0 / 3.0) == 6);
  CHECK(human_label(2.5) == 3);
  CHECK_THROWS_AS(human_label(6.5), Error);
}

TEST_CASE("top_subset is a strict threshold") {
  ratings::KeyedVector v{{{1, '*'}, 1.11}, {{2, '*'}, 1.0}, {{3, '*'}, 4.11}, {{4, '*'}, 0.2}};
  CHECK(top_subset(v, 1.0) == std::set<select::PhraseId>{1, 3});
  Engine eng(3);
  for (int trial = 0; trial < 50; ++trial) {
    ratings::KeyedVector r;
    std::set<select::PhraseId> brute;
    for (int i = 0; i < 40; ++i) {
      const double x = static_cast<double>(uniform_below(eng, 19)) / 9.0;
      r[{i, '*'}] = x;
      if (x > 1.0) brute.insert(i);
    }
    CHECK(top_subset(r) == brute);
  }
}

TEST_CASE("model sentiments equal to human means reproduce human ratings") {
  Engine eng(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto t = tables::random_table(eng, 20);
    AveragedPredictions exact, constant, frac;
    for (auto& [id, s] : t.sentiments) {
      s.mean_label = std::round(s.mean_label);
      AveragedPrediction a;
      a.probs = one_hot(static_cast<int>(s.mean_label));
      a.expected_sentiment = s.mean_label;
      a.argmax_class = static_cast<int>(s.mean_label);
      exact[id] = a;
      a.expected_sentiment = 2.0;
      constant[id] = a;
    }
    const auto human = ratings::compute_ratings(t.sentiments, t.candidates);
    const auto model = model_ratings(exact, t.candidates, t.sentiments);
    for (auto v : ratings::kAllVariants) CHECK(model.at(v) == ratings::to_variant(human, v));
    const auto flat = model_ratings(constant, t.candidates, t.sentiments);
    for (const auto& [_, r] : flat.at(ratings::Variant::All)) CHECK(r == 0.0);

    EvalInputs in;
    in.candidates = &t.candidates;
    in.human = &t.sentiments;
    const auto rep = evaluate_model("same", exact, in);
    CHECK(rep.f1_all_phrases == (rep.n_phrases ? 1.0 : 0.0));
    const auto& all = rep.pearson.at(ratings::Variant::All);
    if (all.defined) CHECK(all.r == doctest::Approx(1.0));
  }
}

TEST_CASE("model sentiments require coverage") {
  ratings::SentimentMap human{{"x", {}}};
  CHECK_THROWS_AS(model_sentiments({}, human), Error);
}

TEST_CASE("sst7_convert is non-decreasing") {
  int prev = 0;
  for (int i = 0; i <= 10000; ++i) {
    const int c = sst7_convert(i / 10000.0);
    CHECK(c >= prev);
    prev = c;
  }
}
