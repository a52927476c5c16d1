#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "irltg/metrics.hpp"
#include "irltg/oracle.hpp"

#include "testutil.hpp"

using namespace irltg;

namespace {

// Sentences over a small content alphabet for randomized cross-checks.
std::vector<int> random_sentence(RngStream& rng, int min_len, int max_len, int vocab) {
  const int len = min_len + static_cast<int>(rng.uniform_index(max_len - min_len + 1));
  std::vector<int> s(len);
  for (int& t : s) t = 2 + static_cast<int>(rng.uniform_index(vocab));
  return s;
}

}  // namespace

TEST_CASE("pinned example: hyp a b c against ref a b d at order 2") {
  const std::vector<int> hyp = {10, 11, 12};               // "a b c"
  const std::vector<std::vector<int>> refs = {{10, 11, 13}};  // "a b d"
  // BP = 1, p1 = 2/3, p2 = 1/2, BLEU-2 = sqrt(1/3).
  REQUIRE(sentence_bleu(hyp, refs, 2) == Catch::Approx(std::sqrt(1.0 / 3.0)).margin(1e-12));
  REQUIRE(sentence_bleu(hyp, refs, 1) == Catch::Approx(2.0 / 3.0).margin(1e-12));
}

TEST_CASE("sentence bleu base cases") {
  const std::vector<int> hyp = {4, 5, 6, 7};
  REQUIRE(sentence_bleu(hyp, {{4, 5, 6, 7}}, 4) == 1.0);
  REQUIRE(sentence_bleu(hyp, {{9, 9}, {4, 5, 6, 7}, {8, 8}}, 3) == 1.0);

  // No shared unigrams: only epsilon smoothing keeps the score above zero.
  REQUIRE(sentence_bleu(hyp, {{8, 9, 10, 11}}, 2) < 1e-2);

  REQUIRE(sentence_bleu({}, {{1, 2}}, 2) == 0.0);
  REQUIRE_THROWS_AS(sentence_bleu(hyp, {}, 2), ArgumentError);
  REQUIRE_THROWS_AS(sentence_bleu(hyp, {{1, 2}}, 0), ArgumentError);

  BleuOptions hard;
  hard.smooth_eps = 0.0;
  REQUIRE(sentence_bleu(hyp, {{8, 9, 10, 11}}, 2, hard) == 0.0);
}

TEST_CASE("order-1 equal-length bleu is the clipped unigram precision") {
  const std::vector<int> hyp = {2, 3, 3, 4};
  const std::vector<std::vector<int>> refs = {{3, 4, 4, 5}};
  // Clipped counts: 2 -> 0, 3 -> min(2,1) = 1, 4 -> min(1,2) = 1; precision 2/4.
  REQUIRE(sentence_bleu(hyp, refs, 1) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("reference order and duplication do not change the score") {
  RngStream rng(71);
  for (int rep = 0; rep < 20; ++rep) {
    auto r = rng.child(rep);
    const auto hyp = random_sentence(r, 3, 8, 5);
    std::vector<std::vector<int>> refs;
    for (int j = 0; j < 3; ++j) refs.push_back(random_sentence(r, 3, 8, 5));

    const double base = sentence_bleu(hyp, refs, 3);
    std::vector<std::vector<int>> permuted = {refs[2], refs[0], refs[1]};
    REQUIRE(sentence_bleu(hyp, permuted, 3) == base);
    std::vector<std::vector<int>> doubled = refs;
    doubled.insert(doubled.end(), refs.begin(), refs.end());
    REQUIRE(sentence_bleu(hyp, doubled, 3) == base);
  }
}

TEST_CASE("sentence bleu agrees with an independent brute-force scorer") {
  RngStream rng(73);
  for (int rep = 0; rep < 60; ++rep) {
    auto r = rng.child(rep);
    const auto hyp = random_sentence(r, 1, 8, 5);
    std::vector<std::vector<int>> refs;
    const int n_refs = 1 + static_cast<int>(r.uniform_index(3));
    for (int j = 0; j < n_refs; ++j) refs.push_back(random_sentence(r, 1, 8, 5));
    for (int n = 1; n <= 4; ++n) {
      const double lib = sentence_bleu(hyp, refs, n);
      const double ref = testutil::bf_sentence_bleu(hyp, refs, n, 1e-9);
      INFO("rep " << rep << " n " << n);
      REQUIRE(lib == Catch::Approx(ref).margin(1e-12));
    }
  }
}

TEST_CASE("harmonic mean pinned value and bounds") {
  REQUIRE(bleu_ha(0.829, 0.868) == Catch::Approx(0.848).margin(0.0005));
  REQUIRE(bleu_ha(0.37, 0.37) == Catch::Approx(0.37).margin(1e-15));
  REQUIRE(bleu_ha(0.0, 0.9) == 0.0);
  REQUIRE(bleu_ha(0.0, 0.0) == 0.0);
  REQUIRE_THROWS_AS(bleu_ha(-0.1, 0.5), ArgumentError);

  RngStream rng(79);
  for (int i = 0; i < 50; ++i) {
    const double f = rng.uniform();
    const double b = rng.uniform();
    const double h = bleu_ha(f, b);
    REQUIRE(h >= std::min(f, b) - 1e-15);
    REQUIRE(h <= std::max(f, b) + 1e-15);
  }
}

TEST_CASE("forward bleu is the mean over sampled hypotheses") {
  RngStream make(83);
  std::vector<std::vector<int>> generated, testset;
  for (int i = 0; i < 6; ++i) generated.push_back(random_sentence(make, 3, 7, 5));
  for (int i = 0; i < 9; ++i) testset.push_back(random_sentence(make, 3, 7, 5));

  const auto pick = RngStream(89).sample_indices(generated.size(), 4);
  double expect = 0.0;
  for (size_t i : pick) expect += testutil::bf_sentence_bleu(generated[i], testset, 2, 1e-9);
  expect /= pick.size();
  REQUIRE(bleu_forward(generated, testset, 2, 4, RngStream(89)) ==
          Catch::Approx(expect).margin(1e-12));

  // Oversized sample clamps to the whole corpus; thread count is invisible.
  const double full = bleu_forward(generated, testset, 2, 100, RngStream(97));
  REQUIRE(full == bleu_forward(generated, testset, 2, 100, RngStream(97), {}, 4));

  // Every generated sentence present in the test set scores a perfect 1.
  REQUIRE(bleu_forward(testset, testset, 3, 100, RngStream(101)) == 1.0);
  REQUIRE_THROWS_AS(bleu_forward({}, testset, 2, 4, RngStream(1)), ArgumentError);
}

TEST_CASE("backward bleu mirrors forward with sampled references") {
  RngStream make(103);
  std::vector<std::vector<int>> generated, testset;
  for (int i = 0; i < 7; ++i) generated.push_back(random_sentence(make, 3, 7, 5));
  for (int i = 0; i < 5; ++i) testset.push_back(random_sentence(make, 3, 7, 5));

  RngStream root(107);
  const auto hyp_pick = root.child("hyp").sample_indices(testset.size(), 3);
  const auto ref_pick = root.child("ref").sample_indices(generated.size(), 4);
  std::vector<std::vector<int>> refs;
  for (size_t i : ref_pick) refs.push_back(generated[i]);
  double expect = 0.0;
  for (size_t i : hyp_pick) expect += testutil::bf_sentence_bleu(testset[i], refs, 2, 1e-9);
  expect /= hyp_pick.size();
  REQUIRE(bleu_backward(generated, testset, 2, 3, 4, RngStream(107)) ==
          Catch::Approx(expect).margin(1e-12));
}

TEST_CASE("mode collapse shows up as low backward bleu") {
  RngStream make(109);
  std::vector<std::vector<int>> testset;
  for (int i = 0; i < 6; ++i) testset.push_back(random_sentence(make, 5, 6, 6));
  // The generator emits one memorized test sentence over and over.
  std::vector<std::vector<int>> collapsed(12, testset[0]);

  const double f = bleu_forward(collapsed, testset, 2, 100, RngStream(113));
  const double b = bleu_backward(collapsed, testset, 2, 100, 100, RngStream(113));
  INFO("forward " << f << " backward " << b);
  REQUIRE(f == 1.0);  // every sample matches its memorized twin
  REQUIRE(b < f);     // the rest of the test set is not covered
  REQUIRE(bleu_ha(f, b) < f);
}

TEST_CASE("matched corpora score nearly symmetrically") {
  const auto oracle = make_oracle(127, 6, 3, 5);
  const auto generated = generate_dataset(oracle, 60, 6, RngStream(131));
  const auto testset = generate_dataset(oracle, 60, 6, RngStream(137));
  const double f = bleu_forward(generated, testset, 2, 100, RngStream(139));
  const double b = bleu_backward(generated, testset, 2, 100, 100, RngStream(139));
  INFO("forward " << f << " backward " << b);
  REQUIRE(std::abs(f - b) < 0.02);
}

TEST_CASE("metrics report covers all orders and is reproducible") {
  RngStream make(149);
  std::vector<std::vector<int>> generated, testset;
  for (int i = 0; i < 8; ++i) generated.push_back(random_sentence(make, 3, 6, 5));
  for (int i = 0; i < 8; ++i) testset.push_back(random_sentence(make, 3, 6, 5));

  const auto rep = compute_metrics(generated, testset, {2, 3}, 5, 6, 151);
  REQUIRE(rep.orders == std::vector<int>{2, 3});
  REQUIRE(rep.forward.size() == 2);
  REQUIRE(rep.backward.size() == 2);
  for (size_t i = 0; i < 2; ++i)
    REQUIRE(rep.harmonic[i] == bleu_ha(rep.forward[i], rep.backward[i]));
  REQUIRE(rep.eval_sample == 5);
  REQUIRE(rep.ref_sample == 6);
  REQUIRE(rep.seed == 151);

  const auto again = compute_metrics(generated, testset, {2, 3}, 5, 6, 151, {}, 4);
  REQUIRE(rep.to_json() == again.to_json());

  const auto js = rep.to_json();
  REQUIRE(js["bleu"]["2"].contains("forward"));
  REQUIRE(js["bleu"]["3"].contains("harmonic"));
}
