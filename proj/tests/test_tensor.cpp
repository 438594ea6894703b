#include <doctest.h>

#include <algorithm>
#include <random>
#include <stdexcept>

#include "testutil.hpp"
#include "ueval/tensor.hpp"

using namespace ueval;

TEST_CASE("class map validation accepts in-range values") {
  const ClassMap map(2, 2, 2, {0, 1, 1, 0});
  CHECK_FALSE(validate_class_map(map).has_value());
}

TEST_CASE("class map validation names the first offending pixel") {
  const ClassMap map(1, 1, 2, {5});
  const auto report = validate_class_map(map);
  REQUIRE(report.has_value());
  CHECK(report->find("(0,0)") != std::string::npos);
  CHECK(report->find("5") != std::string::npos);
}

TEST_CASE("class map validation permits the ignore id") {
  const ClassMap map(1, 2, 19, {0, 255}, 255);
  CHECK_FALSE(validate_class_map(map).has_value());
}

TEST_CASE("class map construction rejects structural nonsense") {
  CHECK_THROWS_AS(ClassMap(0, 2, 2, {}), std::invalid_argument);
  CHECK_THROWS_AS(ClassMap(1, 2, 1, {0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(ClassMap(1, 2, 2, {0}), std::invalid_argument);
  // ignore id inside [0, C) is not an ignore id
  CHECK_THROWS_AS(ClassMap(1, 2, 4, {0, 1}, 2), std::invalid_argument);
}

TEST_CASE("prob stack validation accepts unit sums") {
  const ProbStack ok(1, 2, 1, 1, {0.5, 0.5});
  CHECK_FALSE(validate_prob_stack(ok).has_value());

  const ProbStack onehot(2, 3, 1, 1, {1, 0, 0, 1, 0, 0});
  CHECK_FALSE(validate_prob_stack(onehot).has_value());
}

TEST_CASE("prob stack validation reports the offending coordinate") {
  const ProbStack bad(1, 2, 1, 1, {0.7, 0.7});
  const auto report = validate_prob_stack(bad);
  REQUIRE(report.has_value());
  CHECK(report->find("(0,0,0)") != std::string::npos);
}

TEST_CASE("validation is total on weird but well-shaped payloads") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const ProbStack weird(1, 2, 1, 2, {nan, 0.5, -3.0, 2.0});
  CHECK(validate_prob_stack(weird).has_value());

  const ClassMap negative(1, 2, 3, {-7, 1});
  CHECK(validate_class_map(negative).has_value());

  const ScalarMap inf_map(1, 2, {std::numeric_limits<double>::infinity(), 0});
  CHECK(validate_scalar_map(inf_map).has_value());
  const ScalarMap fine(1, 2, {0.0, 1.5});
  CHECK_FALSE(validate_scalar_map(fine).has_value());
}

TEST_CASE("argmax of a single sample picks the max class") {
  const ProbStack stack(1, 2, 1, 1, {0.2, 0.8});
  CHECK(argmax_prediction(stack).at(0, 0) == 1);
}

TEST_CASE("argmax ties break to the lowest class id") {
  const ProbStack stack(2, 2, 1, 1, {1, 0, 0, 1});  // mean (0.5, 0.5)
  CHECK(argmax_prediction(stack).at(0, 0) == 0);
}

TEST_CASE("argmax uses the sample-mean distribution") {
  // means: (0.3667, 0.4, 0.2333)
  const ProbStack stack(3, 3, 1, 1,
                        {0.5, 0.3, 0.2, 0.2, 0.5, 0.3, 0.4, 0.4, 0.2});
  CHECK(argmax_prediction(stack).at(0, 0) == 1);
}

TEST_CASE("argmax is invariant under sample permutation") {
  std::mt19937_64 rng(1234);
  for (int round = 0; round < 50; ++round) {
    const std::size_t samples = 1 + test::bounded(rng, 6);
    const std::int32_t classes =
        static_cast<std::int32_t>(2 + test::bounded(rng, 5));
    const std::size_t h = 1 + test::bounded(rng, 4);
    const std::size_t w = 1 + test::bounded(rng, 4);
    const ProbStack stack = test::random_stack(rng, samples, classes, h, w);

    std::vector<std::size_t> order(samples);
    for (std::size_t i = 0; i < samples; ++i) order[i] = i;
    for (std::size_t i = samples; i > 1; --i)
      std::swap(order[i - 1], order[test::bounded(rng, i)]);

    const std::size_t plane = static_cast<std::size_t>(classes) * h * w;
    std::vector<double> shuffled(stack.values().size());
    for (std::size_t t = 0; t < samples; ++t) {
      std::copy_n(stack.values().begin() +
                      static_cast<std::ptrdiff_t>(order[t] * plane),
                  plane,
                  shuffled.begin() + static_cast<std::ptrdiff_t>(t * plane));
    }
    const ProbStack permuted(samples, classes, h, w, std::move(shuffled));

    const ClassMap a = argmax_prediction(stack);
    const ClassMap b = argmax_prediction(permuted);
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < w; ++c) CHECK(a.at(r, c) == b.at(r, c));
  }
}

TEST_CASE("argmax of T identical samples equals the single-sample argmax") {
  std::mt19937_64 rng(99);
  const ProbStack single = test::random_stack(rng, 1, 4, 3, 3);
  std::vector<double> repeated;
  for (int t = 0; t < 5; ++t)
    repeated.insert(repeated.end(), single.values().begin(),
                    single.values().end());
  const ProbStack stacked(5, 4, 3, 3, std::move(repeated));

  const ClassMap a = argmax_prediction(single);
  const ClassMap b = argmax_prediction(stacked);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) CHECK(a.at(r, c) == b.at(r, c));
}
