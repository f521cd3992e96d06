#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "cvselect/error.hpp"
#include "cvselect/splitters.hpp"

using namespace cvselect;

namespace {

std::vector<std::size_t> concat_tests(const FoldPlan& plan) {
  std::vector<std::size_t> all;
  for (const auto& s : plan.splits) all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  return all;
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

std::multiset<std::size_t> test_sizes(const FoldPlan& plan) {
  std::multiset<std::size_t> s;
  for (const auto& sp : plan.splits) s.insert(sp.test.size());
  return s;
}

}  // namespace

TEST_CASE("kfold sizes and partition") {
  const FoldPlan p = make_kfold(10, 5, 1);
  REQUIRE(p.splits.size() == 5);
  for (const auto& s : p.splits) {
    CHECK(s.test.size() == 2);
    CHECK(s.train.size() == 8);
  }
  CHECK(concat_tests(p) == iota(10));
  CHECK(test_sizes(make_kfold(7, 3, 2)) == std::multiset<std::size_t>{2, 2, 3});
  check_plan(p);
}

TEST_CASE("kfold with K = n has the structure of LOO") {
  const FoldPlan a = make_kfold(10, 10, 3);
  const FoldPlan b = make_loo(10);
  auto tests = [](const FoldPlan& p) {
    std::set<std::vector<std::size_t>> s;
    for (const auto& sp : p.splits) s.insert(sp.test);
    return s;
  };
  CHECK(tests(a) == tests(b));
}

TEST_CASE("loo") {
  const FoldPlan p = make_loo(3);
  REQUIRE(p.splits.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(p.splits[i].test == std::vector<std::size_t>{i});
  CHECK(concat_tests(p) == iota(3));
  CHECK(p.tests_each_index_at_most_once());
}

TEST_CASE("repeated kfold") {
  const FoldPlan p = make_repeated_kfold(20, 10, 50, 4);
  CHECK(p.splits.size() == 500);
  CHECK(p.repetitions() == 50);
  std::set<std::size_t> reps;
  for (const auto& s : p.splits) reps.insert(s.repetition);
  CHECK(*reps.begin() == 0);
  CHECK(*reps.rbegin() == 49);
  CHECK_FALSE(p.tests_each_index_at_most_once());

  const FoldPlan one = make_repeated_kfold(20, 5, 1, 8);
  const FoldPlan single = make_kfold(20, 5, 8);
  CHECK(one.splits == single.splits);
}

TEST_CASE("stratified kfold balance") {
  std::vector<std::string> strata(12);
  for (std::size_t i = 0; i < 12; ++i) strata[i] = i % 2 ? "A" : "B";
  const FoldPlan p = make_stratified_kfold(12, 3, strata, 1);
  for (const auto& s : p.splits) {
    CHECK(std::count_if(s.test.begin(), s.test.end(), [&](std::size_t i) { return strata[i] == "A"; }) == 2);
  }

  std::vector<std::string> uneven(12, "B");
  for (std::size_t i = 0; i < 7; ++i) uneven[i] = "A";
  const FoldPlan q = make_stratified_kfold(12, 3, uneven, 2);
  std::multiset<long> a_counts, b_counts;
  for (const auto& s : q.splits) {
    const long a = std::count_if(s.test.begin(), s.test.end(), [&](std::size_t i) { return uneven[i] == "A"; });
    a_counts.insert(a);
    b_counts.insert(static_cast<long>(s.test.size()) - a);
  }
  CHECK(a_counts == std::multiset<long>{2, 2, 3});
  CHECK(b_counts == std::multiset<long>{1, 2, 2});
  CHECK(concat_tests(q) == iota(12));

  const std::vector<std::string> single(9, "only");
  CHECK(make_stratified_kfold(9, 3, single, 5).splits == make_kfold(9, 3, 5).splits);
}

TEST_CASE("leave-d-out") {
  const FoldPlan p = make_leave_d_out(10, 7, 20, 1);
  CHECK(p.splits.size() == 20);
  for (const auto& s : p.splits) {
    CHECK(s.train.size() == 3);
    CHECK(s.test.size() == 7);
  }
  CHECK_THROWS_AS(make_leave_d_out(10, 10, 5, 1), UsageError);
}

TEST_CASE("consistent d") {
  CHECK(consistent_d(100) == 73);
  CHECK(consistent_d(8) == 1);
  CHECK_THROWS_AS(consistent_d(7), UsageError);
}

TEST_CASE("leave one group out") {
  const std::vector<std::string> g{"A", "A", "B", "B", "C"};
  const FoldPlan p = make_logo(g);
  REQUIRE(p.splits.size() == 3);
  CHECK(p.splits[0].test == std::vector<std::size_t>{0, 1});
  CHECK(p.splits[1].test == std::vector<std::size_t>{2, 3});
  CHECK(p.splits[2].test == std::vector<std::size_t>{4});

  std::vector<std::string> many;
  for (int i = 0; i < 45; ++i) many.push_back("haul" + std::to_string(i));
  CHECK(make_logo(many).splits.size() == 45);
  CHECK_THROWS_AS(make_logo(std::vector<std::string>(4, "same")), UsageError);
}

TEST_CASE("blocked plans") {
  Eigen::MatrixXd coords(10, 1);
  for (int i = 0; i < 10; ++i) coords(i, 0) = i;
  const FoldPlan base = make_loo(10);
  CHECK(make_blocked(coords, base, 0.0).splits == base.splits);

  const FoldPlan b = make_blocked(coords, base, 1.5);
  const auto& s5 = b.splits[5];
  CHECK(s5.test == std::vector<std::size_t>{5});
  for (std::size_t i : {4u, 5u, 6u}) CHECK(std::find(s5.train.begin(), s5.train.end(), i) == s5.train.end());
  CHECK(s5.train.size() == 7);

  try {
    make_blocked(coords, base, 100.0);
    FAIL("expected an error");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("empty training sets") != std::string::npos);
  }

  std::size_t prev = SIZE_MAX;
  for (double h : {0.0, 0.5, 1.0, 2.0, 3.0, 4.5}) {
    const FoldPlan bh = make_blocked(coords, base, h);
    CHECK(bh.splits[0].train.size() <= prev);
    prev = bh.splits[0].train.size();
  }
}

TEST_CASE("nested plans") {
  const FoldPlan outer = make_kfold(100, 10, 1);
  const NestedPlan np = make_nested(outer, 10, 2);
  REQUIRE(np.inner.size() == 10);
  for (std::size_t s = 0; s < 10; ++s) {
    const auto& in = np.inner[s];
    CHECK(in.to_original == outer.splits[s].train);
    CHECK(concat_tests(in.plan) == iota(90));
  }

  const NestedPlan small = make_nested(make_loo(5), 2, 1);
  REQUIRE(small.inner.size() == 5);
  for (const auto& in : small.inner) CHECK(in.plan.n == 4);
}

TEST_CASE("plans are deterministic and round trip through JSON") {
  const FoldPlan a = make_repeated_kfold(30, 3, 4, 11);
  CHECK(a == make_repeated_kfold(30, 3, 4, 11));
  CHECK(a.fingerprint() == make_repeated_kfold(30, 3, 4, 11).fingerprint());
  CHECK(a.fingerprint() != make_repeated_kfold(30, 3, 4, 12).fingerprint());
  CHECK(plan_from_json(to_json(a)) == a);
}

TEST_CASE("invalid arguments") {
  CHECK_THROWS_AS(make_kfold(5, 1, 0), UsageError);
  CHECK_THROWS_AS(make_kfold(5, 6, 0), UsageError);
  CHECK_THROWS_AS(make_loo(1), UsageError);
  CHECK_THROWS_AS(parse_scheme("bogus"), UsageError);
  FoldPlan bad = make_kfold(6, 3, 0);
  bad.splits[0].train.push_back(bad.splits[0].test.front());
  CHECK_THROWS_AS(check_plan(bad), UsageError);
}
