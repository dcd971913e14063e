#include <doctest.h>

#include <cmath>
#include <vector>

#include "stat_helpers.hpp"
#include "turnsample/g_sampler.hpp"
#include "turnsample/random.hpp"
#include "turnsample/stream.hpp"

using namespace turnsample;

namespace {

std::vector<TurnstileUpdate> updates_for(const std::vector<std::int64_t>& x) {
  std::vector<TurnstileUpdate> u;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != 0) u.push_back({static_cast<std::uint32_t>(i + 1), x[i]});
  }
  return u;
}

std::vector<std::uint32_t> run_trials(const std::vector<TurnstileUpdate>& updates, std::uint32_t n,
                                      const RejectionPlan& plan, int trials, int* fails,
                                      std::uint64_t seed_base, double* mean_used = nullptr) {
  std::vector<std::uint32_t> picks;
  *fails = 0;
  double used = 0.0;
  for (int t = 0; t < trials; ++t) {
    GSampler sampler(n, plan.repetitions, hash_combine(seed_base, t));
    for (const auto& u : updates) sampler.update(u);
    RandomSource accept(hash_combine(seed_base ^ 0xACCE, t));
    auto got = sampler.sample(plan, accept);
    if (!got.ok()) {
      ++(*fails);
      continue;
    }
    used += sampler.last_used;
    picks.push_back(*got.index);
  }
  if (mean_used && !picks.empty()) *mean_used = used / static_cast<double>(picks.size());
  return picks;
}

}  // namespace

TEST_CASE("log sampler basics") {
  SUBCASE("symmetric vector splits evenly") {
    auto updates = updates_for({1, 1});
    auto plan = make_log_plan(2);
    int fails = 0;
    auto picks = run_trials(updates, 2, plan, 2000, &fails, 11);
    REQUIRE(fails < 2000 / 50);
    auto emp = testutil::empirical_distribution(picks, 2);
    CHECK(std::fabs(emp[0] - 0.5) < 3.5 * std::sqrt(0.25 / picks.size()));
  }
  SUBCASE("one-sparse always returns that index") {
    auto updates = updates_for({0, 6, 0});
    auto plan = make_log_plan(1);
    int fails = 0;
    auto picks = run_trials(updates, 3, plan, 200, &fails, 13);
    CHECK(fails <= 2);
    for (auto i : picks) CHECK(i == 2);
  }
  SUBCASE("x=(3,1) follows (log4 : log2) = (2/3, 1/3)") {
    auto updates = updates_for({3, 1});
    auto plan = make_log_plan(4);
    int fails = 0;
    auto picks = run_trials(updates, 2, plan, 3000, &fails, 17);
    REQUIRE(fails < 3000 / 50);
    auto emp = testutil::empirical_distribution(picks, 2);
    std::vector<double> exact{2.0 / 3.0, 1.0 / 3.0};
    CHECK(tv_distance(emp, exact) <= 0.05);
  }
}

TEST_CASE("cap sampler basics") {
  auto updates = updates_for({2, 1});

  SUBCASE("T below every weight clips to uniform") {
    auto plan = make_cap_plan(1.0, 2.0);  // both |x|^2 >= 1 clip to T
    int fails = 0;
    auto picks = run_trials(updates, 2, plan, 2000, &fails, 19);
    REQUIRE(fails < 2000 / 50);
    auto emp = testutil::empirical_distribution(picks, 2);
    CHECK(std::fabs(emp[0] - 0.5) < 3.5 * std::sqrt(0.25 / picks.size()));
  }
  SUBCASE("T above every weight reduces to the pure power law") {
    auto plan = make_cap_plan(100.0, 2.0);
    int fails = 0;
    auto picks = run_trials(updates, 2, plan, 3000, &fails, 23);
    REQUIRE(fails < 3000 / 20);
    auto emp = testutil::empirical_distribution(picks, 2);
    std::vector<double> exact{4.0 / 5.0, 1.0 / 5.0};
    CHECK(tv_distance(emp, exact) <= 0.03);
  }
  SUBCASE("partial clipping: T=3, p=2 gives weights (3,1)") {
    auto plan = make_cap_plan(3.0, 2.0);
    int fails = 0;
    auto picks = run_trials(updates, 2, plan, 3000, &fails, 29);
    REQUIRE(fails < 3000 / 50);
    auto emp = testutil::empirical_distribution(picks, 2);
    std::vector<double> exact{3.0 / 4.0, 1.0 / 4.0};
    CHECK(tv_distance(emp, exact) <= 0.05);
  }
}

TEST_CASE("general rejection framework") {
  SUBCASE("constant weights sample the support uniformly") {
    auto updates = updates_for({5, 0, -2, 9});
    auto plan = make_general_plan(
        GFunction::custom_bounded([](double z) { return z == 0.0 ? 0.0 : 2.0; }, 2.0, 2.0));
    int fails = 0;
    auto picks = run_trials(updates, 4, plan, 3000, &fails, 31);
    REQUIRE(fails < 3000 / 50);
    auto emp = testutil::empirical_distribution(picks, 4);
    std::vector<double> exact{1.0 / 3.0, 0.0, 1.0 / 3.0, 1.0 / 3.0};
    CHECK(tv_distance(emp, exact) <= 0.04);
  }
  SUBCASE("a plan reproducing the cap sampler agrees with it") {
    auto updates = updates_for({2, 1});
    auto cap_plan = make_cap_plan(3.0, 2.0);
    auto general = make_general_plan(GFunction::cap(3.0, 2.0), 3.0, 1.0);
    int f1 = 0, f2 = 0;
    auto picks_cap = run_trials(updates, 2, cap_plan, 3000, &f1, 37);
    auto picks_gen = run_trials(updates, 2, general, 3000, &f2, 41);
    auto e1 = testutil::empirical_distribution(picks_cap, 2);
    auto e2 = testutil::empirical_distribution(picks_gen, 2);
    CHECK(tv_distance(e1, e2) <= 0.03);
  }
  SUBCASE("tight upper bound accepts every support sample") {
    auto updates = updates_for({4, -4});
    // G is exactly 16 on the support, H = 16: acceptance probability 1.
    auto plan = make_general_plan(GFunction::power(2.0), 16.0, 16.0);
    int fails = 0;
    double mean_used = 0.0;
    auto picks = run_trials(updates, 2, plan, 500, &fails, 43, &mean_used);
    CHECK(fails <= 5);  // only the support sampler's own failures remain
    CHECK(mean_used == doctest::Approx(1.0).epsilon(0.05));
  }
  SUBCASE("plan bound violations are errors, never clamps") {
    auto updates = updates_for({10, 1});
    auto plan = make_general_plan(GFunction::power(2.0), 4.0, 1.0);  // H far too small
    GSampler sampler(2, plan.repetitions, 123);
    for (const auto& u : updates) sampler.update(u);
    RandomSource accept(5);
    CHECK_THROWS_AS(sampler.sample(plan, accept), std::logic_error);
  }
  SUBCASE("expected repetitions stay near H/Q") {
    auto updates = updates_for({1, 1, 1, 1});  // log weights all equal log 2
    auto plan = make_log_plan(4);              // H = log 5, Q = log 2
    int fails = 0;
    double mean_used = 0.0;
    run_trials(updates, 4, plan, 1000, &fails, 47, &mean_used);
    double ratio = plan.upper_h / std::log(2.0);
    CHECK(mean_used <= 1.5 * ratio);
  }
  SUBCASE("zero vector fails") {
    auto plan = make_log_plan(4);
    GSampler sampler(4, plan.repetitions, 9);
    sampler.update({2, 3});
    sampler.update({2, -3});
    RandomSource accept(1);
    CHECK(!sampler.sample(plan, accept).ok());
  }
}

TEST_CASE("rejection plans validate their shape") {
  CHECK_THROWS_AS(make_general_plan(GFunction::power(2.0), 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_general_plan(GFunction::power(2.0), 1.0, 2.0), std::invalid_argument);
  RejectionPlan p;
  p.upper_h = 4.0;
  p.lower_q = 1.0;
  p.repetitions = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
