#include <cstdint>
#include <random>

#include "doctest.h"
#include "hmac/adaptation.hpp"

using namespace hmac;

namespace {

PerClass<ClassAdaptState> default_states(double p_col) {
  PerClass<ClassAdaptState> s{};
  for (int i = 0; i < kNumClasses; ++i) {
    s[i] = ClassAdaptState::with_defaults(i, kDefaultCwBounds[i]);
    s[i].p_col = p_col;
  }
  return s;
}

// floor(((10 - w_i) / 10)^e * draw * slot) in exact integer arithmetic, for
// the default weights (sum 10).
std::int64_t exact_hmac_backoff(int cls, int exponent, int draw, std::int64_t slot) {
  const std::int64_t w[] = {4, 3, 2, 1};
  std::int64_t num = 1;
  std::int64_t den = 1;
  for (int e = 0; e < exponent; ++e) {
    num *= 10 - w[cls];
    den *= 10;
  }
  return num * draw * slot / den;
}

}  // namespace

TEST_CASE("weights") {
  WeightConfig w;
  CHECK(w.sum() == 10.0);
  CHECK_THROWS_AS(WeightConfig(5.0, {2.0, 2.0, 2.0, 2.0}), ConfigError);
  CHECK_THROWS_AS(WeightConfig(4.0, {4.0, 3.0, 2.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(WeightConfig(5.0, {4.0, 3.0, 2.0, 0.0}), ConfigError);
  CHECK_NOTHROW(WeightConfig(9.0, {8.0, 6.0, 4.0, 2.0}));
}

TEST_CASE("collision ewma") {
  ClassAdaptState s;
  s.p_col = 0.5;
  s.collisions_this_period = 1;
  s.transmissions_this_period = 4;
  s = update_collision_ewma(s, 0.8);
  CHECK(s.p_col == 0.45);
  CHECK(s.collisions_this_period == 0);
  CHECK(s.transmissions_this_period == 0);

  ClassAdaptState zero;
  CHECK(update_collision_ewma(zero, 0.8).p_col == 0.0);

  ClassAdaptState idle;
  idle.p_col = 0.6;
  CHECK(update_collision_ewma(idle, 0.8).p_col == doctest::Approx(0.48));

  CHECK_THROWS_AS(update_collision_ewma(idle, 1.5), ConfigError);
  CHECK_THROWS_AS(update_collision_ewma(idle, -0.1), ConfigError);
}

TEST_CASE("collision ewma stays bounded") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    ClassAdaptState s;
    const double alpha = u(rng);
    for (int step = 0; step < 200; ++step) {
      s.transmissions_this_period = std::uniform_int_distribution<int>(0, 50)(rng);
      s.collisions_this_period =
          std::uniform_int_distribution<std::int64_t>(0, s.transmissions_this_period)(rng);
      s = update_collision_ewma(s, alpha);
      CHECK(s.p_col >= 0.0);
      CHECK(s.p_col <= 1.0);
    }
  }
}

TEST_CASE("access ratios") {
  const WeightConfig w;
  const PerClass<double> none{0.0, 0.0, 0.0, 0.0};

  auto even = access_ratios({0.25, 0.25, 0.25, 0.25}, none, w);
  CHECK(even.cx == PerClass<double>{25.0, 25.0, 25.0, 25.0});
  CHECK(even.ar == PerClass<double>{100.0, 75.0, 50.0, 25.0});

  auto clamped = access_ratios({0.1, 0.1, 0.2, 0.6}, none, w);
  CHECK(clamped.cx == PerClass<double>{25.0, 25.0, 25.0, 25.0});
  CHECK(clamped.ar == PerClass<double>{100.0, 75.0, 50.0, 25.0});
  CHECK(clamped.clamped == PerClass<bool>{true, true, true, true});

  auto single = access_ratios({1.0, 0.0, 0.0, 0.0}, {1.0, 0.0, 0.0, 0.0}, w);
  CHECK(single.cx == PerClass<double>{200.0, 0.0, 0.0, 0.0});
  CHECK(single.ar == PerClass<double>{800.0, 0.0, 0.0, 0.0});
  CHECK(single.clamped == PerClass<bool>{false, false, false, false});
}

TEST_CASE("access ratio properties") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const WeightConfig w;
  for (int trial = 0; trial < 100000; ++trial) {
    PerClass<double> x{u(rng), u(rng), u(rng), u(rng)};
    const double total = x[0] + x[1] + x[2] + x[3];
    for (auto& v : x) v /= total;
    const PerClass<double> p{u(rng), u(rng), u(rng), u(rng)};
    const auto r = access_ratios(x, p, w);
    REQUIRE(r.cx[3] <= r.cx[0]);
    for (double c : r.cx) REQUIRE(c >= 0.0);
    if (r.cx[0] == r.cx[1] && r.cx[1] == r.cx[2] && r.cx[2] == r.cx[3]) {
      REQUIRE(r.ar[0] >= r.ar[1]);
      REQUIRE(r.ar[1] >= r.ar[2]);
      REQUIRE(r.ar[2] >= r.ar[3]);
    }
    const bool any_clamp = r.clamped[0] || r.clamped[1] || r.clamped[2] || r.clamped[3];
    if (!any_clamp && r.ar[1] > 0.0) {
      REQUIRE(r.ar[0] / r.ar[1] == doctest::Approx((w[0] * r.cx[0]) / (w[1] * r.cx[1])));
    }
  }
}

TEST_CASE("transmission time") {
  PhyParams phy;
  CHECK(transmission_time(phy) == 4076);

  PhyParams empty = phy;
  empty.mpdu_bits = 0;
  CHECK(transmission_time(empty) == 2 * phy.sifs + phy.t_ack);

  PhyParams fast = phy;
  fast.data_rate = 4.0;
  CHECK(transmission_time(fast) == 2000 + 2 * phy.sifs + phy.t_ack);

  PhyParams bad = phy;
  bad.slot_time = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("txop limits") {
  const PerClass<double> ar{100.0, 75.0, 50.0, 25.0};
  const PerClass<double> busy{0.25, 0.25, 0.25, 0.25};

  auto norm = txop_limits(ar, 4076, 10, busy, TxopMode::normalized, 16);
  CHECK(norm.packets == PerClass<int>{6, 5, 3, 2});
  CHECK(norm.limit == PerClass<Tick>{24446, 20370, 12218, 8142});

  auto raw = txop_limits(ar, 4076, 10, busy, TxopMode::raw, 16);
  CHECK(raw.limit[0] == 407590);

  auto chained = txop_limits(ar, 4076, 10, {0.0, 0.0, 0.5, 0.5}, TxopMode::normalized, 16);
  CHECK(chained.limit[1] == chained.limit[0]);
  CHECK(chained.limit[2] == chained.limit[0]);
  CHECK(chained.limit[3] == 8142);

  auto idle = txop_limits({0.0, 0.0, 0.0, 0.0}, 4076, 10, busy, TxopMode::normalized, 16);
  CHECK(idle.limit == PerClass<Tick>{4066, 4066, 4066, 4066});

  CHECK_THROWS_AS(txop_limits(ar, 4076, 10, busy, TxopMode::normalized, 3), ConfigError);
  CHECK_THROWS_AS(txop_limits(ar, 0, 10, busy, TxopMode::raw, 16), ConfigError);
}

TEST_CASE("normalized txop conserves the burst budget") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20000; ++trial) {
    const int budget = std::uniform_int_distribution<int>(4, 64)(rng);
    PerClass<double> ar{};
    for (auto& a : ar) a = std::bernoulli_distribution(0.2)(rng) ? 0.0 : u(rng) * 800.0;
    if (ar[0] + ar[1] + ar[2] + ar[3] == 0.0) continue;
    const auto t = txop_limits(ar, 4076, 10, {0.25, 0.25, 0.25, 0.25}, TxopMode::normalized, budget);
    const int sum = t.packets[0] + t.packets[1] + t.packets[2] + t.packets[3];
    CHECK(sum >= budget - 3);
    CHECK(sum <= budget + 3);
    for (int i = 0; i < kNumClasses; ++i) {
      if (ar[i] > 0.0) CHECK(t.packets[i] >= 1);
    }
  }
}

TEST_CASE("aifsn") {
  const WeightConfig w;
  CHECK(aifsn_values(w, {0.25, 0.25, 0.25, 0.25}) == PerClass<int>{2, 3, 5, 10});
  CHECK(aifsn_values(w, {0.0, 0.5, 0.25, 0.25}) == PerClass<int>{2, 2, 5, 10});
  CHECK(aifsn_values(w, {0.0, 0.0, 0.5, 0.5}) == PerClass<int>{2, 2, 2, 10});
  CHECK(aifs_duration(2, PhyParams{}) == 50);
}

TEST_CASE("aifsn ordering holds for any valid weights") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  for (int trial = 0; trial < 10000; ++trial) {
    PerClass<double> v{u(rng), u(rng), u(rng), u(rng)};
    std::sort(v.begin(), v.end(), std::greater<>());
    if (!(v[0] > v[1] && v[1] > v[2] && v[2] > v[3])) continue;
    const WeightConfig w(v[0] + 1.0, v);
    const auto a = aifsn_values(w, {0.25, 0.25, 0.25, 0.25});
    CHECK(a[0] <= a[1]);
    CHECK(a[1] <= a[2]);
    CHECK(a[2] <= a[3]);

    const auto pf = priority_factors(w);
    CHECK(pf[0] > 0.0);
    CHECK(pf[0] < pf[1]);
    CHECK(pf[1] < pf[2]);
    CHECK(pf[2] < pf[3]);
    CHECK(pf[3] < 1.0);

    const double k = u(rng);
    const WeightConfig scaled(k * (v[0] + 1.0), {k * v[0], k * v[1], k * v[2], k * v[3]});
    const auto pf2 = priority_factors(scaled);
    for (int i = 0; i < kNumClasses; ++i) CHECK(pf2[i] == doctest::Approx(pf[i]).epsilon(1e-12));
  }
}

TEST_CASE("priority factors") {
  const auto pf = priority_factors(WeightConfig{});
  CHECK(pf[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(pf[1] == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(pf[2] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(pf[3] == doctest::Approx(0.9).epsilon(1e-15));

  const auto same = priority_factors(WeightConfig(9.0, {8.0, 6.0, 4.0, 2.0}));
  for (int i = 0; i < kNumClasses; ++i) CHECK(same[i] == pf[i]);
}

TEST_CASE("contention window adaptation") {
  const PerClass<double> busy{0.25, 0.25, 0.25, 0.25};

  auto high = adapt_contention_windows(default_states(0.6), 0.5, busy);
  CHECK(high[0] == CwBounds{7, 16});
  CHECK(high[1] == CwBounds{16, 32});
  CHECK(high[2] == CwBounds{32, 1984});
  CHECK(high[3] == CwBounds{1023, 1023});

  auto low = adapt_contention_windows(default_states(0.4), 0.5, busy);
  for (int i = 0; i < kNumClasses; ++i) CHECK(low[i] == kDefaultCwBounds[i]);

  auto at = adapt_contention_windows(default_states(0.5), 0.5, busy);
  CHECK(at[0] == CwBounds{7, 16});

  auto inherit = adapt_contention_windows(default_states(0.4), 0.5, {0.0, 0.5, 0.25, 0.25});
  CHECK(inherit[0] == CwBounds{7, 15});
  CHECK(inherit[1] == CwBounds{7, 15});
  CHECK(inherit[2] == kDefaultCwBounds[2]);
  CHECK(inherit[3] == kDefaultCwBounds[3]);

  CHECK_THROWS_AS(adapt_contention_windows(default_states(0.4), 1.0, busy), ConfigError);
}

TEST_CASE("below threshold the windows never leave the defaults") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 0.49);
  auto states = default_states(0.0);
  for (int step = 0; step < 1000; ++step) {
    for (auto& s : states) s.p_col = u(rng);
    const auto next = adapt_contention_windows(states, 0.5, {0.25, 0.25, 0.25, 0.25});
    for (int i = 0; i < kNumClasses; ++i) {
      REQUIRE(next[i] == kDefaultCwBounds[i]);
      states[i].cw_min = next[i].cw_min;
      states[i].cw_max = next[i].cw_max;
    }
  }
}

TEST_CASE("adapted windows keep cw_min <= cw_max") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 5000; ++trial) {
    auto states = default_states(0.0);
    for (auto& s : states) s.p_col = u(rng);
    PerClass<double> x{};
    for (auto& v : x) v = std::bernoulli_distribution(0.3)(rng) ? 0.0 : u(rng);
    for (const auto& b : adapt_contention_windows(states, 0.5, x)) {
      CHECK(b.cw_min >= 1);
      CHECK(b.cw_min <= b.cw_max);
    }
  }
}

TEST_CASE("backoff") {
  const PhyParams phy;
  CHECK(backoff_duration(Protocol::edca, {.cls = 0, .k = 0, .draw = 5, .pf = 1.0}, phy) == 100);
  CHECK(backoff_duration(Protocol::edca, {.cls = 2, .k = 3, .draw = 5, .pf = 1.0}, phy) == 800);
  CHECK(backoff_duration(Protocol::hmac, {.cls = 0, .k = 0, .draw = 5, .pf = 0.6}, phy) == 36);
  CHECK(backoff_duration(Protocol::hmac, {.cls = 0, .k = 1, .draw = 5, .pf = 0.6}, phy) == 21);
  CHECK(backoff_duration(Protocol::hmac,
                         {.cls = 3, .k = 1, .draw = 5, .pf = 0.9, .exponent = PfExponent::retry_only},
                         phy) == 72);
}

TEST_CASE("hmac backoff matches exact rational arithmetic") {
  const PhyParams phy;
  const auto pf = priority_factors(WeightConfig{});
  for (int cls = 0; cls < kNumClasses; ++cls) {
    for (int k = 0; k <= 7; ++k) {
      for (int draw = 0; draw <= 1023; ++draw) {
        const BackoffInputs in{.cls = cls, .k = k, .draw = draw, .pf = pf[cls]};
        REQUIRE(backoff_duration(Protocol::hmac, in, phy) ==
                exact_hmac_backoff(cls, 2 + cls + k, draw, phy.slot_time));
        REQUIRE(backoff_duration(Protocol::hmac, in, phy) == backoff_duration(Protocol::hmac, in, phy));
      }
    }
  }
}

TEST_CASE("window growth") {
  CHECK(grow_cw(7, 15) == 15);
  CHECK(grow_cw(15, 15) == 15);
  CHECK(grow_cw(31, 1023) == 63);
  CHECK(grow_cw(1023, 1023) == 1023);
}

TEST_CASE("static edca table") {
  const PhyParams phy;
  const auto p = static_edca_params(phy);
  CHECK(p.cls[0].aifsn == 2);
  CHECK(p.cls[0].cw == CwBounds{7, 15});
  CHECK(p.cls[0].txop_limit == 3008);
  CHECK(p.cls[1].txop_limit == 6016);
  CHECK(p.cls[2].txop_limit == 4066);
  CHECK(p.cls[3].aifsn == 7);
  CHECK(p.cls[3].cw == CwBounds{31, 1023});
  CHECK(p.cls[3].aifs == 150);

  EdcaTable custom;
  custom.aifsn = {1, 2, 3, 4};
  custom.cw[3] = {63, 255};
  const auto q = static_edca_params(phy, custom);
  CHECK(q.cls[0].aifsn == 1);
  CHECK(q.cls[3].cw == CwBounds{63, 255});
}
