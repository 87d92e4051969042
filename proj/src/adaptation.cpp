#include "hmac/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hmac {

WeightConfig::WeightConfig(double w_max, PerClass<double> w) : w_max_(w_max), w_(w) {
  const bool ordered = w_max_ > w_[0] && w_[0] > w_[1] && w_[1] > w_[2] && w_[2] > w_[3] && w_[3] > 0.0;
  if (!ordered) {
    throw ConfigError("weights must satisfy w_max > w0 > w1 > w2 > w3 > 0");
  }
}

void PhyParams::validate() const {
  if (slot_time <= 0 || sifs <= 0 || t_ack <= 0 || !(data_rate > 0.0) || mpdu_bits <= 0 ||
      phy_overhead_bits < 0) {
    throw ConfigError("PHY parameters must be strictly positive");
  }
}

ClassAdaptState ClassAdaptState::with_defaults(int cls, CwBounds defaults) {
  ClassAdaptState s;
  s.class_index = cls;
  s.cw_min = s.cw_min_default = defaults.cw_min;
  s.cw_max = s.cw_max_default = defaults.cw_max;
  return s;
}

ClassAdaptState update_collision_ewma(ClassAdaptState state, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("EWMA smoothing factor must lie in [0, 1], got " + std::to_string(alpha));
  }
  double current = 0.0;
  if (state.transmissions_this_period > 0) {
    current = static_cast<double>(state.collisions_this_period) /
              static_cast<double>(state.transmissions_this_period);
  }
  current = std::clamp(current, 0.0, 1.0);
  state.p_col = std::clamp((1.0 - alpha) * current + alpha * state.p_col, 0.0, 1.0);
  state.collisions_this_period = 0;
  state.transmissions_this_period = 0;
  return state;
}

AccessRatios access_ratios(const PerClass<double>& x, const PerClass<double>& p_col,
                           const WeightConfig& weights) {
  constexpr double av = kAccessAverage;
  AccessRatios r;
  auto& cx = r.cx;
  for (int i = 0; i < kNumClasses; ++i) cx[i] = x[i] * (1.0 + p_col[i]) * 100.0;

  if (cx[0] < av) {
    cx[0] = av;
    r.clamped[0] = true;
  }
  if (cx[1] > cx[0] || cx[1] < cx[2] || cx[1] < cx[3]) {
    cx[1] = av;
    r.clamped[1] = true;
  }
  if (cx[2] > cx[0] || cx[2] > cx[1] || cx[2] < cx[3]) {
    cx[2] = av;
    r.clamped[2] = true;
  }
  if (cx[3] > cx[0] || cx[3] > cx[1] || cx[3] > cx[2]) {
    cx[3] = av;
    r.clamped[3] = true;
  }
  for (int i = 0; i < kNumClasses; ++i) r.ar[i] = weights[i] * cx[i];
  return r;
}

Tick transmission_time(const PhyParams& phy) {
  const double bits = static_cast<double>(phy.mpdu_bits + phy.phy_overhead_bits);
  const auto t_data = static_cast<Tick>(std::ceil(bits / phy.data_rate));
  return t_data + 2 * phy.sifs + phy.t_ack;
}

TxopLimits txop_limits(const PerClass<double>& ar, Tick tr, Tick sifs, const PerClass<double>& x,
                       TxopMode mode, int burst_budget) {
  if (tr <= 0) throw ConfigError("per-frame transmission time must be positive");
  TxopLimits out;
  if (mode == TxopMode::raw) {
    for (int i = 0; i < kNumClasses; ++i) {
      out.limit[i] = static_cast<Tick>(std::floor(ar[i] * static_cast<double>(tr))) - sifs;
    }
  } else {
    if (burst_budget < kNumClasses) throw ConfigError("burst budget must be at least 4 frames");
    const double total = ar[0] + ar[1] + ar[2] + ar[3];
    if (total <= 0.0) {
      out.packets.fill(1);
      out.limit.fill(tr - sifs);
      return out;
    }
    for (int i = 0; i < kNumClasses; ++i) {
      int n = static_cast<int>(std::lround(ar[i] / total * burst_budget));
      if (ar[i] > 0.0) n = std::max(n, 1);
      out.packets[i] = n;
      out.limit[i] = n > 0 ? static_cast<Tick>(n) * tr - sifs : 0;
    }
  }
  for (int i = 1; i < kNumClasses; ++i) {
    if (x[i - 1] == 0.0) out.limit[i] = out.limit[i - 1];
  }
  return out;
}

PerClass<int> aifsn_values(const WeightConfig& weights, const PerClass<double>& x) {
  PerClass<int> aifsn{};
  const double total = weights.sum();
  for (int i = 0; i < kNumClasses; ++i) aifsn[i] = static_cast<int>(std::floor(total / weights[i]));
  for (int i = 1; i < kNumClasses; ++i) {
    if (x[i - 1] == 0.0) aifsn[i] = aifsn[i - 1];
  }
  return aifsn;
}

Tick aifs_duration(int aifsn, const PhyParams& phy) { return phy.sifs + aifsn * phy.slot_time; }

PerClass<double> priority_factors(const WeightConfig& weights) {
  PerClass<double> pf{};
  const double total = weights.sum();
  for (int i = 0; i < kNumClasses; ++i) pf[i] = 1.0 - weights[i] / total;
  return pf;
}

double average_collision(const PerClass<ClassAdaptState>& states) {
  double sum = 0.0;
  for (const auto& s : states) sum += s.p_col;
  return sum / kNumClasses;
}

PerClass<CwBounds> adapt_contention_windows(const PerClass<ClassAdaptState>& states, double t_col,
                                            const PerClass<double>& x) {
  if (!(t_col > 0.0 && t_col < 1.0)) throw ConfigError("collision threshold must lie in (0, 1)");

  PerClass<CwBounds> old{};
  for (int i = 0; i < kNumClasses; ++i) old[i] = {states[i].cw_min_default, states[i].cw_max_default};

  PerClass<CwBounds> next = old;
  if (average_collision(states) >= t_col) {
    for (int i = 0; i < kNumClasses - 1; ++i) {
      next[i].cw_max = 2 * (old[i].cw_max - old[i].cw_min);
      next[i + 1].cw_min = next[i].cw_max;
    }
    next[0].cw_min = old[0].cw_min;
    next[3].cw_max = old[3].cw_max;
  }
  for (int i = 1; i < kNumClasses; ++i) {
    if (x[i - 1] == 0.0) next[i] = next[i - 1];
  }
  for (auto& b : next) {
    b.cw_max = std::max(b.cw_max, 1);
    b.cw_min = std::clamp(b.cw_min, 1, b.cw_max);
  }
  return next;
}

Tick backoff_duration(Protocol protocol, const BackoffInputs& in, const PhyParams& phy) {
  const double slots = static_cast<double>(in.draw) * static_cast<double>(phy.slot_time);
  if (protocol == Protocol::edca) {
    return static_cast<Tick>(std::floor(std::ldexp(slots, in.k)));
  }
  const int exponent = in.exponent == PfExponent::class_and_retry ? 2 + in.cls + in.k : 2 + in.k;
  // Guard against products such as 0.6^2 * 100 landing a hair below an integer.
  return static_cast<Tick>(std::floor(std::pow(in.pf, exponent) * slots + 1e-9));
}

int grow_cw(int cw, int cw_max) { return std::min(2 * cw + 1, cw_max); }

MacParameterSet static_edca_params(const PhyParams& phy, const EdcaTable& table) {
  MacParameterSet params;
  const Tick tr = transmission_time(phy);
  for (int i = 0; i < kNumClasses; ++i) {
    auto& c = params.cls[i];
    c.aifsn = table.aifsn[i];
    c.aifs = aifs_duration(c.aifsn, phy);
    c.cw = table.cw[i];
    c.txop_limit = table.txop_limit[i] > 0 ? table.txop_limit[i] : tr - phy.sifs;
    c.pf = 1.0;
  }
  return params;
}

}  // namespace hmac
