#pragma once

// Dynamic MAC parameter engine (collision EWMA, access ratios, TXOP limits,
// AIFSN, contention windows, priority factors and backoff) together with the
// static EDCA baseline table.

#include <cstdint>

#include "hmac/types.hpp"

namespace hmac {

/// Class weights, strictly decreasing from UP to LP and bounded by w_max.
class WeightConfig {
 public:
  WeightConfig() = default;
  /// Throws ConfigError unless w_max > w0 > w1 > w2 > w3 > 0.
  WeightConfig(double w_max, PerClass<double> w);

  double w_max() const { return w_max_; }
  const PerClass<double>& w() const { return w_; }
  double operator[](int i) const { return w_[static_cast<std::size_t>(i)]; }
  double sum() const { return w_[0] + w_[1] + w_[2] + w_[3]; }

 private:
  double w_max_ = 5.0;
  PerClass<double> w_{4.0, 3.0, 2.0, 1.0};
};

struct PhyParams {
  Tick slot_time = 20;
  Tick sifs = 10;
  Tick t_ack = 56;
  double data_rate = 2.0;  // bits per tick (2 Mbps at 1 tick = 1 us)
  std::int64_t mpdu_bits = 8000;
  std::int64_t phy_overhead_bits = 0;

  void validate() const;
};

struct CwBounds {
  int cw_min = 1;
  int cw_max = 1;
  friend bool operator==(const CwBounds&, const CwBounds&) = default;
};

inline constexpr PerClass<CwBounds> kDefaultCwBounds{
    CwBounds{7, 15}, CwBounds{15, 31}, CwBounds{31, 1023}, CwBounds{31, 1023}};

struct ClassAdaptState {
  int class_index = 0;
  double p_col = 0.0;
  std::int64_t collisions_this_period = 0;
  std::int64_t transmissions_this_period = 0;
  int cw_min = 7;
  int cw_max = 15;
  int cw_min_default = 7;
  int cw_max_default = 15;
  int retry_k = 0;

  static ClassAdaptState with_defaults(int cls, CwBounds defaults);
};

struct ClassParams {
  int aifsn = 2;
  Tick aifs = 0;
  Tick txop_limit = 0;
  double pf = 0.0;
  double access_ratio = 0.0;
  double cx = 0.0;
  CwBounds cw{};
};

struct MacParameterSet {
  PerClass<ClassParams> cls{};
};

/// Smoothed collision ratio update over one period; resets the period
/// counters. Throws ConfigError for alpha outside [0, 1].
ClassAdaptState update_collision_ewma(ClassAdaptState state, double alpha);

inline constexpr double kAccessAverage = 100.0 / kNumClasses;

struct AccessRatios {
  PerClass<double> cx{};
  PerClass<double> ar{};
  PerClass<bool> clamped{};  // clamp that replaced cx_i with the average share
};

/// Access ratios from queue shares, smoothed collision ratios and weights,
/// with the anti-reversal clamps applied in class order.
AccessRatios access_ratios(const PerClass<double>& x, const PerClass<double>& p_col,
                           const WeightConfig& weights);

/// Time to send one data frame and receive its ACK: T_data + 2*SIFS + T_ACK.
Tick transmission_time(const PhyParams& phy);

enum class TxopMode { normalized, raw };

struct TxopLimits {
  PerClass<Tick> limit{};
  PerClass<int> packets{};  // frames per burst (normalized mode), before inheritance
};

TxopLimits txop_limits(const PerClass<double>& ar, Tick tr, Tick sifs, const PerClass<double>& x,
                       TxopMode mode, int burst_budget);

PerClass<int> aifsn_values(const WeightConfig& weights, const PerClass<double>& x);
Tick aifs_duration(int aifsn, const PhyParams& phy);

PerClass<double> priority_factors(const WeightConfig& weights);

/// Mean of the per-class smoothed collision ratios.
double average_collision(const PerClass<ClassAdaptState>& states);

/// Contention window bounds for the next period. Above the collision threshold
/// windows grow and chain across classes; otherwise they stay at the defaults.
/// Classes whose higher neighbour has no waiting packets then inherit that
/// neighbour's bounds.
PerClass<CwBounds> adapt_contention_windows(const PerClass<ClassAdaptState>& states, double t_col,
                                            const PerClass<double>& x);

enum class PfExponent { class_and_retry, retry_only };

struct BackoffInputs {
  int cls = 0;
  int k = 0;
  int draw = 0;
  double pf = 1.0;
  PfExponent exponent = PfExponent::class_and_retry;
};

/// EDCA: floor(2^k * draw * slot). H-MAC: floor(PF^(2+i+k) * draw * slot),
/// or PF^(2+k) with the retry_only exponent.
Tick backoff_duration(Protocol protocol, const BackoffInputs& in, const PhyParams& phy);

/// Next contention window after a failed attempt: doubled (2*cw + 1), capped at cw_max.
int grow_cw(int cw, int cw_max);

struct EdcaTable {
  PerClass<int> aifsn{2, 2, 3, 7};
  PerClass<CwBounds> cw = kDefaultCwBounds;
  // Non-positive entries mean one frame: Tr - SIFS.
  PerClass<Tick> txop_limit{3008, 6016, 0, 0};
};

/// Baseline table: UP->AC_VO, HP->AC_VI, MP->AC_BE, LP->AC_BK.
MacParameterSet static_edca_params(const PhyParams& phy, const EdcaTable& table = {});

}  // namespace hmac
