#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "ddpp/csi.hpp"

namespace ddpp {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint16_t kWireVersion = 1;

/// Samples a source transmits to the center in one interval. Indices are
/// local to the source; only the center knows the global mapping.
struct SampleBatch {
  std::uint32_t source_id = 0;
  std::uint32_t interval = 0;
  IndexList local_indices;
  Matrix vectors;  // one row per index
};

/// Compressed projector sent from the center to one source.
struct FeedbackMsg {
  std::uint32_t target_source = 0;
  std::uint32_t interval = 0;
  CsiPacket packet;
};

// Frame "DDPB": magic, u16 version, u32 source_id, u32 interval, u64 count,
// u64 m, count x u64 index, count*m x f64 row-major. Little-endian.
Bytes encode_batch(const SampleBatch& b);
SampleBatch decode_batch(std::span<const std::uint8_t> bytes);

// Frame "DDPF": magic, u16 version, u32 target_source, u32 interval, u64 m,
// u64 r0, u64 r1, u64 element_count, r0 x u64 dims, (r0^2+r0)/2 x f64 block,
// r1 x f64 values, r1*m x f64 vectors row-major. Little-endian.
Bytes encode_feedback(const FeedbackMsg& f);
FeedbackMsg decode_feedback(std::span<const std::uint8_t> bytes);

enum class Direction { uplink, downlink, probe };

/// Per-link element and byte counters.
///
/// Uplink carries sample vectors, downlink carries CSI packets, probe carries
/// scalar diversity reports used by some baselines. Downlink elements per
/// (source, interval) are capped; a source may never send the same local
/// index twice.
class BandwidthLedger {
 public:
  BandwidthLedger() = default;
  BandwidthLedger(std::size_t n_sources, double downlink_cap);

  void record(Direction dir, std::uint32_t source, std::uint32_t interval, std::int64_t elements,
              std::int64_t bytes);

  /// Registers transmitted local indices; throws BudgetViolation on a repeat.
  void record_uplink_indices(std::uint32_t source, std::uint32_t interval, const IndexList& indices);

  std::size_t n_sources() const { return uplink_elements_.size(); }
  double downlink_cap() const { return downlink_cap_; }
  const std::vector<std::int64_t>& uplink_elements() const { return uplink_elements_; }
  const std::vector<std::int64_t>& downlink_elements() const { return downlink_elements_; }
  std::int64_t uplink_total() const;
  std::int64_t downlink_total() const;
  std::int64_t probe_total() const { return probe_elements_; }
  std::int64_t uplink_bytes() const { return uplink_bytes_; }
  std::int64_t downlink_bytes() const { return downlink_bytes_; }
  std::int64_t max_interval_downlink() const;

 private:
  void check_source(std::uint32_t source) const;

  double downlink_cap_ = 0.0;
  std::vector<std::int64_t> uplink_elements_;
  std::vector<std::int64_t> downlink_elements_;
  std::int64_t probe_elements_ = 0;
  std::int64_t uplink_bytes_ = 0;
  std::int64_t downlink_bytes_ = 0;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::int64_t> interval_downlink_;
  std::vector<std::set<Index>> sent_;
};

}  // namespace ddpp
