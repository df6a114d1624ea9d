#include "ddpp/protocol.hpp"

#include <bit>
#include <cstring>
#include <limits>
#include <numeric>
#include <string>

namespace ddpp {

static_assert(std::endian::native == std::endian::little, "wire codec assumes a little-endian host");

namespace {

constexpr char kBatchMagic[4] = {'D', 'D', 'P', 'B'};
constexpr char kFeedbackMagic[4] = {'D', 'D', 'P', 'F'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out_.insert(out_.end(), p, p + sizeof(T));
  }
  void magic(const char (&m)[4]) { out_.insert(out_.end(), m, m + 4); }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  void magic(const char (&m)[4]) {
    need(4, "magic");
    if (std::memcmp(in_.data() + pos_, m, 4) != 0) throw DecodeError(pos_, "bad magic");
    pos_ += 4;
  }

  void version() {
    const std::size_t at = pos_;
    if (get<std::uint16_t>("version") != kWireVersion) throw DecodeError(at, "unsupported version");
  }

  // Guards a following run of count items of size bytes each.
  void expect_items(std::uint64_t count, std::size_t size, const char* what) {
    const std::size_t left = in_.size() - pos_;
    if (count > left / size) throw DecodeError(pos_, std::string("truncated ") + what);
  }

  void finish() const {
    if (pos_ != in_.size()) throw DecodeError(pos_, "trailing bytes");
  }

  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (in_.size() - pos_ < n) throw DecodeError(pos_, std::string("truncated ") + what);
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

Bytes encode_batch(const SampleBatch& b) {
  if (static_cast<Index>(b.local_indices.size()) != b.vectors.rows())
    throw Error(ErrorKind::invalid_input, "encode_batch: index count differs from vector rows");
  Writer w;
  w.magic(kBatchMagic);
  w.put<std::uint16_t>(kWireVersion);
  w.put<std::uint32_t>(b.source_id);
  w.put<std::uint32_t>(b.interval);
  w.put<std::uint64_t>(b.local_indices.size());
  w.put<std::uint64_t>(static_cast<std::uint64_t>(b.vectors.cols()));
  for (Index i : b.local_indices) w.put<std::uint64_t>(static_cast<std::uint64_t>(i));
  for (Index r = 0; r < b.vectors.rows(); ++r)
    for (Index c = 0; c < b.vectors.cols(); ++c) w.put<double>(b.vectors(r, c));
  return w.take();
}

SampleBatch decode_batch(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.magic(kBatchMagic);
  r.version();
  SampleBatch b;
  b.source_id = r.get<std::uint32_t>("source_id");
  b.interval = r.get<std::uint32_t>("interval");
  const auto count = r.get<std::uint64_t>("count");
  const auto m = r.get<std::uint64_t>("m");
  r.expect_items(count, sizeof(std::uint64_t), "indices");
  b.local_indices.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::size_t at = r.pos();
    const auto idx = r.get<std::uint64_t>("index");
    if (idx > static_cast<std::uint64_t>(std::numeric_limits<Index>::max())) throw DecodeError(at, "index overflow");
    b.local_indices.push_back(static_cast<Index>(idx));
  }
  if (m != 0) r.expect_items(count, sizeof(double) * m, "vectors");
  b.vectors.resize(static_cast<Index>(count), static_cast<Index>(m));
  for (Index row = 0; row < b.vectors.rows(); ++row)
    for (Index c = 0; c < b.vectors.cols(); ++c) b.vectors(row, c) = r.get<double>("vector");
  r.finish();
  return b;
}

Bytes encode_feedback(const FeedbackMsg& f) {
  f.packet.validate();
  const CsiPacket& p = f.packet;
  Writer w;
  w.magic(kFeedbackMagic);
  w.put<std::uint16_t>(kWireVersion);
  w.put<std::uint32_t>(f.target_source);
  w.put<std::uint32_t>(f.interval);
  w.put<std::uint64_t>(static_cast<std::uint64_t>(p.dims));
  w.put<std::uint64_t>(static_cast<std::uint64_t>(p.r0()));
  w.put<std::uint64_t>(static_cast<std::uint64_t>(p.residual_rank));
  w.put<std::uint64_t>(static_cast<std::uint64_t>(p.element_count));
  for (Index d : p.selected_dims) w.put<std::uint64_t>(static_cast<std::uint64_t>(d));
  for (double v : p.principal_block) w.put<double>(v);
  for (double v : p.residual_values) w.put<double>(v);
  for (double v : p.residual_vectors) w.put<double>(v);
  return w.take();
}

FeedbackMsg decode_feedback(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.magic(kFeedbackMagic);
  r.version();
  FeedbackMsg f;
  f.target_source = r.get<std::uint32_t>("target_source");
  f.interval = r.get<std::uint32_t>("interval");
  const std::size_t header_at = r.pos();
  const auto m = r.get<std::uint64_t>("m");
  const auto r0 = r.get<std::uint64_t>("r0");
  const auto r1 = r.get<std::uint64_t>("r1");
  const auto elements = r.get<std::uint64_t>("element_count");
  if (r0 > m || r1 > m) throw DecodeError(header_at, "packet ranks exceed m");
  const std::uint64_t expected = (r0 * r0 + r0) / 2 + r1 * m;
  if (elements != expected) throw DecodeError(header_at, "element_count mismatch with declared r0, r1, m");

  CsiPacket& p = f.packet;
  p.dims = static_cast<Index>(m);
  p.residual_rank = static_cast<Index>(r1);
  p.element_count = static_cast<std::int64_t>(elements);
  r.expect_items(r0, sizeof(std::uint64_t), "dims");
  for (std::uint64_t i = 0; i < r0; ++i) {
    const std::size_t at = r.pos();
    const auto d = r.get<std::uint64_t>("dim");
    if (d >= m || (!p.selected_dims.empty() && static_cast<Index>(d) <= p.selected_dims.back()))
      throw DecodeError(at, "selected dimensions must be increasing and below m");
    p.selected_dims.push_back(static_cast<Index>(d));
  }
  const std::uint64_t floats = (r0 * r0 + r0) / 2 + r1 + r1 * m;
  r.expect_items(floats, sizeof(double), "payload");
  p.principal_block.resize((r0 * r0 + r0) / 2);
  for (double& v : p.principal_block) v = r.get<double>("block");
  p.residual_values.resize(r1);
  for (double& v : p.residual_values) v = r.get<double>("value");
  p.residual_vectors.resize(r1 * m);
  for (double& v : p.residual_vectors) v = r.get<double>("vector");
  r.finish();
  return f;
}

BandwidthLedger::BandwidthLedger(std::size_t n_sources, double downlink_cap)
    : downlink_cap_(downlink_cap),
      uplink_elements_(n_sources, 0),
      downlink_elements_(n_sources, 0),
      sent_(n_sources) {}

void BandwidthLedger::check_source(std::uint32_t source) const {
  if (source >= uplink_elements_.size())
    throw Error(ErrorKind::invalid_input, "ledger: unknown source " + std::to_string(source));
}

void BandwidthLedger::record(Direction dir, std::uint32_t source, std::uint32_t interval, std::int64_t elements,
                             std::int64_t bytes) {
  check_source(source);
  if (elements < 0 || bytes < 0) throw Error(ErrorKind::invalid_input, "ledger: negative count");
  switch (dir) {
    case Direction::uplink:
      uplink_elements_[source] += elements;
      uplink_bytes_ += bytes;
      break;
    case Direction::downlink: {
      auto& used = interval_downlink_[{source, interval}];
      if (static_cast<double>(used + elements) > downlink_cap_)
        throw BudgetViolation(source, interval,
                              "downlink of " + std::to_string(used + elements) + " elements exceeds cap " +
                                  std::to_string(downlink_cap_));
      used += elements;
      downlink_elements_[source] += elements;
      downlink_bytes_ += bytes;
      break;
    }
    case Direction::probe:
      probe_elements_ += elements;
      uplink_bytes_ += bytes;
      break;
  }
}

void BandwidthLedger::record_uplink_indices(std::uint32_t source, std::uint32_t interval, const IndexList& indices) {
  check_source(source);
  for (Index i : indices)
    if (!sent_[source].insert(i).second)
      throw BudgetViolation(source, interval, "local sample " + std::to_string(i) + " transmitted twice");
}

std::int64_t BandwidthLedger::uplink_total() const {
  return std::accumulate(uplink_elements_.begin(), uplink_elements_.end(), std::int64_t{0});
}

std::int64_t BandwidthLedger::downlink_total() const {
  return std::accumulate(downlink_elements_.begin(), downlink_elements_.end(), std::int64_t{0});
}

std::int64_t BandwidthLedger::max_interval_downlink() const {
  std::int64_t out = 0;
  for (const auto& [key, v] : interval_downlink_) out = std::max(out, v);
  return out;
}

}  // namespace ddpp
