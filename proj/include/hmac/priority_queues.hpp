#pragma once

// Four per-node class queues (UP, HP, MP, LP), each kept in ascending
// (dui, spi, enqueue sequence) order.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "hmac/types.hpp"
#include "hmac/urgency.hpp"

namespace hmac {

inline constexpr std::size_t kDefaultQueueCapacity = 50;

/// urgency: ascending (dui, spi, seq). fifo: arrival order, as plain EDCA queues.
enum class QueueDiscipline { urgency, fifo };

class ClassQueue {
 public:
  struct Entry {
    Packet packet;
    std::uint64_t seq = 0;
  };

  explicit ClassQueue(std::size_t capacity = kDefaultQueueCapacity,
                      QueueDiscipline discipline = QueueDiscipline::urgency)
      : capacity_(capacity), discipline_(discipline) {}

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t capacity() const { return capacity_; }
  bool full() const { return entries_.size() >= capacity_; }
  QueueDiscipline discipline() const { return discipline_; }

  const Packet& front() const { return entries_.front().packet; }
  const Packet& back() const { return entries_.back().packet; }
  const std::vector<Entry>& entries() const { return entries_; }

  /// Binary-search insert (append under fifo). Returns the number of key comparisons made.
  std::size_t insert(Packet packet, std::uint64_t seq);
  Packet pop_front();
  Packet pop_back();

  /// Removes every packet matching `pred`, appending them to `out` in queue order.
  template <class Pred>
  std::size_t remove_if(Pred pred, std::vector<Packet>& out) {
    std::size_t removed = 0;
    std::vector<Entry> kept;
    kept.reserve(entries_.size());
    for (auto& e : entries_) {
      if (pred(e.packet)) {
        out.push_back(std::move(e.packet));
        ++removed;
      } else {
        kept.push_back(std::move(e));
      }
    }
    entries_ = std::move(kept);
    return removed;
  }

 private:
  std::vector<Entry> entries_;
  std::size_t capacity_;
  QueueDiscipline discipline_;
};

/// Strict ordering key for queued packets.
bool entry_before(const ClassQueue::Entry& a, const ClassQueue::Entry& b);

struct EnqueueResult {
  bool accepted = false;
  std::optional<Packet> evicted;  // tail packet pushed out to make room
  std::size_t comparisons = 0;
};

class QueueSet {
 public:
  explicit QueueSet(std::size_t capacity = kDefaultQueueCapacity,
                    QueueDiscipline discipline = QueueDiscipline::urgency);

  const ClassQueue& queue(int cls) const { return queues_.at(static_cast<std::size_t>(cls)); }
  ClassQueue& queue(int cls) { return queues_.at(static_cast<std::size_t>(cls)); }

  std::size_t total_size() const;
  PerClass<std::size_t> lengths() const;

  PerClass<std::int64_t> enqueue_count{};
  PerClass<std::int64_t> tail_drop_count{};
  PerClass<std::int64_t> expiry_drop_count{};

  std::uint64_t next_seq() { return seq_++; }

 private:
  PerClass<ClassQueue> queues_;
  std::uint64_t seq_ = 0;
};

/// Ordered insert into queue (qf ? UP : spi). When that queue is full the
/// incoming packet is rejected unless its DUI is strictly lower than the tail's,
/// in which case the tail is evicted; a full fifo queue always rejects. Either
/// way the class tail-drop count grows.
EnqueueResult enqueue(QueueSet& qs, Packet packet);

/// Share of waiting packets per queue; all zero when every queue is empty.
PerClass<double> queue_shares(const QueueSet& qs);

/// Queue whose head-of-line packet has the lowest DUI, ties going to the lower
/// HOL spi and then the lower class index. Only queues with `eligible` set are
/// considered.
std::optional<int> select_service_queue(const QueueSet& qs,
                                        PerClass<bool> eligible = {true, true, true, true});

/// Number of back-to-back frames a TXOP admits: the largest n with
/// n * per_packet_time <= txop_limit + sifs_allowance.
std::size_t txop_frame_count(Tick txop_limit, Tick per_packet_time, Tick sifs_allowance);

/// Pops head-of-line packets that fit inside the TXOP. A positive TXOP always
/// admits at least one frame.
std::vector<Packet> dequeue_burst(QueueSet& qs, int cls, Tick txop_limit, Tick per_packet_time,
                                  Tick sifs_allowance = 0);

/// Removes packets whose lifetime has run out while waiting. Removed packets
/// are appended to `dropped` when given.
PerClass<std::int64_t> drop_expired(QueueSet& qs, Tick now, std::vector<Packet>* dropped = nullptr);

}  // namespace hmac
