#include "hmac/priority_queues.hpp"

#include <algorithm>

namespace hmac {

bool entry_before(const ClassQueue::Entry& a, const ClassQueue::Entry& b) {
  if (a.packet.dui != b.packet.dui) return a.packet.dui < b.packet.dui;
  if (a.packet.spi != b.packet.spi) return a.packet.spi < b.packet.spi;
  return a.seq < b.seq;
}

std::size_t ClassQueue::insert(Packet packet, std::uint64_t seq) {
  Entry entry{std::move(packet), seq};
  if (discipline_ == QueueDiscipline::fifo) {
    entries_.push_back(std::move(entry));
    return 0;
  }
  std::size_t comparisons = 0;
  auto pos = std::upper_bound(entries_.begin(), entries_.end(), entry,
                              [&comparisons](const Entry& a, const Entry& b) {
                                ++comparisons;
                                return entry_before(a, b);
                              });
  entries_.insert(pos, std::move(entry));
  return comparisons;
}

Packet ClassQueue::pop_front() {
  Packet p = std::move(entries_.front().packet);
  entries_.erase(entries_.begin());
  return p;
}

Packet ClassQueue::pop_back() {
  Packet p = std::move(entries_.back().packet);
  entries_.pop_back();
  return p;
}

QueueSet::QueueSet(std::size_t capacity, QueueDiscipline discipline)
    : queues_{ClassQueue(capacity, discipline), ClassQueue(capacity, discipline), ClassQueue(capacity, discipline),
              ClassQueue(capacity, discipline)} {}

std::size_t QueueSet::total_size() const {
  std::size_t n = 0;
  for (const auto& q : queues_) n += q.size();
  return n;
}

PerClass<std::size_t> QueueSet::lengths() const {
  PerClass<std::size_t> out{};
  for (int i = 0; i < kNumClasses; ++i) out[i] = queues_[i].size();
  return out;
}

EnqueueResult enqueue(QueueSet& qs, Packet packet) {
  const int cls = packet.queue_class();
  ClassQueue& q = qs.queue(cls);
  EnqueueResult result;

  if (q.full()) {
    qs.tail_drop_count[cls] += 1;
    if (q.empty() || q.discipline() == QueueDiscipline::fifo || !(packet.dui < q.back().dui)) return result;
    result.evicted = q.pop_back();
  }
  result.comparisons = q.insert(std::move(packet), qs.next_seq());
  result.accepted = true;
  qs.enqueue_count[cls] += 1;
  return result;
}

PerClass<double> queue_shares(const QueueSet& qs) {
  PerClass<double> x{};
  const auto total = static_cast<double>(qs.total_size());
  if (total == 0.0) return x;
  for (int i = 0; i < kNumClasses; ++i) x[i] = static_cast<double>(qs.queue(i).size()) / total;
  return x;
}

std::optional<int> select_service_queue(const QueueSet& qs, PerClass<bool> eligible) {
  std::optional<int> best;
  for (int i = 0; i < kNumClasses; ++i) {
    if (!eligible[i] || qs.queue(i).empty()) continue;
    if (!best) {
      best = i;
      continue;
    }
    const Packet& cand = qs.queue(i).front();
    const Packet& cur = qs.queue(*best).front();
    if (cand.dui < cur.dui || (cand.dui == cur.dui && cand.spi < cur.spi)) best = i;
  }
  return best;
}

std::size_t txop_frame_count(Tick txop_limit, Tick per_packet_time, Tick sifs_allowance) {
  if (txop_limit <= 0 || per_packet_time <= 0) return 0;
  return static_cast<std::size_t>((txop_limit + sifs_allowance) / per_packet_time);
}

std::vector<Packet> dequeue_burst(QueueSet& qs, int cls, Tick txop_limit, Tick per_packet_time,
                                  Tick sifs_allowance) {
  std::vector<Packet> burst;
  ClassQueue& q = qs.queue(cls);
  if (q.empty() || txop_limit <= 0) return burst;
  const std::size_t frames =
      std::max<std::size_t>(1, txop_frame_count(txop_limit, per_packet_time, sifs_allowance));
  while (burst.size() < frames && !q.empty()) burst.push_back(q.pop_front());
  return burst;
}

PerClass<std::int64_t> drop_expired(QueueSet& qs, Tick now, std::vector<Packet>* dropped) {
  PerClass<std::int64_t> counts{};
  std::vector<Packet> sink;
  for (int i = 0; i < kNumClasses; ++i) {
    const std::size_t before = sink.size();
    qs.queue(i).remove_if([now](const Packet& p) { return is_expired_at(p, now); }, sink);
    counts[i] = static_cast<std::int64_t>(sink.size() - before);
    qs.expiry_drop_count[i] += counts[i];
  }
  if (dropped != nullptr) {
    for (auto& p : sink) dropped->push_back(std::move(p));
  }
  return counts;
}

}  // namespace hmac
