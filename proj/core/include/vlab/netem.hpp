#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vlab/rng.hpp"
#include "vlab/units.hpp"

namespace vlab {

// ---------------------------------------------------------------------------
// Virtual clock and event scheduler
// ---------------------------------------------------------------------------

struct FiredEvent {
  Nanos at;
  std::uint64_t sequence;
};

/// Discrete-event scheduler over a monotone virtual clock. Events at equal
/// times fire in insertion order.
class EventQueue {
 public:
  using Action = std::function<void()>;

  Nanos now() const { return now_; }
  std::size_t pending() const { return heap_.size(); }
  std::uint64_t fired() const { return fired_; }

  /// Throws std::logic_error when `at` is in the past.
  void schedule(Nanos at, Action action);

  /// Runs the next event. Returns nullopt when nothing is left.
  std::optional<FiredEvent> step();

  /// Steps until the queue drains or the next event lies beyond `horizon`.
  void run(std::optional<Nanos> horizon = std::nullopt);

 private:
  struct Entry {
    Nanos at;
    std::uint64_t sequence;
    std::uint32_t slot;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      return a.at != b.at ? a.at > b.at : a.sequence > b.sequence;
    }
  };

  Nanos now_{0};
  std::uint64_t next_sequence_ = 0;
  std::uint64_t fired_ = 0;
  std::vector<Entry> heap_;
  std::vector<Action> actions_;
  std::vector<std::uint32_t> free_slots_;
};

// ---------------------------------------------------------------------------
// Link and node stage models
// ---------------------------------------------------------------------------

struct LinkModel {
  std::uint64_t bandwidth_bps = 10 * 1'000'000'000ULL;
  double distance_km = 0.0;
  Nanos propagation_per_km{5'000};
  std::uint32_t hops = 1;
  Nanos switching_min{5'000};
  Nanos switching_max{10'000};
  double loss_rate = 0.0;
  double reorder_rate = 0.0;
  Nanos reorder_delay{50'000};

  Nanos propagation() const;
  /// Empty when valid; otherwise one message per violated constraint.
  std::vector<std::string> check() const;
};

/// Per-node kernel and NIC delays. The load factor scales the receive side
/// only.
struct NodeStageModel {
  Nanos tx_sw{0};
  Nanos tx_hw{0};
  Nanos rx_sw{0};
  Nanos rx_hw{0};
  double load_factor = 1.0;

  Nanos effective_rx_sw() const;
  Nanos effective_rx_hw() const;
  std::vector<std::string> check() const;
};

struct StageBreakdown {
  Nanos tx_sw{0};
  Nanos tx_hw{0};
  Nanos queueing{0};
  Nanos serialization{0};
  Nanos propagation{0};
  Nanos switching{0};
  Nanos reorder{0};
  Nanos rx_hw{0};
  Nanos rx_sw{0};

  Nanos total() const {
    return tx_sw + tx_hw + queueing + serialization + propagation + switching + reorder + rx_hw + rx_sw;
  }
};

struct PacketDelay {
  bool lost = false;
  StageBreakdown stages;
};

/// The independent random streams one link direction draws from.
struct LinkStreams {
  SeedStream loss;
  SeedStream switching;
  SeedStream reorder;

  LinkStreams() = default;
  LinkStreams(std::uint64_t seed, const std::string& link_name)
      : loss(seed, link_name + "/loss"),
        switching(seed, link_name + "/switching"),
        reorder(seed, link_name + "/reorder") {}
};

/// Delay of one packet across one hop with an idle link: loss is drawn
/// first, then the per-stage delays.
PacketDelay packet_delay(const LinkModel& link, const NodeStageModel& node_tx, const NodeStageModel& node_rx,
                         std::size_t packet_bytes, LinkStreams& streams);

struct LinkCounters {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t lost = 0;
};

/// One direction of a link with a single FIFO serializer: a packet starts
/// serializing when the previous one has finished.
class Link {
 public:
  Link(std::string name, LinkModel model, std::uint64_t seed);

  /// `departure` is when the packet enters the sender's kernel (true time).
  PacketDelay transmit(Nanos departure, std::size_t wire_bytes, const NodeStageModel& node_tx,
                       const NodeStageModel& node_rx);

  const std::string& name() const { return name_; }
  const LinkModel& model() const { return model_; }
  const LinkCounters& counters() const { return counters_; }

 private:
  std::string name_;
  LinkModel model_;
  LinkStreams streams_;
  Nanos busy_until_{0};
  LinkCounters counters_;
};

}  // namespace vlab
