#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "vlab/netem.hpp"
#include "vlab/transport.hpp"

namespace vlab {

/// Sender and receiver joined by one emulated link in each direction, on a
/// shared virtual clock. Frames are handed to the sender on the fps cadence.
struct LoopbackConfig {
  SenderConfig sender;
  ReceiverConfig receiver;
  LinkModel link;  // used for both directions
  std::uint64_t frames = 300;
  double fps = 30.0;
  SectionSizes sections{1'400'000, 1'920'000, 200'000};
  std::uint64_t seed = 1;
  // Number of distinct payloads generated; frame k reuses payload (k-1) % payload_pool.
  std::uint64_t payload_pool = 8;
  // Forced drop of a forward data packet, applied before the link's own loss.
  std::function<bool(const DataPacket&)> drop;
};

struct LoopbackFrame {
  std::uint32_t frame_id = 0;
  bool completed = false;
  bool intact = false;
  Nanos frame_rx{0};
  Nanos protocol_tx{0};
  std::uint32_t retransmits = 0;
  std::uint32_t nacks = 0;
};

struct LoopbackResult {
  std::vector<LoopbackFrame> frames;
  SenderStats sender;
  ReceiverStats receiver;
  LinkCounters forward;
  LinkCounters back;
  std::uint64_t forced_drops = 0;
  bool horizon_reached = false;
};

LoopbackResult run_loopback(const LoopbackConfig& config);

}  // namespace vlab
