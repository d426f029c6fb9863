#include <benchmark/benchmark.h>

#include "vlab/loopback.hpp"
#include "vlab/pacer.hpp"
#include "vlab/pipeline.hpp"
#include "vlab/transport.hpp"
#include "vlab/wire.hpp"

using namespace vlab;

namespace {

std::vector<DataPacket> sample_packets() {
  const auto frame = make_synthetic_frame(1, {1'400'000, 1'920'000, 200'000}, 1);
  std::vector<DataPacket> out;
  for (const auto& seg : segment_frame(frame, kDefaultSegmentPayload)) {
    for (auto& p : packetize_segment(seg, kDefaultPacketPayload, 1)) out.push_back(std::move(p));
  }
  return out;
}

void BM_SyntheticFrame(benchmark::State& state) {
  std::uint32_t id = 0;
  for (auto _ : state) benchmark::DoNotOptimize(make_synthetic_frame(++id, {1'400'000, 1'920'000, 200'000}, 1));
  state.SetBytesProcessed(state.iterations() * 3'520'000);
}
BENCHMARK(BM_SyntheticFrame);

void BM_EncodeData(benchmark::State& state) {
  const auto packets = sample_packets();
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(encode_packet(packets[i++ % packets.size()]));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_EncodeData);

void BM_DecodeDataZeroCopy(benchmark::State& state) {
  std::vector<SharedBytes> wire;
  for (const auto& p : sample_packets()) {
    auto bytes = encode_packet(p);
    wire.push_back(SharedBytes(std::move(bytes)));
  }
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(decode_packet(wire[i++ % wire.size()]));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_DecodeDataZeroCopy);

void BM_PacerReserve(benchmark::State& state) {
  TokenBucketPacer pacer(2 * kGbps, 74);
  Nanos now{0};
  for (auto _ : state) {
    const auto slot = pacer.reserve(now, kDefaultPacketPayload);
    now = slot.end;
    benchmark::DoNotOptimize(slot);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PacerReserve);

void BM_ReceiverFrame(benchmark::State& state) {
  const auto packets = sample_packets();
  for (auto _ : state) {
    ReceiverEndpoint rx(ReceiverConfig{});
    Nanos t{0};
    for (const auto& p : packets) benchmark::DoNotOptimize(rx.on_packet(p, t += Nanos(1000)));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(packets.size()));
}
BENCHMARK(BM_ReceiverFrame)->Unit(benchmark::kMillisecond);

void BM_PipelineOneSecond(benchmark::State& state) {
  auto c = scenario("paper-default");
  c.duration_s = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(run_pipeline(c));
}
BENCHMARK(BM_PipelineOneSecond)->Unit(benchmark::kMillisecond);

void BM_LoopbackLossy(benchmark::State& state) {
  LoopbackConfig c;
  c.frames = 30;
  c.link.loss_rate = 0.01;
  c.receiver.frame_deadline = Nanos(0);
  for (auto _ : state) benchmark::DoNotOptimize(run_loopback(c));
}
BENCHMARK(BM_LoopbackLossy)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
