#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "vlab/socket_runner.hpp"
#include "vlab/udp.hpp"

using namespace vlab;
namespace fs = std::filesystem;

TEST(Udp, AddressParsing) {
  const auto a = UdpAddress::parse("127.0.0.1:47100");
  EXPECT_EQ(a.port(), 47100);
  EXPECT_EQ(a.to_string(), "127.0.0.1:47100");
  EXPECT_EQ(UdpAddress::parse("localhost:9"), UdpAddress::parse("127.0.0.1:9"));
  EXPECT_EQ(a.with_port_offset(3).port(), 47103);
  EXPECT_THROW(UdpAddress::parse("127.0.0.1"), Error);
  EXPECT_THROW(UdpAddress::parse("127.0.0.1:99999"), Error);
  EXPECT_THROW(UdpAddress::parse("127.0.0.1:0"), Error);
  EXPECT_THROW(UdpAddress::parse("not-a-host:1"), Error);
}

TEST(Udp, DatagramRoundTrip) {
  UdpSocket a(UdpAddress::parse("127.0.0.1:47390"));
  UdpSocket b(UdpAddress::parse("127.0.0.1:47391"));
  const std::vector<std::uint8_t> bytes{1, 2, 3, 4};
  ASSERT_TRUE(a.send_to(bytes, b.local_address()));
  const auto got = b.receive(Nanos(1'000'000'000));
  ASSERT_TRUE(got.has_value());
  EXPECT_EQ(got->bytes, bytes);
  EXPECT_EQ(got->from, a.local_address());
  EXPECT_FALSE(b.receive(Nanos(10'000'000)).has_value());
}

TEST(SocketRole, Names) {
  for (auto r : {SocketRole::all, SocketRole::sender, SocketRole::relay, SocketRole::receiver}) {
    EXPECT_EQ(parse_socket_role(to_string(r)), r);
  }
  EXPECT_THROW(parse_socket_role("router"), ConfigError);
}

TEST(RoleLog, WriteReadRoundTrip) {
  RoleLog log;
  log.role = "relay";
  log.offset = Nanos(-1234);
  log.frames_sent = 2;
  log.send.resize(2);
  log.send[1][7] = SendLogEntry{7, Nanos(10), Nanos(20), 3, 1, 999, true};
  log.receive[7] = ReceiveLogEntry{7, Nanos(1), Nanos(2), Nanos(3), 4, 5, 6, true, false};
  log.upstream_complete[7] = Nanos(42);
  log.counters = {{"packets", 17}};
  const auto dir = fs::temp_directory_path() / "vlab_rolelog";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_role_log(log, dir);
  const auto back = read_role_log(dir / log.file_name());
  EXPECT_EQ(back.role, "relay");
  EXPECT_EQ(back.offset, Nanos(-1234));
  ASSERT_EQ(back.send.size(), 2u);
  EXPECT_EQ(back.send[1].at(7).bytes, 999u);
  EXPECT_EQ(back.send[1].at(7).retransmit_count, 1u);
  EXPECT_EQ(back.receive.at(7).embedded_send_ts_of_first_packet, Nanos(3));
  EXPECT_EQ(back.upstream_complete.at(7), Nanos(42));
  EXPECT_EQ(back.counters, log.counters);
  fs::remove_all(dir);
}

TEST(SocketRun, SmallRunOverLoopbackUdp) {
  ScenarioConfig c = scenario("paper-default");
  c.mode = RunMode::socket;
  c.duration_s = 0.5;
  c.capture.sections = {40'000, 20'000, 5'000};
  c.socket.sender_addr = "127.0.0.1:47300";
  c.socket.relay_addr = "127.0.0.1:47301";
  c.socket.receiver_addr = "127.0.0.1:47310";
  c.socket.idle_timeout_s = 1.0;
  c.clock.receiver_offset = Nanos(0);
  c.out_dir = (fs::temp_directory_path() / "vlab_socket_run").string();
  fs::remove_all(c.out_dir);
  const auto r = run_socket(c);
  ASSERT_EQ(r.reports.size(), 1u);
  EXPECT_TRUE(fs::exists(r.reports[0].frames));
  EXPECT_TRUE(audit_frames_csv(r.reports[0].frames).empty());
  std::uint64_t intact = 0;
  for (const auto& log : r.logs) {
    for (const auto& [k, v] : log.counters) {
      if (k == "frames_intact") intact += v;
    }
  }
  EXPECT_EQ(intact, 15u);
  fs::remove_all(c.out_dir);
}

#ifdef VLAB_CLI_PATH
namespace {

int cli(const std::string& args) {
  const std::string cmd = std::string(VLAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
  const auto out = (fs::temp_directory_path() / "vlab_cli").string();
  EXPECT_EQ(cli("list"), 0);
  EXPECT_EQ(cli("validate --scenario paper-default"), 0);
  EXPECT_EQ(cli("validate --scenario paper-default --set hop1.loss_rate=1.5"), 2);
  EXPECT_EQ(cli("run --scenario paper-default --set duration_s=0 --out " + out), 2);
  EXPECT_EQ(cli("run --scenario no-such-scenario"), 2);
  EXPECT_EQ(cli("run --scenario paper-default --set bogus.key=1"), 2);
  EXPECT_EQ(cli("frobnicate"), 2);
  EXPECT_EQ(cli("run --scenario paper-probe --set probe.samples=10 --out " + out), 0);
  EXPECT_TRUE(fs::exists(fs::path(out) / "config.txt"));
  fs::remove_all(out);
}
#endif
