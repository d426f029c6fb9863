#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include <netinet/in.h>

#include "vlab/bytes.hpp"
#include "vlab/units.hpp"

namespace vlab {

class SocketError : public Error {
 public:
  using Error::Error;
};

/// IPv4 address and port, parsed from "host:port".
struct UdpAddress {
  sockaddr_in addr{};

  static UdpAddress parse(const std::string& text);
  UdpAddress with_port_offset(std::uint16_t offset) const;
  std::uint16_t port() const;
  std::string to_string() const;

  friend bool operator==(const UdpAddress& a, const UdpAddress& b) {
    return a.addr.sin_addr.s_addr == b.addr.sin_addr.s_addr && a.addr.sin_port == b.addr.sin_port;
  }
};

struct Datagram {
  ByteVector bytes;
  UdpAddress from;
};

/// Blocking-with-timeout UDP socket bound to one local address.
class UdpSocket {
 public:
  explicit UdpSocket(const UdpAddress& bind_to, std::size_t buffer_bytes = 0);
  ~UdpSocket();
  UdpSocket(const UdpSocket&) = delete;
  UdpSocket& operator=(const UdpSocket&) = delete;

  UdpAddress local_address() const;

  /// Returns false when the kernel refuses the datagram for lack of buffer space.
  bool send_to(std::span<const std::uint8_t> bytes, const UdpAddress& to);

  /// Waits up to `timeout` for one datagram.
  std::optional<Datagram> receive(std::chrono::nanoseconds timeout);

 private:
  int fd_ = -1;
};

}  // namespace vlab
