#include "vlab/udp.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace vlab {
namespace {

std::string errno_text(const std::string& what) { return what + ": " + std::strerror(errno); }

}  // namespace

UdpAddress UdpAddress::parse(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw ConfigError("address '" + text + "' must be host:port");
  const std::string host = text.substr(0, colon);
  const std::string port_text = text.substr(colon + 1);
  unsigned long port = 0;
  try {
    std::size_t used = 0;
    port = std::stoul(port_text, &used);
    if (used != port_text.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw ConfigError("address '" + text + "': bad port");
  }
  if (port == 0 || port > 65535) throw ConfigError("address '" + text + "': port out of range");
  UdpAddress a;
  a.addr.sin_family = AF_INET;
  a.addr.sin_port = htons(static_cast<std::uint16_t>(port));
  const std::string h = host == "localhost" ? "127.0.0.1" : host;
  if (inet_pton(AF_INET, h.c_str(), &a.addr.sin_addr) != 1) {
    throw ConfigError("address '" + text + "': host must be a dotted IPv4 address");
  }
  return a;
}

UdpAddress UdpAddress::with_port_offset(std::uint16_t offset) const {
  UdpAddress a = *this;
  const unsigned p = port() + offset;
  if (p > 65535) throw ConfigError("port " + std::to_string(p) + " out of range");
  a.addr.sin_port = htons(static_cast<std::uint16_t>(p));
  return a;
}

std::uint16_t UdpAddress::port() const { return ntohs(addr.sin_port); }

std::string UdpAddress::to_string() const {
  char buf[INET_ADDRSTRLEN] = {};
  inet_ntop(AF_INET, &addr.sin_addr, buf, sizeof buf);
  return std::string(buf) + ":" + std::to_string(port());
}

UdpSocket::UdpSocket(const UdpAddress& bind_to, std::size_t buffer_bytes) {
  fd_ = ::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0);
  if (fd_ < 0) throw SocketError(errno_text("socket"));
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (buffer_bytes > 0) {
    const int n = static_cast<int>(buffer_bytes);
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVBUF, &n, sizeof n);
    ::setsockopt(fd_, SOL_SOCKET, SO_SNDBUF, &n, sizeof n);
  }
  if (::bind(fd_, reinterpret_cast<const sockaddr*>(&bind_to.addr), sizeof bind_to.addr) != 0) {
    const std::string msg = errno_text("bind " + bind_to.to_string());
    ::close(fd_);
    throw SocketError(msg);
  }
}

UdpSocket::~UdpSocket() {
  if (fd_ >= 0) ::close(fd_);
}

UdpAddress UdpSocket::local_address() const {
  UdpAddress a;
  socklen_t len = sizeof a.addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&a.addr), &len);
  return a;
}

bool UdpSocket::send_to(std::span<const std::uint8_t> bytes, const UdpAddress& to) {
  for (;;) {
    const auto n = ::sendto(fd_, bytes.data(), bytes.size(), 0, reinterpret_cast<const sockaddr*>(&to.addr),
                            sizeof to.addr);
    if (n >= 0) return true;
    if (errno == EINTR) continue;
    if (errno == ENOBUFS || errno == EAGAIN || errno == EWOULDBLOCK || errno == ECONNREFUSED) return false;
    throw SocketError(errno_text("sendto " + to.to_string()));
  }
}

std::optional<Datagram> UdpSocket::receive(std::chrono::nanoseconds timeout) {
  pollfd p{fd_, POLLIN, 0};
  const auto ms = std::chrono::ceil<std::chrono::milliseconds>(std::max(timeout, std::chrono::nanoseconds(0)));
  int r = 0;
  do {
    r = ::poll(&p, 1, static_cast<int>(ms.count()));
  } while (r < 0 && errno == EINTR);
  if (r < 0) throw SocketError(errno_text("poll"));
  if (r == 0) return std::nullopt;

  Datagram d;
  d.bytes.resize(65536);
  socklen_t len = sizeof d.from.addr;
  ssize_t n;
  do {
    n = ::recvfrom(fd_, d.bytes.data(), d.bytes.size(), 0, reinterpret_cast<sockaddr*>(&d.from.addr), &len);
  } while (n < 0 && errno == EINTR);
  if (n < 0) {
    if (errno == EAGAIN || errno == EWOULDBLOCK || errno == ECONNREFUSED) return std::nullopt;
    throw SocketError(errno_text("recvfrom"));
  }
  d.bytes.resize(static_cast<std::size_t>(n));
  return d;
}

}  // namespace vlab
