#include "ssperm/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstring>

namespace ssperm {

static std::pair<std::string, int> split_addr(const std::string& addr) {
  auto colon = addr.rfind(':');
  if (colon == std::string::npos)
    throw ConfigError("address must be host:port, got " + addr);
  return {addr.substr(0, colon), std::stoi(addr.substr(colon + 1))};
}

static void write_all(int fd, const void* data, size_t n) {
  const char* p = static_cast<const char*>(data);
  while (n > 0) {
    ssize_t w = ::write(fd, p, n);
    if (w <= 0) throw LinkClosedError("tcp write failed");
    p += w;
    n -= static_cast<size_t>(w);
  }
}

static bool read_all(int fd, void* data, size_t n) {
  char* p = static_cast<char*>(data);
  while (n > 0) {
    ssize_t r = ::read(fd, p, n);
    if (r <= 0) return false;
    p += r;
    n -= static_cast<size_t>(r);
  }
  return true;
}

TcpTransport::TcpTransport(PartyId self,
                           const std::array<std::string, 3>& addresses)
    : self_(self) {
  int me = static_cast<int>(self);
  auto [host, port] = split_addr(addresses[me]);

  // Lower role listens; higher roles connect and announce themselves with a
  // single role byte.
  int n_accept = 2 - me;  // P0 accepts two peers, P1 one, P2 none
  int listen_fd = -1;
  if (n_accept > 0) {
    listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd < 0) throw LinkClosedError("socket() failed");
    int yes = 1;
    ::setsockopt(listen_fd, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(static_cast<uint16_t>(port));
    sa.sin_addr.s_addr =
        host == "0.0.0.0" ? INADDR_ANY : ::inet_addr(host.c_str());
    if (::bind(listen_fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0)
      throw LinkClosedError("bind failed on " + addresses[me]);
    if (::listen(listen_fd, 4) != 0) throw LinkClosedError("listen failed");
  }

  auto connect_to = [&](int peer) {
    auto [ph, pp] = split_addr(addresses[peer]);
    for (int attempt = 0; attempt < 200; attempt++) {
      int fd = ::socket(AF_INET, SOCK_STREAM, 0);
      if (fd < 0) throw LinkClosedError("socket() failed");
      sockaddr_in sa{};
      sa.sin_family = AF_INET;
      sa.sin_port = htons(static_cast<uint16_t>(pp));
      sa.sin_addr.s_addr = ::inet_addr(ph.c_str());
      if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) == 0) {
        u8 role = static_cast<u8>(me);
        write_all(fd, &role, 1);
        int nd = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &nd, sizeof(nd));
        return fd;
      }
      ::close(fd);
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    throw LinkClosedError("cannot connect to " + addresses[peer]);
  };

  for (int peer = 0; peer < me; peer++) fds_[peer] = connect_to(peer);
  for (int i = 0; i < n_accept; i++) {
    int fd = ::accept(listen_fd, nullptr, nullptr);
    if (fd < 0) throw LinkClosedError("accept failed");
    u8 role = 0;
    if (!read_all(fd, &role, 1)) throw LinkClosedError("peer hello failed");
    if (role > 2 || static_cast<int>(role) <= me)
      throw ProtocolError("unexpected peer role");
    int nd = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &nd, sizeof(nd));
    fds_[role] = fd;
  }
  if (listen_fd >= 0) ::close(listen_fd);

  for (int peer = 0; peer < 3; peer++) {
    if (peer == me) continue;
    readers_.emplace_back(
        [this, peer] { reader_loop(static_cast<PartyId>(peer)); });
  }
  if (log_level() >= 1)
    std::fprintf(stderr, "[%s] connected to both peers\n",
                 party_name(self_));
}

TcpTransport::~TcpTransport() { shutdown(); }

void TcpTransport::shutdown() {
  if (down_) return;
  down_ = true;
  for (int& fd : fds_) {
    if (fd >= 0) {
      ::shutdown(fd, SHUT_RDWR);
      ::close(fd);
      fd = -1;
    }
  }
  for (auto& t : readers_)
    if (t.joinable()) t.join();
  for (auto& b : inbox_) b.close();
}

// Frame: [len u32 LE][depth u32 LE][message bytes]; len covers the message
// bytes only. The depth rides in transport framing, outside the message
// format and outside raw_bytes.
void TcpTransport::send(PartyId to, Envelope env) {
  int fd = fds_[static_cast<int>(to)];
  if (fd < 0) throw LinkClosedError("no connection to peer");
  std::lock_guard<std::mutex> lk(send_mu_[static_cast<int>(to)]);
  u32 len = static_cast<u32>(env.bytes.size());
  u8 hdr[8];
  std::memcpy(hdr, &len, 4);
  std::memcpy(hdr + 4, &env.depth, 4);
  write_all(fd, hdr, 8);
  write_all(fd, env.bytes.data(), env.bytes.size());
}

Envelope TcpTransport::recv(PartyId from) {
  return inbox_[static_cast<int>(from)].pop();
}

void TcpTransport::reader_loop(PartyId from) {
  int fd = fds_[static_cast<int>(from)];
  for (;;) {
    u8 hdr[8];
    if (!read_all(fd, hdr, 8)) break;
    u32 len, depth;
    std::memcpy(&len, hdr, 4);
    std::memcpy(&depth, hdr + 4, 4);
    Envelope env;
    env.depth = depth;
    env.bytes.resize(len);
    if (!read_all(fd, env.bytes.data(), len)) break;
    inbox_[static_cast<int>(from)].push(std::move(env));
  }
  inbox_[static_cast<int>(from)].close();
}

}  // namespace ssperm
