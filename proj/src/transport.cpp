#include "ddpp/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>

namespace ddpp {

namespace {

class FrameQueue {
 public:
  void push(Bytes frame) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      frames_.push_back(std::move(frame));
    }
    cv_.notify_one();
  }

  Bytes pop() {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [this] { return !frames_.empty(); });
    Bytes f = std::move(frames_.front());
    frames_.pop_front();
    return f;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Bytes> frames_;
};

class LoopbackChannel final : public Channel {
 public:
  LoopbackChannel(std::shared_ptr<FrameQueue> out, std::shared_ptr<FrameQueue> in)
      : out_(std::move(out)), in_(std::move(in)) {}
  void send(const Bytes& frame) override { out_->push(frame); }
  Bytes receive() override { return in_->pop(); }

 private:
  std::shared_ptr<FrameQueue> out_;
  std::shared_ptr<FrameQueue> in_;
};

[[noreturn]] void sys_fail(const char* what) {
  throw Error(ErrorKind::invalid_input, std::string("tcp transport: ") + what + ": " + std::strerror(errno));
}

class Socket {
 public:
  explicit Socket(int fd = -1) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = o.fd_;
      o.fd_ = -1;
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { reset(); }

  int fd() const { return fd_; }

 private:
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }
  int fd_;
};

class TcpChannel final : public Channel {
 public:
  explicit TcpChannel(Socket sock) : sock_(std::move(sock)) {
    int one = 1;
    ::setsockopt(sock_.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }

  void send(const Bytes& frame) override {
    if (frame.size() > 0xffffffffu) throw Error(ErrorKind::invalid_input, "tcp transport: frame too large");
    const auto len = static_cast<std::uint32_t>(frame.size());
    const std::uint8_t header[4] = {static_cast<std::uint8_t>(len), static_cast<std::uint8_t>(len >> 8),
                                    static_cast<std::uint8_t>(len >> 16), static_cast<std::uint8_t>(len >> 24)};
    write_all(header, 4);
    write_all(frame.data(), frame.size());
  }

  Bytes receive() override {
    std::uint8_t header[4];
    read_all(header, 4);
    const std::uint32_t len = static_cast<std::uint32_t>(header[0]) | static_cast<std::uint32_t>(header[1]) << 8 |
                              static_cast<std::uint32_t>(header[2]) << 16 | static_cast<std::uint32_t>(header[3]) << 24;
    Bytes frame(len);
    read_all(frame.data(), frame.size());
    return frame;
  }

 private:
  void write_all(const std::uint8_t* p, std::size_t n) {
    while (n > 0) {
      const ssize_t k = ::send(sock_.fd(), p, n, MSG_NOSIGNAL);
      if (k < 0) {
        if (errno == EINTR) continue;
        sys_fail("send");
      }
      p += k;
      n -= static_cast<std::size_t>(k);
    }
  }

  void read_all(std::uint8_t* p, std::size_t n) {
    while (n > 0) {
      const ssize_t k = ::recv(sock_.fd(), p, n, 0);
      if (k == 0) throw Error(ErrorKind::decode, "tcp transport: peer closed connection");
      if (k < 0) {
        if (errno == EINTR) continue;
        sys_fail("recv");
      }
      p += k;
      n -= static_cast<std::size_t>(k);
    }
  }

  Socket sock_;
};

}  // namespace

Link make_loopback_link() {
  auto down = std::make_shared<FrameQueue>();
  auto up = std::make_shared<FrameQueue>();
  return Link{std::make_unique<LoopbackChannel>(down, up), std::make_unique<LoopbackChannel>(up, down)};
}

std::vector<Link> make_tcp_links(std::size_t n) {
  Socket listener(::socket(AF_INET, SOCK_STREAM, 0));
  if (listener.fd() < 0) sys_fail("socket");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  if (::bind(listener.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) sys_fail("bind");
  if (::listen(listener.fd(), static_cast<int>(n) + 1) < 0) sys_fail("listen");
  socklen_t len = sizeof(addr);
  if (::getsockname(listener.fd(), reinterpret_cast<sockaddr*>(&addr), &len) < 0) sys_fail("getsockname");

  std::vector<Link> links;
  links.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Socket client(::socket(AF_INET, SOCK_STREAM, 0));
    if (client.fd() < 0) sys_fail("socket");
    if (::connect(client.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) sys_fail("connect");
    Socket server(::accept(listener.fd(), nullptr, nullptr));
    if (server.fd() < 0) sys_fail("accept");
    links.push_back(Link{std::make_unique<TcpChannel>(std::move(server)), std::make_unique<TcpChannel>(std::move(client))});
  }
  return links;
}

std::vector<Link> make_links(TransportKind kind, std::size_t n) {
  if (kind == TransportKind::tcp) return make_tcp_links(n);
  std::vector<Link> links;
  links.reserve(n);
  for (std::size_t i = 0; i < n; ++i) links.push_back(make_loopback_link());
  return links;
}

}  // namespace ddpp
