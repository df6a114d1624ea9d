#pragma once

#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <vector>

#include "ddpp/protocol.hpp"

namespace ddpp {

/// One end of a duplex frame channel. send() and receive() move whole frames.
class Channel {
 public:
  virtual ~Channel() = default;
  virtual void send(const Bytes& frame) = 0;
  virtual Bytes receive() = 0;
};

/// Center end and source end of one link.
struct Link {
  std::unique_ptr<Channel> center;
  std::unique_ptr<Channel> source;
};

enum class TransportKind { loopback, tcp };

/// In-process link; frames are copied through a pair of blocking queues.
Link make_loopback_link();

/// N links over TCP on 127.0.0.1, each frame prefixed with its u32 length.
std::vector<Link> make_tcp_links(std::size_t n);

std::vector<Link> make_links(TransportKind kind, std::size_t n);

}  // namespace ddpp
