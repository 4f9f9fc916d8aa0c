#include "prac/netproto.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <cstring>
#include <deque>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "prac/bytes.hpp"
#include "prac/errors.hpp"
#include "prac/rng.hpp"

namespace prac {

namespace {

constexpr std::size_t kMaxFramePayload = 1u << 28;

void write_all(int fd, const uint8_t* data, std::size_t len) {
  while (len > 0) {
    ssize_t n = ::write(fd, data, len);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(std::string("socket write failed: ") + std::strerror(errno));
    }
    data += n;
    len -= static_cast<std::size_t>(n);
  }
}

// false on clean EOF at a frame boundary (start == true).
bool read_all(int fd, uint8_t* data, std::size_t len, bool at_boundary) {
  std::size_t got = 0;
  while (got < len) {
    ssize_t n = ::read(fd, data + got, len - got);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(std::string("socket read failed: ") + std::strerror(errno));
    }
    if (n == 0) {
      if (got == 0 && at_boundary) return false;
      throw ProtocolError("connection closed mid-frame");
    }
    got += static_cast<std::size_t>(n);
  }
  return true;
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

}  // namespace

std::vector<uint8_t> frame_bytes(const Frame& f) {
  ByteWriter w;
  w.u32(static_cast<uint32_t>(f.payload.size()));
  w.u8(static_cast<uint8_t>(f.type));
  w.raw(f.payload);
  return w.take();
}

std::vector<uint8_t> encode_packet_wire(const Packet& p) {
  ByteWriter w;
  w.u32(p.round);
  w.u8(static_cast<uint8_t>(p.slot));
  w.u8(static_cast<uint8_t>(p.kind));
  w.u8(static_cast<uint8_t>(p.kind == PacketKind::Key ? p.key_index : p.g_row));
  if (p.kind == PacketKind::Secure) p.spec.serialize(w);
  p.payload.serialize(w);
  return w.take();
}

Packet decode_packet_wire(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  Packet p;
  p.round = r.u32();
  p.slot = r.u8();
  uint8_t kind = r.u8();
  if (kind > 1) throw ProtocolError("bad packet kind");
  p.kind = static_cast<PacketKind>(kind);
  uint8_t idx = r.u8();
  if (p.kind == PacketKind::Key) {
    p.key_index = idx;
  } else {
    p.g_row = idx;
    p.spec = FountainSpec::deserialize(r);
  }
  p.payload = FieldMatrix::deserialize(r);
  if (!r.done()) throw ProtocolError("trailing bytes in packet");
  return p;
}

std::vector<uint8_t> encode_result_wire(uint32_t round, uint32_t slot,
                                        std::span<const uint8_t> result) {
  ByteWriter w;
  w.u32(round);
  w.u8(static_cast<uint8_t>(slot));
  w.raw(result);
  return w.take();
}

ResultMsg decode_result_wire(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  ResultMsg msg;
  msg.round = r.u32();
  msg.slot = r.u8();
  auto rest = r.raw(r.remaining());
  msg.result.assign(rest.begin(), rest.end());
  return msg;
}

TcpStream::TcpStream(TcpStream&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

TcpStream& TcpStream::operator=(TcpStream&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

TcpStream::~TcpStream() {
  if (fd_ >= 0) ::close(fd_);
}

TcpStream TcpStream::connect(const std::string& host, uint16_t port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw ProtocolError("socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw ProtocolError("bad address: " + host);
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw ProtocolError("connect to " + host + ":" + std::to_string(port) +
                        " failed: " + std::strerror(errno));
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return TcpStream(fd);
}

void TcpStream::send_frame(const Frame& f) {
  auto bytes = frame_bytes(f);
  write_all(fd_, bytes.data(), bytes.size());
}

std::optional<Frame> TcpStream::recv_frame() {
  uint8_t header[5];
  if (!read_all(fd_, header, sizeof(header), true)) return std::nullopt;
  uint32_t len = static_cast<uint32_t>(header[0]) << 24 |
                 static_cast<uint32_t>(header[1]) << 16 |
                 static_cast<uint32_t>(header[2]) << 8 | header[3];
  if (len > kMaxFramePayload) throw ProtocolError("oversized frame");
  if (header[4] < 0x01 || header[4] > 0x06) throw ProtocolError("unknown message type");
  Frame f;
  f.type = static_cast<MsgType>(header[4]);
  f.payload.resize(len);
  if (len > 0 && !read_all(fd_, f.payload.data(), len, false))
    throw ProtocolError("connection closed mid-frame");
  return f;
}

bool TcpStream::poll_readable(double timeout_s) {
  pollfd pfd{fd_, POLLIN, 0};
  int ms = timeout_s <= 0 ? 0 : static_cast<int>(timeout_s * 1000.0) + 1;
  int rc = ::poll(&pfd, 1, ms);
  return rc > 0 && (pfd.revents & (POLLIN | POLLHUP));
}

void TcpStream::shutdown_both() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

TcpListener::TcpListener(uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw ProtocolError("socket() failed");
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd_);
    throw ProtocolError(std::string("bind failed: ") + std::strerror(errno));
  }
  if (::listen(fd_, 4) != 0) {
    ::close(fd_);
    throw ProtocolError("listen failed");
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

TcpStream TcpListener::accept_one() {
  int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) throw ProtocolError("accept failed");
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return TcpStream(fd);
}

int run_worker(const WorkerOptions& opts) {
  TcpListener listener(opts.port);
  if (opts.announce) {
    std::printf("LISTENING %u\n", listener.port());
    std::fflush(stdout);
  }
  return serve_worker(listener, opts);
}

int serve_worker(TcpListener& listener, const WorkerOptions& opts) {
  TcpStream conn = listener.accept_one();

  Rng delay_rng(derive_seed(opts.seed, {0x776f726bULL}));
  std::optional<FieldMatrix> x;
  std::deque<Packet> backlog;

  auto handle = [&](Frame& f) -> int {
    switch (f.type) {
      case MsgType::Hello:
        conn.send_frame(f);  // echo, sequence number included
        return -1;
      case MsgType::VectorX:
        x = FieldMatrix::deserialize(f.payload);
        return -1;
      case MsgType::Packet: {
        if (!x) {
          std::fprintf(stderr, "protocol error: PACKET before VECTOR_X\n");
          return 1;
        }
        Packet p = decode_packet_wire(f.payload);
        Frame ack{MsgType::AckReceipt, {}};
        ByteWriter w;
        w.u32(p.round);
        w.u8(static_cast<uint8_t>(p.slot));
        ack.payload = w.take();
        conn.send_frame(ack);
        backlog.push_back(std::move(p));
        return -1;
      }
      case MsgType::Stop:
        return 0;  // discard any in-flight work
      default:
        std::fprintf(stderr, "protocol error: unexpected frame type %u\n",
                     static_cast<unsigned>(f.type));
        return 1;
    }
  };

  try {
    for (;;) {
      if (backlog.empty()) {
        auto f = conn.recv_frame();
        if (!f) return 1;  // master vanished without STOP
        int rc = handle(*f);
        if (rc >= 0) return rc;
        continue;
      }

      Packet p = std::move(backlog.front());
      backlog.pop_front();
      FieldMatrix product = mat_vec_mul(p.payload, *x);

      if (opts.delay_mean_s > 0) {
        double wait = delay_rng.exponential(1.0 / opts.delay_mean_s);
        double deadline = now_seconds() + wait;
        // Keep serving receipts and watching for STOP while the artificial
        // delay runs down.
        for (;;) {
          double remain = deadline - now_seconds();
          if (remain <= 0) break;
          if (!conn.poll_readable(remain)) continue;
          auto f = conn.recv_frame();
          if (!f) return 1;
          int rc = handle(*f);
          if (rc >= 0) return rc;
        }
      }

      Frame result{MsgType::Result,
                   encode_result_wire(p.round, p.slot, product.data())};
      conn.send_frame(result);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "worker error: %s\n", e.what());
    return 1;
  }
}

bool Transcript::causality_ok() const {
  std::map<std::pair<uint32_t, uint32_t>, std::array<std::optional<double>, 3>> seen;
  for (const auto& ev : events) {
    int idx;
    switch (ev.kind) {
      case TranscriptEvent::Kind::SendPacket: idx = 0; break;
      case TranscriptEvent::Kind::Ack: idx = 1; break;
      case TranscriptEvent::Kind::Result: idx = 2; break;
      default: continue;
    }
    seen[{ev.worker, ev.round}][idx] = ev.t;
  }
  for (const auto& [key, t] : seen) {
    if (!t[0]) return false;        // ack or result without a send
    if (t[1] && *t[1] < *t[0]) return false;
    if (t[2] && (!t[1] || *t[2] < *t[1])) return false;
  }
  return true;
}

bool Transcript::stop_broadcast_last() const {
  std::optional<double> stop_t;
  for (const auto& ev : events)
    if (ev.kind == TranscriptEvent::Kind::SendStop) {
      stop_t = ev.t;
      break;
    }
  if (!stop_t) return false;
  for (const auto& ev : events)
    if (ev.kind == TranscriptEvent::Kind::SendPacket && ev.t > *stop_t) return false;
  return true;
}

namespace {

const char* kind_name(TranscriptEvent::Kind k) {
  switch (k) {
    case TranscriptEvent::Kind::SendX: return "send_x";
    case TranscriptEvent::Kind::SendPacket: return "send_packet";
    case TranscriptEvent::Kind::Ack: return "ack_receipt";
    case TranscriptEvent::Kind::Result: return "result";
    case TranscriptEvent::Kind::SendStop: return "send_stop";
  }
  return "?";
}

std::optional<TranscriptEvent::Kind> kind_from_name(const std::string& s) {
  using K = TranscriptEvent::Kind;
  if (s == "send_x") return K::SendX;
  if (s == "send_packet") return K::SendPacket;
  if (s == "ack_receipt") return K::Ack;
  if (s == "result") return K::Result;
  if (s == "send_stop") return K::SendStop;
  return std::nullopt;
}

}  // namespace

void Transcript::write_csv(std::ostream& out) const {
  out << "time_s,event,worker,round,slot\n";
  for (const auto& ev : events) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%.9f,%s,%u,%u,%u\n", ev.t, kind_name(ev.kind),
                  ev.worker, ev.round, ev.slot);
    out << buf;
  }
}

Transcript Transcript::read_csv(std::istream& in) {
  Transcript tr;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("time_s", 0) == 0) continue;
    std::istringstream ls(line);
    std::string t, kind, worker, round, slot;
    std::getline(ls, t, ',');
    std::getline(ls, kind, ',');
    std::getline(ls, worker, ',');
    std::getline(ls, round, ',');
    std::getline(ls, slot, ',');
    auto k = kind_from_name(kind);
    if (!k) throw ProtocolError("bad transcript event: " + kind);
    tr.events.push_back(TranscriptEvent{std::stod(t), *k,
                                        static_cast<uint32_t>(std::stoul(worker)),
                                        static_cast<uint32_t>(std::stoul(round)),
                                        static_cast<uint32_t>(std::stoul(slot))});
  }
  return tr;
}

namespace {

struct MasterEvent {
  uint32_t worker;
  bool disconnected = false;
  Frame frame;
  double t = 0;
};

class EventQueue {
 public:
  void push(MasterEvent ev) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      q_.push_back(std::move(ev));
    }
    cv_.notify_one();
  }

  std::optional<MasterEvent> pop_until(double deadline_s) {
    std::unique_lock<std::mutex> lock(mu_);
    while (q_.empty()) {
      double remain = deadline_s - now_seconds();
      if (remain <= 0) return std::nullopt;
      // system_clock wait_until: the steady deadline is re-checked every
      // loop, and this path stays visible to thread sanitizers (wait_for
      // would go through pthread_cond_clockwait, which they miss).
      cv_.wait_until(lock, std::chrono::system_clock::now() +
                               std::chrono::duration_cast<std::chrono::milliseconds>(
                                   std::chrono::duration<double>(remain)) +
                               std::chrono::milliseconds(1));
    }
    MasterEvent ev = std::move(q_.front());
    q_.pop_front();
    return ev;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<MasterEvent> q_;
};

std::pair<std::string, uint16_t> split_endpoint(const std::string& ep) {
  auto pos = ep.rfind(':');
  if (pos == std::string::npos) throw DomainError("endpoint must be host:port");
  return {ep.substr(0, pos), static_cast<uint16_t>(std::stoul(ep.substr(pos + 1)))};
}

}  // namespace

NetMasterResult run_master(const FieldMatrix& a, const FieldMatrix& x,
                           const NetMasterOptions& opts) {
  const uint32_t n = static_cast<uint32_t>(opts.endpoints.size());
  if (n == 0) throw DomainError("master needs at least one worker endpoint");
  if (opts.z + 1 > n) throw DomainError("need at least z+1 workers");
  if (x.cols() != 1 || x.rows() != a.cols()) throw DomainError("bad multiplicand");

  const double t0 = now_seconds();
  auto rel = [&] { return now_seconds() - t0; };
  const double deadline = t0 + opts.timeout_s;

  std::vector<TcpStream> conns;
  conns.reserve(n);
  std::vector<double> rtt(n, 0);
  for (uint32_t w = 0; w < n; ++w) {
    auto [host, port] = split_endpoint(opts.endpoints[w]);
    conns.push_back(TcpStream::connect(host, port));
    // Synchronous HELLO before the reader threads exist: round-trip probe.
    ByteWriter hw;
    hw.u32(w);
    double sent = now_seconds();
    conns[w].send_frame(Frame{MsgType::Hello, hw.take()});
    if (!conns[w].poll_readable(opts.timeout_s))
      throw TimeoutError("worker " + opts.endpoints[w] + " never answered HELLO");
    auto echo = conns[w].recv_frame();
    if (!echo || echo->type != MsgType::Hello) throw ProtocolError("bad HELLO echo");
    rtt[w] = now_seconds() - sent;
  }

  NetMasterResult out;
  Transcript& tr = out.transcript;

  MasterConfig mcfg;
  mcfg.n = n;
  mcfg.z = opts.z;
  mcfg.b = opts.b;
  mcfg.seed = opts.seed;
  MasterState master(a, mcfg);

  Frame xframe{MsgType::VectorX, x.serialize()};
  for (uint32_t w = 0; w < n; ++w) {
    conns[w].send_frame(xframe);
    tr.events.push_back({rel(), TranscriptEvent::Kind::SendX, w, 0, 0});
  }

  EventQueue queue;
  std::vector<std::thread> readers;
  readers.reserve(n);
  for (uint32_t w = 0; w < n; ++w) {
    readers.emplace_back([&, w] {
      try {
        for (;;) {
          auto f = conns[w].recv_frame();
          if (!f) break;
          queue.push(MasterEvent{w, false, std::move(*f), now_seconds()});
        }
      } catch (const std::exception&) {
        // fall through to the disconnect marker
      }
      queue.push(MasterEvent{w, true, {}, now_seconds()});
    });
  }

  struct WorkerNet {
    uint64_t sent = 0;
    uint64_t returned = 0;
    std::optional<double> timer;  // absolute, seconds since t0
    uint64_t timer_epoch = 0;
    std::map<uint32_t, double> send_time;  // round -> send time
    uint64_t frames_seen = 0;
    bool dead = false;
  };
  std::vector<WorkerNet> ws(n);

  auto dispatch = [&](uint32_t w) {
    if (ws[w].dead || master.stopped()) return;
    Packet p = master.next_packet(w);
    double t = rel();
    ws[w].send_time[p.round] = t;
    ++ws[w].sent;
    ws[w].timer.reset();
    conns[w].send_frame(Frame{MsgType::Packet, encode_packet_wire(p)});
    tr.events.push_back({t, TranscriptEvent::Kind::SendPacket, w, p.round, p.slot});
    if (master.beta(w).samples() > 0) {
      ws[w].timer = master.dispatch_time(w, t, t, std::nullopt);
      ws[w].timer_epoch = ws[w].sent;
    }
  };

  auto shutdown_all = [&] {
    for (auto& c : conns) c.shutdown_both();
    for (auto& th : readers)
      if (th.joinable()) th.join();
  };

  auto finish = [&](const FieldMatrix& product) {
    double t = rel();
    for (uint32_t w = 0; w < n; ++w) {
      if (ws[w].dead) continue;
      try {
        conns[w].send_frame(Frame{MsgType::Stop, {}});
      } catch (const std::exception&) {
        // worker already gone; stop is best-effort
      }
      tr.events.push_back({t, TranscriptEvent::Kind::SendStop, w, 0, 0});
    }
    // Workers drain any in-flight result, read the STOP and close; the
    // readers unblock on their EOF. Tearing the sockets down here instead
    // would reset those final writes.
    for (auto& th : readers)
      if (th.joinable()) th.join();
    out.product = product;
    out.elapsed_s = t;
  };

  auto fire_due_timers = [&] {
    for (uint32_t i = 0; i < n; ++i) {
      if (!ws[i].timer) continue;
      if (ws[i].timer_epoch != ws[i].sent) {
        ws[i].timer.reset();
      } else if (t0 + *ws[i].timer <= now_seconds()) {
        ws[i].timer.reset();
        dispatch(i);
      }
    }
  };

  try {
    for (uint32_t w = 0; w < n; ++w) dispatch(w);

    for (;;) {
      // Earliest pending dispatch timer bounds the wait.
      double wake = deadline;
      for (const auto& sim : ws)
        if (sim.timer) wake = std::min(wake, t0 + *sim.timer);
      auto ev = queue.pop_until(wake);

      if (now_seconds() >= deadline) throw TimeoutError("master timed out before decoding");

      if (!ev) {
        fire_due_timers();
        continue;
      }

      uint32_t w = ev->worker;
      if (ev->disconnected) {
        // Treated as infinitely slow; its keys are never reassigned.
        ws[w].dead = true;
        continue;
      }
      ++ws[w].frames_seen;

      switch (ev->frame.type) {
        case MsgType::AckReceipt: {
          ByteReader r(ev->frame.payload);
          uint32_t round = r.u32();
          uint32_t slot = r.u8();
          tr.events.push_back({ev->t - t0, TranscriptEvent::Kind::Ack, w, round, slot});
          break;
        }
        case MsgType::Hello: {
          // Echo of a periodic probe: refresh the round-trip estimate.
          ByteReader r(ev->frame.payload);
          r.u32();  // worker id
          double sent_at = static_cast<double>(r.u64()) * 1e-9;
          double sample = (ev->t - t0) - sent_at;
          rtt[w] = 0.5 * rtt[w] + 0.5 * sample;
          break;
        }
        case MsgType::Result: {
          ResultMsg msg = decode_result_wire(ev->frame.payload);
          msg.worker = w;
          double arrival = ev->t - t0;
          tr.events.push_back(
              {arrival, TranscriptEvent::Kind::Result, w, msg.round, msg.slot});
          auto sent_it = ws[w].send_time.find(msg.round);
          if (sent_it == ws[w].send_time.end())
            throw ProtocolError("result for unknown round");
          double sample = std::max(0.0, arrival - sent_it->second - rtt[w] / 2.0);
          ws[w].send_time.erase(sent_it);
          ++ws[w].returned;
          master.on_result(msg, sample);
          if (auto product = master.try_finish()) {
            finish(*product);
            return out;
          }
          if (ws[w].sent == ws[w].returned) dispatch(w);
          // Periodic HELLO keeps the one-way estimate fresh.
          if (ws[w].frames_seen % 50 == 0) {
            ByteWriter hw;
            hw.u32(w);
            hw.u64(static_cast<uint64_t>(rel() * 1e9));
            conns[w].send_frame(Frame{MsgType::Hello, hw.take()});
          }
          break;
        }
        default:
          throw ProtocolError("unexpected frame from worker");
      }

      fire_due_timers();
    }
  } catch (...) {
    shutdown_all();
    throw;
  }
}

}  // namespace prac
