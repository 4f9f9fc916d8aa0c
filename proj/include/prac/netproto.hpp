#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "prac/gf256.hpp"
#include "prac/protocol.hpp"

namespace prac {

// Length-prefixed frames over a reliable byte stream:
//   u32be payload length | u8 message type | payload
enum class MsgType : uint8_t {
  Hello = 0x01,
  VectorX = 0x02,
  Packet = 0x03,
  AckReceipt = 0x04,
  Result = 0x05,
  Stop = 0x06,
};

struct Frame {
  MsgType type = MsgType::Hello;
  std::vector<uint8_t> payload;

  bool operator==(const Frame&) const = default;
};

std::vector<uint8_t> frame_bytes(const Frame& f);

// Packet on the wire: round u32, slot u8, kind u8, key-index-or-g-row u8,
// fountain spec (secure packets only), serialized payload matrix.
std::vector<uint8_t> encode_packet_wire(const Packet& p);
Packet decode_packet_wire(std::span<const uint8_t> bytes);  // worker left 0

std::vector<uint8_t> encode_result_wire(uint32_t round, uint32_t slot,
                                        std::span<const uint8_t> result);
ResultMsg decode_result_wire(std::span<const uint8_t> bytes);  // worker left 0

// Blocking TCP stream with framed send/recv. Sends and receives may be
// driven from different threads, but at most one thread on each side.
class TcpStream {
 public:
  TcpStream() = default;
  explicit TcpStream(int fd) : fd_(fd) {}
  TcpStream(TcpStream&& other) noexcept;
  TcpStream& operator=(TcpStream&& other) noexcept;
  ~TcpStream();

  static TcpStream connect(const std::string& host, uint16_t port);

  void send_frame(const Frame& f);
  // nullopt on orderly shutdown; ProtocolError on malformed data.
  std::optional<Frame> recv_frame();
  // True when a frame header is ready to read before the timeout.
  bool poll_readable(double timeout_s);
  void shutdown_both();
  bool valid() const { return fd_ >= 0; }

 private:
  int fd_ = -1;
};

class TcpListener {
 public:
  explicit TcpListener(uint16_t port);  // port 0 picks an ephemeral port
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  uint16_t port() const { return port_; }
  TcpStream accept_one();

 private:
  int fd_ = -1;
  uint16_t port_ = 0;
};

struct WorkerOptions {
  uint16_t port = 0;
  double delay_mean_s = 0;  // exponential artificial delay; 0 disables it
  uint64_t seed = 1;
  bool announce = true;  // print "LISTENING <port>" once bound
};

// Serves one master connection until STOP. Returns the process exit code:
// 0 after a clean stop, nonzero on protocol errors.
int run_worker(const WorkerOptions& opts);
// Same loop on an already-bound listener (lets tests pick the port).
int serve_worker(TcpListener& listener, const WorkerOptions& opts);

struct TranscriptEvent {
  enum class Kind { SendX, SendPacket, Ack, Result, SendStop };
  double t = 0;  // seconds since the master run started
  Kind kind = Kind::SendPacket;
  uint32_t worker = 0;
  uint32_t round = 0;
  uint32_t slot = 0;
};

struct Transcript {
  std::vector<TranscriptEvent> events;

  // Per (worker, round): PACKET before ACK_RECEIPT before RESULT.
  bool causality_ok() const;
  // No packet leaves after the stop broadcast.
  bool stop_broadcast_last() const;

  void write_csv(std::ostream& out) const;
  static Transcript read_csv(std::istream& in);
};

struct NetMasterOptions {
  std::vector<std::string> endpoints;  // "host:port", one per worker
  uint32_t z = 0;
  uint32_t b = 1;
  uint64_t seed = 1;
  double timeout_s = 120;
};

struct NetMasterResult {
  FieldMatrix product;
  double elapsed_s = 0;
  Transcript transcript;
};

// Drives the PRAC master over real sockets: sends x, streams packets with
// the adaptive dispatch rule, gathers results, broadcasts STOP once A*x is
// decoded. TimeoutError if the deadline passes first.
NetMasterResult run_master(const FieldMatrix& a, const FieldMatrix& x,
                           const NetMasterOptions& opts);

}  // namespace prac
