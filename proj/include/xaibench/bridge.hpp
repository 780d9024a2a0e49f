#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <sys/types.h>
#include <vector>

#include "xaibench/error.hpp"
#include "xaibench/predictor.hpp"

namespace xaibench {

// Line protocol spoken with an external model process over its standard
// streams, one JSON document per line:
//
//   child -> parent  {"proto":1,"name":...,"is_classifier":bool,"raw_logit":bool}
//   parent -> child  {"id":int,"images":[{"w":int,"h":int,"pix_b64":...}]}
//   child -> parent  {"id":int,"values":[real,...]}
//
// pix_b64 is the base64 of the row-major 8-bit pixels. A child may answer a
// request it cannot serve with {"id":int,"error":"..."}.

inline constexpr int kBridgeProtocolVersion = 1;

class BridgeError : public Error {
 public:
  using Error::Error;
};
/// The child exited or closed its streams.
class BridgeExitedError : public BridgeError {
 public:
  using BridgeError::BridgeError;
};
/// Malformed line, id mismatch, wrong value count or an error response.
class BridgeProtocolError : public BridgeError {
 public:
  using BridgeError::BridgeError;
};
class BridgeTimeoutError : public BridgeError {
 public:
  using BridgeError::BridgeError;
};

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

struct BridgeRequest {
  std::int64_t id = 0;
  std::vector<Image> images;
};

struct BridgeResponse {
  std::int64_t id = 0;
  std::vector<double> values;
  std::optional<std::string> error;
};

std::string encode_handshake(const PredictorInfo& info);
PredictorInfo decode_handshake(std::string_view line);
std::string encode_request(std::int64_t id, std::span<const Image> images);
BridgeRequest decode_request(std::string_view line);
std::string encode_response(const BridgeResponse& response);
BridgeResponse decode_response(std::string_view line);

/// Child process whose stdin and stdout are connected to the parent through a
/// socket pair. The child is terminated on destruction.
class ChildProcess {
 public:
  /// Runs `command` through /bin/sh -c.
  explicit ChildProcess(const std::string& command);
  ~ChildProcess();
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  void write_line(std::string_view line);
  /// Throws BridgeTimeoutError after `timeout`, BridgeExitedError on EOF.
  std::string read_line(std::chrono::milliseconds timeout);
  pid_t pid() const { return pid_; }
  /// Exit description if the child has terminated, without blocking.
  std::optional<std::string> exit_status();

 private:
  pid_t pid_ = -1;
  int fd_ = -1;
  std::string buffer_;
  std::optional<int> wait_status_;
};

struct BridgeOptions {
  std::string command;
  std::chrono::milliseconds timeout{60000};
  std::size_t max_batch = 64;
};

/// Predictor served by an external process. Calls from several threads are
/// serialized; one request is in flight at a time.
class BridgePredictor final : public Predictor {
 public:
  /// Launches the process and reads its handshake.
  explicit BridgePredictor(BridgeOptions options);

  const PredictorInfo& info() const override { return info_; }
  double predict(const Image& image) override;
  std::vector<double> predict_batch(std::span<const Image> images) override;

 private:
  std::vector<double> round_trip(std::span<const Image> images);

  BridgeOptions options_;
  ChildProcess child_;
  PredictorInfo info_;
  std::int64_t next_id_ = 1;
  std::mutex mutex_;
};

/// Server side of the protocol: emits the handshake, then answers each
/// request line with `model` until `in` is exhausted. Requests that fail to
/// decode or evaluate get an error response carrying their id (-1 if the id
/// itself is unreadable).
void serve_bridge(std::istream& in, std::ostream& out, const PredictorInfo& info,
                  const std::function<double(const Image&)>& model);

}  // namespace xaibench
