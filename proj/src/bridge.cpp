#include "xaibench/bridge.hpp"

#include <openssl/evp.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <thread>

#include <json.hpp>

namespace xaibench {

using nlohmann::json;

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw BridgeProtocolError("base64 payload length is not a multiple of 4");
  std::vector<std::uint8_t> out(3 * (text.size() / 4));
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw BridgeProtocolError("invalid base64 payload");
  std::size_t padding = 0;
  if (!text.empty() && text.back() == '=') ++padding;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

namespace {

json parse_line(std::string_view line, const char* what) {
  try {
    json j = json::parse(line);
    if (!j.is_object()) throw BridgeProtocolError(std::string(what) + " is not a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw BridgeProtocolError(std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

std::string encode_handshake(const PredictorInfo& info) {
  return json{{"proto", kBridgeProtocolVersion},
              {"name", info.name},
              {"is_classifier", info.is_classifier},
              {"raw_logit", info.raw_logit}}
      .dump();
}

PredictorInfo decode_handshake(std::string_view line) {
  const json j = parse_line(line, "handshake");
  try {
    if (j.at("proto").get<int>() != kBridgeProtocolVersion) {
      throw BridgeProtocolError("unsupported bridge protocol version " + j.at("proto").dump());
    }
    PredictorInfo info;
    info.name = j.at("name").get<std::string>();
    info.is_classifier = j.at("is_classifier").get<bool>();
    info.raw_logit = j.value("raw_logit", false);
    if (info.raw_logit || !info.is_classifier) {
      info.output_min = -std::numeric_limits<double>::infinity();
      info.output_max = std::numeric_limits<double>::infinity();
    }
    return info;
  } catch (const json::exception& e) {
    throw BridgeProtocolError(std::string("malformed handshake: ") + e.what());
  }
}

std::string encode_request(std::int64_t id, std::span<const Image> images) {
  json list = json::array();
  for (const auto& image : images) {
    list.push_back({{"w", image.width}, {"h", image.height}, {"pix_b64", base64_encode(image.pixels)}});
  }
  return json{{"id", id}, {"images", list}}.dump();
}

BridgeRequest decode_request(std::string_view line) {
  const json j = parse_line(line, "request");
  try {
    BridgeRequest req;
    req.id = j.at("id").get<std::int64_t>();
    for (const auto& item : j.at("images")) {
      Image image;
      image.width = item.at("w").get<int>();
      image.height = item.at("h").get<int>();
      image.pixels = base64_decode(item.at("pix_b64").get<std::string>());
      if (image.width <= 0 || image.height <= 0 ||
          image.pixels.size() != static_cast<std::size_t>(image.width) * image.height) {
        throw BridgeProtocolError("image payload does not match its dimensions");
      }
      req.images.push_back(std::move(image));
    }
    return req;
  } catch (const json::exception& e) {
    throw BridgeProtocolError(std::string("malformed request: ") + e.what());
  }
}

std::string encode_response(const BridgeResponse& response) {
  json j{{"id", response.id}};
  if (response.error) {
    j["error"] = *response.error;
  } else {
    j["values"] = response.values;
  }
  return j.dump();
}

BridgeResponse decode_response(std::string_view line) {
  const json j = parse_line(line, "response");
  try {
    BridgeResponse resp;
    resp.id = j.at("id").get<std::int64_t>();
    if (j.contains("error")) {
      resp.error = j.at("error").get<std::string>();
    } else {
      resp.values = j.at("values").get<std::vector<double>>();
    }
    return resp;
  } catch (const json::exception& e) {
    throw BridgeProtocolError(std::string("malformed response: ") + e.what());
  }
}

ChildProcess::ChildProcess(const std::string& command) {
  int sv[2];
  if (socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
    throw BridgeError(std::string("socketpair failed: ") + std::strerror(errno));
  }
  pid_ = fork();
  if (pid_ < 0) {
    close(sv[0]);
    close(sv[1]);
    throw BridgeError(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid_ == 0) {
    // Own process group so teardown also reaches whatever the shell starts.
    setpgid(0, 0);
    dup2(sv[1], STDIN_FILENO);
    dup2(sv[1], STDOUT_FILENO);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  setpgid(pid_, pid_);
  close(sv[1]);
  fd_ = sv[0];
}

ChildProcess::~ChildProcess() {
  if (fd_ >= 0) close(fd_);
  if (pid_ <= 0) return;
  auto reaped = [&] {
    int status = 0;
    return wait_status_ || waitpid(pid_, &status, WNOHANG) == pid_;
  };
  bool done = false;
  for (int sig : {0, SIGTERM, SIGKILL}) {
    if (sig != 0) kill(-pid_, sig);
    for (int i = 0; i < 50 && !done; ++i) {
      done = reaped();
      if (!done) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    if (done) break;
  }
  if (!done) waitpid(pid_, nullptr, 0);
  kill(-pid_, SIGKILL);
}

std::optional<std::string> ChildProcess::exit_status() {
  if (!wait_status_) {
    int status = 0;
    if (waitpid(pid_, &status, WNOHANG) == pid_) wait_status_ = status;
  }
  if (!wait_status_) return std::nullopt;
  if (WIFEXITED(*wait_status_)) return "exited with status " + std::to_string(WEXITSTATUS(*wait_status_));
  if (WIFSIGNALED(*wait_status_)) return "killed by signal " + std::to_string(WTERMSIG(*wait_status_));
  return "terminated";
}

void ChildProcess::write_line(std::string_view line) {
  std::string data(line);
  data.push_back('\n');
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
      throw BridgeExitedError("bridge process " + exit_status().value_or("closed its input") +
                              " (write failed: " + std::strerror(errno) + ")");
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::string ChildProcess::read_line(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw BridgeTimeoutError("bridge process did not answer within " +
                                                    std::to_string(timeout.count()) + " ms");
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw BridgeError(std::string("poll failed: ") + std::strerror(errno));
    }
    if (ready == 0) continue;
    char chunk[65536];
    const ssize_t n = read(fd_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw BridgeExitedError(std::string("bridge read failed: ") + std::strerror(errno));
    }
    if (n == 0) {
      std::optional<std::string> status;
      for (int i = 0; i < 50 && !(status = exit_status()); ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
      throw BridgeExitedError("bridge process " + status.value_or("closed its output"));
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

BridgePredictor::BridgePredictor(BridgeOptions options)
    : options_(std::move(options)), child_(options_.command) {
  if (options_.max_batch == 0) throw InvalidArgument("bridge batch size must be positive");
  info_ = decode_handshake(child_.read_line(options_.timeout));
}

double BridgePredictor::predict(const Image& image) {
  return predict_batch(std::span<const Image>(&image, 1)).front();
}

std::vector<double> BridgePredictor::predict_batch(std::span<const Image> images) {
  std::lock_guard lock(mutex_);
  std::vector<double> out;
  out.reserve(images.size());
  for (std::size_t start = 0; start < images.size(); start += options_.max_batch) {
    const auto chunk = images.subspan(start, std::min(options_.max_batch, images.size() - start));
    const auto values = round_trip(chunk);
    out.insert(out.end(), values.begin(), values.end());
  }
  return out;
}

std::vector<double> BridgePredictor::round_trip(std::span<const Image> images) {
  const std::int64_t id = next_id_++;
  child_.write_line(encode_request(id, images));
  const BridgeResponse resp = decode_response(child_.read_line(options_.timeout));
  if (resp.id != id) {
    throw BridgeProtocolError("response id " + std::to_string(resp.id) + " does not match request id " +
                              std::to_string(id));
  }
  if (resp.error) throw BridgeProtocolError("bridge failed request " + std::to_string(id) + ": " + *resp.error);
  if (resp.values.size() != images.size()) {
    throw BridgeProtocolError("response " + std::to_string(id) + " carries " + std::to_string(resp.values.size()) +
                              " values for " + std::to_string(images.size()) + " images");
  }
  return resp.values;
}

void serve_bridge(std::istream& in, std::ostream& out, const PredictorInfo& info,
                  const std::function<double(const Image&)>& model) {
  out << encode_handshake(info) << '\n' << std::flush;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    BridgeResponse resp;
    resp.id = -1;
    try {
      const json j = json::parse(line, nullptr, false);
      if (j.is_object() && j.contains("id") && j.at("id").is_number_integer()) {
        resp.id = j.at("id").get<std::int64_t>();
      }
      const BridgeRequest req = decode_request(line);
      for (const auto& image : req.images) resp.values.push_back(model(image));
    } catch (const std::exception& e) {
      resp.values.clear();
      resp.error = e.what();
    }
    out << encode_response(resp) << '\n' << std::flush;
  }
}

}  // namespace xaibench
