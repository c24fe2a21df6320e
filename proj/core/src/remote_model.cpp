#include "declab/remote_model.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

#include "declab/errors.hpp"

namespace declab::remote {
namespace {

using nlohmann::json;

json parse_record(const std::string& line, const char* side) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed ") + side + " record: " + e.what());
  }
}

}  // namespace

void StreamTransport::send_line(const std::string& line) {
  out_ << line << '\n';
  out_.flush();
  if (!out_) throw ProtocolError("failed to write to remote stream");
}

std::optional<std::string> StreamTransport::receive_line() {
  std::string line;
  if (!std::getline(in_, line)) return std::nullopt;
  return line;
}

TcpTransport::TcpTransport(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const std::string service = std::to_string(port);
  if (getaddrinfo(host.c_str(), service.c_str(), &hints, &result) != 0) {
    throw ProtocolError("cannot resolve " + host + ":" + service);
  }
  int fd = -1;
  for (addrinfo* rp = result; rp != nullptr; rp = rp->ai_next) {
    fd = ::socket(rp->ai_family, rp->ai_socktype, rp->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, rp->ai_addr, rp->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  freeaddrinfo(result);
  if (fd < 0) {
    throw ProtocolError("cannot connect to " + host + ":" + service);
  }
  fd_ = fd;
}

TcpTransport::~TcpTransport() {
  if (fd_ >= 0) ::close(fd_);
}

void TcpTransport::send_line(const std::string& line) {
  std::string payload = line;
  payload.push_back('\n');
  std::size_t sent = 0;
  while (sent < payload.size()) {
    const ssize_t n = ::send(fd_, payload.data() + sent, payload.size() - sent, 0);
    if (n <= 0) throw ProtocolError("failed to write to remote socket");
    sent += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> TcpTransport::receive_line() {
  while (true) {
    const auto newline = buffer_.find('\n');
    if (newline != std::string::npos) {
      std::string line = buffer_.substr(0, newline);
      buffer_.erase(0, newline + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    char chunk[4096];
    const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
    if (n < 0) throw ProtocolError("failed to read from remote socket");
    if (n == 0) {
      if (buffer_.empty()) return std::nullopt;
      std::string line = std::move(buffer_);
      buffer_.clear();
      return line;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

TcpListener::TcpListener(std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw ProtocolError("cannot create listening socket");
  const int enable = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &enable, sizeof(enable));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(fd_, 4) != 0) {
    ::close(fd_);
    throw ProtocolError("cannot bind/listen on port " + std::to_string(port));
  }
  socklen_t len = sizeof(addr);
  if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    ::close(fd_);
    throw ProtocolError("cannot read bound port");
  }
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<LineTransport> TcpListener::accept_one() {
  const int client = ::accept(fd_, nullptr, nullptr);
  if (client < 0) throw ProtocolError("accept failed");
  return std::make_unique<TcpTransport>(client);
}

RemoteModel::RemoteModel(std::unique_ptr<LineTransport> transport)
    : transport_(std::move(transport)) {
  transport_->send_line(R"({"op":"meta"})");
  const auto line = transport_->receive_line();
  if (!line) throw ProtocolError("remote model closed during metadata exchange");
  const json meta = parse_record(*line, "metadata");
  if (meta.contains("error")) {
    throw ProtocolError("remote model error: " + meta["error"].get<std::string>());
  }
  try {
    vocabulary_ = std::make_unique<Vocabulary>(
        meta.at("tokens").get<std::vector<std::string>>());
    const auto depth = meta.value("max_depth", static_cast<std::int64_t>(-1));
    max_depth_ = depth < 0 ? kUnlimitedDepth : static_cast<std::size_t>(depth);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad metadata record: ") + e.what());
  }
}

ConditionalDistribution RemoteModel::next(const Context& context,
                                          const TokenSequence& partial) const {
  const TokenSequence full = concat(context.prompt, partial);
  for (TokenId id : full.ids) {
    if (!vocabulary_->contains(id)) {
      throw InputError("token id " + std::to_string(id) + " out of range");
    }
  }
  std::lock_guard lock(mutex_);
  if (auto it = cache_.find(full.ids); it != cache_.end()) {
    return ConditionalDistribution(it->second);
  }

  json request;
  request["op"] = "next";
  request["ids"] = full.ids;
  transport_->send_line(request.dump());
  const auto line = transport_->receive_line();
  if (!line) throw ProtocolError("remote model closed mid-request");
  const json response = parse_record(*line, "response");
  if (response.contains("error")) {
    throw ProtocolError("remote model error: " +
                        response["error"].get<std::string>());
  }
  std::vector<double> logprobs;
  try {
    logprobs = response.at("logprobs").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad response record: ") + e.what());
  }
  if (logprobs.size() != vocabulary_->size()) {
    throw ProtocolError("response has " + std::to_string(logprobs.size()) +
                        " log-probabilities, vocabulary has " +
                        std::to_string(vocabulary_->size()));
  }
  double sum = 0.0;
  std::vector<double> probs(logprobs.size());
  for (std::size_t i = 0; i < logprobs.size(); ++i) {
    if (std::isnan(logprobs[i]) ||
        logprobs[i] == std::numeric_limits<double>::infinity()) {
      throw ProtocolError("response log-probability " + std::to_string(i) +
                          " is not finite");
    }
    probs[i] = std::exp(logprobs[i]);
    sum += probs[i];
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw ProtocolError("response probabilities sum to " + std::to_string(sum) +
                        ", off 1 by more than 1e-6");
  }
  for (auto& p : probs) p /= sum;
  cache_.emplace(full.ids, probs);
  return ConditionalDistribution(std::move(probs));
}

void serve_model(const LanguageModel& model, LineTransport& transport) {
  while (true) {
    const auto line = transport.receive_line();
    if (!line || line->empty()) return;
    json response;
    try {
      const json request = parse_record(*line, "request");
      const auto op = request.value("op", "");
      if (op == "meta") {
        response["tokens"] = model.vocabulary().tokens();
        const std::size_t depth = model.max_enumeration_depth();
        response["max_depth"] =
            depth == kUnlimitedDepth ? -1 : static_cast<std::int64_t>(depth);
      } else if (op == "next") {
        const auto ids = request.at("ids").get<std::vector<TokenId>>();
        const auto dist = model.next(Context{}, TokenSequence{ids});
        std::vector<double> logprobs(dist.size());
        for (std::size_t i = 0; i < dist.size(); ++i) {
          // JSON has no -inf; zero probabilities travel as a log deep enough
          // that exp() returns exactly 0.
          logprobs[i] = dist[i] > 0.0 ? std::log(dist[i]) : -1e9;
        }
        response["logprobs"] = logprobs;
      } else {
        response["error"] = "unknown op \"" + op + "\"";
      }
    } catch (const std::exception& e) {
      response = json{{"error", e.what()}};
    }
    transport.send_line(response.dump());
  }
}

}  // namespace declab::remote
