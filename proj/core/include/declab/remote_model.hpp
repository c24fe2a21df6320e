#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "declab/language_model.hpp"
#include "declab/tree_model.hpp"

namespace declab::remote {

/// Newline-delimited record stream. One JSON record per line, one response
/// per request.
class LineTransport {
public:
  virtual ~LineTransport() = default;
  virtual void send_line(const std::string& line) = 0;
  /// nullopt on clean end-of-stream.
  virtual std::optional<std::string> receive_line() = 0;
};

/// Transport over arbitrary iostreams (standard I/O, pipes, string streams).
class StreamTransport final : public LineTransport {
public:
  StreamTransport(std::istream& in, std::ostream& out) : in_(in), out_(out) {}
  void send_line(const std::string& line) override;
  std::optional<std::string> receive_line() override;

private:
  std::istream& in_;
  std::ostream& out_;
};

/// Client-side TCP connection to host:port.
class TcpTransport final : public LineTransport {
public:
  TcpTransport(const std::string& host, std::uint16_t port);
  explicit TcpTransport(int connected_fd) : fd_(connected_fd) {}
  ~TcpTransport() override;
  TcpTransport(const TcpTransport&) = delete;
  TcpTransport& operator=(const TcpTransport&) = delete;

  void send_line(const std::string& line) override;
  std::optional<std::string> receive_line() override;

private:
  int fd_ = -1;
  std::string buffer_;
};

/// Accepts TCP connections; port 0 binds an ephemeral port. Used by tests and
/// by peers that serve a model over the wire.
class TcpListener {
public:
  explicit TcpListener(std::uint16_t port = 0);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }
  std::unique_ptr<LineTransport> accept_one();

private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

/// Wire protocol, one JSON record per line:
///   {"op":"meta"}                  -> {"tokens":[...], "max_depth":N|-1}
///   {"op":"next","ids":[...]}      -> {"logprobs":[...V natural logs...]}
/// ids is the full history (prompt followed by generated tokens). A response
/// with non-finite entries, the wrong arity, or exp-sum off 1 by more than
/// 1e-6 is a protocol error.
class RemoteModel final : public LanguageModel {
public:
  /// Performs the metadata exchange immediately.
  explicit RemoteModel(std::unique_ptr<LineTransport> transport);

  const Vocabulary& vocabulary() const override { return *vocabulary_; }
  std::size_t max_enumeration_depth() const override { return max_depth_; }
  ConditionalDistribution next(const Context& context,
                               const TokenSequence& partial) const override;

private:
  std::unique_ptr<LineTransport> transport_;
  std::unique_ptr<Vocabulary> vocabulary_;
  std::size_t max_depth_ = kUnlimitedDepth;
  // One request in flight at a time; responses are memoized so identical
  // queries hit the wire once per run.
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::vector<TokenId>, std::vector<double>,
                             TokenVectorHash>
      cache_;
};

/// Answers meta/next requests against a local model until end-of-stream.
void serve_model(const LanguageModel& model, LineTransport& transport);

}  // namespace declab::remote
