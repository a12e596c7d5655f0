#pragma once

#include <atomic>
#include <memory>
#include <string>

#include "stegomark/lm.hpp"

namespace stegomark {

// Newline-delimited JSON over a byte stream (pipe pair or TCP).
//
//   request:  {"history":[ids...]}
//   response: {"probs":[...]} or {"logits":[...]}
//   error:    {"error":"message"}
//
// Synchronous request/response; one outstanding request per connection.
class RemoteLm final : public LanguageModel {
 public:
  // Takes ownership of the descriptors (may be the same for a socket).
  RemoteLm(int read_fd, int write_fd, int vocab_size);
  ~RemoteLm() override;

  RemoteLm(const RemoteLm&) = delete;
  RemoteLm& operator=(const RemoteLm&) = delete;

  static std::unique_ptr<RemoteLm> connect_tcp(const std::string& host,
                                               int port, int vocab_size);

  int vocab_size() const override { return vocab_size_; }
  LmDistribution next_distribution(std::span<const int> history) const override;

 private:
  int read_fd_;
  int write_fd_;
  int vocab_size_;
  mutable std::string buffer_;  // partial line carried between reads
};

// Serves `model` over the descriptor pair until EOF or `stop` becomes true.
// Malformed requests are answered with an error frame.
void serve_model(const LanguageModel& model, int read_fd, int write_fd,
                 const std::atomic<bool>* stop = nullptr);

// Listens on `port` (localhost) and serves one connection at a time.
void serve_model_tcp(const LanguageModel& model, int port,
                     const std::atomic<bool>* stop = nullptr);

}  // namespace stegomark
