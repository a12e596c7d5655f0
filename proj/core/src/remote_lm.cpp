#include "stegomark/remote_lm.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cmath>
#include <cerrno>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "stegomark/errors.hpp"

namespace stegomark {

namespace {

void write_all(int fd, std::string_view data) {
  size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n <= 0) throw TransportError("write failed on remote LM stream");
    off += size_t(n);
  }
}

// Reads one newline-terminated line, carrying partial data in `buffer`.
std::string read_line(int fd, std::string& buffer) {
  for (;;) {
    size_t nl = buffer.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      return line;
    }
    char chunk[4096];
    ssize_t n = ::read(fd, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK)
        throw TransportError("remote LM timed out");
      throw TransportError("read failed on remote LM stream");
    }
    if (n == 0) throw TransportError("remote LM stream closed");
    buffer.append(chunk, size_t(n));
  }
}

}  // namespace

RemoteLm::RemoteLm(int read_fd, int write_fd, int vocab_size)
    : read_fd_(read_fd), write_fd_(write_fd), vocab_size_(vocab_size) {}

RemoteLm::~RemoteLm() {
  if (read_fd_ >= 0) ::close(read_fd_);
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
}

std::unique_ptr<RemoteLm> RemoteLm::connect_tcp(const std::string& host,
                                                int port, int vocab_size) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw TransportError("cannot create socket");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(uint16_t(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw TransportError("bad remote LM address: " + host);
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw TransportError("cannot connect to remote LM at " + host + ":" +
                         std::to_string(port));
  }
  timeval timeout{30, 0};
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &timeout, sizeof(timeout));
  return std::make_unique<RemoteLm>(fd, fd, vocab_size);
}

LmDistribution RemoteLm::next_distribution(std::span<const int> history) const {
  nlohmann::json req;
  req["history"] = std::vector<int>(history.begin(), history.end());
  write_all(write_fd_, req.dump() + "\n");

  std::string line = read_line(read_fd_, buffer_);
  nlohmann::json resp;
  try {
    resp = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("remote LM protocol violation: ") +
                         e.what());
  }
  if (resp.contains("error"))
    throw TransportError("remote LM error: " +
                         resp["error"].get<std::string>());

  LmDistribution dist;
  if (resp.contains("probs")) {
    dist.probs = resp["probs"].get<std::vector<double>>();
    dist.logits.resize(dist.probs.size());
    for (size_t i = 0; i < dist.probs.size(); ++i)
      dist.logits[i] = dist.probs[i] > 0.0
                           ? std::log(dist.probs[i])
                           : -std::numeric_limits<double>::infinity();
  } else if (resp.contains("logits")) {
    dist.logits = resp["logits"].get<std::vector<double>>();
    double mx = *std::max_element(dist.logits.begin(), dist.logits.end());
    dist.probs.resize(dist.logits.size());
    double sum = 0.0;
    for (size_t i = 0; i < dist.logits.size(); ++i) {
      dist.probs[i] = std::exp(dist.logits[i] - mx);
      sum += dist.probs[i];
    }
    for (auto& p : dist.probs) p /= sum;
  } else {
    throw TransportError("remote LM protocol violation: missing probs/logits");
  }
  if (int(dist.probs.size()) != vocab_size_)
    throw TransportError("remote LM vocabulary size mismatch");
  return dist;
}

void serve_model(const LanguageModel& model, int read_fd, int write_fd,
                 const std::atomic<bool>* stop) {
  std::string buffer;
  for (;;) {
    if (stop && stop->load()) return;
    std::string line;
    try {
      line = read_line(read_fd, buffer);
    } catch (const TransportError&) {
      return;  // peer closed
    }
    nlohmann::json resp;
    try {
      nlohmann::json req = nlohmann::json::parse(line);
      std::vector<int> history = req.at("history").get<std::vector<int>>();
      for (int id : history)
        if (id < 0 || id >= model.vocab_size())
          throw ParseError("history id out of range");
      LmDistribution dist = model.next_distribution(history);
      resp["probs"] = dist.probs;
    } catch (const std::exception& e) {
      resp = nlohmann::json{{"error", e.what()}};
    }
    try {
      write_all(write_fd, resp.dump() + "\n");
    } catch (const TransportError&) {
      return;
    }
  }
}

void serve_model_tcp(const LanguageModel& model, int port,
                     const std::atomic<bool>* stop) {
  int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) throw TransportError("cannot create socket");
  int one = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(uint16_t(port));
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(listener);
    throw TransportError("cannot bind port " + std::to_string(port));
  }
  if (::listen(listener, 1) != 0) {
    ::close(listener);
    throw TransportError("cannot listen on port " + std::to_string(port));
  }
  while (!(stop && stop->load())) {
    int conn = ::accept(listener, nullptr, nullptr);
    if (conn < 0) break;
    serve_model(model, conn, conn, stop);
    ::close(conn);
  }
  ::close(listener);
}

std::unique_ptr<LanguageModel> load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open model file: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
  std::string kind = j.value("kind", "");
  if (kind == "ngram") {
    return std::make_unique<NGramLm>(NGramLm::from_json_string(j.dump()));
  }
  if (kind == "hash") {
    return std::make_unique<HashLm>(HashLm(
        j.at("vocab_size").get<int>(), j.at("context").get<int>(),
        from_hex(j.at("key").get<std::string>()),
        j.at("concentration").get<double>()));
  }
  if (kind == "remote") {
    return RemoteLm::connect_tcp(j.at("host").get<std::string>(),
                                 j.at("port").get<int>(),
                                 j.at("vocab_size").get<int>());
  }
  throw ParseError("model file: unknown kind '" + kind + "'");
}

}  // namespace stegomark
