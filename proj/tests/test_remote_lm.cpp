#include <doctest.h>

#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <thread>

#include "stegomark/errors.hpp"
#include "stegomark/fixtures.hpp"
#include "stegomark/remote_lm.hpp"

using namespace stegomark;

TEST_CASE("remote model matches the local one over a socketpair") {
  Tokenizer tk = fixtures::ambiguous_tokenizer();
  NGramLm local = fixtures::fixture_ngram(tk);

  int fds[2];
  REQUIRE(::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) == 0);
  std::thread server([&] { serve_model(local, fds[1], fds[1]); });

  {
    RemoteLm remote(fds[0], fds[0], local.vocab_size());
    std::vector<int> ctx = tk.encode(" the cat").ids;
    auto a = local.next_distribution(ctx);
    auto b = remote.next_distribution(ctx);
    REQUIRE(a.probs.size() == b.probs.size());
    for (size_t i = 0; i < a.probs.size(); ++i)
      CHECK(a.probs[i] == doctest::Approx(b.probs[i]).epsilon(1e-12));

    auto c = remote.next_distribution(std::vector<int>{});
    CHECK(c.probs.size() == a.probs.size());
  }  // closing the client ends the server loop
  server.join();
}

TEST_CASE("error frames surface as transport errors") {
  Tokenizer tk = fixtures::ambiguous_tokenizer();
  NGramLm local = fixtures::fixture_ngram(tk);

  int fds[2];
  REQUIRE(::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) == 0);
  std::thread server([&] { serve_model(local, fds[1], fds[1]); });
  {
    RemoteLm remote(fds[0], fds[0], local.vocab_size());
    // out-of-range history id makes the server answer with an error frame
    CHECK_THROWS_AS(
        remote.next_distribution(std::vector<int>{999999}),
        TransportError);
  }
  server.join();
}

TEST_CASE("protocol violations are transport errors") {
  int fds[2];
  REQUIRE(::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) == 0);
  std::thread peer([&] {
    // reply with garbage, then close
    char buf[512];
    ssize_t n = ::read(fds[1], buf, sizeof(buf));
    (void)n;
    const char* junk = "this is not json\n";
    ssize_t w = ::write(fds[1], junk, strlen(junk));
    (void)w;
    ::close(fds[1]);
  });
  {
    RemoteLm remote(fds[0], fds[0], 8);
    CHECK_THROWS_AS(remote.next_distribution(std::vector<int>{1}),
                    TransportError);
  }
  peer.join();
}
