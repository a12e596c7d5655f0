// Serves a model file over the newline-delimited JSON protocol on localhost.

#include <iostream>

#include <CLI11.hpp>

#include "stegomark/lm.hpp"
#include "stegomark/remote_lm.hpp"

using namespace stegomark;

int main(int argc, char** argv) {
  CLI::App app{"remote language-model server"};
  std::string model_path;
  int port = 7481;
  app.add_option("--model", model_path, "model file to serve")->required();
  app.add_option("--port", port, "TCP port on localhost");

  CLI11_PARSE(app, argc, argv);

  try {
    std::unique_ptr<LanguageModel> lm = load_model(model_path);
    std::cout << "serving vocab " << lm->vocab_size() << " on 127.0.0.1:"
              << port << "\n";
    serve_model_tcp(*lm, port);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
