// Serves an n-gram backend over the /v1 wire protocol, mostly for driving
// HttpLm conformance checks and remote-backend demos.

#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "consist/lm.hpp"
#include "consist/wire_server.hpp"
#include "httplib.h"

int main(int argc, char** argv) {
  CLI::App app{"consist wire-protocol stub server"};
  std::string corpus;
  int order = 2;
  double lambda = 1.0;
  std::string host = "127.0.0.1";
  int port = 8080;
  app.add_option("--corpus", corpus, "corpus file, one sentence per line")->required();
  app.add_option("--order", order, "n-gram order");
  app.add_option("--lambda", lambda, "add-lambda smoothing");
  app.add_option("--host", host, "bind address");
  app.add_option("--port", port, "port (0 picks a free one)");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto lm = consist::NgramLm::build_from_file(corpus, order, lambda);
    httplib::Server server;
    consist::register_wire_routes(server, lm);
    if (port == 0) {
      port = server.bind_to_any_port(host);
      std::printf("listening on %s:%d\n", host.c_str(), port);
      std::fflush(stdout);
      server.listen_after_bind();
    } else {
      std::printf("listening on %s:%d\n", host.c_str(), port);
      std::fflush(stdout);
      server.listen(host, port);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
