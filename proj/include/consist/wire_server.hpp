#pragma once

#include "consist/lm.hpp"

namespace httplib {
class Server;
}

namespace consist {

// Mounts the /v1 wire-protocol routes (meta, logprobs, tokenize, detokenize)
// backed by `lm`, which must outlive the server.
void register_wire_routes(httplib::Server& server, const LmBackend& lm);

}  // namespace consist
