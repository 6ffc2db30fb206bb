#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "progfill/inference.hpp"

namespace httplib {
class Server;
}

namespace progfill {

struct ServiceOptions {
  std::size_t max_payload_bytes = 16u << 20;
};

// HTTP front end over one frozen model:
//   POST /complete  multipart fields "image" (PNG), "mask" (PNG), optional
//                   "attributes" (JSON object name -> 0|1) and
//                   "output_resolution"; answers image/png with the
//                   consumed attribute vector echoed in X-Attributes
//   GET  /model     {"stage", "attributes", "version", "step"}
//   GET  /health    {"status", "requests", "forwards"}
// Failures answer {"code", "message"}: 400 for malformed input, 413 for
// oversized payloads or images larger than the model stage.
class CompletionService {
 public:
  explicit CompletionService(const Model& model, ServiceOptions options = {});
  ~CompletionService();
  CompletionService(const CompletionService&) = delete;
  CompletionService& operator=(const CompletionService&) = delete;

  // Binds and serves on a background thread. Port 0 picks a free port.
  // Returns the bound port; throws std::runtime_error if binding fails.
  int start(const std::string& host, int port);
  // Binds and serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

  const CompletionEngine& engine() const { return engine_; }
  std::uint64_t requests() const { return requests_.load(); }

 private:
  void install_routes();

  const Model& model_;
  CompletionEngine engine_;
  ServiceOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::atomic<std::uint64_t> requests_{0};
};

}  // namespace progfill
