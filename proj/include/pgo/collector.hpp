#pragma once

// Profile collector: accepts newline-delimited record batches over HTTP and
// stores each batch under its content digest.
//
//   POST /v1/batch   202 {"accepted":n,"rejected":m}
//                    400 for bodies that are not UTF-8 text
//                    507 when the output directory is not writable
//   GET  /healthz    200 "ok"

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

namespace pgo {

inline constexpr std::string_view kBatchSuffix = ".pgoprof.jsonl";

struct BatchResult {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::string digest;   // empty when nothing was accepted
  bool written = false;  // false when a file with this digest already existed
};

bool is_text(std::string_view body);

/// Validates each line independently, then writes the accepted records in
/// canonical form to `<digest>.pgoprof.jsonl` via a temporary file and an
/// atomic rename. Throws Error(Io) when out_dir cannot be written.
BatchResult store_batch(std::string_view body, const std::filesystem::path& out_dir);

class CollectorServer {
 public:
  explicit CollectorServer(std::filesystem::path out_dir);
  ~CollectorServer();
  CollectorServer(const CollectorServer&) = delete;
  CollectorServer& operator=(const CollectorServer&) = delete;

  /// Binds host:port (port 0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port);
  void listen();  // blocks until stop()
  void start();   // listen() on a background thread
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pgo
