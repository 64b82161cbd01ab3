#include "pgo/collector.hpp"

#include <atomic>
#include <fstream>
#include <functional>
#include <sstream>
#include <system_error>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "pgo/digest.hpp"
#include "pgo/error.hpp"
#include "pgo/profile_model.hpp"

namespace pgo {

namespace fs = std::filesystem;

bool is_text(std::string_view body) {
  std::size_t i = 0;
  while (i < body.size()) {
    const auto c = static_cast<unsigned char>(body[i]);
    if (c == 0) return false;
    std::size_t extra = 0;
    if (c < 0x80) {
      extra = 0;
    } else if ((c & 0xE0) == 0xC0 && c >= 0xC2) {
      extra = 1;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
    } else if ((c & 0xF8) == 0xF0 && c <= 0xF4) {
      extra = 3;
    } else {
      return false;
    }
    if (i + extra >= body.size() && extra > 0) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      if ((static_cast<unsigned char>(body[i + k]) & 0xC0) != 0x80) return false;
    }
    i += extra + 1;
  }
  return true;
}

BatchResult store_batch(std::string_view body, const fs::path& out_dir) {
  BatchResult r;
  std::string canonical;
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto end = body.find('\n', pos);
    if (end == std::string_view::npos) end = body.size();
    std::string_view line = body.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      canonical += serialize_record(parse_record(line));
      canonical += '\n';
      ++r.accepted;
    } catch (const Error&) {
      ++r.rejected;
    }
  }
  if (r.accepted == 0) return r;
  r.digest = sha256_hex(canonical);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  const fs::path target = out_dir / (r.digest + std::string(kBatchSuffix));
  if (fs::exists(target, ec)) return r;

  static std::atomic<std::uint64_t> counter{0};
  std::ostringstream tmp_name;
  tmp_name << "." << r.digest << "." << std::hash<std::thread::id>{}(std::this_thread::get_id()) << "."
           << counter.fetch_add(1) << ".tmp";
  const fs::path tmp = out_dir / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write to " + out_dir.string());
    out << canonical;
    out.flush();
    if (!out) {
      fs::remove(tmp, ec);
      throw Error(ErrorKind::Io, "short write to " + tmp.string());
    }
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::Io, "cannot rename into " + target.string());
  }
  r.written = true;
  return r;
}

struct CollectorServer::Impl {
  fs::path out_dir;
  httplib::Server server;
  std::thread thread;
};

CollectorServer::CollectorServer(fs::path out_dir) : impl_(std::make_unique<Impl>()) {
  impl_->out_dir = std::move(out_dir);
  auto& srv = impl_->server;
  const fs::path dir = impl_->out_dir;
  srv.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
  srv.Post("/v1/batch", [dir](const httplib::Request& req, httplib::Response& res) {
    if (!is_text(req.body)) {
      res.status = 400;
      res.set_content(R"({"error":"body is not UTF-8 text"})", "application/json");
      return;
    }
    try {
      const auto r = store_batch(req.body, dir);
      res.status = 202;
      res.set_content(nlohmann::ordered_json{{"accepted", r.accepted}, {"rejected", r.rejected}}.dump(),
                      "application/json");
    } catch (const Error& e) {
      res.status = 507;
      res.set_content(nlohmann::ordered_json{{"error", e.what()}}.dump(), "application/json");
    }
  });
}

CollectorServer::~CollectorServer() { stop(); }

int CollectorServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorKind::Io, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void CollectorServer::listen() { impl_->server.listen_after_bind(); }

void CollectorServer::start() {
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void CollectorServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace pgo
