#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "citeassist/error.hpp"
#include "citeassist/related.hpp"
#include "citeassist/store.hpp"

namespace citeassist::service {

struct ServiceConfig {
  std::string bind_addr = "127.0.0.1:8080";  // host:port; port 0 picks a free one
  std::string db_url;                        // empty: <data_dir>/citeassist.db
  std::filesystem::path data_dir = "citeassist-data";
  std::optional<std::string> extractor_url;
  int extractor_timeout_seconds = 30;
  std::size_t max_upload_bytes = 50u * 1024 * 1024;
  // Prefix for webview links embedded in annotations, e.g.
  // "https://preprints.example.org". Empty gives site-relative links.
  std::string public_base_url;
  related::ResolverConfig resolver;
  std::optional<std::filesystem::path> static_dir;  // web UI assets served at /
  int threads = 8;
  bool log_requests = true;  // one JSON line per request on stdout
};

using EnvLookup = std::function<std::optional<std::string>(const char*)>;
std::optional<std::string> process_env(const char* name);

// JSON file keys: bind_addr, db_url, data_dir, extractor_url,
// extractor_timeout_seconds, max_upload_bytes, public_base_url, static_dir,
// threads, resolver.{doi_base, arxiv_base, timeout_seconds}. Environment
// (CITEASSIST_DB_URL, CITEASSIST_DATA_DIR, CITEASSIST_BIND_ADDR,
// CITEASSIST_EXTRACTOR_URL) wins over the file. Errors: InvalidInput.
ServiceConfig load_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env = process_env);

// host, port
std::pair<std::string, int> split_bind_addr(const std::string& addr);

int http_status(ErrorCode code);

class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds the listening socket and returns the port. Errors: InvalidInput
  // when the address cannot be bound.
  int bind();
  // Serves until stop(); requests in flight finish first.
  void listen();
  // bind() + listen() on a background thread.
  int start();
  void stop();

  int port() const;
  store::Store& store();
  const ServiceConfig& config() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace citeassist::service
