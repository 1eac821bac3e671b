#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "sketchclean/model.hpp"
#include "sketchclean/retrieval.hpp"

namespace httplib {
class Server;
}

namespace sketchclean {

struct HttpResponse {
  int status = 200;
  std::string content_type;
  std::string body;
};

struct ServiceOptions {
  std::optional<std::filesystem::path> dataset_root;  // source of item thumbnails
  std::size_t worker_threads = 4;
  std::size_t max_inflight = 8;  // requests beyond this are answered 503
  std::chrono::milliseconds timeout{10000};
};

/// Immutable model/index snapshot shared by all request handlers.
struct ServiceState {
  std::optional<Network> network;
  std::optional<RetrievalIndex> index;
};

/// Request handlers, independent of the transport so they can be tested directly.
class SketchService {
 public:
  SketchService(std::shared_ptr<const ServiceState> state, ServiceOptions options);

  HttpResponse health() const;
  /// PNG (or PGM) in, cleaned PNG out.
  HttpResponse clean(std::string_view body) const;
  /// Clean-then-embed; JSON array of {id, label, similarity}, most similar first.
  HttpResponse retrieve(std::string_view image, std::string_view k_text) const;
  HttpResponse thumbnail(const std::string& id) const;

  /// Registers POST /clean, POST /retrieve, GET /health, GET /items/{id}/thumbnail.
  void mount(httplib::Server& server) const;
  /// Blocks until the server stops.
  bool listen(const std::string& host, int port) const;

  const ServiceOptions& options() const { return options_; }

 private:
  std::shared_ptr<const ServiceState> state_;
  ServiceOptions options_;
  mutable std::atomic<std::size_t> inflight_{0};
};

HttpResponse json_error(int status, std::string_view message);

/// Same bytes the CLI `clean` subcommand writes.
std::string clean_to_png(const Network& net, const SketchRaster& input);

}  // namespace sketchclean
