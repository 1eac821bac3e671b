#include "sketchclean/service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <nlohmann/json.hpp>

#include "sketchclean/errors.hpp"
#include "sketchclean/train.hpp"

namespace sketchclean {

namespace {

std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

// Admission control: at most max_inflight concurrent handlers.
class InflightGuard {
 public:
  InflightGuard(std::atomic<std::size_t>& counter, std::size_t limit) : counter_(counter) {
    admitted_ = counter_.fetch_add(1) < limit;
  }
  ~InflightGuard() { counter_.fetch_sub(1); }
  bool admitted() const { return admitted_; }

 private:
  std::atomic<std::size_t>& counter_;
  bool admitted_ = false;
};

void apply(const HttpResponse& in, httplib::Response& out) {
  out.status = in.status;
  out.set_content(in.body, in.content_type);
}

}  // namespace

HttpResponse json_error(int status, std::string_view message) {
  nlohmann::json j = {{"code", status}, {"message", message}};
  return {status, "application/json", j.dump()};
}

std::string clean_to_png(const Network& net, const SketchRaster& input) {
  const auto bytes = encode_raster(clean_sketch(net, input), ImageFormat::kPng);
  return {bytes.begin(), bytes.end()};
}

SketchService::SketchService(std::shared_ptr<const ServiceState> state, ServiceOptions options)
    : state_(std::move(state)), options_(std::move(options)) {
  if (!state_) state_ = std::make_shared<const ServiceState>();
}

HttpResponse SketchService::health() const {
  nlohmann::json j = {{"status", "ok"},
                      {"model_loaded", state_->network.has_value()},
                      {"index_loaded", state_->index.has_value()}};
  if (state_->network) {
    j["input_size"] = state_->network->config.input_size;
    j["output_size"] = state_->network->config.output_size();
  }
  if (state_->index) j["index_size"] = state_->index->size();
  return {200, "application/json", j.dump()};
}

HttpResponse SketchService::clean(std::string_view body) const {
  if (!state_->network) return json_error(503, "model not loaded");
  if (body.empty()) return json_error(400, "empty request body");
  SketchRaster input;
  try {
    input = decode_raster(as_bytes(body));
  } catch (const std::exception& e) {
    return json_error(400, std::string("cannot decode image: ") + e.what());
  }
  return {200, "image/png", clean_to_png(*state_->network, input)};
}

HttpResponse SketchService::retrieve(std::string_view image, std::string_view k_text) const {
  if (!state_->index) return json_error(503, "index not loaded");
  if (!state_->network) return json_error(503, "model not loaded");
  if (image.empty()) return json_error(400, "missing image");
  std::size_t k = 10;
  if (!k_text.empty()) {
    try {
      std::size_t used = 0;
      const long long parsed = std::stoll(std::string(k_text), &used);
      if (used != k_text.size() || parsed < 1) return json_error(400, "k must be a positive integer");
      k = static_cast<std::size_t>(parsed);
    } catch (const std::exception&) {
      return json_error(400, "k must be a positive integer");
    }
  }
  if (k > state_->index->size()) return json_error(400, "k exceeds index size");
  SketchRaster input;
  try {
    input = decode_raster(as_bytes(image));
  } catch (const std::exception& e) {
    return json_error(400, std::string("cannot decode image: ") + e.what());
  }
  const auto hits = query(*state_->index, embed(clean_sketch(*state_->network, input)), k);
  nlohmann::json out = nlohmann::json::array();
  for (const auto& hit : hits) out.push_back({{"id", hit.id}, {"label", hit.label}, {"similarity", hit.similarity}});
  return {200, "application/json", out.dump()};
}

HttpResponse SketchService::thumbnail(const std::string& id) const {
  if (!state_->index) return json_error(503, "index not loaded");
  if (state_->index->find(id) == nullptr) return json_error(404, "unknown item id");
  if (!options_.dataset_root) return json_error(404, "no dataset directory configured");
  try {
    const auto raster = load_raster(*options_.dataset_root / "clean" / (id + ".png"));
    const auto bytes = encode_raster(raster, ImageFormat::kPng);
    return {200, "image/png", std::string(bytes.begin(), bytes.end())};
  } catch (const std::exception& e) {
    return json_error(404, e.what());
  }
}

void SketchService::mount(httplib::Server& server) const {
  const auto guarded = [this](auto&& handler) {
    return [this, handler](const httplib::Request& req, httplib::Response& res) {
      InflightGuard guard(inflight_, options_.max_inflight);
      if (!guard.admitted()) {
        apply(json_error(503, "server busy"), res);
        return;
      }
      const auto started = std::chrono::steady_clock::now();
      HttpResponse out;
      try {
        out = handler(req);
      } catch (const std::exception& e) {
        out = json_error(500, e.what());
      }
      if (std::chrono::steady_clock::now() - started > options_.timeout) out = json_error(503, "deadline exceeded");
      spdlog::debug("{} {} -> {}", req.method, req.path, out.status);
      apply(out, res);
    };
  };

  server.Get("/health", guarded([this](const httplib::Request&) { return health(); }));
  server.Post("/clean", guarded([this](const httplib::Request& req) { return clean(req.body); }));
  server.Post("/retrieve", guarded([this](const httplib::Request& req) {
                if (!req.is_multipart_form_data()) return json_error(400, "expected multipart/form-data");
                const std::string image = req.has_file("image") ? req.get_file_value("image").content : std::string();
                const std::string k = req.has_file("k") ? req.get_file_value("k").content : std::string();
                return retrieve(image, k);
              }));
  server.Get(R"(/items/([^/]+)/thumbnail)",
             guarded([this](const httplib::Request& req) { return thumbnail(req.matches[1].str()); }));
}

bool SketchService::listen(const std::string& host, int port) const {
  httplib::Server server;
  const std::size_t threads = options_.worker_threads;
  const std::size_t queue = options_.max_inflight;
  server.new_task_queue = [threads, queue] { return new httplib::ThreadPool(threads, queue); };
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout).count();
  server.set_read_timeout(std::max<long long>(1, seconds), 0);
  server.set_write_timeout(std::max<long long>(1, seconds), 0);
  mount(server);
  spdlog::info("listening on {}:{}", host, port);
  return server.listen(host, port);
}

}  // namespace sketchclean
