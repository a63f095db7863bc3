#include "delta/server.hpp"

#include <random>

#include <httplib.h>

#include "delta/decoder.hpp"

namespace delta {

namespace {

ServiceResponse error_response(int status, std::string_view message) {
  return {status, Json{{"error", std::string(message)}}};
}

std::uint64_t fresh_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace

DecodeService::DecodeService(const LogitSource& source, DecodeConfig defaults,
                             TraceOptions trace_options)
    : source_(source), defaults_(std::move(defaults)), trace_options_(trace_options) {}

ServiceResponse DecodeService::decode(std::string_view request_body) const {
  Json request;
  try {
    request = Json::parse(request_body);
  } catch (const nlohmann::json::parse_error& e) {
    return error_response(400, std::string("malformed JSON: ") + e.what());
  }
  if (!request.is_object()) return error_response(400, "request must be a JSON object");

  DecodeConfig config = defaults_;
  bool include_trace = false;
  try {
    if (auto it = request.find("overrides"); it != request.end() && !it->is_null()) {
      apply_config_overrides(config, *it, &source_.vocabulary());
      if (!it->contains("seed")) config.seed = fresh_seed();
    } else {
      config.seed = fresh_seed();
    }
    if (auto it = request.find("include_trace"); it != request.end()) {
      if (!it->is_boolean()) return error_response(400, "include_trace must be a boolean");
      include_trace = it->get<bool>();
    }
    config = resolve_config(config, source_.vocabulary());
  } catch (const Error& e) {
    return error_response(400, e.what());
  }

  auto prompt_it = request.find("prompt");
  if (prompt_it == request.end() || prompt_it->is_null()) {
    return error_response(422, "prompt is required");
  }
  if (!prompt_it->is_string()) return error_response(400, "prompt must be a string");
  const TokenSequence prompt = tokenize(prompt_it->get<std::string>(), source_.vocabulary());
  if (prompt.empty()) return error_response(422, "prompt is empty");

  try {
    const DecodeResult result = generate(prompt, config, source_);
    Json body = result_to_json(result, source_.vocabulary(), include_trace, trace_options_);
    body["config"] = config_to_json(config, &source_.vocabulary());
    return {200, std::move(body)};
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

ServiceResponse DecodeService::health() const {
  return {200, Json{{"status", "ok"},
                    {"backend", std::string(source_.kind())},
                    {"vocab_size", source_.vocab_size()}}};
}

struct HttpServer::Impl {
  const DecodeService& service;
  httplib::Server server;

  explicit Impl(const DecodeService& s) : service(s) {
    auto reply = [](httplib::Response& res, const ServiceResponse& r) {
      res.status = r.status;
      res.set_content(r.body.dump(), "application/json; charset=utf-8");
    };
    server.Post("/v1/decode", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, service.decode(req.body));
    });
    server.Get("/v1/health", [this, reply](const httplib::Request&, httplib::Response& res) {
      reply(res, service.health());
    });
  }
};

HttpServer::HttpServer(const DecodeService& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host)
                              : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::io, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace delta
