#pragma once

// HTTP decode service.
//   POST /v1/decode  {"prompt": str, "overrides": {...}, "include_trace": bool}
//     200 {"text","tokens","stop_reason","config","trace"?}
//     400 invalid request or config, 422 empty prompt, 500 backend failure
//   GET  /v1/health  {"status":"ok","backend":kind,"vocab_size":n}
// A request without an explicit seed gets a freshly drawn one, echoed in
// "config" so the response can be replayed.

#include <memory>
#include <string>
#include <string_view>

#include "delta/backend.hpp"
#include "delta/serialize.hpp"

namespace delta {

struct ServiceResponse {
  int status = 200;
  Json body;
};

class DecodeService {
public:
  DecodeService(const LogitSource& source, DecodeConfig defaults, TraceOptions trace_options = {});

  ServiceResponse decode(std::string_view request_body) const;
  ServiceResponse health() const;

private:
  const LogitSource& source_;
  DecodeConfig defaults_;
  TraceOptions trace_options_;
};

class HttpServer {
public:
  explicit HttpServer(const DecodeService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port or throws.
  int bind(const std::string& host, int port);
  /// Blocks serving requests until stop().
  void listen();
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace delta
