#pragma once

// Eigen must be parsed before httplib: <resolv.h>, which httplib pulls in,
// defines `_res` as a macro and Eigen uses that name for parameters.
#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "driftscope/binary_io.hpp"
#include "driftscope/errors.hpp"
#include "driftscope/session.hpp"

// Read-only HTTP API over a Session. Per-particle arrays travel as
// little-endian binary bodies, small structured results as JSON.
namespace driftscope::http {

/// Rejected request; carries the HTTP status to send.
struct RequestError : Error {
  int status;
  RequestError(int code, const std::string& msg) : Error(msg), status(code) {}
};

namespace detail {

inline std::string param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) throw RequestError(400, std::string("missing query parameter '") + name + "'");
  return req.get_param_value(name);
}

inline double parse_real(const std::string& text, const char* name) {
  double v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
    throw RequestError(400, std::string("parameter '") + name + "' is not a finite number: '" + text + "'");
  return v;
}

inline std::uint64_t parse_count(const std::string& text, const char* name) {
  std::uint64_t v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end)
    throw RequestError(400, std::string("parameter '") + name + "' is not a non-negative integer: '" + text + "'");
  return v;
}

inline std::vector<std::size_t> parse_ids(const std::string& text, const char* name) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    out.push_back(static_cast<std::size_t>(parse_count(text.substr(start, comma - start), name)));
    start = comma + 1;
  }
  return out;
}

inline double real_param(const httplib::Request& req, const char* name) { return parse_real(param(req, name), name); }

inline std::optional<double> optional_real(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  return parse_real(req.get_param_value(name), name);
}

inline std::size_t count_param(const httplib::Request& req, const char* name, std::optional<std::size_t> fallback = {}) {
  if (!req.has_param(name)) {
    if (fallback) return *fallback;
    throw RequestError(400, std::string("missing query parameter '") + name + "'");
  }
  return static_cast<std::size_t>(parse_count(req.get_param_value(name), name));
}

inline void check_particle(const Session& s, std::size_t i) {
  if (i >= s.dataset().size()) throw RequestError(404, "unknown particle " + std::to_string(i));
}

inline void check_scale(double s) {
  if (s < 0) throw RequestError(400, "scale must be non-negative");
}

template <class T, class Range>
void append(std::string& body, const Range& values) {
  for (auto v : values) {
    const T x = static_cast<T>(v);
    char bytes[sizeof(T)];
    std::memcpy(bytes, &x, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    body.append(bytes, sizeof(T));
  }
}

inline void send_binary(httplib::Response& res, std::string body) {
  res.set_content(std::move(body), "application/octet-stream");
}

inline void send_json(httplib::Response& res, const nlohmann::json& j) { res.set_content(j.dump(), "application/json"); }

inline void send_error(httplib::Response& res, int status, const std::string& msg) {
  res.status = status;
  send_json(res, {{"error", msg}, {"status", status}});
}

/// Wraps a handler so that library and request errors become JSON bodies.
template <class Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const RequestError& e) {
      send_error(res, e.status, e.what());
    } catch (const ArgumentError& e) {
      send_error(res, 400, e.what());
    } catch (const ConfigError& e) {
      send_error(res, 400, e.what());
    } catch (const DegenerateNeighborhoodError& e) {
      send_error(res, 400, e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  };
}

}  // namespace detail

/// Registers the API routes on `server`. The session must outlive it.
inline void register_routes(httplib::Server& server, Session& session) {
  using namespace detail;
  Session* s = &session;

  server.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Get("/api/meta", guarded([s](const httplib::Request&, httplib::Response& res) { send_json(res, s->meta()); }));

  server.Get("/api/positions", guarded([s](const httplib::Request& req, httplib::Response& res) {
               const auto& ds = s->dataset();
               const std::size_t t = count_param(req, "t");
               if (t >= ds.steps()) throw RequestError(400, "time index out of range");
               std::string body;
               append<float>(body, ds.positions_at(t));
               send_binary(res, std::move(body));
             }));

  server.Get("/api/trajectories", guarded([s](const httplib::Request& req, httplib::Response& res) {
               const auto ids = parse_ids(param(req, "ids"), "ids");
               for (auto i : ids) check_particle(*s, i);
               std::string body;
               for (auto i : ids) append<float>(body, s->dataset().trajectory(i));
               send_binary(res, std::move(body));
             }));

  server.Get("/api/separation", guarded([s](const httplib::Request& req, httplib::Response& res) {
               const auto scale = optional_real(req, "s");
               if (scale) check_scale(*scale);
               const Direction dir = req.has_param("dir") ? parse_direction(req.get_param_value("dir"))
                                                          : Direction::forward;
               const std::size_t k = count_param(req, "k", std::size_t{0});
               const auto field = s->separation(scale, dir, k);
               std::string body;
               append<float>(body, field->values);
               send_binary(res, std::move(body));
             }));

  server.Get("/api/density", guarded([s](const httplib::Request& req, httplib::Response& res) {
               const std::size_t t = count_param(req, "t", std::size_t{0});
               const std::size_t k = count_param(req, "k", std::size_t{27});
               if (t >= s->dataset().steps()) throw RequestError(400, "time index out of range");
               const auto field = s->density(t, k);
               std::string body;
               append<float>(body, field->values);
               send_binary(res, std::move(body));
             }));

  server.Get("/api/field", guarded([s](const httplib::Request& req, httplib::Response& res) {
               const auto sources = parse_ids(param(req, "sources"), "sources");
               for (auto i : sources) check_particle(*s, i);
               const double scale = real_param(req, "s");
               check_scale(scale);
               const auto f = s->field(sources, scale);
               std::string body;
               append<float>(body, f.distances);
               append<std::uint32_t>(body, f.nearest);
               send_binary(res, std::move(body));
             }));

  server.Get("/api/neighborhood", guarded([s](const httplib::Request& req, httplib::Response& res) {
               const std::size_t source = count_param(req, "source");
               check_particle(*s, source);
               const double scale = real_param(req, "s");
               check_scale(scale);
               const double radius = real_param(req, "radius");
               const std::size_t max = count_param(req, "max", std::size_t{200});
               const auto r = s->neighborhood(source, scale, radius, max);
               send_json(res, {{"source", r.source},
                               {"scale", r.scale},
                               {"radius", r.radius},
                               {"max_count", r.max_count},
                               {"candidates", r.candidates},
                               {"members", r.members},
                               {"distances", r.distances}});
             }));

  server.Get("/api/clusters", guarded([s](const httplib::Request& req, httplib::Response& res) {
               const std::size_t k = count_param(req, "k");
               const double scale = real_param(req, "s");
               check_scale(scale);
               const auto c = s->clusters(k, scale);
               std::string body;
               append<std::int32_t>(body, c->labels);
               send_binary(res, std::move(body));
             }));

  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) send_error(res, res.status, res.status == 404 ? "no such endpoint" : "request failed");
  });
}

/// Port from DRIFTSCOPE_PORT when set, otherwise `fallback`.
inline int resolve_port(int fallback) {
  if (const char* env = std::getenv("DRIFTSCOPE_PORT"); env && *env) {
    int port = 0;
    const char* end = env + std::strlen(env);
    auto [ptr, ec] = std::from_chars(env, end, port);
    if (ec != std::errc() || ptr != end || port < 0 || port > 65535)
      throw ConfigError(std::string("DRIFTSCOPE_PORT is not a valid port: '") + env + "'");
    return port;
  }
  return fallback;
}

}  // namespace driftscope::http
