#pragma once

#include <httplib.h>

#include <functional>
#include <string>

#include "shelfbrg/error.hpp"
#include "shelfbrg/json_util.hpp"
#include "shelfbrg/service.hpp"

namespace shelfbrg::http_api {

inline int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::SchemaError:
    case ErrorCode::InvalidK:
      return 400;
    case ErrorCode::MissingBox:
    case ErrorCode::SessionNotFound:
      return 404;
    case ErrorCode::NoPlan:
    case ErrorCode::PlanExhausted:
    case ErrorCode::PlanDictionaryMismatch:
    case ErrorCode::EmptyScene:
    case ErrorCode::EmptyCluster:
    case ErrorCode::ReplayMismatch:
      return 409;
    case ErrorCode::ValidationError:
    case ErrorCode::GenerationExhausted:
      return 422;
    case ErrorCode::CyclicDependencies:
      return 500;  // engine contract violation, not a client error
  }
  return 500;
}

inline Json error_body(std::string_view code, std::string_view detail) {
  return Json{{"error", code}, {"detail", detail}};
}

namespace detail {

inline void send_json(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline Json body_json(const httplib::Request& req) {
  return json_util::parse_text(req.body, "request body");
}

/// Runs a handler and turns library errors into {"error", "detail"} bodies.
inline httplib::Server::Handler guarded(
    std::function<void(const httplib::Request&, httplib::Response&)> fn) {
  return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_json(res, error_body(to_string(e.code()), e.detail()), status_for(e.code()));
    } catch (const Json::exception& e) {
      send_json(res, error_body("SchemaError", e.what()), 400);
    } catch (const std::exception& e) {
      send_json(res, error_body("InternalError", e.what()), 500);
    }
  };
}

}  // namespace detail

/// Installs the session API on `server`. The manager must outlive the server.
inline void register_routes(httplib::Server& server, service::SessionManager& mgr) {
  using detail::body_json;
  using detail::guarded;
  using detail::send_json;
  using namespace json_util;

  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });

  server.Post("/sessions", guarded([&mgr](const auto& req, auto& res) {
    const std::string id = mgr.create_session(body_json(req));
    send_json(res, Json{{"session_id", id}}, 201);
  }));

  server.Get(R"(/sessions/([^/]+))", guarded([&mgr](const auto& req, auto& res) {
    send_json(res, service::to_json(mgr.get_state(req.matches[1])));
  }));

  server.Get(R"(/sessions/([^/]+)/events)", guarded([&mgr](const auto& req, auto& res) {
    const auto st = mgr.get_state(req.matches[1]);
    Json events = Json::array();
    for (const auto& e : st.events) events.push_back(service::to_json(e));
    send_json(res, Json{{"events", std::move(events)}});
  }));

  server.Get(R"(/sessions/([^/]+)/brg\.dot)", guarded([&mgr](const auto& req, auto& res) {
    res.set_content(mgr.brg_dot(req.matches[1]), "text/vnd.graphviz");
  }));

  server.Post(R"(/sessions/([^/]+)/plan)", guarded([&mgr](const auto& req, auto& res) {
    const Json body = body_json(req);
    check_keys(body, {"target", "policy"}, "plan request");
    std::optional<brg::TaskPolicy> policy;
    if (body.contains("policy")) policy = brg::parse_policy(as_string(body["policy"], "policy"));
    const auto resp = mgr.request_plan(req.matches[1],
                                       as_string(require(body, "target", "plan request"), "target"),
                                       policy);
    send_json(res, service::to_json(resp));
  }));

  server.Post(R"(/sessions/([^/]+)/step)", guarded([&mgr](const auto& req, auto& res) {
    const Json body = body_json(req);
    check_keys(body, {"actor"}, "step request");
    const auto actor = service::parse_actor(as_string(require(body, "actor", "step request"), "actor"));
    send_json(res, service::to_json(mgr.step_plan(req.matches[1], actor)));
  }));

  server.Post(R"(/sessions/([^/]+)/remove)", guarded([&mgr](const auto& req, auto& res) {
    const Json body = body_json(req);
    check_keys(body, {"box", "actor"}, "remove request");
    service::Actor actor = service::Actor::Human;
    if (body.contains("actor")) actor = service::parse_actor(as_string(body["actor"], "actor"));
    const auto box = as_string(require(body, "box", "remove request"), "box");
    send_json(res, service::to_json(mgr.remove_box(req.matches[1], box, actor)));
  }));

  server.Post(R"(/sessions/([^/]+)/support)", guarded([&mgr](const auto& req, auto& res) {
    const Json body = body_json(req);
    check_keys(body, {"target", "k", "ranking"}, "support request");
    std::optional<brg::Ranking> ranking;
    if (body.contains("ranking")) ranking = brg::parse_ranking(as_string(body["ranking"], "ranking"));
    const auto cands = mgr.request_support(
        req.matches[1], as_string(require(body, "target", "support request"), "target"),
        as_integer(require(body, "k", "support request"), "k"), ranking);
    send_json(res, brg::to_json(cands));
  }));

  server.Post(R"(/sessions/([^/]+)/pointing)", guarded([&mgr](const auto& req, auto& res) {
    send_json(res, pointing::to_json(mgr.resolve_pointing(req.matches[1], body_json(req))));
  }));

  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      const char* code = res.status == 404 ? "NotFound" : "HttpError";
      detail::send_json(res, error_body(code, "no route for this request"), res.status);
    }
  });
}

}  // namespace shelfbrg::http_api
