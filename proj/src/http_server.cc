// Copyright 2026 The Entex Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "entex/service.h"

#include <httplib.h>

#include "entex/error.h"

namespace entex {

namespace {

constexpr char kJson[] = "application/json; charset=utf-8";

void Send(httplib::Response &res, const Reply &reply) {
  res.status = reply.status;
  if (reply.status == 204) return;
  res.set_content(reply.body.dump(), kJson);
}

void SendError(httplib::Response &res, int status, const std::string &code,
               const std::string &message) {
  Send(res, {status, {{"code", code}, {"message", message}}});
}

bool ParseBody(const httplib::Request &req, httplib::Response &res,
               Json *out) {
  try {
    *out = Json::parse(req.body);
    return true;
  } catch (const Json::parse_error &e) {
    SendError(res, 400, "parse_error", e.what());
    return false;
  }
}

}  // namespace

HttpServer::HttpServer(LabelingService *service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  httplib::Server &s = *server_;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  s.Options(R"(/v1/.*)", [](const httplib::Request &, httplib::Response &res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  s.Get("/v1/tasks/next",
        [this](const httplib::Request &req, httplib::Response &res) {
          Send(res, service_->NextTask(req.get_param_value("rater_id")));
        });
  s.Post(R"(/v1/tasks/([^/]+)/labels)",
         [this](const httplib::Request &req, httplib::Response &res) {
           Json body;
           if (!ParseBody(req, res, &body)) return;
           Send(res, service_->SubmitLabel(req.matches[1], body));
         });
  s.Get(R"(/v1/tasks/([^/]+)/consensus)",
        [this](const httplib::Request &req, httplib::Response &res) {
          std::optional<int> k;
          if (req.has_param("k")) {
            try {
              k = std::stoi(req.get_param_value("k"));
            } catch (const std::exception &) {
              SendError(res, 400, "invalid_argument", "k must be an integer");
              return;
            }
          }
          Send(res, service_->Consensus(req.matches[1],
                                        req.get_param_value("method"), k));
        });
  s.Get(R"(/v1/raters/([^/]+)/calibration)",
        [this](const httplib::Request &req, httplib::Response &res) {
          Send(res, service_->Calibration(req.matches[1]));
        });
  s.Post("/v1/extract",
         [this](const httplib::Request &req, httplib::Response &res) {
           Json body;
           if (!ParseBody(req, res, &body)) return;
           Send(res, service_->Extract(body));
         });

  s.set_exception_handler([](const httplib::Request &, httplib::Response &res,
                             std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error &e) {
      SendError(res, 500, ErrorCodeName(e.code()), e.what());
    } catch (const std::exception &e) {
      SendError(res, 500, "internal", e.what());
    }
  });
  s.set_error_handler([](const httplib::Request &req, httplib::Response &res) {
    if (res.body.empty()) {
      SendError(res, res.status, res.status == 404 ? "not_found" : "error",
                "no route for " + req.method + " " + req.path);
    }
  });
}

HttpServer::~HttpServer() { Stop(); }

int HttpServer::Start(const std::string &host, int port) {
  int bound = port == 0 ? server_->bind_to_any_port(host)
                        : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) {
    throw Error(ErrorCode::kIo,
                "cannot bind " + host + ":" + std::to_string(port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void HttpServer::Listen(const std::string &host, int port) {
  if (!server_->listen(host, port)) {
    throw Error(ErrorCode::kIo,
                "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void HttpServer::Stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace entex
