#include "medalchain/gateway/server.hpp"

#include <httplib.h>

namespace medalchain::gateway {

HttpServer::HttpServer(Service& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        Request r;
        r.method = req.method;
        r.path = req.path;
        for (const auto& [k, v] : req.params) r.query.emplace(k, v);
        r.body = req.body;
        r.actor = req.get_header_value(std::string(kActorHeader).c_str());
        r.signature = req.get_header_value(std::string(kSignatureHeader).c_str());
        const Response out = service_.handle(r);
        res.status = out.status;
        res.set_header(std::string(kTipHeader).c_str(), out.tip);
        res.set_content(out.body, "application/json");
    };
    const std::string any = R"(/.*)";
    server_->Get(any, handler);
    server_->Post(any, handler);
    server_->Put(any, handler);
    server_->Delete(any, handler);
}

HttpServer::~HttpServer() = default;

bool HttpServer::listen(const std::string& host, int port) { return server_->listen(host, port); }

int HttpServer::bind_any(const std::string& host) { return server_->bind_to_any_port(host); }

bool HttpServer::run() { return server_->listen_after_bind(); }

void HttpServer::stop() { server_->stop(); }

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace medalchain::gateway
