#pragma once

#include <functional>
#include <memory>
#include <string>

#include "medalchain/gateway/service.hpp"

namespace httplib {
class Server;
}

namespace medalchain::gateway {

/// HTTP/1.1 front end over a Service. Every request is translated into a
/// Request and answered by Service::handle.
class HttpServer {
public:
    explicit HttpServer(Service& service);
    ~HttpServer();

    /// Binds and blocks until stop(). Port 0 picks a free port.
    bool listen(const std::string& host, int port);
    /// Binds to a free port and returns it; run() then serves.
    int bind_any(const std::string& host);
    bool run();
    void stop();
    void wait_until_ready() const;

private:
    Service& service_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace medalchain::gateway
