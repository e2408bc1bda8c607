#pragma once

#include "catalog/error.hpp"
#include "catalog/service.hpp"

#include <memory>
#include <string>

namespace catalog {

inline constexpr const char* kClientTokenHeader = "X-Client-Token";

struct ApiError {
    int status = 500;
    std::string code;
    std::string message;
    Json extra = Json::object();  // merged into the body, e.g. {"stage": "content"}
};

void to_json(Json& j, const ApiError& e);

// HTTP status and machine code for a library error.
ApiError api_error_from(const Error& e);

// Card as served to clients: the card fields plus the article's title, url
// and source and the aspect's color.
Json card_view(const ConsequenceCard& card, const Store& store);

// JSON-over-HTTP front end. Handlers are stateless; all state lives in the
// store, the job manager and the scheduler.
class ApiServer {
public:
    ApiServer(Services& services, JobManager& jobs);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    // Binds (port 0 picks a free port) and serves on a background thread.
    // Returns the bound port. Throws InvalidValue when binding fails.
    int start(const std::string& host, int port);
    // Binds and serves on the calling thread until stop().
    void run(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace catalog
