#include <charconv>
#include <chrono>
#include <memory>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "payload_json.hpp"
#include "taskprog/adapter.hpp"
#include "taskprog/errors.hpp"

namespace taskprog {

namespace {

struct ParsedEndpoint {
    std::string host;
    int port = 80;
    std::string path = "/";
};

ParsedEndpoint parse_endpoint(const std::string& endpoint) {
    constexpr std::string_view scheme = "http://";
    if (endpoint.rfind(scheme, 0) != 0)
        throw UsageError("http adapter: endpoint must start with http:// (got '" + endpoint + "')");

    std::string_view rest = std::string_view(endpoint).substr(scheme.size());
    ParsedEndpoint parsed;
    const auto slash = rest.find('/');
    std::string_view authority = rest.substr(0, slash);
    if (slash != std::string_view::npos) parsed.path = std::string(rest.substr(slash));

    const auto colon = authority.find(':');
    if (colon == std::string_view::npos) {
        parsed.host = std::string(authority);
    } else {
        parsed.host = std::string(authority.substr(0, colon));
        const auto port_text = authority.substr(colon + 1);
        auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(),
                                         parsed.port);
        if (ec != std::errc() || ptr != port_text.data() + port_text.size())
            throw UsageError("http adapter: bad port in endpoint '" + endpoint + "'");
    }
    if (parsed.host.empty()) throw UsageError("http adapter: empty host in endpoint");
    return parsed;
}

class HttpAdapter final : public Adapter {
public:
    explicit HttpAdapter(const HttpOptions& options)
        : options_(options),
          endpoint_(parse_endpoint(options.endpoint)),
          in_flight_(std::max(1, options.max_in_flight)) {
        if (options.timeout_ms <= 0) throw UsageError("http adapter: timeout_ms must be positive");
        if (options.retries < 0) throw UsageError("http adapter: retries must be >= 0");
    }

    std::string name() const override { return "http"; }

    Choice query(const AdapterQuery& q) const override {
        nlohmann::ordered_json body;
        body["images"] = {detail::payload_to_json(q.image_a), detail::payload_to_json(q.image_b)};
        body["prompt"] = q.prompt;
        const std::string body_text = body.dump();

        in_flight_.acquire();
        struct Release {
            std::counting_semaphore<>& sem;
            ~Release() { sem.release(); }
        } release{in_flight_};

        std::string last_error;
        for (int attempt = 0; attempt <= options_.retries; ++attempt) {
            if (attempt > 0)
                std::this_thread::sleep_for(std::chrono::milliseconds(10 * attempt));
            auto outcome = attempt_once(body_text, last_error);
            if (outcome) return *outcome;
        }
        throw TransportError("http adapter: " + last_error + " (after " +
                             std::to_string(options_.retries + 1) + " attempts)");
    }

private:
    std::optional<Choice> attempt_once(const std::string& body_text, std::string& last_error) const {
        httplib::Client client(endpoint_.host, endpoint_.port);
        const auto timeout = std::chrono::milliseconds(options_.timeout_ms);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);

        auto res = client.Post(endpoint_.path, body_text, "application/json");
        if (!res) {
            last_error = "request failed: " + httplib::to_string(res.error());
            return std::nullopt;
        }
        if (res->status < 200 || res->status >= 300) {
            last_error = "status " + std::to_string(res->status);
            return std::nullopt;
        }
        nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.is_object() || !reply.contains("choice") ||
            !reply["choice"].is_string()) {
            last_error = "response schema mismatch";
            return std::nullopt;
        }
        return parse_choice_text(reply["choice"].get<std::string>());
    }

    HttpOptions options_;
    ParsedEndpoint endpoint_;
    mutable std::counting_semaphore<> in_flight_;
};

}  // namespace

std::unique_ptr<Adapter> make_http_adapter(const HttpOptions& options) {
    return std::make_unique<HttpAdapter>(options);
}

}  // namespace taskprog
