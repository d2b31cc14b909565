#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "taskprog/corpus.hpp"
#include "taskprog/pairing.hpp"

namespace taskprog {

enum class Choice { First, Second, Unparsable };

std::string_view to_string(Choice c);

// One "which image is closer to task completion" question. The id and
// orientation fields are evaluation context filled in by the harness: mock
// adapters may read them (the bias-profile mock needs orientation to
// simulate, rather than exhibit, order bias); real adapters must not.
struct AdapterQuery {
    Payload image_a;
    Payload image_b;
    std::string prompt;
    std::string id;
    std::optional<Orientation> orientation;
};

struct BiasProfile {
    double forward_acc = 1.0;  // probability of a correct answer on Forward samples
    double reverse_acc = 1.0;  // likewise on Reverse samples
    std::uint64_t seed = 0;
};

// Adapters must be safely callable from multiple evaluation workers.
class Adapter {
public:
    virtual ~Adapter() = default;
    virtual std::string name() const = 0;
    virtual Choice query(const AdapterQuery& q) const = 0;
};

// Reads the synthetic progress channel (feature 0) and answers truthfully.
// Only meaningful on feature payloads; reference payloads are a usage error.
std::unique_ptr<Adapter> make_oracle();

// The positional shortcut: answers Second on every query.
std::unique_ptr<Adapter> make_always_second();
std::unique_ptr<Adapter> make_always_first();

// Oracle whose answer flips with probability epsilon. Draws are keyed on the
// query fingerprint, so results are deterministic and order-independent.
std::unique_ptr<Adapter> make_noisy_oracle(double epsilon, std::uint64_t seed);

// Answers correctly with probability forward_acc on Forward-oriented queries
// and reverse_acc on Reverse-oriented ones. A test fixture that simulates the
// bias phenomena; requires orientation in the query context.
std::unique_ptr<Adapter> make_bias_profile(const BiasProfile& profile);

struct HttpOptions {
    std::string endpoint;  // http://host:port/path
    int timeout_ms = 5000;
    int retries = 2;        // additional attempts after the first
    int max_in_flight = 4;  // bound on concurrent requests
};

/// POSTs {"images": [a, b], "prompt": ...} and expects {"choice":
/// "first"|"second", "rationale"?}. Non-2xx responses, timeouts and schema
/// mismatches raise TransportError after bounded retries; a well-formed
/// response whose choice text matches neither option yields Unparsable.
std::unique_ptr<Adapter> make_http_adapter(const HttpOptions& options);

// Maps free-form answer text onto a Choice. Exact "first"/"second" (after
// trimming and lowercasing) or text containing exactly one of the two words.
Choice parse_choice_text(std::string_view text);

// Stable fingerprint over id, prompt, orientation and both payloads; the key
// for all per-query randomness in mock adapters.
std::uint64_t query_fingerprint(const AdapterQuery& q);

}  // namespace taskprog
