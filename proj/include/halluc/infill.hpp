#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "halluc/corpus.hpp"
#include "halluc/noising.hpp"
#include "halluc/rng.hpp"

namespace halluc {

struct InfillRequest {
    NoisedSeq noised;
    int beam_size = 4;
    double length_penalty = 3.0;
    std::string mask = "<mask>";
};

struct InfillResult {
    TokenSeq filled;
};

/// Turns a noised sentence back into a fluent one. Implementations must be
/// callable concurrently and must never emit the mask sentinel.
class Infiller {
public:
    virtual ~Infiller() = default;
    virtual InfillResult infill(const InfillRequest& req, Rng& rng) const = 0;
    virtual std::string name() const = 0;
};

/// Restores masks to their original tokens, drops inserted masks and keeps
/// replacements, so the result differs from the clean input exactly at the
/// replaced positions.
InfillResult infill_identity(const InfillRequest& req);

/// Fills every mask, inserted or not, with one vocabulary-sampled token.
InfillResult infill_stochastic(const InfillRequest& req, const Vocab& vocab, Rng& rng);

class IdentityInfiller final : public Infiller {
public:
    InfillResult infill(const InfillRequest& req, Rng&) const override { return infill_identity(req); }
    std::string name() const override { return "identity"; }
};

class StochasticInfiller final : public Infiller {
public:
    explicit StochasticInfiller(Vocab vocab);
    InfillResult infill(const InfillRequest& req, Rng& rng) const override {
        return infill_stochastic(req, vocab_, rng);
    }
    std::string name() const override { return "stochastic"; }

private:
    Vocab vocab_;
};

/// JSON bodies of the inference service. Field names are part of the wire
/// contract and must not change.
namespace wire {
std::string infill_request(const InfillRequest& req);
std::vector<std::string> infill_response(const std::string& body);
std::string predict_request(const std::string& source, const std::string& target,
                            const std::optional<std::string>& reference);
std::vector<double> predict_response(const std::string& body);
}  // namespace wire

struct ServiceOptions {
    std::string endpoint;  ///< e.g. http://127.0.0.1:8080
    std::size_t max_inflight = 8;
    std::chrono::seconds timeout{60};
};

/// HTTP client for the external infill/predict service.
class ServiceClient {
public:
    explicit ServiceClient(ServiceOptions options);
    ~ServiceClient();
    ServiceClient(const ServiceClient&) = delete;
    ServiceClient& operator=(const ServiceClient&) = delete;

    bool healthy() const;

    /// Decoded, sentinel-free token sequence for a noised input.
    std::vector<std::string> infill(const InfillRequest& req) const;

    /// One hallucination probability per whitespace token of `target`.
    std::vector<double> predict(const std::string& source, const std::string& target,
                                const std::optional<std::string>& reference = std::nullopt) const;

    const ServiceOptions& options() const noexcept { return options_; }

private:
    std::string post(const std::string& path, const std::string& body) const;

    ServiceOptions options_;
    mutable std::counting_semaphore<1024> inflight_;
};

InfillResult infill_remote(const InfillRequest& req, const ServiceClient& client);

class RemoteInfiller final : public Infiller {
public:
    explicit RemoteInfiller(ServiceOptions options) : client_(std::move(options)) {}
    InfillResult infill(const InfillRequest& req, Rng&) const override { return infill_remote(req, client_); }
    std::string name() const override { return "remote"; }
    const ServiceClient& client() const noexcept { return client_; }

private:
    ServiceClient client_;
};

}  // namespace halluc
