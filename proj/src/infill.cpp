#include "halluc/infill.hpp"

#include <algorithm>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "halluc/error.hpp"

namespace halluc {

namespace {

using nlohmann::json;

void check_sentinel_free(const std::vector<std::string>& tokens, const std::string& mask) {
    if (std::find(tokens.begin(), tokens.end(), mask) != tokens.end())
        throw SentinelError("infilled sequence still contains " + mask);
}

}  // namespace

InfillResult infill_identity(const InfillRequest& req) {
    std::vector<std::string> out;
    out.reserve(req.noised.items.size());
    for (std::size_t i = 0; i < req.noised.items.size(); ++i) {
        const auto& item = req.noised.items[i];
        switch (item.origin) {
            case Origin::kept:
            case Origin::replaced:
                out.push_back(item.token);
                break;
            case Origin::masked:
                if (item.original.empty())
                    throw InputError("masked position " + std::to_string(i) + " has no original token");
                out.push_back(item.original);
                break;
            case Origin::inserted_mask:
                break;
        }
    }
    if (out.empty()) throw InputError("identity infill produced an empty sentence");
    return {TokenSeq(std::move(out))};
}

StochasticInfiller::StochasticInfiller(Vocab vocab) : vocab_(std::move(vocab)) {
    if (vocab_.empty()) throw InputError("stochastic infiller needs a nonempty vocabulary");
}

InfillResult infill_stochastic(const InfillRequest& req, const Vocab& vocab, Rng& rng) {
    std::vector<std::string> out;
    out.reserve(req.noised.items.size());
    for (const auto& item : req.noised.items) {
        if (item.token == req.mask) {
            const auto& fill = vocab.sample(rng);
            if (fill == req.mask) throw InputError("vocabulary contains the mask sentinel");
            out.push_back(fill);
        } else {
            out.push_back(item.token);
        }
    }
    return {TokenSeq(std::move(out))};
}

namespace wire {

std::string infill_request(const InfillRequest& req) {
    json body;
    body["tokens"] = req.noised.tokens();
    body["beam_size"] = req.beam_size;
    body["length_penalty"] = req.length_penalty;
    return body.dump();
}

std::vector<std::string> infill_response(const std::string& body) {
    try {
        auto obj = json::parse(body);
        if (!obj.is_object() || !obj.contains("tokens") || !obj["tokens"].is_array())
            throw ProtocolError("infill response lacks a tokens array");
        auto tokens = obj["tokens"].get<std::vector<std::string>>();
        if (tokens.empty()) throw ProtocolError("infill response is empty");
        if (std::any_of(tokens.begin(), tokens.end(), [](const std::string& t) { return t.empty(); }))
            throw ProtocolError("infill response contains an empty token");
        return tokens;
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed infill response: ") + e.what());
    }
}

std::string predict_request(const std::string& source, const std::string& target,
                            const std::optional<std::string>& reference) {
    json body;
    body["source"] = source;
    body["target"] = target;
    if (reference) body["reference"] = *reference;
    return body.dump();
}

std::vector<double> predict_response(const std::string& body) {
    try {
        auto obj = json::parse(body);
        if (!obj.is_object() || !obj.contains("probs") || !obj["probs"].is_array())
            throw ProtocolError("predict response lacks a probs array");
        auto probs = obj["probs"].get<std::vector<double>>();
        for (double p : probs) {
            if (!(p >= 0.0 && p <= 1.0)) throw ProtocolError("predict response probability outside [0,1]");
        }
        return probs;
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed predict response: ") + e.what());
    }
}

}  // namespace wire

ServiceClient::ServiceClient(ServiceOptions options)
    : options_(std::move(options)), inflight_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(options_.max_inflight, 1, 1024))) {
    if (options_.endpoint.empty()) throw InputError("service endpoint is empty");
    while (!options_.endpoint.empty() && options_.endpoint.back() == '/') options_.endpoint.pop_back();
}

ServiceClient::~ServiceClient() = default;

std::string ServiceClient::post(const std::string& path, const std::string& body) const {
    inflight_.acquire();
    struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
    } release{inflight_};

    httplib::Client cli(options_.endpoint);
    if (!cli.is_valid()) throw TransportError("invalid endpoint " + options_.endpoint);
    cli.set_connection_timeout(options_.timeout);
    cli.set_read_timeout(options_.timeout);
    cli.set_write_timeout(options_.timeout);
    auto res = cli.Post(path, body, "application/json");
    if (!res) throw TransportError(options_.endpoint + path + ": " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw ProtocolError(options_.endpoint + path + " returned HTTP " + std::to_string(res->status));
    return res->body;
}

bool ServiceClient::healthy() const {
    httplib::Client cli(options_.endpoint);
    if (!cli.is_valid()) return false;
    cli.set_connection_timeout(options_.timeout);
    cli.set_read_timeout(options_.timeout);
    auto res = cli.Get("/health");
    if (!res || res->status != 200) return false;
    auto obj = json::parse(res->body, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) return false;
    return obj.value("ready", false);
}

std::vector<std::string> ServiceClient::infill(const InfillRequest& req) const {
    auto tokens = wire::infill_response(post("/infill", wire::infill_request(req)));
    check_sentinel_free(tokens, req.mask);
    return tokens;
}

std::vector<double> ServiceClient::predict(const std::string& source, const std::string& target,
                                           const std::optional<std::string>& reference) const {
    auto probs = wire::predict_response(post("/predict", wire::predict_request(source, target, reference)));
    auto expected = TokenSeq::from_text(target).size();
    if (probs.size() != expected)
        throw ProtocolError("predict returned " + std::to_string(probs.size()) + " probabilities for " +
                            std::to_string(expected) + " target tokens");
    return probs;
}

InfillResult infill_remote(const InfillRequest& req, const ServiceClient& client) {
    return {TokenSeq(client.infill(req))};
}

}  // namespace halluc
