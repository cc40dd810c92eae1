#include <doctest.h>

#include <algorithm>

#include <nlohmann/json.hpp>

#include "halluc/error.hpp"
#include "halluc/infill.hpp"
#include "halluc/labeling.hpp"
#include "halluc/parallel.hpp"
#include "stub_service.hpp"

using namespace halluc;

namespace {

NoisedSeq noised_of(std::initializer_list<NoisedToken> items) { return NoisedSeq{items}; }

const Vocab& vocab() {
    static const Vocab v({{"red", 3}, {"green", 2}, {"blue", 1}});
    return v;
}

}  // namespace

TEST_CASE("infill_identity undoes masking-only noise") {
    auto t = TokenSeq::from_text("one two three four five six");
    Rng rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        auto noised = apply_noise(t, {rng.uniform(), 0.0}, 0.0, Vocab{}, rng);
        CHECK(infill_identity({noised}).filled == t);
    }
    CHECK(infill_identity({apply_noise(t, {0.0, 0.0}, 0.0, Vocab{}, rng)}).filled == t);
}

TEST_CASE("infill_identity keeps replacements and drops inserted masks") {
    auto req = InfillRequest{noised_of({{"a", Origin::kept, "a"},
                                        {"<mask>", Origin::inserted_mask, ""},
                                        {"zz", Origin::replaced, "b"},
                                        {"<mask>", Origin::masked, "c"}})};
    auto filled = infill_identity(req).filled;
    CHECK(filled.tokens() == std::vector<std::string>{"a", "zz", "c"});
    CHECK(assign_labels(filled, TokenSeq::from_text("a b c")).labels == Labels{0, 1, 0});

    auto broken = InfillRequest{noised_of({{"<mask>", Origin::masked, ""}})};
    CHECK_THROWS_AS(infill_identity(broken), InputError);
}

TEST_CASE("k replacements give exactly k hallucination labels") {
    auto t = TokenSeq::from_text("a b c d e f g h");
    Vocab v({{"p", 4}, {"q", 2}, {"a", 9}, {"b", 3}});
    Rng rng(17);
    for (int trial = 0; trial < 300; ++trial) {
        auto noised = apply_noise(t, {0.0, rng.uniform()}, 0.0, v, rng);
        auto filled = infill_identity({noised}).filled;
        auto labels = assign_labels(filled, t).labels;
        CHECK(static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label{1})) ==
              noised.count(Origin::replaced));
    }
}

TEST_CASE("infill_stochastic fills every mask and passes other tokens through") {
    auto plain = InfillRequest{noised_of({{"x", Origin::kept, "x"}, {"y", Origin::kept, "y"}})};
    Rng rng(2);
    CHECK(infill_stochastic(plain, vocab(), rng).filled.tokens() == std::vector<std::string>{"x", "y"});

    auto t = TokenSeq::from_text("a b c d e f g h i j");
    for (int trial = 0; trial < 200; ++trial) {
        auto noised = apply_noise(t, {0.5, 0.2}, 0.3, vocab(), rng);
        auto filled = infill_stochastic({noised}, vocab(), rng).filled;
        REQUIRE(filled.size() == noised.items.size());
        CHECK(std::find(filled.begin(), filled.end(), "<mask>") == filled.end());
    }

    auto noised = apply_noise(t, {0.5, 0.0}, 0.3, vocab(), rng);
    Rng r1(5), r2(5);
    CHECK(infill_stochastic({noised}, vocab(), r1).filled == infill_stochastic({noised}, vocab(), r2).filled);
    CHECK_THROWS_AS(StochasticInfiller(Vocab{}), InputError);
}

TEST_CASE("wire infill request carries beam size and length penalty verbatim") {
    InfillRequest req{noised_of({{"a", Origin::kept, "a"}, {"<mask>", Origin::masked, "b"}})};
    auto body = nlohmann::json::parse(wire::infill_request(req));
    CHECK(body["tokens"] == nlohmann::json::array({"a", "<mask>"}));
    CHECK(body["beam_size"] == 4);
    CHECK(body["length_penalty"].get<double>() == 3.0);
    CHECK(wire::infill_request(req) == R"({"beam_size":4,"length_penalty":3.0,"tokens":["a","<mask>"]})");
}

TEST_CASE("wire response parsing rejects malformed bodies") {
    CHECK(wire::infill_response(R"({"tokens":["a","b"]})") == std::vector<std::string>{"a", "b"});
    CHECK_THROWS_AS(wire::infill_response("not json"), ProtocolError);
    CHECK_THROWS_AS(wire::infill_response(R"({"tok":[]})"), ProtocolError);
    CHECK_THROWS_AS(wire::infill_response(R"({"tokens":[]})"), ProtocolError);
    CHECK_THROWS_AS(wire::infill_response(R"({"tokens":[1]})"), ProtocolError);
    CHECK_THROWS_AS(wire::infill_response(R"({"tokens":["a",""]})"), ProtocolError);
    CHECK(wire::predict_response(R"({"probs":[0.5,1]})") == std::vector<double>{0.5, 1.0});
    CHECK_THROWS_AS(wire::predict_response(R"({"probs":[1.5]})"), ProtocolError);
    auto pr = nlohmann::json::parse(wire::predict_request("s", "t u", std::nullopt));
    CHECK_FALSE(pr.contains("reference"));
    CHECK(nlohmann::json::parse(wire::predict_request("s", "t", "r"))["reference"] == "r");
}

TEST_CASE("remote infill against the stub service") {
    stub::Service service;
    ServiceClient client({service.endpoint()});
    CHECK(client.healthy());

    auto t = TokenSeq::from_text("the cat sat");
    Rng rng(3);
    auto noised = apply_noise(t, {0.0, 0.0}, 1.0, Vocab{}, rng);
    REQUIRE(noised.count(Origin::inserted_mask) == 3);
    CHECK(infill_remote({noised}, client).filled == t);

    auto sent = nlohmann::json::parse(service.last_infill_body());
    CHECK(sent["beam_size"] == 4);
    CHECK(sent["length_penalty"].get<double>() == 3.0);
    CHECK(sent["tokens"].size() == 6);

    service.mode = stub::Mode::malformed;
    CHECK_THROWS_AS(infill_remote({noised}, client), ProtocolError);
    service.mode = stub::Mode::empty;
    CHECK_THROWS_AS(infill_remote({noised}, client), ProtocolError);
    service.mode = stub::Mode::server_error;
    CHECK_THROWS_AS(infill_remote({noised}, client), ProtocolError);
    service.mode = stub::Mode::leak_sentinel;
    CHECK_THROWS_AS(infill_remote({noised}, client), SentinelError);

    service.ready = false;
    CHECK_FALSE(client.healthy());
}

TEST_CASE("remote predict returns one probability per target token") {
    stub::Service service;
    ServiceClient client({service.endpoint()});
    auto probs = client.predict("a b c", "a x c y");
    CHECK(probs == std::vector<double>{0.1, 0.9, 0.1, 0.9});
    service.mode = stub::Mode::malformed;
    CHECK_THROWS_AS(client.predict("a", "a b"), ProtocolError);
}

TEST_CASE("transport failures are reported as such") {
    int port;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    ServiceClient client({"http://127.0.0.1:" + std::to_string(port), 8, std::chrono::seconds(2)});
    CHECK_FALSE(client.healthy());
    InfillRequest req{noised_of({{"a", Origin::kept, "a"}})};
    CHECK_THROWS_AS(client.infill(req), TransportError);
    CHECK_THROWS_AS(ServiceClient({""}), InputError);
}

TEST_CASE("remote client bounds in-flight requests and keeps order") {
    stub::Service service;
    service.delay_ms = 20;
    RemoteInfiller infiller({service.endpoint(), 3});
    std::vector<TokenSeq> inputs;
    for (int i = 0; i < 24; ++i) inputs.push_back(TokenSeq::from_text("w" + std::to_string(i) + " end"));
    auto outputs = ordered_map(inputs.size(), 12, [&](std::size_t i) {
        Rng rng(i);
        return infiller.infill({apply_noise(inputs[i], {0.0, 0.0}, 0.5, Vocab{}, rng)}, rng).filled;
    });
    CHECK(outputs == inputs);
    CHECK(service.peak_inflight.load() <= 3);
    CHECK(service.peak_inflight.load() >= 2);
}
