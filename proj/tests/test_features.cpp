#include "support/fixtures.hpp"

#include "botsift/capture.hpp"
#include "botsift/error.hpp"
#include "botsift/features.hpp"
#include "botsift/random.hpp"

#include <doctest.h>

#include <cmath>

using namespace botsift;
using namespace botsift::testing;

namespace {

PacketRecord pkt(double t, bool from_initiator, std::uint32_t payload, std::uint8_t flags = tcp_ack) {
    const Endpoint a{*IpAddress::parse("10.0.0.1"), 40000};
    const Endpoint b{*IpAddress::parse("10.0.0.2"), 80};
    PacketRecord p;
    p.timestamp_ns = at(t);
    p.src = from_initiator ? a : b;
    p.dst = from_initiator ? b : a;
    p.payload_len = payload;
    p.tcp_flags = flags;
    return p;
}

TcpFlow make_flow(std::vector<PacketRecord> packets) {
    TcpFlow f;
    f.key = FlowKey::of(packets.front());
    f.initiator = {*IpAddress::parse("10.0.0.1"), 40000};
    f.responder = {*IpAddress::parse("10.0.0.2"), 80};
    f.packets = std::move(packets);
    return f;
}

// Straightforward re-statement of the definitions, in long double.
FeatureVector oracle(const TcpFlow &flow) {
    const auto &ps = flow.packets;
    const std::size_t n = ps.size();
    auto mean_var = [](const std::vector<long double> &xs) -> std::pair<double, double> {
        if (xs.empty()) {
            return {0, 0};
        }
        long double s = 0, s2 = 0;
        for (auto x : xs) {
            s += x;
        }
        const long double m = s / xs.size();
        for (auto x : xs) {
            s2 += (x - m) * (x - m);
        }
        return {static_cast<double>(m), static_cast<double>(s2 / xs.size())};
    };
    std::vector<long double> lens, gaps, resp;
    long double bytes = 0;
    int syn = 0;
    for (std::size_t i = 0; i < n; ++i) {
        lens.push_back(ps[i].payload_len);
        bytes += ps[i].payload_len;
        syn += (ps[i].tcp_flags & tcp_syn) ? 1 : 0;
        if (i > 0) {
            gaps.push_back((ps[i].timestamp_ns - ps[i - 1].timestamp_ns) / 1e9L);
        }
        if (!(ps[i].src == flow.initiator)) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (ps[j].src == flow.initiator) {
                    resp.push_back((ps[j].timestamp_ns - ps[i].timestamp_ns) / 1e9L);
                    break;
                }
            }
        }
    }
    FeatureVector f;
    f.sPort = flow.initiator.port;
    f.dPort = flow.responder.port;
    std::tie(f.mLen, f.vLen) = mean_var(lens);
    std::tie(f.mTime, f.vTime) = mean_var(gaps);
    std::tie(f.mResp, f.vResp) = mean_var(resp);
    f.nBytes = static_cast<double>(bytes);
    f.nSYN = syn;
    f.nPackets = static_cast<double>(n);
    return f;
}

void check_close(const FeatureVector &got, const FeatureVector &want, double rel = 1e-9) {
    const auto g = got.values();
    const auto w = want.values();
    for (std::size_t i = 0; i < feature_count; ++i) {
        INFO("feature " << feature_schema()[i]);
        CHECK(g[i] == doctest::Approx(w[i]).epsilon(rel).scale(1e-12));
    }
}

TcpFlow random_flow(Rng &rng) {
    std::vector<PacketRecord> ps;
    double t = static_cast<double>(rng.below(1000));
    const std::size_t n = 1 + rng.below(40);
    for (std::size_t i = 0; i < n; ++i) {
        t += static_cast<double>(rng.below(5000)) / 1000.0;
        ps.push_back(pkt(t, rng.below(2) == 0, static_cast<std::uint32_t>(rng.below(1460)),
                         static_cast<std::uint8_t>(rng.below(64))));
    }
    return make_flow(std::move(ps));
}

} // namespace

TEST_CASE("feature_schema") {
    const auto schema = feature_schema();
    REQUIRE(schema.size() == 11);
    CHECK(schema[0] == "sPort");
    CHECK(schema[10] == "nPackets");
    CHECK(feature_index("dPort") == 1u);
    CHECK_FALSE(feature_index("mVel").has_value());
    CHECK(feature_schema().data() == schema.data());
}

TEST_CASE("extract_features: single SYN") {
    const auto f = extract_features(make_flow({pkt(7.0, true, 0, tcp_syn)}));
    const FeatureVector want{40000, 80, 0, 0, 0, 0, 0, 0, 0, 1, 1};
    CHECK(f == want);
}

TEST_CASE("extract_features: three packets") {
    const auto f = extract_features(make_flow({pkt(0, true, 0), pkt(1, false, 100), pkt(3, true, 50)}));
    CHECK(f.mLen == doctest::Approx(50));
    CHECK(f.vLen == doctest::Approx(5000.0 / 3));
    CHECK(f.mTime == doctest::Approx(1.5));
    CHECK(f.vTime == doctest::Approx(0.25));
    CHECK(f.nBytes == 150);
    CHECK(f.nPackets == 3);
}

TEST_CASE("extract_features: response latency") {
    const auto f = extract_features(make_flow(
        {pkt(1.0, true, 0), pkt(2.0, false, 0), pkt(2.4, true, 0), pkt(5.0, false, 0), pkt(5.2, true, 0)}));
    CHECK(f.mResp == doctest::Approx(0.3));
    CHECK(f.vResp == doctest::Approx(0.01));
}

TEST_CASE("extract_features: unanswered receipts contribute nothing") {
    const auto f = extract_features(make_flow({pkt(1.0, true, 0), pkt(2.0, false, 0), pkt(3.0, false, 0)}));
    CHECK(f.mResp == 0);
    CHECK(f.vResp == 0);
}

TEST_CASE("extract_features: empty flow is a contract violation") {
    CHECK_THROWS_AS(extract_features(TcpFlow{}), ContractViolation);
}

TEST_CASE("golden capture reproduces hand-computed vectors") {
    const auto flows = assemble_flows(read_capture(golden_path()));
    const auto want = golden_vectors();
    REQUIRE(flows.size() == want.size());
    for (std::size_t i = 0; i < flows.size(); ++i) {
        INFO("flow " << i);
        check_close(extract_features(flows[i]), want[i]);
        check_close(extract_features(flows[i]), oracle(flows[i]));
    }
}

TEST_CASE("feature properties on random flows") {
    Rng rng{7};
    for (int trial = 0; trial < 300; ++trial) {
        const TcpFlow flow = random_flow(rng);
        const FeatureVector f = extract_features(flow);
        check_close(f, oracle(flow));

        for (const double v : f.values()) {
            CHECK(std::isfinite(v));
        }
        CHECK(f.vLen >= 0);
        CHECK(f.vTime >= 0);
        CHECK(f.vResp >= 0);
        CHECK(f.nPackets >= 1);
        CHECK(f.nSYN <= f.nPackets);
        CHECK(f.mLen * f.nPackets == doctest::Approx(f.nBytes).epsilon(1e-15));

        // variance identity
        double sq = 0;
        for (const auto &p : flow.packets) {
            sq += static_cast<double>(p.payload_len) * p.payload_len;
        }
        CHECK(f.vLen == doctest::Approx(sq / f.nPackets - f.mLen * f.mLen).epsilon(1e-9).scale(1e-6));

        if (flow.packets.size() >= 2 && flow.packets.back().timestamp_ns > flow.packets.front().timestamp_ns) {
            const double span = (flow.packets.back().timestamp_ns - flow.packets.front().timestamp_ns) * 1e-9;
            CHECK(f.mTime > 0);
            CHECK(f.mTime == doctest::Approx(span / (f.nPackets - 1)).epsilon(1e-12));
        }

        // time shift
        TcpFlow shifted = flow;
        for (auto &p : shifted.packets) {
            p.timestamp_ns += 123'456'789'000LL;
        }
        CHECK(extract_features(shifted) == f);

        // payload scale
        TcpFlow doubled = flow;
        for (auto &p : doubled.packets) {
            p.payload_len *= 2;
        }
        const FeatureVector g = extract_features(doubled);
        CHECK(g.mLen == doctest::Approx(2 * f.mLen));
        CHECK(g.nBytes == 2 * f.nBytes);
        CHECK(g.vLen == doctest::Approx(4 * f.vLen));
    }
}
