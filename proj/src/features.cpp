#include "botsift/features.hpp"

#include "botsift/error.hpp"

#include <algorithm>
#include <vector>

namespace botsift {

namespace {

constexpr std::array<std::string_view, feature_count> schema_names = {
    "sPort", "dPort", "mLen", "vLen", "mTime", "vTime", "mResp", "vResp", "nBytes", "nSYN", "nPackets",
};

struct Moments {
    double mean = 0;
    double variance = 0;
};

// Two-pass population moments; empty input gives zeros.
Moments moments(std::span<const double> xs) {
    if (xs.empty()) {
        return {};
    }
    double sum = 0;
    for (const double x : xs) {
        sum += x;
    }
    const double mean = sum / static_cast<double>(xs.size());
    double ss = 0;
    for (const double x : xs) {
        ss += (x - mean) * (x - mean);
    }
    return {mean, ss / static_cast<double>(xs.size())};
}

double variance_about(std::span<const double> xs, double mean) {
    if (xs.empty()) {
        return 0;
    }
    double ss = 0;
    for (const double x : xs) {
        ss += (x - mean) * (x - mean);
    }
    return ss / static_cast<double>(xs.size());
}

} // namespace

std::array<double, feature_count> FeatureVector::values() const {
    return {sPort, dPort, mLen, vLen, mTime, vTime, mResp, vResp, nBytes, nSYN, nPackets};
}

std::span<const std::string_view> feature_schema() { return schema_names; }

std::optional<std::size_t> feature_index(std::string_view name) {
    const auto it = std::find(schema_names.begin(), schema_names.end(), name);
    if (it == schema_names.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - schema_names.begin());
}

FeatureVector extract_features(const TcpFlow &flow) {
    const auto &packets = flow.packets;
    if (packets.empty()) {
        throw ContractViolation{"extract_features: flow has no packets"};
    }
    const std::size_t n = packets.size();
    FeatureVector fv;
    fv.sPort = flow.initiator.port;
    fv.dPort = flow.responder.port;
    fv.nPackets = static_cast<double>(n);

    std::vector<double> lengths;
    lengths.reserve(n);
    std::uint64_t total_bytes = 0;
    std::size_t syns = 0;
    for (const PacketRecord &p : packets) {
        lengths.push_back(p.payload_len);
        total_bytes += p.payload_len;
        syns += p.has(tcp_syn) ? 1 : 0;
    }
    fv.nBytes = static_cast<double>(total_bytes);
    fv.nSYN = static_cast<double>(syns);
    // mean as nBytes / nPackets keeps mLen * nPackets == nBytes
    fv.mLen = fv.nBytes / fv.nPackets;
    fv.vLen = variance_about(lengths, fv.mLen);

    if (n >= 2) {
        std::vector<double> gaps;
        gaps.reserve(n - 1);
        for (std::size_t i = 1; i < n; ++i) {
            gaps.push_back(static_cast<double>(packets[i].timestamp_ns - packets[i - 1].timestamp_ns) * 1e-9);
        }
        fv.mTime = static_cast<double>(packets.back().timestamp_ns - packets.front().timestamp_ns) * 1e-9 /
                   static_cast<double>(n - 1);
        fv.vTime = variance_about(gaps, fv.mTime);
    }

    // Every packet the initiator receives is paired with the initiator's next
    // transmission; receipts with no later transmission contribute nothing.
    std::vector<double> responses;
    std::vector<std::int64_t> waiting;
    for (const PacketRecord &p : packets) {
        if (p.src == flow.initiator) {
            for (const std::int64_t t : waiting) {
                responses.push_back(static_cast<double>(p.timestamp_ns - t) * 1e-9);
            }
            waiting.clear();
        } else {
            waiting.push_back(p.timestamp_ns);
        }
    }
    const Moments resp = moments(responses);
    fv.mResp = resp.mean;
    fv.vResp = resp.variance;
    return fv;
}

} // namespace botsift
