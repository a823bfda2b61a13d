#ifndef BOTSIFT_FEATURES_HPP
#define BOTSIFT_FEATURES_HPP

// Per-flow traffic features. Metadata only: ports, sizes, timing and flags.

#include "botsift/capture.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace botsift {

inline constexpr std::size_t feature_count = 11;

/// Eleven flow features. Times in seconds, sizes in payload bytes; the
/// variances are population variances. Any statistic over an empty sample
/// set is 0.
struct FeatureVector {
    double sPort = 0;     // initiator port
    double dPort = 0;     // responder port
    double mLen = 0;      // payload length, mean over all packets
    double vLen = 0;
    double mTime = 0;     // gap between consecutive packets (both directions merged)
    double vTime = 0;
    double mResp = 0;     // initiator's delay answering a received packet
    double vResp = 0;
    double nBytes = 0;    // total payload bytes
    double nSYN = 0;
    double nPackets = 0;

    /// Values in canonical schema order.
    std::array<double, feature_count> values() const;

    bool operator==(const FeatureVector &) const = default;
};

/// Canonical column order, used by every dataset, model and report.
std::span<const std::string_view> feature_schema();

/// Position of `name` in feature_schema(), if it is one.
std::optional<std::size_t> feature_index(std::string_view name);

/// Throws ContractViolation for a flow without packets.
FeatureVector extract_features(const TcpFlow &flow);

} // namespace botsift

#endif
