#ifndef BOTSIFT_CAPTURE_HPP
#define BOTSIFT_CAPTURE_HPP

// Packet-capture ingestion and bidirectional TCP flow assembly.

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace botsift {

/// IPv4 or IPv6 address. IPv4 occupies the first four bytes.
struct IpAddress {
    enum class Family : std::uint8_t { v4 = 4, v6 = 6 };

    Family family = Family::v4;
    std::array<std::uint8_t, 16> bytes{};

    static IpAddress v4(std::uint32_t host_order);
    static IpAddress v4(std::array<std::uint8_t, 4> octets);
    static IpAddress v6(std::array<std::uint8_t, 16> octets);

    /// Parses dotted-quad or RFC 4291 text; nullopt when malformed.
    static std::optional<IpAddress> parse(std::string_view text);

    std::size_t width() const { return family == Family::v4 ? 4 : 16; }
    std::string to_string() const;

    auto operator<=>(const IpAddress &) const = default;
};

struct Endpoint {
    IpAddress ip;
    std::uint16_t port = 0;

    auto operator<=>(const Endpoint &) const = default;
};

enum TcpFlag : std::uint8_t {
    tcp_fin = 0x01,
    tcp_syn = 0x02,
    tcp_rst = 0x04,
    tcp_psh = 0x08,
    tcp_ack = 0x10,
    tcp_urg = 0x20,
};

/// One captured TCP packet. Timestamps are kept as integer nanoseconds so
/// nanosecond captures lose nothing and time differences are exact.
struct PacketRecord {
    std::int64_t timestamp_ns = 0;
    Endpoint src;
    Endpoint dst;
    std::uint8_t tcp_flags = 0;
    std::uint32_t payload_len = 0;

    double timestamp() const { return static_cast<double>(timestamp_ns) * 1e-9; }
    bool has(TcpFlag flag) const { return (tcp_flags & flag) != 0; }
};

/// Direction-independent connection identity: `lo` orders before `hi`.
struct FlowKey {
    Endpoint lo;
    Endpoint hi;

    static FlowKey of(const PacketRecord &packet);

    auto operator<=>(const FlowKey &) const = default;
};

struct TcpFlow {
    FlowKey key;
    std::vector<PacketRecord> packets;
    Endpoint initiator;
    Endpoint responder;

    std::int64_t start_ns() const { return packets.front().timestamp_ns; }
    std::int64_t end_ns() const { return packets.back().timestamp_ns; }
    double start_time() const { return packets.front().timestamp(); }
    double end_time() const { return packets.back().timestamp(); }
};

struct CaptureStats {
    std::uint64_t records = 0;
    std::uint64_t tcp_packets = 0;
    std::uint64_t skipped = 0;
};

/// Reads a classic pcap file (either byte order, micro- or nanosecond magic)
/// and returns its TCP packets in file order. Everything else is skipped.
/// Throws IoError, or FormatError carrying the offending byte offset.
std::vector<PacketRecord> read_capture(const std::filesystem::path &path,
                                       CaptureStats *stats = nullptr);

/// Same as read_capture, over an in-memory image of the file.
std::vector<PacketRecord> parse_capture(std::span<const std::uint8_t> bytes,
                                        CaptureStats *stats = nullptr);

struct FlowConfig {
    double idle_timeout = 300.0;  // seconds
    bool terminate_on_rst = true;
};

/// Groups packets into bidirectional TCP flows. A flow ends on RST (when
/// enabled), once both sides' FINs have been ACKed, after an idle gap longer
/// than the timeout, or at end of input. Flows come back in order of their
/// first packet. Unsorted input is stably sorted by timestamp first.
std::vector<TcpFlow> assemble_flows(std::span<const PacketRecord> packets,
                                    const FlowConfig &config = {});

/// `<ip-or-CIDR> -> label`. A bare address is a /32 (or /128).
struct LabelRule {
    IpAddress network;
    unsigned prefix_len = 0;
    std::string label;
    std::string source;  // original text, for diagnostics

    bool matches(const IpAddress &ip) const;
};

/// Parses one rule; throws ConfigError naming the rule on bad input.
LabelRule parse_label_rule(std::string_view cidr, std::string_view label);

/// Reads a rules file: one `<ip-or-CIDR> <label>` per line, `#` comments.
std::vector<LabelRule> read_label_rules(const std::filesystem::path &path);
std::vector<LabelRule> parse_label_rules(std::string_view text);

struct LabelPolicy {
    /// Label for flows no rule matches; empty means drop them.
    std::string default_label;
};

struct LabeledFlow {
    TcpFlow flow;
    std::string label;
};

/// The initiator's address is looked up first, the responder's only when no
/// rule matches it. Within a lookup the first matching rule wins.
std::vector<LabeledFlow> label_flows(std::vector<TcpFlow> flows,
                                     std::span<const LabelRule> rules,
                                     const LabelPolicy &policy = {});

/// Labels are restricted to [A-Za-z0-9_-]+ so they never need CSV quoting.
bool is_valid_label(std::string_view label);

} // namespace botsift

#endif
