#include "botsift/capture.hpp"

#include "botsift/error.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

namespace botsift {

// ---------------------------------------------------------------------------
// addresses

IpAddress IpAddress::v4(std::uint32_t host_order) {
    return v4(std::array<std::uint8_t, 4>{
        static_cast<std::uint8_t>(host_order >> 24), static_cast<std::uint8_t>(host_order >> 16),
        static_cast<std::uint8_t>(host_order >> 8), static_cast<std::uint8_t>(host_order)});
}

IpAddress IpAddress::v4(std::array<std::uint8_t, 4> octets) {
    IpAddress a;
    a.family = Family::v4;
    std::copy(octets.begin(), octets.end(), a.bytes.begin());
    return a;
}

IpAddress IpAddress::v6(std::array<std::uint8_t, 16> octets) {
    IpAddress a;
    a.family = Family::v6;
    a.bytes = octets;
    return a;
}

std::optional<IpAddress> IpAddress::parse(std::string_view text) {
    const std::string s{text};
    IpAddress a;
    if (s.find(':') == std::string::npos) {
        a.family = Family::v4;
        if (inet_pton(AF_INET, s.c_str(), a.bytes.data()) != 1) {
            return std::nullopt;
        }
    } else {
        a.family = Family::v6;
        if (inet_pton(AF_INET6, s.c_str(), a.bytes.data()) != 1) {
            return std::nullopt;
        }
    }
    return a;
}

std::string IpAddress::to_string() const {
    char buf[INET6_ADDRSTRLEN] = {};
    inet_ntop(family == Family::v4 ? AF_INET : AF_INET6, bytes.data(), buf, sizeof(buf));
    return buf;
}

FlowKey FlowKey::of(const PacketRecord &packet) {
    if (packet.src <= packet.dst) {
        return {packet.src, packet.dst};
    }
    return {packet.dst, packet.src};
}

// ---------------------------------------------------------------------------
// pcap decoding

namespace {

constexpr std::uint32_t magic_usec = 0xa1b2c3d4;
constexpr std::uint32_t magic_nsec = 0xa1b23c4d;
constexpr std::size_t global_header_len = 24;
constexpr std::size_t record_header_len = 16;
constexpr std::uint32_t max_record_len = 256u << 20;

constexpr std::uint8_t ip_proto_tcp = 6;

std::uint16_t be16(const std::uint8_t *p) { return static_cast<std::uint16_t>(p[0] << 8 | p[1]); }

std::uint32_t le32(const std::uint8_t *p) {
    return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 |
           std::uint32_t{p[3]} << 24;
}

std::uint32_t bswap32(std::uint32_t v) {
    return (v >> 24) | ((v >> 8) & 0xff00) | ((v << 8) & 0xff0000) | (v << 24);
}

// Pulls the TCP header out of an IP payload. Returns false if the frame is not
// a decodable TCP segment.
bool decode_tcp(std::span<const std::uint8_t> seg, std::size_t tcp_bytes_on_wire, PacketRecord &out) {
    if (seg.size() < 20) {
        return false;
    }
    const std::size_t header_len = static_cast<std::size_t>(seg[12] >> 4) * 4;
    if (header_len < 20 || header_len > tcp_bytes_on_wire) {
        return false;
    }
    out.src.port = be16(&seg[0]);
    out.dst.port = be16(&seg[2]);
    out.tcp_flags = seg[13] & 0x3f;
    out.payload_len = static_cast<std::uint32_t>(tcp_bytes_on_wire - header_len);
    return true;
}

bool decode_ipv4(std::span<const std::uint8_t> pkt, PacketRecord &out) {
    if (pkt.size() < 20 || (pkt[0] >> 4) != 4) {
        return false;
    }
    const std::size_t ihl = std::size_t{pkt[0] & 0x0fu} * 4;
    if (ihl < 20 || pkt.size() < ihl || pkt[9] != ip_proto_tcp) {
        return false;
    }
    if ((be16(&pkt[6]) & 0x1fff) != 0) {
        return false;  // non-initial fragment: no TCP header
    }
    std::size_t total = be16(&pkt[2]);
    if (total == 0) {
        total = pkt.size();  // segmentation offload leaves the length unset
    }
    if (total < ihl) {
        return false;
    }
    out.src.ip = IpAddress::v4(std::array<std::uint8_t, 4>{pkt[12], pkt[13], pkt[14], pkt[15]});
    out.dst.ip = IpAddress::v4(std::array<std::uint8_t, 4>{pkt[16], pkt[17], pkt[18], pkt[19]});
    return decode_tcp(pkt.subspan(ihl), total - ihl, out);
}

bool decode_ipv6(std::span<const std::uint8_t> pkt, PacketRecord &out) {
    if (pkt.size() < 40 || (pkt[0] >> 4) != 6) {
        return false;
    }
    std::size_t remaining = be16(&pkt[4]);  // bytes after the fixed header
    std::uint8_t next = pkt[6];
    std::size_t off = 40;
    std::array<std::uint8_t, 16> src{}, dst{};
    std::copy_n(&pkt[8], 16, src.begin());
    std::copy_n(&pkt[24], 16, dst.begin());

    while (next != ip_proto_tcp) {
        if (pkt.size() < off + 8) {
            return false;
        }
        std::size_t ext_len;
        switch (next) {
        case 0:   // hop-by-hop
        case 43:  // routing
        case 60:  // destination options
            ext_len = (std::size_t{pkt[off + 1]} + 1) * 8;
            break;
        case 44:  // fragment
            if ((be16(&pkt[off + 2]) & 0xfff8) != 0) {
                return false;
            }
            ext_len = 8;
            break;
        case 51:  // authentication header
            ext_len = (std::size_t{pkt[off + 1]} + 2) * 4;
            break;
        default:
            return false;
        }
        if (ext_len > remaining) {
            return false;
        }
        next = pkt[off];
        off += ext_len;
        remaining -= ext_len;
    }
    if (pkt.size() < off) {
        return false;
    }
    out.src.ip = IpAddress::v6(src);
    out.dst.ip = IpAddress::v6(dst);
    return decode_tcp(pkt.subspan(off), remaining, out);
}

bool decode_by_ethertype(std::uint16_t ethertype, std::span<const std::uint8_t> payload, PacketRecord &out) {
    switch (ethertype) {
    case 0x0800:
        return decode_ipv4(payload, out);
    case 0x86dd:
        return decode_ipv6(payload, out);
    default:
        return false;
    }
}

bool decode_by_version(std::span<const std::uint8_t> payload, PacketRecord &out) {
    if (payload.empty()) {
        return false;
    }
    switch (payload[0] >> 4) {
    case 4:
        return decode_ipv4(payload, out);
    case 6:
        return decode_ipv6(payload, out);
    default:
        return false;
    }
}

bool decode_frame(std::uint32_t linktype, std::span<const std::uint8_t> frame, PacketRecord &out) {
    switch (linktype) {
    case 0: {  // BSD loopback: 4-byte address family in capturing host order
        if (frame.size() < 4) {
            return false;
        }
        return decode_by_version(frame.subspan(4), out);
    }
    case 1: {  // Ethernet, with any number of 802.1Q / 802.1ad tags
        std::size_t off = 12;
        if (frame.size() < off + 2) {
            return false;
        }
        std::uint16_t ethertype = be16(&frame[off]);
        while (ethertype == 0x8100 || ethertype == 0x88a8) {
            off += 4;
            if (frame.size() < off + 2) {
                return false;
            }
            ethertype = be16(&frame[off]);
        }
        return decode_by_ethertype(ethertype, frame.subspan(off + 2), out);
    }
    case 12:
    case 101:  // raw IP
        return decode_by_version(frame, out);
    case 113:  // Linux cooked v1
        if (frame.size() < 16) {
            return false;
        }
        return decode_by_ethertype(be16(&frame[14]), frame.subspan(16), out);
    case 228:
        return decode_ipv4(frame, out);
    case 229:
        return decode_ipv6(frame, out);
    case 276:  // Linux cooked v2
        if (frame.size() < 20) {
            return false;
        }
        return decode_by_ethertype(be16(&frame[0]), frame.subspan(20), out);
    default:
        return false;
    }
}

bool supported_linktype(std::uint32_t linktype) {
    switch (linktype) {
    case 0:
    case 1:
    case 12:
    case 101:
    case 113:
    case 228:
    case 229:
    case 276:
        return true;
    default:
        return false;
    }
}

} // namespace

std::vector<PacketRecord> parse_capture(std::span<const std::uint8_t> bytes, CaptureStats *stats) {
    if (bytes.size() < global_header_len) {
        throw FormatError{"truncated capture file header", 0};
    }
    const std::uint32_t raw_magic = le32(bytes.data());
    bool swapped = false;
    bool nanos = false;
    if (raw_magic == magic_usec || raw_magic == magic_nsec) {
        nanos = raw_magic == magic_nsec;
    } else if (bswap32(raw_magic) == magic_usec || bswap32(raw_magic) == magic_nsec) {
        swapped = true;
        nanos = bswap32(raw_magic) == magic_nsec;
    } else {
        char hex[16];
        std::snprintf(hex, sizeof(hex), "0x%08x", raw_magic);
        throw FormatError{std::string{"unknown capture magic number "} + hex, 0};
    }
    auto u32 = [&](std::size_t off) {
        const std::uint32_t v = le32(&bytes[off]);
        return swapped ? bswap32(v) : v;
    };

    const std::uint32_t linktype = u32(20) & 0x0fffffff;
    if (!supported_linktype(linktype)) {
        throw FormatError{"unsupported link type " + std::to_string(linktype), 20};
    }

    std::vector<PacketRecord> packets;
    CaptureStats local;
    std::size_t off = global_header_len;
    while (off < bytes.size()) {
        if (bytes.size() - off < record_header_len) {
            throw FormatError{"truncated record header", off};
        }
        const std::uint32_t ts_sec = u32(off);
        const std::uint32_t ts_frac = u32(off + 4);
        const std::uint32_t incl_len = u32(off + 8);
        if (incl_len > max_record_len) {
            throw FormatError{"implausible record length " + std::to_string(incl_len), off};
        }
        if (bytes.size() - off - record_header_len < incl_len) {
            throw FormatError{"truncated record data", off};
        }
        ++local.records;
        PacketRecord rec;
        rec.timestamp_ns = std::int64_t{ts_sec} * 1'000'000'000 +
                           (nanos ? std::int64_t{ts_frac} : std::int64_t{ts_frac} * 1000);
        if (decode_frame(linktype, bytes.subspan(off + record_header_len, incl_len), rec)) {
            packets.push_back(rec);
            ++local.tcp_packets;
        } else {
            ++local.skipped;
        }
        off += record_header_len + incl_len;
    }
    if (stats != nullptr) {
        *stats = local;
    }
    return packets;
}

std::vector<PacketRecord> read_capture(const std::filesystem::path &path, CaptureStats *stats) {
    std::ifstream in{path, std::ios::binary};
    if (!in) {
        throw IoError{"cannot open capture " + path.string()};
    }
    std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>{in}, std::istreambuf_iterator<char>{}};
    if (in.bad()) {
        throw IoError{"error reading capture " + path.string()};
    }
    return parse_capture(bytes, stats);
}

// ---------------------------------------------------------------------------
// flow assembly

namespace {

struct ActiveFlow {
    std::size_t index = 0;
    std::int64_t last_ns = 0;
    bool fin_seen[2] = {false, false};
    bool fin_acked[2] = {false, false};
};

void settle_roles(TcpFlow &flow) {
    const auto opener = std::find_if(flow.packets.begin(), flow.packets.end(), [](const PacketRecord &p) {
        return p.has(tcp_syn) && !p.has(tcp_ack);
    });
    const PacketRecord &first = opener != flow.packets.end() ? *opener : flow.packets.front();
    flow.initiator = first.src;
    flow.responder = first.dst;
}

} // namespace

std::vector<TcpFlow> assemble_flows(std::span<const PacketRecord> packets, const FlowConfig &config) {
    auto by_time = [](const PacketRecord &a, const PacketRecord &b) { return a.timestamp_ns < b.timestamp_ns; };
    std::vector<PacketRecord> sorted;
    if (!std::is_sorted(packets.begin(), packets.end(), by_time)) {
        sorted.assign(packets.begin(), packets.end());
        std::stable_sort(sorted.begin(), sorted.end(), by_time);
        packets = sorted;
    }

    const auto timeout_ns = static_cast<std::int64_t>(std::llround(config.idle_timeout * 1e9));
    std::vector<TcpFlow> flows;
    std::map<FlowKey, ActiveFlow> active;

    for (const PacketRecord &p : packets) {
        const FlowKey key = FlowKey::of(p);
        auto it = active.find(key);
        if (it != active.end() && p.timestamp_ns - it->second.last_ns > timeout_ns) {
            active.erase(it);
            it = active.end();
        }
        if (it == active.end()) {
            it = active.emplace(key, ActiveFlow{flows.size()}).first;
            flows.push_back(TcpFlow{key, {}, {}, {}});
        }
        ActiveFlow &state = it->second;
        flows[state.index].packets.push_back(p);
        state.last_ns = p.timestamp_ns;

        const int side = p.src == key.lo ? 0 : 1;
        if (p.has(tcp_ack) && state.fin_seen[1 - side]) {
            state.fin_acked[1 - side] = true;
        }
        if (p.has(tcp_fin)) {
            state.fin_seen[side] = true;
        }
        const bool reset = config.terminate_on_rst && p.has(tcp_rst);
        if (reset || (state.fin_acked[0] && state.fin_acked[1])) {
            active.erase(it);
        }
    }

    for (TcpFlow &flow : flows) {
        settle_roles(flow);
    }
    return flows;
}

} // namespace botsift
