#ifndef BOTSIFT_TESTS_FIXTURES_HPP
#define BOTSIFT_TESTS_FIXTURES_HPP

// Hand-built captures behind tests/data/*.pcap, and the feature vectors
// worked out by hand for the golden one.

#include "support/pcap_builder.hpp"

#include "botsift/features.hpp"

#include <cmath>
#include <vector>

namespace botsift::testing {

inline constexpr std::uint8_t FIN = 0x01, SYN = 0x02, RST = 0x04, PSH = 0x08, ACK = 0x10;

inline std::int64_t at(double seconds) { return std::llround(seconds * 1e9); }

/// Six TCP packets and two UDP packets, written big-endian.
inline std::vector<Frame> mixed_frames() {
    return {
        {at(1.0), "10.1.1.1", "10.1.1.2", 1234, 80, SYN, 0},
        {at(1.1), "10.1.1.2", "10.1.1.1", 80, 1234, SYN | ACK, 0},
        {at(1.2), "10.1.1.3", "8.8.8.8", 5353, 53, 0, 40, Proto::udp},
        {at(1.3), "10.1.1.1", "10.1.1.2", 1234, 80, ACK, 0, Proto::tcp, 3},
        {at(1.4), "10.1.1.1", "10.1.1.2", 1234, 80, PSH | ACK, 120, Proto::tcp, 3},
        {at(1.5), "8.8.8.8", "10.1.1.3", 53, 5353, 0, 80, Proto::udp},
        {at(1.6), "10.1.1.2", "10.1.1.1", 80, 1234, PSH | ACK, 700, Proto::tcp, 0, true},
        {at(1.7), "2001:db8::a", "2001:db8::b", 40000, 443, SYN, 0},
    };
}

inline PcapOptions mixed_options() { return {true, false, 1}; }

/// Golden capture: seven flows.
///   1 handshake only            10.0.0.5:40000 -> 192.168.1.10:80
///   2 data, responses, FIN/ACK  10.0.0.5:40001 -> 192.168.1.10:443
///   3 reused 4-tuple, RST       10.0.0.5:40001 -> 192.168.1.10:443
///   4 idle-split, first half    10.0.0.7:50000 -> 172.16.0.1:6667
///   6 lone IPv6 SYN             [2001:db8::1]:33333 -> [2001:db8::2]:22
///   7 two receipts, one reply   10.0.0.5:40002 -> 192.168.1.10:8080
///   5 idle-split, second half (no SYN: the first sender initiates)
/// plus two UDP packets that must be ignored.
inline std::vector<Frame> golden_frames() {
    const std::string c = "10.0.0.5", s = "192.168.1.10", c2 = "10.0.0.7", s2 = "172.16.0.1";
    const std::string a6 = "2001:db8::1", b6 = "2001:db8::2";
    return {
        // flow 1
        {at(10.0), c, s, 40000, 80, SYN, 0},
        {at(10.1), s, c, 80, 40000, SYN | ACK, 0},
        {at(10.3), c, s, 40000, 80, ACK, 0},
        {at(15.0), c, "10.0.0.53", 5000, 53, 0, 30, Proto::udp},
        // flow 2
        {at(20.0), c, s, 40001, 443, SYN, 0},
        {at(20.5), s, c, 443, 40001, SYN | ACK, 0},
        {at(21.0), c, s, 40001, 443, ACK, 0},
        {at(21.5), c, s, 40001, 443, PSH | ACK, 100},
        {at(22.0), s, c, 443, 40001, PSH | ACK, 300},
        {at(22.4), c, s, 40001, 443, ACK, 0},
        {at(25.0), s, c, 443, 40001, PSH | ACK, 200},
        {at(25.2), c, s, 40001, 443, PSH | ACK, 50},
        {at(26.0), c, s, 40001, 443, FIN | ACK, 0},
        {at(26.5), s, c, 443, 40001, FIN | ACK, 0},
        {at(27.0), c, s, 40001, 443, ACK, 0},
        // flow 3: same 4-tuple after close
        {at(30.0), c, s, 40001, 443, SYN, 0},
        {at(30.25), s, c, 443, 40001, RST | ACK, 0},
        // flow 4
        {at(100.0), c2, s2, 50000, 6667, SYN, 0},
        {at(100.2), s2, c2, 6667, 50000, SYN | ACK, 0},
        {at(100.3), c2, s2, 50000, 6667, ACK, 0},
        {at(100.5), c2, s2, 50000, 6667, PSH | ACK, 20},
        {at(150.0), "10.0.0.53", c, 53, 5000, 0, 60, Proto::udp},
        // flow 6
        {at(200.0), a6, b6, 33333, 22, SYN, 0},
        // flow 7
        {at(300.0), c, s, 40002, 8080, SYN, 0},
        {at(300.1), s, c, 8080, 40002, SYN | ACK, 0},
        {at(300.2), c, s, 40002, 8080, ACK, 0},
        {at(300.3), s, c, 8080, 40002, PSH | ACK, 10},
        {at(300.5), s, c, 8080, 40002, PSH | ACK, 20},
        {at(301.0), c, s, 40002, 8080, ACK, 0},
        // flow 5: 400 s after flow 4 went quiet
        {at(500.5), s2, c2, 6667, 50000, PSH | ACK, 40},
        {at(500.6), c2, s2, 50000, 6667, ACK, 0},
        {at(501.0), s2, c2, 6667, 50000, PSH | ACK, 60},
    };
}

inline PcapOptions golden_options() { return {false, false, 1}; }

/// Expected vectors, in flow order (by first packet). Derivations:
///  1: gaps {.1,.2}; one response .2 (SYN-ACK@10.1 -> ACK@10.3)
///  2: payloads {0,0,0,100,300,0,200,50,0,0,0}: 650/11, vLen = (11*142500 - 650^2)/121
///     gaps {.5,.5,.5,.5,.4,2.6,.2,.8,.5,.5}: mean .7, var 4.2/10
///     responses {.5,.4,.2,.5}: mean .4, var .06/4
///  3: gap {.25}; the RST is never answered
///  4: payloads {0,0,0,20}; gaps {.2,.1,.2}: mean .5/3, var (6/900)/3; response {.1}
///  6: single packet
///  7: gaps {.1,.1,.1,.2,.5}; responses {.1,.7,.5}: mean 13/30, var 56/900
///  5: initiator 172.16.0.1:6667; payloads {40,0,60}; gaps {.1,.4}; response {.4}
inline std::vector<FeatureVector> golden_vectors() {
    FeatureVector f1{40000, 80, 0, 0, 0.15, 0.0025, 0.2, 0, 0, 2, 3};
    FeatureVector f2{40001, 443, 650.0 / 11, 1145000.0 / 121, 0.7, 0.42, 0.4, 0.015, 650, 2, 11};
    FeatureVector f3{40001, 443, 0, 0, 0.25, 0, 0, 0, 0, 1, 2};
    FeatureVector f4{50000, 6667, 5, 75, 0.5 / 3, 2.0 / 900, 0.1, 0, 20, 2, 4};
    FeatureVector f6{33333, 22, 0, 0, 0, 0, 0, 0, 0, 1, 1};
    FeatureVector f7{40002, 8080, 5, 175.0 / 3, 0.2, 0.024, 13.0 / 30, 56.0 / 900, 30, 2, 6};
    FeatureVector f5{6667, 50000, 100.0 / 3, 5600.0 / 9, 0.25, 0.0225, 0.4, 0, 100, 0, 3};
    return {f1, f2, f3, f4, f6, f7, f5};
}

inline std::string golden_path() { return std::string{BOTSIFT_TEST_DATA} + "/golden_flows.pcap"; }
inline std::string mixed_path() { return std::string{BOTSIFT_TEST_DATA} + "/mixed_6tcp_2udp.pcap"; }

} // namespace botsift::testing

#endif
