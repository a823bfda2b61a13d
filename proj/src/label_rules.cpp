#include "botsift/capture.hpp"

#include "botsift/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace botsift {

bool is_valid_label(std::string_view label) {
    if (label.empty()) {
        return false;
    }
    for (const char c : label) {
        const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' ||
                        c == '-';
        if (!ok) {
            return false;
        }
    }
    return true;
}

bool LabelRule::matches(const IpAddress &ip) const {
    if (ip.family != network.family) {
        return false;
    }
    unsigned bits = prefix_len;
    for (std::size_t i = 0; i < ip.width() && bits > 0; ++i) {
        const unsigned take = bits >= 8 ? 8 : bits;
        const auto mask = static_cast<std::uint8_t>(0xff << (8 - take));
        if ((ip.bytes[i] & mask) != (network.bytes[i] & mask)) {
            return false;
        }
        bits -= take;
    }
    return true;
}

LabelRule parse_label_rule(std::string_view cidr, std::string_view label) {
    const std::string source = std::string{cidr} + " " + std::string{label};
    if (!is_valid_label(label)) {
        throw ConfigError{"label rule '" + source + "': label must match [A-Za-z0-9_-]+"};
    }
    LabelRule rule;
    rule.label = std::string{label};
    rule.source = source;

    const auto slash = cidr.find('/');
    const auto address = IpAddress::parse(cidr.substr(0, slash));
    if (!address) {
        throw ConfigError{"label rule '" + source + "': malformed address"};
    }
    rule.network = *address;
    const unsigned max_prefix = static_cast<unsigned>(address->width() * 8);
    rule.prefix_len = max_prefix;
    if (slash != std::string_view::npos) {
        const std::string_view digits = cidr.substr(slash + 1);
        unsigned prefix = 0;
        const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), prefix);
        if (digits.empty() || ec != std::errc{} || end != digits.data() + digits.size() || prefix > max_prefix) {
            throw ConfigError{"label rule '" + source + "': malformed prefix length"};
        }
        rule.prefix_len = prefix;
    }
    return rule;
}

std::vector<LabelRule> parse_label_rules(std::string_view text) {
    std::vector<LabelRule> rules;
    std::istringstream in{std::string{text}};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream fields{line};
        std::string cidr, label, extra;
        if (!(fields >> cidr)) {
            continue;
        }
        if (!(fields >> label) || (fields >> extra)) {
            throw ConfigError{"label rules line " + std::to_string(line_no) + ": expected '<ip-or-CIDR> <label>'"};
        }
        rules.push_back(parse_label_rule(cidr, label));
    }
    return rules;
}

std::vector<LabelRule> read_label_rules(const std::filesystem::path &path) {
    std::ifstream in{path};
    if (!in) {
        throw IoError{"cannot open label rules " + path.string()};
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_label_rules(buf.str());
}

namespace {

const LabelRule *first_match(std::span<const LabelRule> rules, const IpAddress &ip) {
    for (const LabelRule &rule : rules) {
        if (rule.matches(ip)) {
            return &rule;
        }
    }
    return nullptr;
}

} // namespace

std::vector<LabeledFlow> label_flows(std::vector<TcpFlow> flows, std::span<const LabelRule> rules,
                                     const LabelPolicy &policy) {
    if (rules.empty()) {
        throw ConfigError{"no label rules given"};
    }
    if (!policy.default_label.empty() && !is_valid_label(policy.default_label)) {
        throw ConfigError{"default label '" + policy.default_label + "' must match [A-Za-z0-9_-]+"};
    }
    std::vector<LabeledFlow> out;
    out.reserve(flows.size());
    for (TcpFlow &flow : flows) {
        const LabelRule *rule = first_match(rules, flow.initiator.ip);
        if (rule == nullptr) {
            rule = first_match(rules, flow.responder.ip);
        }
        if (rule != nullptr) {
            out.push_back({std::move(flow), rule->label});
        } else if (!policy.default_label.empty()) {
            out.push_back({std::move(flow), policy.default_label});
        }
    }
    return out;
}

} // namespace botsift
