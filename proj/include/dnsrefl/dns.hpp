#ifndef DNSREFL_DNS_HPP
#define DNSREFL_DNS_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dnsrefl/errors.hpp"

namespace dnsrefl {

/// Decoded DNS header plus the first question. Resource-record sections are
/// never parsed; only their counts are kept. `size` is the length of the
/// whole message as it appeared on the wire.
struct DnsMessage {
    uint16_t id = 0;
    uint8_t qr = 0;     // 0 = query, 1 = response
    uint8_t opcode = 0; // 0..15
    uint8_t aa = 0;
    uint8_t tc = 0;
    uint8_t rd = 0;
    uint8_t ra = 0;
    uint8_t z = 0; // raw 3 bits between RA and RCODE
    uint8_t rcode = 0;
    uint16_t qdcount = 0;
    uint16_t ancount = 0; // answer records
    uint16_t nscount = 0; // authority records
    uint16_t adcount = 0; // additional records
    size_t size = 0;

    // First question, lowercase dotted form ("." for the root); empty iff
    // qdcount == 0.
    std::string qname;
    uint16_t qtype = 0;
    uint16_t qclass = 0;

    bool operator==(const DnsMessage&) const = default;
};

/// Decode a DNS message from a raw UDP payload.
///
/// Header fields come straight from the 12-byte wire header. When qdcount > 0
/// the first question is decoded label by label; compression pointers inside
/// the question name are rejected. Bytes after the first question are not
/// validated. Throws MalformedMessage on any violation.
DnsMessage parse_dns(std::span<const uint8_t> payload);

/// Encode a message: header, then the first question when qdcount > 0. When
/// msg.size exceeds the minimal encoding the output is padded with filler
/// bytes up to msg.size, so parse_dns(encode_dns(m)) round-trips every field
/// including size. Throws MalformedMessage for unencodable names.
std::vector<uint8_t> encode_dns(const DnsMessage& msg);

} // namespace dnsrefl

#endif
