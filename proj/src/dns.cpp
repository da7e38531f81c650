#include "dnsrefl/dns.hpp"

#include <cctype>

namespace dnsrefl {

namespace {

constexpr size_t kHeaderLen = 12;
constexpr size_t kMaxNameWire = 255; // label bytes + length bytes + terminator

uint16_t rd16(std::span<const uint8_t> p, size_t off) {
    return static_cast<uint16_t>((p[off] << 8) | p[off + 1]);
}

char ascii_lower(uint8_t c) {
    if (c >= 'A' && c <= 'Z')
        return static_cast<char>(c - 'A' + 'a');
    return static_cast<char>(c);
}

} // namespace

DnsMessage parse_dns(std::span<const uint8_t> payload) {
    if (payload.size() < kHeaderLen)
        throw MalformedMessage("DNS message shorter than 12-byte header");

    DnsMessage m;
    m.id = rd16(payload, 0);
    const uint8_t f1 = payload[2];
    const uint8_t f2 = payload[3];
    m.qr = (f1 >> 7) & 1;
    m.opcode = (f1 >> 3) & 0x0F;
    m.aa = (f1 >> 2) & 1;
    m.tc = (f1 >> 1) & 1;
    m.rd = f1 & 1;
    m.ra = (f2 >> 7) & 1;
    m.z = (f2 >> 4) & 0x07;
    m.rcode = f2 & 0x0F;
    m.qdcount = rd16(payload, 4);
    m.ancount = rd16(payload, 6);
    m.nscount = rd16(payload, 8);
    m.adcount = rd16(payload, 10);
    m.size = payload.size();

    if (m.qdcount == 0)
        return m;

    // First question only. Later questions and all resource records are left
    // unvalidated.
    size_t pos = kHeaderLen;
    size_t name_wire = 0;
    std::string name;
    for (;;) {
        if (pos >= payload.size())
            throw MalformedMessage("question name runs past end of message");
        const uint8_t len = payload[pos];
        if (len & 0xC0) {
            // 0xC0 = compression pointer, 0x40/0x80 = reserved label types.
            throw MalformedMessage("unsupported label type in question name");
        }
        ++pos;
        ++name_wire;
        if (len == 0)
            break;
        if (pos + len > payload.size())
            throw MalformedMessage("question label overruns message");
        name_wire += len;
        if (name_wire > kMaxNameWire)
            throw MalformedMessage("question name longer than 255 octets");
        if (!name.empty())
            name.push_back('.');
        for (size_t i = 0; i < len; ++i)
            name.push_back(ascii_lower(payload[pos + i]));
        pos += len;
    }
    if (pos + 4 > payload.size())
        throw MalformedMessage("question truncated before type/class");
    m.qname = name.empty() ? "." : name; // root name stays non-empty
    m.qtype = rd16(payload, pos);
    m.qclass = rd16(payload, pos + 2);
    return m;
}

std::vector<uint8_t> encode_dns(const DnsMessage& msg) {
    std::vector<uint8_t> out;
    out.reserve(msg.size > kHeaderLen ? msg.size : kHeaderLen);

    auto put16 = [&out](uint16_t v) {
        out.push_back(static_cast<uint8_t>(v >> 8));
        out.push_back(static_cast<uint8_t>(v & 0xFF));
    };

    put16(msg.id);
    out.push_back(static_cast<uint8_t>((msg.qr & 1) << 7 | (msg.opcode & 0x0F) << 3 |
                                       (msg.aa & 1) << 2 | (msg.tc & 1) << 1 | (msg.rd & 1)));
    out.push_back(static_cast<uint8_t>((msg.ra & 1) << 7 | (msg.z & 0x07) << 4 | (msg.rcode & 0x0F)));
    put16(msg.qdcount);
    put16(msg.ancount);
    put16(msg.nscount);
    put16(msg.adcount);

    if (msg.qdcount > 0) {
        if (msg.qname.empty())
            throw MalformedMessage("qdcount > 0 but no question name to encode");
        size_t name_wire = 1; // terminator
        if (msg.qname != ".") {
            size_t start = 0;
            const std::string& n = msg.qname;
            while (start <= n.size()) {
                size_t dot = n.find('.', start);
                size_t end = (dot == std::string::npos) ? n.size() : dot;
                size_t len = end - start;
                if (len == 0 || len > 63)
                    throw MalformedMessage("invalid label length in qname");
                name_wire += 1 + len;
                if (name_wire > kMaxNameWire)
                    throw MalformedMessage("qname longer than 255 octets");
                out.push_back(static_cast<uint8_t>(len));
                for (size_t i = start; i < end; ++i)
                    out.push_back(static_cast<uint8_t>(ascii_lower(static_cast<uint8_t>(n[i]))));
                if (dot == std::string::npos)
                    break;
                start = dot + 1;
            }
        }
        out.push_back(0);
        put16(msg.qtype);
        put16(msg.qclass);
    }

    // Pad to the recorded wire size; the parser ignores everything after the
    // first question, so filler stands in for answer sections.
    while (out.size() < msg.size)
        out.push_back(0x00);
    return out;
}

} // namespace dnsrefl
