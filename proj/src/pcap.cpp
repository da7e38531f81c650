#include "dnsrefl/pcap.hpp"

#include <array>
#include <cstring>
#include <filesystem>

namespace dnsrefl {

namespace {

constexpr uint32_t kMagicNative = 0xA1B2C3D4;  // microsecond pcap
constexpr uint32_t kMagicSwapped = 0xD4C3B2A1;
constexpr uint32_t kLinkEthernet = 1;
constexpr uint16_t kEtherIpv4 = 0x0800;
constexpr uint16_t kEtherVlan = 0x8100;
constexpr uint16_t kDnsPort = 53;

uint32_t bswap32(uint32_t v) { return __builtin_bswap32(v); }

uint16_t be16(std::span<const uint8_t> p, size_t off) {
    return static_cast<uint16_t>((p[off] << 8) | p[off + 1]);
}

uint32_t be32(std::span<const uint8_t> p, size_t off) {
    return (static_cast<uint32_t>(p[off]) << 24) | (static_cast<uint32_t>(p[off + 1]) << 16) |
           (static_cast<uint32_t>(p[off + 2]) << 8) | static_cast<uint32_t>(p[off + 3]);
}

uint32_t le32(std::span<const uint8_t> p, size_t off) {
    return static_cast<uint32_t>(p[off]) | (static_cast<uint32_t>(p[off + 1]) << 8) |
           (static_cast<uint32_t>(p[off + 2]) << 16) | (static_cast<uint32_t>(p[off + 3]) << 24);
}

uint16_t ip_checksum(std::span<const uint8_t> header) {
    uint32_t sum = 0;
    for (size_t i = 0; i + 1 < header.size(); i += 2)
        sum += static_cast<uint32_t>((header[i] << 8) | header[i + 1]);
    while (sum >> 16)
        sum = (sum & 0xFFFF) + (sum >> 16);
    return static_cast<uint16_t>(~sum);
}

} // namespace

PcapReader::PcapReader(const std::string& path) {
    std::error_code ec;
    const auto fsize = std::filesystem::file_size(path, ec);
    if (ec)
        throw IoError("cannot stat " + path + ": " + ec.message());
    in_.open(path, std::ios::binary);
    if (!in_)
        throw IoError("cannot open " + path);
    remaining_ = fsize;

    std::array<uint8_t, 24> hdr{};
    if (remaining_ < 4) {
        throw BadMagic("no pcap magic in " + path);
    }
    if (remaining_ < hdr.size()) {
        in_.read(reinterpret_cast<char*>(hdr.data()), 4);
        const uint32_t magic = le32(hdr, 0);
        if (magic != kMagicNative && magic != kMagicSwapped)
            throw BadMagic("unsupported capture format");
        throw TruncatedFile("pcap global header cut short");
    }
    in_.read(reinterpret_cast<char*>(hdr.data()), static_cast<std::streamsize>(hdr.size()));
    if (!in_)
        throw TruncatedFile("pcap global header cut short");
    remaining_ -= hdr.size();

    const uint32_t magic = le32(hdr, 0);
    if (magic == kMagicNative) {
        swap_ = false;
    } else if (magic == kMagicSwapped) {
        swap_ = true;
    } else {
        // Covers pcapng (0x0A0D0D0A) and nanosecond variants (0xA1B23C4D).
        throw BadMagic("unsupported capture format");
    }
    uint32_t linktype = le32(hdr, 20);
    if (swap_)
        linktype = bswap32(linktype);
    if (linktype != kLinkEthernet)
        throw BadMagic("unsupported link type");
}

std::optional<PacketRecord> PcapReader::next() {
    std::array<uint8_t, 16> rh{};
    for (;;) {
        if (remaining_ == 0)
            return std::nullopt;
        if (remaining_ < rh.size())
            throw TruncatedFile("pcap record header cut short");
        in_.read(reinterpret_cast<char*>(rh.data()), static_cast<std::streamsize>(rh.size()));
        if (!in_)
            throw TruncatedFile("pcap record header cut short");
        remaining_ -= rh.size();

        uint32_t ts_sec = le32(rh, 0);
        uint32_t ts_usec = le32(rh, 4);
        uint32_t incl_len = le32(rh, 8);
        uint32_t orig_len = le32(rh, 12);
        if (swap_) {
            ts_sec = bswap32(ts_sec);
            ts_usec = bswap32(ts_usec);
            incl_len = bswap32(incl_len);
            orig_len = bswap32(orig_len);
        }
        if (incl_len > remaining_)
            throw TruncatedFile("pcap record body cut short");

        std::vector<uint8_t> frame(incl_len);
        if (incl_len > 0) {
            in_.read(reinterpret_cast<char*>(frame.data()), static_cast<std::streamsize>(incl_len));
            if (!in_)
                throw TruncatedFile("pcap record body cut short");
        }
        remaining_ -= incl_len;
        ++stats_.frames;

        if (ts_usec >= 1000000) {
            ++stats_.skipped;
            continue;
        }
        auto rec = decode_frame(ts_sec, ts_usec, frame, orig_len);
        if (rec) {
            ++stats_.yielded;
            return rec;
        }
        ++stats_.skipped;
    }
}

std::optional<PacketRecord> PcapReader::decode_frame(uint32_t ts_sec, uint32_t ts_usec,
                                                     std::span<const uint8_t> frame,
                                                     uint32_t orig_len) {
    if (frame.size() < 14)
        return std::nullopt;
    uint16_t ethertype = be16(frame, 12);
    size_t off = 14;
    if (ethertype == kEtherVlan) { // unwrap a single 802.1Q tag
        if (frame.size() < 18)
            return std::nullopt;
        ethertype = be16(frame, 16);
        off = 18;
    }
    if (ethertype != kEtherIpv4)
        return std::nullopt;

    if (frame.size() < off + 20)
        return std::nullopt;
    auto ip = frame.subspan(off);
    if ((ip[0] >> 4) != 4)
        return std::nullopt;
    const size_t ihl = static_cast<size_t>(ip[0] & 0x0F) * 4;
    if (ihl < 20 || ip.size() < ihl)
        return std::nullopt;
    const uint16_t frag = be16(ip, 6);
    if ((frag & 0x2000) || (frag & 0x1FFF)) // MF set or nonzero offset
        return std::nullopt;
    if (ip[9] != 17) // not UDP
        return std::nullopt;
    const uint16_t ip_total = be16(ip, 2);
    if (ip_total < ihl + 8)
        return std::nullopt;

    auto udp = ip.subspan(ihl);
    if (udp.size() < 8)
        return std::nullopt;
    const uint16_t src_port = be16(udp, 0);
    const uint16_t dst_port = be16(udp, 2);
    if (src_port != kDnsPort && dst_port != kDnsPort)
        return std::nullopt;
    const uint16_t udp_len = be16(udp, 4);
    if (udp_len < 8)
        return std::nullopt;
    const size_t payload_len = static_cast<size_t>(udp_len) - 8;

    auto data = udp.subspan(8);
    size_t take = payload_len;
    if (data.size() < payload_len) {
        // Truncated on capture (incl_len < orig_len). Keep the surviving
        // prefix when at least a full DNS header made it, otherwise skip.
        if (frame.size() >= orig_len || data.size() < 12)
            return std::nullopt;
        take = data.size();
    }

    PacketRecord rec;
    rec.ts_sec = ts_sec;
    rec.ts_usec = ts_usec;
    rec.src_ip = be32(ip, 12);
    rec.dst_ip = be32(ip, 16);
    rec.src_port = src_port;
    rec.dst_port = dst_port;
    rec.payload.assign(data.begin(), data.begin() + static_cast<ptrdiff_t>(take));
    return rec;
}

std::vector<PacketRecord> read_pcap(const std::string& path, IngestStats* stats) {
    PcapReader reader(path);
    std::vector<PacketRecord> out;
    while (auto rec = reader.next())
        out.push_back(std::move(*rec));
    if (stats)
        *stats = reader.stats();
    return out;
}

PcapWriter::PcapWriter(const std::string& path) {
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_)
        throw IoError("cannot open " + path + " for writing");
    auto put32 = [this](uint32_t v) {
        uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                        static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
        out_.write(reinterpret_cast<const char*>(b), 4);
    };
    auto put16 = [this](uint16_t v) {
        uint8_t b[2] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8)};
        out_.write(reinterpret_cast<const char*>(b), 2);
    };
    put32(kMagicNative);
    put16(2); // version 2.4
    put16(4);
    put32(0);     // thiszone
    put32(0);     // sigfigs
    put32(65535); // snaplen
    put32(kLinkEthernet);
}

void PcapWriter::write(uint32_t ts_sec, uint32_t ts_usec, std::span<const uint8_t> frame) {
    auto put32 = [this](uint32_t v) {
        uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                        static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
        out_.write(reinterpret_cast<const char*>(b), 4);
    };
    put32(ts_sec);
    put32(ts_usec);
    put32(static_cast<uint32_t>(frame.size()));
    put32(static_cast<uint32_t>(frame.size()));
    out_.write(reinterpret_cast<const char*>(frame.data()), static_cast<std::streamsize>(frame.size()));
    if (!out_)
        throw IoError("pcap write failed");
    ++frames_;
}

std::vector<uint8_t> build_udp_frame(uint32_t src_ip, uint32_t dst_ip, uint16_t src_port,
                                     uint16_t dst_port, std::span<const uint8_t> payload,
                                     uint16_t ip_id, uint8_t ttl) {
    const size_t udp_len = 8 + payload.size();
    const size_t ip_len = 20 + udp_len;
    std::vector<uint8_t> f;
    f.reserve(14 + ip_len);

    // Ethernet: fixed synthetic MACs, IPv4 ethertype.
    const uint8_t dst_mac[6] = {0xDE, 0xAD, 0xBE, 0xEF, 0x00, 0x01};
    const uint8_t src_mac[6] = {0xAA, 0xBB, 0xCC, 0x00, 0x00, 0x01};
    f.insert(f.end(), dst_mac, dst_mac + 6);
    f.insert(f.end(), src_mac, src_mac + 6);
    f.push_back(kEtherIpv4 >> 8);
    f.push_back(kEtherIpv4 & 0xFF);

    auto put16 = [&f](uint16_t v) {
        f.push_back(static_cast<uint8_t>(v >> 8));
        f.push_back(static_cast<uint8_t>(v & 0xFF));
    };
    auto put32 = [&f](uint32_t v) {
        f.push_back(static_cast<uint8_t>(v >> 24));
        f.push_back(static_cast<uint8_t>(v >> 16));
        f.push_back(static_cast<uint8_t>(v >> 8));
        f.push_back(static_cast<uint8_t>(v));
    };

    const size_t ip_off = f.size();
    f.push_back(0x45); // version 4, ihl 5
    f.push_back(0);    // tos
    put16(static_cast<uint16_t>(ip_len));
    put16(ip_id);
    put16(0); // no flags, no fragment offset
    f.push_back(ttl);
    f.push_back(17); // UDP
    put16(0);        // checksum placeholder
    put32(src_ip);
    put32(dst_ip);
    const uint16_t cks = ip_checksum(std::span<const uint8_t>(f).subspan(ip_off, 20));
    f[ip_off + 10] = static_cast<uint8_t>(cks >> 8);
    f[ip_off + 11] = static_cast<uint8_t>(cks & 0xFF);

    put16(src_port);
    put16(dst_port);
    put16(static_cast<uint16_t>(udp_len));
    put16(0); // UDP checksum optional over IPv4
    f.insert(f.end(), payload.begin(), payload.end());
    return f;
}

uint32_t parse_ipv4(const std::string& dotted) {
    uint32_t parts[4];
    size_t idx = 0, start = 0;
    for (size_t i = 0; i <= dotted.size(); ++i) {
        if (i == dotted.size() || dotted[i] == '.') {
            if (idx >= 4 || i == start)
                throw Error("bad IPv4 address: " + dotted);
            uint32_t v = 0;
            for (size_t j = start; j < i; ++j) {
                if (dotted[j] < '0' || dotted[j] > '9')
                    throw Error("bad IPv4 address: " + dotted);
                v = v * 10 + static_cast<uint32_t>(dotted[j] - '0');
            }
            if (v > 255)
                throw Error("bad IPv4 address: " + dotted);
            parts[idx++] = v;
            start = i + 1;
        }
    }
    if (idx != 4)
        throw Error("bad IPv4 address: " + dotted);
    return (parts[0] << 24) | (parts[1] << 16) | (parts[2] << 8) | parts[3];
}

std::string ipv4_to_string(uint32_t ip) {
    return std::to_string(ip >> 24) + "." + std::to_string((ip >> 16) & 0xFF) + "." +
           std::to_string((ip >> 8) & 0xFF) + "." + std::to_string(ip & 0xFF);
}

} // namespace dnsrefl
