#ifndef DNSREFL_PCAP_HPP
#define DNSREFL_PCAP_HPP

#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dnsrefl/errors.hpp"

namespace dnsrefl {

/// One captured UDP datagram on the DNS port. Addresses are IPv4 in host
/// byte order; the payload is the UDP payload (the DNS message bytes).
struct PacketRecord {
    uint32_t ts_sec = 0;
    uint32_t ts_usec = 0; // 0..999999
    uint32_t src_ip = 0;
    uint32_t dst_ip = 0;
    uint16_t src_port = 0;
    uint16_t dst_port = 0;
    std::vector<uint8_t> payload;

    bool operator==(const PacketRecord&) const = default;
};

struct IngestStats {
    uint64_t frames = 0;  // frames seen in the file
    uint64_t yielded = 0; // UDP port-53 records produced
    uint64_t skipped = 0; // everything else (non-IPv4, fragments, decode failures, ...)
};

/// Streaming reader for classic pcap files (both byte orders, microsecond
/// timestamps, Ethernet link type). Yields Ethernet -> IPv4 -> UDP frames
/// with source or destination port 53; all other frames are counted and
/// skipped. One 802.1Q VLAN tag is unwrapped. pcapng, nanosecond captures
/// and non-Ethernet link types are rejected with BadMagic.
class PcapReader {
public:
    explicit PcapReader(const std::string& path);

    /// Next matching record, or nullopt at end of file. Throws TruncatedFile
    /// when a record header or body is cut short.
    std::optional<PacketRecord> next();

    const IngestStats& stats() const { return stats_; }

private:
    std::optional<PacketRecord> decode_frame(uint32_t ts_sec, uint32_t ts_usec,
                                             std::span<const uint8_t> frame, uint32_t orig_len);

    std::ifstream in_;
    uint64_t remaining_ = 0; // bytes left in the file
    bool swap_ = false;
    IngestStats stats_;
};

/// Convenience wrapper: read the whole file into memory.
std::vector<PacketRecord> read_pcap(const std::string& path, IngestStats* stats = nullptr);

/// Classic pcap writer, always little-endian, microsecond timestamps,
/// Ethernet link type. Layout is bit-exact per the de-facto libpcap format:
/// 24-byte global header, 16-byte record headers.
class PcapWriter {
public:
    explicit PcapWriter(const std::string& path);
    void write(uint32_t ts_sec, uint32_t ts_usec, std::span<const uint8_t> frame);
    uint64_t frames_written() const { return frames_; }

private:
    std::ofstream out_;
    uint64_t frames_ = 0;
};

/// Build an Ethernet/IPv4/UDP frame around a payload. IP header checksum is
/// computed; UDP checksum is left zero (legal for IPv4).
std::vector<uint8_t> build_udp_frame(uint32_t src_ip, uint32_t dst_ip, uint16_t src_port,
                                     uint16_t dst_port, std::span<const uint8_t> payload,
                                     uint16_t ip_id = 0, uint8_t ttl = 64);

uint32_t parse_ipv4(const std::string& dotted);
std::string ipv4_to_string(uint32_t ip);

} // namespace dnsrefl

#endif
