#ifndef DNSREFL_MATCHER_HPP
#define DNSREFL_MATCHER_HPP

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dnsrefl/dns.hpp"
#include "dnsrefl/pcap.hpp"

namespace dnsrefl {

enum class Label { good, bad };

const char* label_name(Label l);
Label parse_label(const std::string& s); // throws SchemaError

/// A DNS response paired with its verdict: good when a matching request was
/// seen at the boundary within the timeout window, bad otherwise.
struct LabeledResponse {
    PacketRecord record;
    DnsMessage message;
    Label label = Label::bad;

    uint32_t server_ip() const { return record.src_ip; }
};

struct MatcherOptions {
    double timeout_s = 30.0; // max request age a response may match
    bool multi_match = false; // when set, a request can validate several responses
};

struct MatcherStats {
    uint64_t queries = 0;
    uint64_t responses = 0;
    uint64_t matched = 0;
    uint64_t expired = 0; // pending requests evicted unanswered
};

/// Streams (record, message) pairs in capture order and labels every
/// response. Requests are keyed by client address/port, server address, DNS
/// id, qname and qtype; responses with qdcount = 0 match on the tuple minus
/// qname/qtype. Matched requests are consumed unless multi_match is set.
/// Out-of-order arrival is tolerated up to 1 s: a response may match a
/// request stamped slightly later than itself.
class Matcher {
public:
    explicit Matcher(MatcherOptions opts = {});

    /// Process one decoded packet. Returns a labeled response for qr = 1
    /// records, nullopt for requests.
    std::optional<LabeledResponse> push(const PacketRecord& rec, const DnsMessage& msg);

    size_t pending_size() const { return live_entries_; }
    const MatcherStats& stats() const { return stats_; }

private:
    struct Pending {
        std::string qname;
        uint16_t qtype;
        int64_t ts_us;
        uint64_t serial;
    };

    void evict_older_than(int64_t now_us);

    struct FlowKey {
        uint64_t hi; // client_ip << 32 | server_ip
        uint64_t lo; // client_port << 16 | dns_id
        bool operator==(const FlowKey&) const = default;
    };
    struct FlowKeyHash {
        size_t operator()(const FlowKey& k) const {
            return std::hash<uint64_t>{}(k.hi * 0x9E3779B97F4A7C15ULL ^ k.lo);
        }
    };

    MatcherOptions opts_;
    int64_t timeout_us_;
    int64_t max_seen_us_ = 0;
    MatcherStats stats_;
    std::unordered_map<FlowKey, std::vector<Pending>, FlowKeyHash> table_;
    std::deque<std::tuple<int64_t, FlowKey, uint64_t>> fifo_; // (insert time, key, serial)
    size_t live_entries_ = 0;
    uint64_t next_serial_ = 0;
};

std::vector<LabeledResponse> match_stream(const std::vector<std::pair<PacketRecord, DnsMessage>>& records,
                                          MatcherOptions opts = {});

/// Decode every record's payload; malformed messages are dropped and counted.
std::vector<std::pair<PacketRecord, DnsMessage>> decode_all(const std::vector<PacketRecord>& records,
                                                            uint64_t* malformed = nullptr);

/// Response table, one response per line (see README for the field list).
void write_responses(const std::vector<LabeledResponse>& responses, const std::string& path);
std::vector<LabeledResponse> read_responses(const std::string& path);

} // namespace dnsrefl

#endif
