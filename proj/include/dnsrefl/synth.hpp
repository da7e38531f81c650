#ifndef DNSREFL_SYNTH_HPP
#define DNSREFL_SYNTH_HPP

#include <cstdint>
#include <map>
#include <string>

#include "dnsrefl/matcher.hpp"

namespace dnsrefl {

/// Shape of benign resolver answers: how much the question/answer mix varies
/// from response to response. Degenerate settings (pool of one, fixed answer
/// count, zero jitter) produce near-constant traffic.
struct BenignProfile {
    int qname_pool = 64;         // distinct names clients ask for
    int ans_min = 0;             // answer-record count range
    int ans_max = 8;
    int ns_max = 3;              // authority-record count upper bound
    int ad_max = 4;              // additional-record count upper bound
    int size_jitter = 120;       // max extra bytes appended to a response
    int rcode_err_permille = 30; // chance of a non-zero response code
    int aa_permille = 200;       // chance of the authoritative bit
};

enum class PortBehavior { random, fixed };

struct ReflectorProfile {
    PortBehavior port = PortBehavior::random;
    double period_jitter = 0.05; // fraction of the base sending period
};

struct ScenarioConfig {
    uint64_t seed = 1;
    double duration = 120.0; // seconds of traffic
    int good_servers = 12;
    int bad_servers = 4;
    double good_qps = 2.0; // per benign server
    double bad_qps = 4.0;  // per bad server
    BenignProfile benign;
    ReflectorProfile reflector;
    double uncertain_fraction = 0.0; // bad servers that send benign-shaped traffic
};

/// Flat key/value scenario format, one `key = value` per line, `#` comments.
/// Unknown keys and malformed values raise SchemaError.
ScenarioConfig parse_scenario_text(const std::string& text);
ScenarioConfig parse_scenario_file(const std::string& path);
std::string scenario_to_text(const ScenarioConfig& cfg);

struct ServerCounts {
    Label label = Label::good;
    uint64_t queries = 0;
    uint64_t responses = 0;
};

struct SummaryCounts {
    uint64_t frames = 0;
    uint64_t queries = 0;
    uint64_t responses = 0;
    std::map<uint32_t, ServerCounts> per_server;
};

/// Write a classic pcap with benign request/response pairs, reflector
/// responses with no requests, and (per uncertain_fraction) bad servers
/// whose unsolicited responses look benign. Frames are globally sorted by
/// timestamp. Identical configs produce identical files byte for byte.
SummaryCounts generate(const ScenarioConfig& cfg, const std::string& out_pcap);

} // namespace dnsrefl

#endif
