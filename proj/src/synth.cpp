#include "dnsrefl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dnsrefl/rng.hpp"

namespace dnsrefl {

namespace {

constexpr uint32_t kBaseEpoch = 1609459200; // synthetic capture start
constexpr uint32_t kClientBase = 0x0A000000; // 10.0.0.0, internal side
constexpr uint32_t kVictimBase = 0x0A000900; // 10.0.9.0, internal targets
constexpr uint32_t kGoodBase = 0xC6336400;   // 198.51.100.0
constexpr uint32_t kBadBase = 0xCB007100;    // 203.0.113.0
constexpr int kClients = 64;

struct Event {
    int64_t t_us;
    std::vector<uint8_t> frame;
};

std::string pool_name(int j) { return "h" + std::to_string(j) + ".example.net"; }

uint16_t pick_qtype(Rng& rng) {
    const auto r = rng.below(100);
    if (r < 80)
        return 1; // A
    if (r < 90)
        return 28; // AAAA
    if (r < 95)
        return 16; // TXT
    return 15; // MX
}

DnsMessage benign_response(Rng& rng, const BenignProfile& prof, uint16_t id,
                           const std::string& qname, uint16_t qtype) {
    DnsMessage m;
    m.id = id;
    m.qr = 1;
    m.rd = 1;
    m.ra = 1;
    m.aa = rng.permille(prof.aa_permille) ? 1 : 0;
    if (rng.permille(prof.rcode_err_permille))
        m.rcode = rng.below(2) ? 2 : 3; // SERVFAIL / NXDOMAIN
    m.qdcount = 1;
    m.qname = qname;
    m.qtype = qtype;
    m.qclass = 1;
    m.ancount = static_cast<uint16_t>(prof.ans_min + rng.range(0, prof.ans_max - prof.ans_min));
    m.nscount = static_cast<uint16_t>(rng.range(0, prof.ns_max));
    m.adcount = static_cast<uint16_t>(rng.range(0, prof.ad_max));
    return m;
}

std::vector<uint8_t> encode_with_body(DnsMessage& m, size_t extra) {
    m.size = 0;
    auto bytes = encode_dns(m);
    bytes.insert(bytes.end(), extra, 0x00);
    m.size = bytes.size();
    return bytes;
}

void require(bool ok, const std::string& what) {
    if (!ok)
        throw SchemaError("scenario config: " + what);
}

} // namespace

ScenarioConfig parse_scenario_text(const std::string& text) {
    ScenarioConfig cfg;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        auto trim = [](std::string s) {
            const char* ws = " \t\r";
            const auto a = s.find_first_not_of(ws);
            if (a == std::string::npos)
                return std::string();
            const auto b = s.find_last_not_of(ws);
            return s.substr(a, b - a + 1);
        };
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        require(eq != std::string::npos, "line " + std::to_string(lineno) + " is not key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        require(!key.empty() && !val.empty(), "empty key or value on line " + std::to_string(lineno));

        auto as_u64 = [&](const std::string& v) {
            try {
                size_t pos = 0;
                const uint64_t r = std::stoull(v, &pos);
                require(pos == v.size(), "bad integer '" + v + "'");
                return r;
            } catch (const std::logic_error&) {
                throw SchemaError("scenario config: bad integer '" + v + "'");
            }
        };
        auto as_int = [&](const std::string& v) { return static_cast<int>(as_u64(v)); };
        auto as_double = [&](const std::string& v) {
            try {
                size_t pos = 0;
                const double r = std::stod(v, &pos);
                require(pos == v.size(), "bad number '" + v + "'");
                return r;
            } catch (const std::logic_error&) {
                throw SchemaError("scenario config: bad number '" + v + "'");
            }
        };

        if (key == "seed")
            cfg.seed = as_u64(val);
        else if (key == "duration")
            cfg.duration = as_double(val);
        else if (key == "good_servers")
            cfg.good_servers = as_int(val);
        else if (key == "bad_servers")
            cfg.bad_servers = as_int(val);
        else if (key == "good_qps")
            cfg.good_qps = as_double(val);
        else if (key == "bad_qps")
            cfg.bad_qps = as_double(val);
        else if (key == "qname_pool")
            cfg.benign.qname_pool = as_int(val);
        else if (key == "ans_min")
            cfg.benign.ans_min = as_int(val);
        else if (key == "ans_max")
            cfg.benign.ans_max = as_int(val);
        else if (key == "ns_max")
            cfg.benign.ns_max = as_int(val);
        else if (key == "ad_max")
            cfg.benign.ad_max = as_int(val);
        else if (key == "size_jitter")
            cfg.benign.size_jitter = as_int(val);
        else if (key == "rcode_err_permille")
            cfg.benign.rcode_err_permille = as_int(val);
        else if (key == "aa_permille")
            cfg.benign.aa_permille = as_int(val);
        else if (key == "reflector_port") {
            if (val == "random")
                cfg.reflector.port = PortBehavior::random;
            else if (val == "fixed")
                cfg.reflector.port = PortBehavior::fixed;
            else
                throw SchemaError("scenario config: reflector_port must be random or fixed");
        } else if (key == "reflector_jitter")
            cfg.reflector.period_jitter = as_double(val);
        else if (key == "uncertain_fraction")
            cfg.uncertain_fraction = as_double(val);
        else
            throw SchemaError("scenario config: unknown key '" + key + "'");
    }

    require(cfg.duration > 0, "duration must be positive");
    require(cfg.good_servers >= 0 && cfg.bad_servers >= 0, "server counts must be non-negative");
    require(cfg.good_qps > 0 && cfg.bad_qps > 0, "rates must be positive");
    require(cfg.benign.qname_pool >= 1, "qname_pool must be at least 1");
    require(cfg.benign.ans_min >= 0 && cfg.benign.ans_max >= cfg.benign.ans_min,
            "answer count range is inverted");
    require(cfg.benign.ns_max >= 0 && cfg.benign.ad_max >= 0 && cfg.benign.size_jitter >= 0,
            "counts must be non-negative");
    require(cfg.benign.rcode_err_permille >= 0 && cfg.benign.rcode_err_permille <= 1000 &&
                cfg.benign.aa_permille >= 0 && cfg.benign.aa_permille <= 1000,
            "permille knobs must be in 0..1000");
    require(cfg.reflector.period_jitter >= 0 && cfg.reflector.period_jitter < 1,
            "reflector_jitter must be in [0,1)");
    require(cfg.uncertain_fraction >= 0 && cfg.uncertain_fraction <= 1,
            "uncertain_fraction must be in [0,1]");
    require(cfg.good_servers <= 40000 && cfg.bad_servers <= 40000, "server count too large");
    return cfg;
}

ScenarioConfig parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario_text(ss.str());
}

std::string scenario_to_text(const ScenarioConfig& cfg) {
    std::ostringstream out;
    out << "seed = " << cfg.seed << '\n';
    out << "duration = " << cfg.duration << '\n';
    out << "good_servers = " << cfg.good_servers << '\n';
    out << "bad_servers = " << cfg.bad_servers << '\n';
    out << "good_qps = " << cfg.good_qps << '\n';
    out << "bad_qps = " << cfg.bad_qps << '\n';
    out << "qname_pool = " << cfg.benign.qname_pool << '\n';
    out << "ans_min = " << cfg.benign.ans_min << '\n';
    out << "ans_max = " << cfg.benign.ans_max << '\n';
    out << "ns_max = " << cfg.benign.ns_max << '\n';
    out << "ad_max = " << cfg.benign.ad_max << '\n';
    out << "size_jitter = " << cfg.benign.size_jitter << '\n';
    out << "rcode_err_permille = " << cfg.benign.rcode_err_permille << '\n';
    out << "aa_permille = " << cfg.benign.aa_permille << '\n';
    out << "reflector_port = " << (cfg.reflector.port == PortBehavior::random ? "random" : "fixed")
        << '\n';
    out << "reflector_jitter = " << cfg.reflector.period_jitter << '\n';
    out << "uncertain_fraction = " << cfg.uncertain_fraction << '\n';
    return out.str();
}

SummaryCounts generate(const ScenarioConfig& cfg, const std::string& out_pcap) {
    std::vector<Event> events;
    SummaryCounts sum;
    const int64_t dur_us = static_cast<int64_t>(std::llround(cfg.duration * 1e6));
    uint16_t ip_id = 1;

    Rng master(cfg.seed);
    std::vector<uint64_t> good_seeds, bad_seeds;
    for (int s = 0; s < cfg.good_servers; ++s)
        good_seeds.push_back(master.next_u64());
    for (int s = 0; s < cfg.bad_servers; ++s)
        bad_seeds.push_back(master.next_u64());

    const int n_uncertain =
        static_cast<int>(std::llround(cfg.uncertain_fraction * cfg.bad_servers));

    // Benign servers: every response answers a recorded request.
    for (int s = 0; s < cfg.good_servers; ++s) {
        const uint32_t server = kGoodBase + 1 + static_cast<uint32_t>(s);
        auto& counts = sum.per_server[server];
        counts.label = Label::good;
        Rng rng(good_seeds[static_cast<size_t>(s)]);
        int64_t t = static_cast<int64_t>(std::llround(rng.exponential(cfg.good_qps) * 1e6));
        while (t < dur_us) {
            const uint32_t client = kClientBase + 1 + static_cast<uint32_t>(rng.below(kClients));
            const uint16_t cport = static_cast<uint16_t>(1024 + rng.below(64512));
            const uint16_t id = static_cast<uint16_t>(rng.below(65536));
            const std::string qname =
                pool_name(static_cast<int>(rng.below(static_cast<uint64_t>(cfg.benign.qname_pool))));
            const uint16_t qtype = pick_qtype(rng);

            DnsMessage q;
            q.id = id;
            q.rd = 1;
            q.qdcount = 1;
            q.qname = qname;
            q.qtype = qtype;
            q.qclass = 1;
            auto qbytes = encode_with_body(q, 0);
            events.push_back({t, build_udp_frame(client, server, cport, 53, qbytes, ip_id++)});
            ++counts.queries;

            const int64_t rtt = 500 + static_cast<int64_t>(rng.below(20000));
            DnsMessage r = benign_response(rng, cfg.benign, id, qname, qtype);
            const size_t extra = 12ul * r.ancount +
                                 rng.below(static_cast<uint64_t>(cfg.benign.size_jitter) + 1);
            auto rbytes = encode_with_body(r, extra);
            events.push_back({t + rtt, build_udp_frame(server, client, 53, cport, rbytes, ip_id++)});
            ++counts.responses;

            t += static_cast<int64_t>(std::llround(rng.exponential(cfg.good_qps) * 1e6));
        }
    }

    // Bad servers: responses with no matching request. Reflectors send a
    // near-constant template on a periodic clock; uncertain servers reuse the
    // benign shape.
    for (int s = 0; s < cfg.bad_servers; ++s) {
        const uint32_t server = kBadBase + 1 + static_cast<uint32_t>(s);
        auto& counts = sum.per_server[server];
        counts.label = Label::bad;
        Rng rng(bad_seeds[static_cast<size_t>(s)]);
        const bool uncertain = s >= cfg.bad_servers - n_uncertain;

        if (uncertain) {
            int64_t t = static_cast<int64_t>(std::llround(rng.exponential(cfg.bad_qps) * 1e6));
            while (t < dur_us) {
                const uint32_t client = kClientBase + 1 + static_cast<uint32_t>(rng.below(kClients));
                const uint16_t cport = static_cast<uint16_t>(1024 + rng.below(64512));
                const uint16_t id = static_cast<uint16_t>(rng.below(65536));
                const std::string qname = pool_name(
                    static_cast<int>(rng.below(static_cast<uint64_t>(cfg.benign.qname_pool))));
                DnsMessage r = benign_response(rng, cfg.benign, id, qname, pick_qtype(rng));
                const size_t extra = 12ul * r.ancount +
                                     rng.below(static_cast<uint64_t>(cfg.benign.size_jitter) + 1);
                auto rbytes = encode_with_body(r, extra);
                events.push_back({t, build_udp_frame(server, client, 53, cport, rbytes, ip_id++)});
                ++counts.responses;
                t += static_cast<int64_t>(std::llround(rng.exponential(cfg.bad_qps) * 1e6));
            }
        } else {
            const uint32_t victim = kVictimBase + 1 + static_cast<uint32_t>(s % 200);
            const double period_us = 1e6 / cfg.bad_qps;
            DnsMessage tmpl;
            tmpl.id = 0x2121;
            tmpl.qr = 1;
            tmpl.rd = 1;
            tmpl.ra = 1;
            tmpl.qdcount = 1;
            tmpl.qname = "cdn.bulk-mirror.test";
            tmpl.qtype = 255; // ANY, the classic amplification query
            tmpl.qclass = 1;
            tmpl.ancount = 13;
            tmpl.nscount = 4;
            tmpl.adcount = 9;
            auto body = encode_with_body(tmpl, 420); // constant oversized answer

            int64_t t = static_cast<int64_t>(std::llround(period_us * rng.uniform()));
            while (t < dur_us) {
                uint16_t sport = 53, dport = 53;
                if (cfg.reflector.port == PortBehavior::random)
                    sport = static_cast<uint16_t>(1024 + rng.below(64512));
                events.push_back({t, build_udp_frame(server, victim, sport, dport, body, ip_id++)});
                ++counts.responses;
                const double jitter = 1.0 + cfg.reflector.period_jitter * (2.0 * rng.uniform() - 1.0);
                t += std::max<int64_t>(1, static_cast<int64_t>(std::llround(period_us * jitter)));
            }
        }
    }

    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.t_us < b.t_us; });

    PcapWriter writer(out_pcap);
    for (const auto& ev : events) {
        const uint32_t sec = kBaseEpoch + static_cast<uint32_t>(ev.t_us / 1000000);
        const uint32_t usec = static_cast<uint32_t>(ev.t_us % 1000000);
        writer.write(sec, usec, ev.frame);
    }

    sum.frames = events.size();
    for (const auto& [ip, c] : sum.per_server) {
        sum.queries += c.queries;
        sum.responses += c.responses;
    }
    return sum;
}

} // namespace dnsrefl
