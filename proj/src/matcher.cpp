#include "dnsrefl/matcher.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace dnsrefl {

namespace {

constexpr int64_t kJitterUs = 1000000; // tolerated capture reordering

int64_t to_us(uint32_t sec, uint32_t usec) {
    return static_cast<int64_t>(sec) * 1000000 + static_cast<int64_t>(usec);
}

} // namespace

const char* label_name(Label l) { return l == Label::good ? "good" : "bad"; }

Label parse_label(const std::string& s) {
    if (s == "good")
        return Label::good;
    if (s == "bad")
        return Label::bad;
    throw SchemaError("unknown label '" + s + "'");
}

Matcher::Matcher(MatcherOptions opts)
    : opts_(opts), timeout_us_(static_cast<int64_t>(std::llround(opts.timeout_s * 1e6))) {}

void Matcher::evict_older_than(int64_t now_us) {
    const int64_t cutoff = now_us - timeout_us_ - kJitterUs;
    while (!fifo_.empty() && std::get<0>(fifo_.front()) < cutoff) {
        auto [ts, key, serial] = fifo_.front();
        fifo_.pop_front();
        auto it = table_.find(key);
        if (it == table_.end())
            continue;
        auto& bucket = it->second;
        for (size_t i = 0; i < bucket.size(); ++i) {
            if (bucket[i].serial == serial) {
                bucket.erase(bucket.begin() + static_cast<ptrdiff_t>(i));
                --live_entries_;
                ++stats_.expired;
                break;
            }
        }
        if (bucket.empty())
            table_.erase(it);
    }
}

std::optional<LabeledResponse> Matcher::push(const PacketRecord& rec, const DnsMessage& msg) {
    const int64_t now = to_us(rec.ts_sec, rec.ts_usec);
    if (now > max_seen_us_)
        max_seen_us_ = now;
    evict_older_than(max_seen_us_);

    if (msg.qr == 0) {
        // Request: remember it so the answer can be validated later.
        ++stats_.queries;
        FlowKey key{(static_cast<uint64_t>(rec.src_ip) << 32) | rec.dst_ip,
                    (static_cast<uint64_t>(rec.src_port) << 16) | msg.id};
        table_[key].push_back(Pending{msg.qname, msg.qtype, now, next_serial_});
        fifo_.emplace_back(now, key, next_serial_);
        ++next_serial_;
        ++live_entries_;
        return std::nullopt;
    }

    ++stats_.responses;
    FlowKey key{(static_cast<uint64_t>(rec.dst_ip) << 32) | rec.src_ip,
                (static_cast<uint64_t>(rec.dst_port) << 16) | msg.id};
    LabeledResponse out{rec, msg, Label::bad};

    auto it = table_.find(key);
    if (it != table_.end()) {
        auto& bucket = it->second;
        for (size_t i = 0; i < bucket.size(); ++i) {
            const Pending& p = bucket[i];
            const int64_t age = now - p.ts_us;
            if (age >= timeout_us_ || p.ts_us - now > kJitterUs)
                continue;
            // Responses without a question section match on addresses, port
            // and id alone.
            if (msg.qdcount != 0 && (p.qname != msg.qname || p.qtype != msg.qtype))
                continue;
            out.label = Label::good;
            ++stats_.matched;
            if (!opts_.multi_match) {
                bucket.erase(bucket.begin() + static_cast<ptrdiff_t>(i));
                --live_entries_;
                if (bucket.empty())
                    table_.erase(it);
            }
            break;
        }
    }
    return out;
}

std::vector<LabeledResponse> match_stream(const std::vector<std::pair<PacketRecord, DnsMessage>>& records,
                                          MatcherOptions opts) {
    Matcher m(opts);
    std::vector<LabeledResponse> out;
    for (const auto& [rec, msg] : records) {
        if (auto r = m.push(rec, msg))
            out.push_back(std::move(*r));
    }
    return out;
}

std::vector<std::pair<PacketRecord, DnsMessage>> decode_all(const std::vector<PacketRecord>& records,
                                                            uint64_t* malformed) {
    std::vector<std::pair<PacketRecord, DnsMessage>> out;
    out.reserve(records.size());
    uint64_t bad = 0;
    for (const auto& rec : records) {
        try {
            DnsMessage msg = parse_dns(rec.payload);
            out.emplace_back(rec, std::move(msg));
        } catch (const MalformedMessage&) {
            ++bad;
        }
    }
    if (malformed)
        *malformed = bad;
    return out;
}

void write_responses(const std::vector<LabeledResponse>& responses, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    for (const auto& r : responses) {
        const auto& m = r.message;
        out << ipv4_to_string(r.server_ip()) << ' ' << label_name(r.label) << ' ' << r.record.ts_sec
            << ' ' << r.record.ts_usec << ' ' << r.record.src_port << ' ' << m.size << ' '
            << unsigned(m.opcode) << ' ' << unsigned(m.aa) << ' ' << unsigned(m.tc) << ' '
            << unsigned(m.rd) << ' ' << unsigned(m.ra) << ' ' << unsigned(m.z) << ' '
            << unsigned(m.rcode) << ' ' << m.qdcount << ' ' << m.ancount << ' ' << m.nscount << ' '
            << m.adcount << '\n';
    }
    if (!out)
        throw IoError("write failed: " + path);
}

std::vector<LabeledResponse> read_responses(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    std::vector<LabeledResponse> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::istringstream ss(line);
        std::string ip, label;
        uint64_t ts_sec, ts_usec, port, size;
        unsigned opcode, aa, tc, rd, ra, z, rcode;
        uint64_t qd, an, ns, ad;
        if (!(ss >> ip >> label >> ts_sec >> ts_usec >> port >> size >> opcode >> aa >> tc >> rd >>
              ra >> z >> rcode >> qd >> an >> ns >> ad))
            throw SchemaError("response line " + std::to_string(lineno) + ": wrong field count");
        std::string extra;
        if (ss >> extra)
            throw SchemaError("response line " + std::to_string(lineno) + ": trailing fields");
        if (ts_usec >= 1000000 || port > 65535 || opcode > 15 || aa > 1 || tc > 1 || rd > 1 ||
            ra > 1 || z > 7 || rcode > 15 || qd > 65535 || an > 65535 || ns > 65535 || ad > 65535)
            throw SchemaError("response line " + std::to_string(lineno) + ": field out of range");

        LabeledResponse r;
        r.record.src_ip = parse_ipv4(ip);
        r.record.ts_sec = static_cast<uint32_t>(ts_sec);
        r.record.ts_usec = static_cast<uint32_t>(ts_usec);
        r.record.src_port = static_cast<uint16_t>(port);
        r.label = parse_label(label);
        r.message.qr = 1;
        r.message.size = size;
        r.message.opcode = static_cast<uint8_t>(opcode);
        r.message.aa = static_cast<uint8_t>(aa);
        r.message.tc = static_cast<uint8_t>(tc);
        r.message.rd = static_cast<uint8_t>(rd);
        r.message.ra = static_cast<uint8_t>(ra);
        r.message.z = static_cast<uint8_t>(z);
        r.message.rcode = static_cast<uint8_t>(rcode);
        r.message.qdcount = static_cast<uint16_t>(qd);
        r.message.ancount = static_cast<uint16_t>(an);
        r.message.nscount = static_cast<uint16_t>(ns);
        r.message.adcount = static_cast<uint16_t>(ad);
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace dnsrefl
