#include "dnsrefl/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace dnsrefl {

const std::array<const char*, kFeatureRows> kFeatureRowNames = {
    "timestamp", "port", "size", "opcode", "aa",      "tc",      "rd",
    "ra",        "z",    "rcode", "qdcount", "ancount", "nscount", "adcount"};

std::array<double, kFeatureRows> raw_features(const LabeledResponse& r) {
    const auto& m = r.message;
    return {static_cast<double>(r.record.ts_sec) + static_cast<double>(r.record.ts_usec) * 1e-6,
            static_cast<double>(r.record.src_port),
            static_cast<double>(m.size),
            static_cast<double>(m.opcode),
            static_cast<double>(m.aa),
            static_cast<double>(m.tc),
            static_cast<double>(m.rd),
            static_cast<double>(m.ra),
            static_cast<double>(m.z),
            static_cast<double>(m.rcode),
            static_cast<double>(m.qdcount),
            static_cast<double>(m.ancount),
            static_cast<double>(m.nscount),
            static_cast<double>(m.adcount)};
}

std::vector<double> normalize_row(const std::vector<double>& raw) {
    for (double v : raw)
        if (!std::isfinite(v))
            throw NonFiniteInput("non-finite value in feature row");
    double lo = raw[0], hi = raw[0];
    for (double v : raw) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<double> out(raw.size());
    if (hi > lo) {
        const double span = hi - lo;
        for (size_t i = 0; i < raw.size(); ++i)
            out[i] = (raw[i] - lo) / span;
    }
    // constant row: all zeros
    return out;
}

BuildResult build_matrices(const std::vector<LabeledResponse>& responses) {
    // Ordered partition map keeps output deterministic; good sorts before bad.
    std::map<std::pair<uint32_t, int>, std::vector<const LabeledResponse*>> parts;
    for (const auto& r : responses)
        parts[{r.server_ip(), r.label == Label::good ? 0 : 1}].push_back(&r);

    BuildResult result;
    for (auto& [key, group] : parts) {
        std::stable_sort(group.begin(), group.end(),
                         [](const LabeledResponse* a, const LabeledResponse* b) {
                             if (a->record.ts_sec != b->record.ts_sec)
                                 return a->record.ts_sec < b->record.ts_sec;
                             return a->record.ts_usec < b->record.ts_usec;
                         });
        const size_t windows = group.size() / kWindowCols;
        result.discarded += group.size() - windows * kWindowCols;
        for (size_t w = 0; w < windows; ++w) {
            FeatureMatrix fm;
            fm.server_ip = key.first;
            fm.label = key.second == 0 ? Label::good : Label::bad;
            fm.values.resize(kFlatDim);

            std::vector<double> row(kWindowCols);
            std::vector<std::array<double, kFeatureRows>> raws(kWindowCols);
            for (size_t c = 0; c < kWindowCols; ++c)
                raws[c] = raw_features(*group[w * kWindowCols + c]);
            for (size_t r = 0; r < kFeatureRows; ++r) {
                for (size_t c = 0; c < kWindowCols; ++c)
                    row[c] = raws[c][r];
                auto norm = normalize_row(row);
                std::copy(norm.begin(), norm.end(), fm.values.begin() + static_cast<ptrdiff_t>(r * kWindowCols));
            }
            fm.first_ts = raws.front()[0];
            fm.last_ts = raws.back()[0];
            result.matrices.push_back(std::move(fm));
        }
    }
    return result;
}

void write_matrices(const std::vector<FeatureMatrix>& matrices, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    char buf[64];
    for (const auto& m : matrices) {
        out << ipv4_to_string(m.server_ip) << ' ' << label_name(m.label);
        std::snprintf(buf, sizeof buf, " %.6f %.6f", m.first_ts, m.last_ts);
        out << buf;
        for (double v : m.values) {
            std::snprintf(buf, sizeof buf, " %.9g", v);
            out << buf;
        }
        out << '\n';
    }
    if (!out)
        throw IoError("write failed: " + path);
}

std::vector<FeatureMatrix> read_matrices(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    std::vector<FeatureMatrix> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::istringstream ss(line);
        std::string ip, label;
        FeatureMatrix m;
        if (!(ss >> ip >> label >> m.first_ts >> m.last_ts))
            throw SchemaError("matrix line " + std::to_string(lineno) + ": bad header fields");
        m.server_ip = parse_ipv4(ip);
        m.label = parse_label(label);
        m.values.resize(kFlatDim);
        for (size_t i = 0; i < kFlatDim; ++i) {
            if (!(ss >> m.values[i]))
                throw SchemaError("matrix line " + std::to_string(lineno) + ": wrong cell count");
            if (!(m.values[i] >= 0.0 && m.values[i] <= 1.0))
                throw SchemaError("matrix line " + std::to_string(lineno) + ": cell out of [0,1]");
        }
        std::string extra;
        if (ss >> extra)
            throw SchemaError("matrix line " + std::to_string(lineno) + ": wrong cell count");
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<double> flatten(const FeatureMatrix& m) { return m.values; }

} // namespace dnsrefl
