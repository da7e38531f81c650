#ifndef DNSREFL_MATRIX_HPP
#define DNSREFL_MATRIX_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dnsrefl/matcher.hpp"

namespace dnsrefl {

inline constexpr size_t kFeatureRows = 14;
inline constexpr size_t kWindowCols = 100;
inline constexpr size_t kFlatDim = kFeatureRows * kWindowCols;

/// Per-response feature values, in fixed row order: timestamp, source port,
/// message size, opcode, aa, tc, rd, ra, z, rcode, qdcount, answer count,
/// authority count, additional count.
std::array<double, kFeatureRows> raw_features(const LabeledResponse& r);

extern const std::array<const char*, kFeatureRows> kFeatureRowNames;

/// Min-max normalize one row to [0,1]. A constant row maps to all zeros.
/// Accepts any length >= 1; matrix building always passes kWindowCols.
/// Throws NonFiniteInput when a value is NaN or infinite.
std::vector<double> normalize_row(const std::vector<double>& raw);

/// One server's window of 100 consecutive responses, normalized per row.
/// `values` is row-major (row 0 = timestamps), every cell in [0,1].
struct FeatureMatrix {
    uint32_t server_ip = 0;
    Label label = Label::bad;
    std::vector<double> values; // kFlatDim cells, row-major
    double first_ts = 0.0;
    double last_ts = 0.0;

    double cell(size_t row, size_t col) const { return values[row * kWindowCols + col]; }
};

struct BuildResult {
    std::vector<FeatureMatrix> matrices;
    uint64_t discarded = 0; // responses left in sub-100 remainders
};

/// Group responses by (server, label), sort each group by timestamp (stable,
/// so equal stamps keep stream order), cut into windows of exactly 100 and
/// normalize. Remainders shorter than a window are dropped and counted.
/// Output is ordered by (server, label, first_ts) regardless of input order.
BuildResult build_matrices(const std::vector<LabeledResponse>& responses);

/// Matrix interchange file: one matrix per line, space separated:
/// server_ip label first_ts last_ts then 1400 cells row-major with 9
/// significant digits. read(write(x)) agrees within 1e-9 per cell.
void write_matrices(const std::vector<FeatureMatrix>& matrices, const std::string& path);
std::vector<FeatureMatrix> read_matrices(const std::string& path);

/// Row-major flattening used as SVM input.
std::vector<double> flatten(const FeatureMatrix& m);

} // namespace dnsrefl

#endif
