#pragma once

// Labelled CSI-pair datasets: the simulated generator, the CSI/pair CSV
// formats, experimental pairing rules, common-phase removal and stratified
// splitting.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "csiauth/channel_sim.hpp"
#include "csiauth/io.hpp"
#include "csiauth/stats.hpp"

namespace csiauth {

struct DatasetMeta {
    std::uint64_t seed = 0;
    double noise_var = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double theta = 1.0;
    std::string source;
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

struct PairDataset {
    std::vector<Sample> samples;
    DatasetMeta meta;

    std::size_t size() const { return samples.size(); }

    void recount() {
        meta.positives = 0;
        meta.negatives = 0;
        for (const auto& s : samples) (s.v == 1 ? meta.positives : meta.negatives) += 1;
    }

    std::vector<CsiPair> pairs_with_label(int label) const {
        std::vector<CsiPair> out;
        for (const auto& s : samples)
            if (s.v == label) out.push_back(s.u);
        return out;
    }
};

struct CsiRecord {
    long long packet_index = 0;
    double timestamp = 0.0;
    std::string source_id;
    CsiMeasurement csi;
};

/// Simulated pairs: every sample draws h_ba^[k], evolves it to h_ba^[k+1]
/// and h_ma^[k+1], measures all three with independent noise, then keeps the
/// legitimate (v=1) or attacker (v=0) continuation. ceil(n/2) positives,
/// floor(n/2) negatives, in seeded random order. Sample i uses its own
/// substreams, so any sample can be regenerated independently.
inline PairDataset gen_sim_dataset(const PowerDelayProfile& pdp, const OfdmConfig& config,
                                   const ScenarioConfig& scenario, std::size_t n, std::uint64_t seed) {
    require(n >= 2, "gen_sim_dataset: n must be >= 2");
    pdp.validate();
    config.validate();
    scenario.validate();
    require(pdp.num_taps() <= config.total_subcarriers, "gen_sim_dataset: L must not exceed M");

    PairDataset ds;
    ds.meta.seed = seed;
    ds.meta.alpha = alpha_of(scenario);
    ds.meta.beta = beta_of(scenario, config.wavelength);
    ds.meta.theta = scenario.theta;
    ds.meta.noise_var = snr_to_noise_var(scenario.snr_db, pdp);
    ds.meta.source = "simulation";

    std::vector<int> labels(n, 0);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>((n + 1) / 2), 1);
    Rng label_rng = substream(seed, Stream::label);
    std::shuffle(labels.begin(), labels.end(), label_rng);

    const CMatrix F = steering_matrix(pdp.num_taps(), config);
    ds.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t sample_seed = derive_seed(seed, 0x1000000ULL + i);
        Rng taps_rng = substream(sample_seed, Stream::taps);
        Rng legit_rng = substream(sample_seed, Stream::innovation_legit);
        Rng attack_rng = substream(sample_seed, Stream::innovation_attacker);
        Rng noise_rng = substream(sample_seed, Stream::noise);

        const ChannelTaps h_k = sample_taps(pdp, taps_rng);
        const ChannelTaps h_ba = evolve_legitimate(h_k, pdp, ds.meta.alpha, legit_rng);
        const ChannelTaps h_ma = evolve_attacker(h_k, pdp, ds.meta.beta, ds.meta.theta, attack_rng);

        Sample s;
        s.v = labels[i];
        s.u.previous = measure_csi(F * h_k.taps, ds.meta.noise_var, noise_rng);
        CsiMeasurement next_ba = measure_csi(F * h_ba.taps, ds.meta.noise_var, noise_rng);
        CsiMeasurement next_ma = measure_csi(F * h_ma.taps, ds.meta.noise_var, noise_rng);
        s.u.next = s.v == 1 ? std::move(next_ba) : std::move(next_ma);
        ds.samples.push_back(std::move(s));
    }
    ds.recount();
    return ds;
}

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

// Reads the next line that is neither empty nor a '#' comment.
inline bool next_data_line(std::istream& is, std::string& line, std::size_t& line_no) {
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        return true;
    }
    return false;
}

inline void write_csi_block(std::ostream& os, const CVector& v) {
    for (Eigen::Index m = 0; m < v.size(); ++m)
        os << ',' << io::format_double(v[m].real()) << ',' << io::format_double(v[m].imag());
}

inline CVector parse_csi_block(std::span<const std::string_view> fields, const std::string& ctx) {
    CVector v(static_cast<Eigen::Index>(fields.size() / 2));
    for (Eigen::Index m = 0; m < v.size(); ++m) {
        const double re = io::parse_double(fields[2 * static_cast<std::size_t>(m)], ctx);
        const double im = io::parse_double(fields[2 * static_cast<std::size_t>(m) + 1], ctx);
        require(std::isfinite(re) && std::isfinite(im), ctx + ": non-finite CSI value");
        v[m] = cplx(re, im);
    }
    return v;
}

}  // namespace detail

// CSI CSV: header packet_index,timestamp,source_id,re_0,im_0,...; one record
// per row; '#' lines are comments.
inline void write_csi_csv(std::ostream& os, std::span<const CsiRecord> records) {
    const Eigen::Index n = records.empty() ? 0 : records.front().csi.size();
    os << "packet_index,timestamp,source_id";
    for (Eigen::Index m = 0; m < n; ++m) os << ",re_" << m << ",im_" << m;
    os << '\n';
    for (const auto& r : records) {
        require(r.csi.size() == n, "write_csi_csv: inconsistent measurement lengths");
        require(r.source_id.find(',') == std::string::npos, "write_csi_csv: source_id must not contain ','");
        os << r.packet_index << ',' << io::format_double(r.timestamp) << ',' << r.source_id;
        detail::write_csi_block(os, r.csi.values);
        os << '\n';
    }
}

inline std::vector<CsiRecord> load_csi_csv(std::istream& is, const std::string& name = "csi csv") {
    std::string line;
    std::size_t line_no = 0;
    require(detail::next_data_line(is, line, line_no), name + ": missing header");
    const auto header = detail::split_csv(line);
    require(header.size() >= 3 && header[0] == "packet_index" && header[1] == "timestamp" &&
                header[2] == "source_id" && (header.size() - 3) % 2 == 0,
            name + ":" + std::to_string(line_no) + ": bad header");
    const std::size_t width = header.size();

    std::vector<CsiRecord> out;
    while (detail::next_data_line(is, line, line_no)) {
        const std::string ctx = name + ":" + std::to_string(line_no);
        const auto f = detail::split_csv(line);
        require(f.size() == width, ctx + ": expected " + std::to_string(width) + " fields, got " +
                                       std::to_string(f.size()) + " (inconsistent subcarrier count)");
        CsiRecord r;
        r.packet_index = io::parse_int(f[0], ctx);
        r.timestamp = io::parse_double(f[1], ctx);
        r.source_id = std::string(f[2]);
        r.csi.values = detail::parse_csi_block(std::span(f).subspan(3), ctx);
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<CsiRecord> load_csi_csv(const std::string& path) {
    std::ifstream is(path);
    require(static_cast<bool>(is), "cannot open " + path);
    return load_csi_csv(is, path);
}

// Pair dataset CSV: label,prev_re_0,prev_im_0,...,next_re_0,next_im_0,...
inline void write_pair_csv(std::ostream& os, std::span<const Sample> samples) {
    const Eigen::Index n = samples.empty() ? 0 : samples.front().u.previous.size();
    os << "label";
    for (const char* block : {"prev", "next"})
        for (Eigen::Index m = 0; m < n; ++m) os << ',' << block << "_re_" << m << ',' << block << "_im_" << m;
    os << '\n';
    for (const auto& s : samples) {
        require(s.u.previous.size() == n && s.u.next.size() == n, "write_pair_csv: inconsistent lengths");
        os << s.v;
        detail::write_csi_block(os, s.u.previous.values);
        detail::write_csi_block(os, s.u.next.values);
        os << '\n';
    }
}

inline std::vector<Sample> load_pair_csv(std::istream& is, const std::string& name = "pair csv") {
    std::string line;
    std::size_t line_no = 0;
    require(detail::next_data_line(is, line, line_no), name + ": missing header");
    const auto header = detail::split_csv(line);
    require(!header.empty() && header[0] == "label" && (header.size() - 1) % 4 == 0,
            name + ":" + std::to_string(line_no) + ": bad header");
    const std::size_t width = header.size();
    const std::size_t block = (width - 1) / 2;

    std::vector<Sample> out;
    while (detail::next_data_line(is, line, line_no)) {
        const std::string ctx = name + ":" + std::to_string(line_no);
        const auto f = detail::split_csv(line);
        require(f.size() == width, ctx + ": expected " + std::to_string(width) + " fields");
        Sample s;
        const long long v = io::parse_int(f[0], ctx);
        require(v == 0 || v == 1, ctx + ": label must be 0 or 1");
        s.v = static_cast<int>(v);
        s.u.previous.values = detail::parse_csi_block(std::span(f).subspan(1, block), ctx);
        s.u.next.values = detail::parse_csi_block(std::span(f).subspan(1 + block, block), ctx);
        out.push_back(std::move(s));
    }
    return out;
}

inline std::vector<Sample> load_pair_csv(const std::string& path) {
    std::ifstream is(path);
    require(static_cast<bool>(is), "cannot open " + path);
    return load_pair_csv(is, path);
}

/// Groups records by source_id, keeping file order within each source.
inline std::map<std::string, std::vector<CsiRecord>> group_by_source(std::span<const CsiRecord> records) {
    std::map<std::string, std::vector<CsiRecord>> streams;
    for (const auto& r : records) {
        auto& s = streams[r.source_id];
        require(s.empty() || s.back().timestamp <= r.timestamp,
                "records of source '" + r.source_id + "' are not time-ordered");
        s.push_back(r);
    }
    return streams;
}

/// Training pairs from each source's own stream: (k, k + dk_pos) labelled 1
/// and (k, k + dk_neg) labelled 0. Streams shorter than dk_neg + 1 are skipped.
inline PairDataset build_experimental_pairs(std::span<const CsiRecord> records, int dk_pos = 1,
                                            int dk_neg = 50) {
    require(dk_pos > 0 && dk_neg > 0, "build_experimental_pairs: offsets must be positive");
    require(dk_pos != dk_neg, "build_experimental_pairs: dk_pos and dk_neg must differ");
    PairDataset ds;
    ds.meta.source = "experimental dk_pos=" + std::to_string(dk_pos) + " dk_neg=" + std::to_string(dk_neg);
    const std::size_t need = static_cast<std::size_t>(std::max(dk_pos, dk_neg)) + 1;
    for (const auto& [id, stream] : group_by_source(records)) {
        if (stream.size() < need) {
            warn("source '" + id + "' has " + std::to_string(stream.size()) + " records, fewer than " +
                 std::to_string(need) + "; skipped");
            continue;
        }
        for (int dk : {dk_pos, dk_neg})
            for (std::size_t k = 0; k + static_cast<std::size_t>(dk) < stream.size(); ++k)
                ds.samples.push_back({{stream[k].csi, stream[k + static_cast<std::size_t>(dk)].csi}, dk == dk_pos ? 1 : 0});
    }
    ds.recount();
    return ds;
}

/// Test-time pairs with identity ground truth: for each record from
/// `legit_source`, pair it with the next received record; the label is 1 iff
/// that record came from the same source. Records must be in reception order.
inline PairDataset build_identity_pairs(std::span<const CsiRecord> records, const std::string& legit_source) {
    PairDataset ds;
    ds.meta.source = "identity legit=" + legit_source;
    for (std::size_t k = 1; k < records.size(); ++k)
        require(records[k - 1].timestamp <= records[k].timestamp, "build_identity_pairs: records not time-ordered");
    for (std::size_t k = 0; k + 1 < records.size(); ++k) {
        if (records[k].source_id != legit_source) continue;
        ds.samples.push_back({{records[k].csi, records[k + 1].csi},
                              records[k + 1].source_id == legit_source ? 1 : 0});
    }
    ds.recount();
    return ds;
}

/// Removes the common phase of each measurement so that the reference
/// subcarrier becomes real and nonnegative. Magnitudes and phase differences
/// between subcarriers are untouched.
inline CsiMeasurement phase_compensate(const CsiMeasurement& csi, int reference = 0) {
    require(reference >= 0 && reference < csi.size(), "phase_compensate: reference index out of range");
    const cplx ref = csi.values[reference];
    if (std::abs(ref) == 0.0) {
        warn("phase_compensate: reference subcarrier is zero, measurement left unrotated");
        return csi;
    }
    return {csi.values * std::conj(ref / std::abs(ref))};
}

inline std::vector<CsiRecord> phase_compensate(std::span<const CsiRecord> records, int reference = 0) {
    std::vector<CsiRecord> out(records.begin(), records.end());
    for (auto& r : out) r.csi = phase_compensate(r.csi, reference);
    return out;
}

struct DatasetSplit {
    PairDataset train;
    PairDataset val;
    PairDataset test;
};

/// Stratified seeded split: each label is permuted and cut in the given
/// proportions, then each part is shuffled.
inline DatasetSplit split_shuffle(const PairDataset& ds, std::array<double, 3> fractions, std::uint64_t seed) {
    for (double f : fractions) require(f > 0.0, "split_shuffle: fractions must be positive");
    require(std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) < 1e-9,
            "split_shuffle: fractions must sum to 1");
    Rng rng = substream(seed, Stream::split);
    std::array<std::vector<Sample>, 3> parts;
    for (int label : {1, 0}) {
        std::vector<Sample> group;
        for (const auto& s : ds.samples)
            if (s.v == label) group.push_back(s);
        std::shuffle(group.begin(), group.end(), rng);
        const auto n = static_cast<double>(group.size());
        const auto n0 = static_cast<std::size_t>(std::llround(fractions[0] * n));
        const auto n1 = std::min(group.size() - n0, static_cast<std::size_t>(std::llround(fractions[1] * n)));
        parts[0].insert(parts[0].end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(n0));
        parts[1].insert(parts[1].end(), group.begin() + static_cast<std::ptrdiff_t>(n0),
                        group.begin() + static_cast<std::ptrdiff_t>(n0 + n1));
        parts[2].insert(parts[2].end(), group.begin() + static_cast<std::ptrdiff_t>(n0 + n1), group.end());
    }
    DatasetSplit out;
    std::array<PairDataset*, 3> targets{&out.train, &out.val, &out.test};
    for (std::size_t i = 0; i < 3; ++i) {
        require(!parts[i].empty(), "split_shuffle: a split would be empty");
        std::shuffle(parts[i].begin(), parts[i].end(), rng);
        targets[i]->samples = std::move(parts[i]);
        targets[i]->meta = ds.meta;
        targets[i]->recount();
    }
    return out;
}

}  // namespace csiauth
