#include "polarq/channel.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace polarq {

namespace {

double fold(double x) {
    if (x > 0.5)
        x = 1.0 - x;
    return std::clamp(x, 0.0, 0.5);
}

// Sorts by position. Large inputs (every polarization step sorts the k^2
// pair masses of a transform) use a stable byte-wise radix pass over the
// IEEE bit pattern, which orders like the double for non-negative values;
// stability makes the order of coincident positions deterministic.
void sort_by_position(std::vector<MassPoint>& pts) {
    if (pts.size() < 512) {
        std::sort(pts.begin(), pts.end(), [](const MassPoint& a, const MassPoint& b) {
            return a.x != b.x ? a.x < b.x : a.p < b.p;
        });
        return;
    }

    const std::size_t n = pts.size();
    std::array<std::array<std::uint32_t, 256>, 8> histogram{};
    for (const MassPoint& mp : pts) {
        const auto bits = std::bit_cast<std::uint64_t>(mp.x);
        for (int pass = 0; pass < 8; ++pass)
            ++histogram[pass][(bits >> (8 * pass)) & 0xff];
    }

    std::vector<MassPoint> tmp(n);
    MassPoint* src = pts.data();
    MassPoint* dst = tmp.data();
    for (int pass = 0; pass < 8; ++pass) {
        auto& counts = histogram[pass];
        bool trivial = false;
        for (int digit = 0; digit < 256; ++digit) {
            if (counts[digit] == n) {
                trivial = true;
                break;
            }
            if (counts[digit] != 0)
                break;
        }
        if (trivial)
            continue;
        std::uint32_t offsets[256];
        std::uint32_t running = 0;
        for (int digit = 0; digit < 256; ++digit) {
            offsets[digit] = running;
            running += counts[digit];
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto bits = std::bit_cast<std::uint64_t>(src[i].x);
            dst[offsets[(bits >> (8 * pass)) & 0xff]++] = src[i];
        }
        std::swap(src, dst);
    }
    if (src != pts.data())
        std::memcpy(pts.data(), src, n * sizeof(MassPoint));
}

}  // namespace

MassDistribution MassDistribution::canonicalize(std::vector<MassPoint> raw) {
    if (raw.empty())
        throw std::invalid_argument("mass distribution: empty input");

    double total = 0.0;
    for (const MassPoint& mp : raw) {
        if (!(mp.p >= 0.0) || !std::isfinite(mp.p))
            throw std::invalid_argument("mass distribution: negative or non-finite mass");
        if (!(mp.x >= -1e-12) || !(mp.x <= 1.0 + 1e-12))
            throw std::invalid_argument("mass distribution: crossover outside [0, 1]");
        total += mp.p;
    }
    if (!(total > 0.0))
        throw std::invalid_argument("mass distribution: zero total mass");

    // Masses below 1e-300 of the total cannot move any functional at
    // representable precision, and denormal masses wreck the weighted-mean
    // quotients below; drop them up front.
    std::vector<MassPoint> pts;
    pts.reserve(raw.size());
    const double inv_total = 1.0 / total;
    for (const MassPoint& mp : raw) {
        const double p = mp.p * inv_total;
        if (p < kMassFloor)
            continue;
        pts.push_back({p, fold(mp.x)});
    }
    if (pts.empty())
        throw std::invalid_argument("mass distribution: zero total mass");

    sort_by_position(pts);

    // Collapse maximal runs of numerically identical positions onto their
    // mass-weighted mean. The tolerance is relative: near zero an absolute
    // threshold would fuse genuinely distinct crossovers and shift the
    // sqrt-scale functionals by far more than machine noise. Means stay
    // inside their runs, so a second pass is a no-op.
    std::vector<MassPoint> merged;
    merged.reserve(pts.size());
    std::size_t i = 0;
    while (i < pts.size()) {
        // The mean is accumulated as an offset from the run's first
        // position: the plain sum of p*x underflows for tiny masses at tiny
        // crossovers and would yank the merged position out of the run.
        const double base = pts[i].x;
        double mass = pts[i].p;
        double moment = 0.0;
        std::size_t j = i + 1;
        while (j < pts.size() && pts[j].x - pts[j - 1].x <= kDedupTolerance * pts[j].x) {
            mass += pts[j].p;
            moment += pts[j].p * (pts[j].x - base);
            ++j;
        }
        merged.push_back({mass, std::clamp(base + moment / mass, 0.0, 0.5)});
        i = j;
    }

    double remaining = 0.0;
    for (const MassPoint& mp : merged)
        remaining += mp.p;
    for (MassPoint& mp : merged)
        mp.p /= remaining;

    return MassDistribution(std::move(merged));
}

MassDistribution MassDistribution::from_bsc(double crossover) {
    if (!(crossover >= 0.0) || !(crossover <= 1.0))
        throw std::invalid_argument("bsc: crossover outside [0, 1]");
    return MassDistribution({{1.0, fold(crossover)}});
}

MassDistribution MassDistribution::from_bec(double erasure) {
    if (!(erasure >= 0.0) || !(erasure <= 1.0))
        throw std::invalid_argument("bec: erasure probability outside [0, 1]");
    if (erasure == 0.0)
        return MassDistribution({{1.0, 0.0}});
    if (erasure == 1.0)
        return MassDistribution({{1.0, 0.5}});
    return MassDistribution({{1.0 - erasure, 0.0}, {erasure, 0.5}});
}

MassDistribution MassDistribution::from_canonical_entries(std::vector<MassPoint> entries) {
    double total = 0.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!(entries[i].p >= 0.0) || !std::isfinite(entries[i].p))
            throw std::invalid_argument("mass distribution: negative or non-finite mass");
        if (!(entries[i].x >= 0.0) || !(entries[i].x <= 0.5))
            throw std::invalid_argument("mass distribution: crossover outside [0, 1/2]");
        if (i > 0 && !(entries[i].x > entries[i - 1].x))
            throw std::invalid_argument("mass distribution: entries not strictly increasing");
        total += entries[i].p;
    }
    if (!(total > 0.0))
        throw std::invalid_argument("mass distribution: zero total mass");
    for (MassPoint& mp : entries)
        mp.p /= total;
    return MassDistribution(std::move(entries));
}

double MassDistribution::bhattacharyya() const {
    double z = 0.0;
    for (const MassPoint& mp : entries_)
        z += mp.p * 2.0 * std::sqrt(mp.x * (1.0 - mp.x));
    return z;
}

double MassDistribution::mutual_info() const {
    double h = 0.0;
    for (const MassPoint& mp : entries_)
        h += mp.p * binary_entropy(mp.x);
    return 1.0 - h;
}

double MassDistribution::mean_crossover() const {
    double m = 0.0;
    for (const MassPoint& mp : entries_)
        m += mp.p * mp.x;
    return m;
}

double bsc_crossover_for_capacity(double capacity) {
    if (!(capacity >= 0.0) || !(capacity <= 1.0))
        throw std::invalid_argument("capacity outside [0, 1]");
    // 1 - h(p) decreases from 1 to 0 as p goes from 0 to 1/2.
    double lo = 0.0, hi = 0.5;
    while (hi - lo > 1e-10) {
        double mid = 0.5 * (lo + hi);
        if (1.0 - binary_entropy(mid) > capacity)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

double parse_double(const std::string& text, const char* what) {
    std::size_t pos = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string("channel spec: bad ") + what + " '" + text + "'");
    }
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
        ++pos;
    if (pos != text.size())
        throw std::invalid_argument(std::string("channel spec: bad ") + what + " '" + text + "'");
    return value;
}

MassDistribution load_channel_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("channel spec: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("channel spec: empty file '" + path + "'");
    // tolerate a UTF-8 BOM and surrounding whitespace in the header
    std::string header;
    for (char c : line)
        if (!std::isspace(static_cast<unsigned char>(c)) && static_cast<unsigned char>(c) < 0x80)
            header += c;
    if (header != "p,x")
        throw std::invalid_argument("channel spec: expected header \"p,x\" in '" + path + "'");
    std::vector<MassPoint> raw;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r\n") == std::string::npos)
            continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("channel spec: malformed row '" + line + "'");
        raw.push_back({parse_double(line.substr(0, comma), "mass"),
                       parse_double(line.substr(comma + 1), "crossover")});
    }
    if (raw.empty())
        throw std::invalid_argument("channel spec: no mass rows in '" + path + "'");
    return MassDistribution::canonicalize(std::move(raw));
}

}  // namespace

MassDistribution parse_channel_spec(const std::string& spec) {
    auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("channel spec: expected \"bsc:<p>\", \"bec:<e>\" or \"file:<path>\"");
    std::string kind = spec.substr(0, colon);
    std::string arg = spec.substr(colon + 1);
    if (kind == "bsc")
        return MassDistribution::from_bsc(parse_double(arg, "crossover"));
    if (kind == "bec")
        return MassDistribution::from_bec(parse_double(arg, "erasure probability"));
    if (kind == "file")
        return load_channel_csv(arg);
    throw std::invalid_argument("channel spec: unknown kind '" + kind + "'");
}

}  // namespace polarq
