#include "rtraj/data.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace rtraj {

std::vector<FrameRecord> load_eth_ucy(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    std::vector<FrameRecord> records;
    std::string line;
    std::size_t line_no = 0;
    long prev_frame = std::numeric_limits<long>::min();
    while (std::getline(in, line)) {
        ++line_no;
        // Skip blank lines.
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::istringstream ls(line);
        FrameRecord r;
        double frame_raw;
        std::string extra;
        if (!(ls >> frame_raw >> r.agent >> r.pos.x >> r.pos.y) || (ls >> extra)) {
            throw ValidationError(path + ":" + std::to_string(line_no) +
                                  ": expected 'frame_id agent_id x y', got '" + line + "'");
        }
        r.frame = static_cast<long>(frame_raw);
        if (!r.pos.finite()) {
            throw ValidationError(path + ":" + std::to_string(line_no) +
                                  ": non-finite coordinate");
        }
        if (r.frame < prev_frame) {
            throw ValidationError(path + ":" + std::to_string(line_no) +
                                  ": frame ids must be non-decreasing (" +
                                  std::to_string(r.frame) + " after " +
                                  std::to_string(prev_frame) + ")");
        }
        prev_frame = r.frame;
        records.push_back(r);
    }
    std::stable_sort(records.begin(), records.end(), [](const FrameRecord& a, const FrameRecord& b) {
        return a.frame != b.frame ? a.frame < b.frame : a.agent < b.agent;
    });
    return records;
}

std::vector<SceneSample> extract_windows(const std::vector<FrameRecord>& records,
                                         std::size_t t_obs, std::size_t t_pred,
                                         std::size_t stride) {
    if (stride == 0) throw ValidationError("extract_windows: stride must be >= 1");
    const std::size_t window = t_obs + t_pred;

    // Frame-indexed view: distinct frames in order, agent -> position per frame.
    std::vector<long> frames;
    std::vector<std::map<int, Vec2>> by_frame;
    for (const auto& r : records) {
        if (frames.empty() || frames.back() != r.frame) {
            frames.push_back(r.frame);
            by_frame.emplace_back();
        }
        by_frame.back()[r.agent] = r.pos;
    }

    std::vector<SceneSample> out;
    if (frames.size() < window) return out;
    for (std::size_t start = 0; start + window <= frames.size(); start += stride) {
        // Agents present in every frame of the window.
        std::vector<int> ids;
        for (const auto& [id, pos] : by_frame[start]) {
            (void)pos;
            bool complete = true;
            for (std::size_t k = 1; k < window && complete; ++k) {
                complete = by_frame[start + k].count(id) > 0;
            }
            if (complete) ids.push_back(id);
        }
        if (ids.empty()) continue;
        if (ids.size() > kMaxAgents) ids.resize(kMaxAgents);  // ids are sorted (map order)

        SceneSample s;
        s.agent_ids = ids;
        s.observed.resize(ids.size());
        s.future.resize(ids.size());
        for (std::size_t a = 0; a < ids.size(); ++a) {
            for (std::size_t k = 0; k < t_obs; ++k)
                s.observed[a].push_back(by_frame[start + k].at(ids[a]));
            for (std::size_t k = t_obs; k < window; ++k)
                s.future[a].push_back(by_frame[start + k].at(ids[a]));
        }
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

std::vector<std::vector<Vec2>> reverse_tracks(const std::vector<std::vector<Vec2>>& tracks) {
    auto out = tracks;
    for (auto& t : out) std::reverse(t.begin(), t.end());
    return out;
}

}  // namespace

BackwardSample time_reverse(const SceneSample& s) {
    BackwardSample b;
    b.agent_ids = s.agent_ids;
    b.observed = reverse_tracks(s.future);
    b.target = reverse_tracks(s.observed);
    b.context = s.context;
    return b;
}

SceneSample time_reverse(const BackwardSample& b) {
    SceneSample s;
    s.agent_ids = b.agent_ids;
    s.future = reverse_tracks(b.observed);
    s.observed = reverse_tracks(b.target);
    s.context = b.context;
    return s;
}

EncodedTrack displacement_encode(std::span<const Vec2> points) {
    EncodedTrack t;
    if (points.empty()) return t;
    t.origin = points[0];
    t.deltas.reserve(points.size() - 1);
    for (std::size_t i = 1; i < points.size(); ++i) t.deltas.push_back(points[i] - points[i - 1]);
    return t;
}

std::vector<Vec2> displacement_decode(const EncodedTrack& t) {
    std::vector<Vec2> pts;
    pts.reserve(t.deltas.size() + 1);
    pts.push_back(t.origin);
    for (const auto& d : t.deltas) pts.push_back(pts.back() + d);
    return pts;
}

SceneSample normalize(const SceneSample& s, NormalizationSpec& spec) {
    if (spec.mode == NormMode::Absolute) return s;
    spec.origins.clear();
    SceneSample out = s;
    for (std::size_t a = 0; a < s.agents(); ++a) {
        spec.origins.push_back(s.observed[a].empty() ? Vec2{} : s.observed[a][0]);
        Vec2 prev = spec.origins.back();
        for (std::size_t t = 0; t < s.observed[a].size(); ++t) {
            out.observed[a][t] = s.observed[a][t] - prev;
            prev = s.observed[a][t];
        }
        for (std::size_t t = 0; t < s.future[a].size(); ++t) {
            out.future[a][t] = s.future[a][t] - prev;
            prev = s.future[a][t];
        }
    }
    return out;
}

SceneSample denormalize(const SceneSample& s, const NormalizationSpec& spec) {
    if (spec.mode == NormMode::Absolute) return s;
    if (spec.origins.size() != s.agents()) {
        throw ValidationError("denormalize: spec has " + std::to_string(spec.origins.size()) +
                              " origins for " + std::to_string(s.agents()) + " agents");
    }
    SceneSample out = s;
    for (std::size_t a = 0; a < s.agents(); ++a) {
        Vec2 pos = spec.origins[a];
        for (std::size_t t = 0; t < s.observed[a].size(); ++t) {
            pos = pos + s.observed[a][t];
            out.observed[a][t] = pos;
        }
        for (std::size_t t = 0; t < s.future[a].size(); ++t) {
            pos = pos + s.future[a][t];
            out.future[a][t] = pos;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sample store
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'R', 'T', 'R', 'J', 'D', 'A', 'T', 'A'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& what) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("sample store: truncated file while reading " + what);
    return v;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write " + tmp);
        out.write(kMagic, sizeof(kMagic));
        write_pod<std::uint32_t>(out, kVersion);
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ds.t_obs));
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ds.t_pred));
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ds.context_dim));
        write_pod<std::uint64_t>(out, ds.samples.size());
        for (const auto& s : ds.samples) {
            write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.agents()));
            for (int id : s.agent_ids) write_pod<std::int32_t>(out, id);
            for (std::size_t a = 0; a < s.agents(); ++a) {
                for (const auto& p : s.observed[a]) {
                    write_pod<double>(out, p.x);
                    write_pod<double>(out, p.y);
                }
                for (const auto& p : s.future[a]) {
                    write_pod<double>(out, p.x);
                    write_pod<double>(out, p.y);
                }
            }
            for (double c : s.context) write_pod<double>(out, c);
        }
        if (!out) throw IoError("write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw IoError("cannot rename " + tmp + " to " + path);
    }
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw IoError("sample store: bad magic in " + path);
    }
    const auto version = read_pod<std::uint32_t>(in, "version");
    if (version != kVersion) {
        throw IoError("sample store: unsupported version " + std::to_string(version) +
                      " (reader supports " + std::to_string(kVersion) + ")");
    }
    Dataset ds;
    ds.t_obs = read_pod<std::uint32_t>(in, "t_obs");
    ds.t_pred = read_pod<std::uint32_t>(in, "t_pred");
    ds.context_dim = read_pod<std::uint32_t>(in, "context_dim");
    const auto count = read_pod<std::uint64_t>(in, "sample count");
    ds.samples.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        SceneSample s;
        const auto n = read_pod<std::uint32_t>(in, "agent count");
        if (n == 0 || n > kMaxAgents) {
            throw IoError("sample store: invalid agent count " + std::to_string(n));
        }
        s.agent_ids.resize(n);
        for (auto& id : s.agent_ids) id = read_pod<std::int32_t>(in, "agent id");
        s.observed.assign(n, std::vector<Vec2>(ds.t_obs));
        s.future.assign(n, std::vector<Vec2>(ds.t_pred));
        for (std::uint32_t a = 0; a < n; ++a) {
            for (auto& p : s.observed[a]) {
                p.x = read_pod<double>(in, "position");
                p.y = read_pod<double>(in, "position");
            }
            for (auto& p : s.future[a]) {
                p.x = read_pod<double>(in, "position");
                p.y = read_pod<double>(in, "position");
            }
        }
        s.context.resize(ds.context_dim);
        for (auto& c : s.context) c = read_pod<double>(in, "context");
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

Dataset load_any(const std::string& path) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".txt") {
        Dataset ds;
        ds.samples = extract_windows(load_eth_ucy(path));
        return ds;
    }
    return load_dataset(path);
}

}  // namespace rtraj
