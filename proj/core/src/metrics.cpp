#include "rtraj/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace rtraj {

namespace {

void check_shapes(const Tracks& pred, const Tracks& gt, const char* op) {
    if (pred.size() != gt.size()) {
        throw ShapeError(std::string(op) + ": agent counts differ: " +
                         std::to_string(pred.size()) + " vs " + std::to_string(gt.size()));
    }
    if (pred.empty()) throw ShapeError(std::string(op) + ": no agents");
    for (std::size_t a = 0; a < pred.size(); ++a) {
        if (pred[a].size() != gt[a].size() || pred[a].empty()) {
            throw ShapeError(std::string(op) + ": step counts differ for agent " +
                             std::to_string(a));
        }
    }
}

}  // namespace

double ade(const Tracks& pred, const Tracks& gt) {
    check_shapes(pred, gt, "ade");
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t a = 0; a < pred.size(); ++a) {
        for (std::size_t t = 0; t < pred[a].size(); ++t) {
            total += dist(pred[a][t], gt[a][t]);
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

double fde(const Tracks& pred, const Tracks& gt) {
    check_shapes(pred, gt, "fde");
    double total = 0.0;
    for (std::size_t a = 0; a < pred.size(); ++a) {
        total += dist(pred[a].back(), gt[a].back());
    }
    return total / static_cast<double>(pred.size());
}

BestOfK best_of_k(const std::vector<Tracks>& preds, const Tracks& gt) {
    if (preds.empty()) throw ValidationError("best_of_k: K must be >= 1");
    BestOfK out;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < preds.size(); ++k) {
        const double a = ade(preds[k], gt);
        if (a < best) {
            best = a;
            out.best_index = k;
        }
    }
    out.ade = best;
    out.fde = fde(preds[out.best_index], gt);
    return out;
}

double collision_pct(const Tracks& tracks, double threshold) {
    if (tracks.empty() || tracks[0].empty()) return 0.0;
    const std::size_t n = tracks.size();
    const std::size_t steps = tracks[0].size();
    double frame_sum = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
        std::size_t colliding = 0;
        for (std::size_t i = 0; i < n; ++i) {
            bool hit = false;
            for (std::size_t j = 0; j < n && !hit; ++j) {
                if (j == i) continue;
                hit = dist(tracks[i][t], tracks[j][t]) < threshold;  // strictly less
            }
            if (hit) ++colliding;
        }
        frame_sum += static_cast<double>(colliding) / static_cast<double>(n);
    }
    return 100.0 * frame_sum / static_cast<double>(steps);
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

std::string EvalReport::to_text() const {
    std::ostringstream os;
    os << "scenes: " << scenes << "\n"
       << "k: " << k << "\n"
       << "ade: " << fmt(ade) << "\n"
       << "fde: " << fmt(fde) << "\n"
       << "collision_pct: " << fmt(collision_pct) << "\n";
    return os.str();
}

void EvalReport::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "scene,ade,fde,collision_pct\n";
    for (const auto& row : per_scene) {
        out << row.scene << ',' << fmt(row.ade) << ',' << fmt(row.fde) << ','
            << fmt(row.collision) << '\n';
    }
    out << "all," << fmt(ade) << ',' << fmt(fde) << ',' << fmt(collision_pct) << '\n';
    if (!out) throw IoError("write failed for " + path);
}

void EvalReport::write_text(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << to_text();
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace rtraj
