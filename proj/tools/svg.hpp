#pragma once

// Minimal SVG emitter for trajectory plots: observed history, ground-truth
// future, and predicted future as polylines, one color per role.

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include "rtraj/data.hpp"
#include "rtraj/errors.hpp"
#include "rtraj/metrics.hpp"

namespace rtraj::tools {

inline void write_scene_svg(const std::string& path, const SceneSample& scene,
                            const Tracks& predicted) {
    double min_x = 1e18, min_y = 1e18, max_x = -1e18, max_y = -1e18;
    auto extend = [&](const std::vector<Vec2>& pts) {
        for (const auto& p : pts) {
            min_x = std::min(min_x, p.x);
            max_x = std::max(max_x, p.x);
            min_y = std::min(min_y, p.y);
            max_y = std::max(max_y, p.y);
        }
    };
    for (const auto& t : scene.observed) extend(t);
    for (const auto& t : scene.future) extend(t);
    for (const auto& t : predicted) extend(t);
    const double pad = 1.0;
    min_x -= pad;
    min_y -= pad;
    max_x += pad;
    max_y += pad;
    const double w = max_x - min_x, h = max_y - min_y;
    const double scale = 600.0 / std::max(w, h);

    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w * scale << "\" height=\""
        << h * scale << "\" viewBox=\"0 0 " << w * scale << ' ' << h * scale << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    auto polyline = [&](const std::vector<Vec2>& pts, const char* color, const char* dash) {
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"";
        if (dash[0]) out << " stroke-dasharray=\"" << dash << "\"";
        out << " points=\"";
        for (const auto& p : pts) {
            out << (p.x - min_x) * scale << ',' << (max_y - p.y) * scale << ' ';
        }
        out << "\"/>\n";
    };

    for (std::size_t a = 0; a < scene.agents(); ++a) {
        polyline(scene.observed[a], "#555555", "");
        // Connect segments visually: prepend the last observed point.
        std::vector<Vec2> gt{scene.observed[a].back()};
        gt.insert(gt.end(), scene.future[a].begin(), scene.future[a].end());
        polyline(gt, "#2a9d2a", "");
        std::vector<Vec2> pred{scene.observed[a].back()};
        pred.insert(pred.end(), predicted[a].begin(), predicted[a].end());
        polyline(pred, "#d33030", "6,4");
        const Vec2 start = scene.observed[a].front();
        out << "<circle cx=\"" << (start.x - min_x) * scale << "\" cy=\""
            << (max_y - start.y) * scale << "\" r=\"4\" fill=\"#555555\"/>\n";
    }
    out << "<text x=\"8\" y=\"16\" font-size=\"12\">gray: observed, green: ground truth, "
           "red dashed: predicted</text>\n";
    out << "</svg>\n";
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace rtraj::tools
