#include "rtraj/baselines.hpp"

namespace rtraj {

Tracks linear_extrapolate(const SceneSample& s, std::size_t t_pred) {
    Tracks out(s.agents());
    for (std::size_t a = 0; a < s.agents(); ++a) {
        const auto& pts = s.observed[a];
        const double n = static_cast<double>(pts.size());
        double st = 0, stt = 0, sx = 0, sy = 0, stx = 0, sty = 0;
        for (std::size_t t = 0; t < pts.size(); ++t) {
            const double tt = static_cast<double>(t);
            st += tt;
            stt += tt * tt;
            sx += pts[t].x;
            sy += pts[t].y;
            stx += tt * pts[t].x;
            sty += tt * pts[t].y;
        }
        const double denom = n * stt - st * st;
        double bx = 0, by = 0;
        if (denom != 0.0) {
            bx = (n * stx - st * sx) / denom;
            by = (n * sty - st * sy) / denom;
        }
        const double ax = (sx - bx * st) / n;
        const double ay = (sy - by * st) / n;
        for (std::size_t k = 0; k < t_pred; ++k) {
            const double tt = static_cast<double>(pts.size() + k);
            out[a].push_back({ax + bx * tt, ay + by * tt});
        }
    }
    return out;
}

EvalReport evaluate_linear(const Dataset& test, double collision_threshold) {
    if (test.samples.empty()) throw ValidationError("evaluate_linear: empty test set");
    EvalReport rep;
    rep.k = 1;
    rep.scenes = test.samples.size();
    double ade_sum = 0, fde_sum = 0, frames_sum = 0;
    std::size_t agent_steps = 0, agents = 0, frames = 0;
    for (std::size_t i = 0; i < test.samples.size(); ++i) {
        const SceneSample& s = test.samples[i];
        const Tracks pred = linear_extrapolate(s, s.t_pred());
        const double a = ade(pred, s.future);
        const double f = fde(pred, s.future);
        const double c = collision_pct(pred, collision_threshold);
        const std::size_t n = s.agents(), steps = s.t_pred();
        ade_sum += a * static_cast<double>(n * steps);
        fde_sum += f * static_cast<double>(n);
        frames_sum += c / 100.0 * static_cast<double>(steps);
        agent_steps += n * steps;
        agents += n;
        frames += steps;
        rep.per_scene.push_back({i, a, f, c});
    }
    rep.ade = ade_sum / static_cast<double>(agent_steps);
    rep.fde = fde_sum / static_cast<double>(agents);
    rep.collision_pct = 100.0 * frames_sum / static_cast<double>(frames);
    return rep;
}

}  // namespace rtraj
