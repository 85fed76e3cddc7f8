#include "rv/plot.hpp"

#include "rv/runio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

namespace rv {

DirectionFieldDump dump_direction_field(const Verifier& verifier, const Observation& obs,
                                        StepStamp stamp, double probe_gripper, double bound,
                                        int resolution) {
    if (resolution < 1) throw std::invalid_argument("dump_direction_field: resolution >= 1");
    if (bound <= 0.0) throw std::invalid_argument("dump_direction_field: bound > 0 required");
    DirectionFieldDump dump;
    dump.bound = bound;
    dump.resolution = resolution;

    PerceptionCache cache = verifier.pre_encode(obs, stamp);
    std::vector<Action> probes;
    probes.reserve(static_cast<size_t>(resolution) * resolution);
    for (int iy = 0; iy < resolution; ++iy) {
        for (int ix = 0; ix < resolution; ++ix) {
            double fx = resolution == 1 ? 0.5 : static_cast<double>(ix) / (resolution - 1);
            double fy = resolution == 1 ? 0.5 : static_cast<double>(iy) / (resolution - 1);
            Action a;
            a.pose = {-bound + 2.0 * bound * fx, -bound + 2.0 * bound * fy};
            a.gripper = probe_gripper;
            probes.push_back(std::move(a));
        }
    }
    std::vector<PrmOutput> outs = verifier.score_batch(cache, probes, stamp);
    if (!outs.empty() && outs[0].direction.size() != 2)
        throw std::invalid_argument("dump_direction_field: verifier is not planar (d_dir != 2)");
    for (size_t i = 0; i < probes.size(); ++i) {
        FieldProbe p;
        p.ax = probes[i].pose[0];
        p.ay = probes[i].pose[1];
        p.ux = outs[i].direction[0];
        p.uy = outs[i].direction[1];
        p.reward = outs[i].reward;
        p.degenerate = outs[i].degenerate_direction;
        dump.probes.push_back(p);
    }
    return dump;
}

void write_field_csv(const std::string& path, const DirectionFieldDump& dump,
                     const std::string& config_hash) {
    std::ofstream os = open_csv(path, "ax,ay,ux,uy,reward,degenerate", config_hash);
    for (const auto& p : dump.probes)
        os << fmt_double(p.ax) << ',' << fmt_double(p.ay) << ',' << fmt_double(p.ux) << ','
           << fmt_double(p.uy) << ',' << fmt_double(p.reward) << ',' << (p.degenerate ? 1 : 0)
           << '\n';
}

namespace {

// Blue (low) to red (high) two-stop ramp.
std::string reward_color(double r, double lo, double hi) {
    double f = hi > lo ? (r - lo) / (hi - lo) : 0.5;
    f = std::min(1.0, std::max(0.0, f));
    int red = static_cast<int>(40 + 215 * f);
    int blue = static_cast<int>(40 + 215 * (1.0 - f));
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x40%02x", red, blue);
    return buf;
}

}  // namespace

void write_field_svg(const std::string& path, const DirectionFieldDump& dump) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_field_svg: cannot open " + path);
    const int W = 480, H = 480, margin = 30;
    double lo = 1e300, hi = -1e300;
    for (const auto& p : dump.probes) {
        lo = std::min(lo, p.reward);
        hi = std::max(hi, p.reward);
    }
    auto sx = [&](double x) { return margin + (x + dump.bound) / (2 * dump.bound) * (W - 2 * margin); };
    auto sy = [&](double y) { return H - margin - (y + dump.bound) / (2 * dump.bound) * (H - 2 * margin); };
    double arrow = (W - 2 * margin) / std::max(1, dump.resolution) * 0.45;

    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    for (const auto& p : dump.probes) {
        double x0 = sx(p.ax), y0 = sy(p.ay);
        double x1 = x0 + p.ux * arrow, y1 = y0 - p.uy * arrow;
        std::string col = reward_color(p.reward, lo, hi);
        os << "<line x1='" << x0 << "' y1='" << y0 << "' x2='" << x1 << "' y2='" << y1
           << "' stroke='" << col << "' stroke-width='1.5'/>\n";
        // arrow head: short back-strokes
        double dx = x1 - x0, dy = y1 - y0;
        double n = std::hypot(dx, dy);
        if (n > 1e-9) {
            double hx = dx / n, hy = dy / n;
            double px = -hy, py = hx;
            os << "<line x1='" << x1 << "' y1='" << y1 << "' x2='" << x1 - 4 * hx + 2 * px
               << "' y2='" << y1 - 4 * hy + 2 * py << "' stroke='" << col << "' stroke-width='1.5'/>\n";
            os << "<line x1='" << x1 << "' y1='" << y1 << "' x2='" << x1 - 4 * hx - 2 * px
               << "' y2='" << y1 - 4 * hy - 2 * py << "' stroke='" << col << "' stroke-width='1.5'/>\n";
        }
        os << "<circle cx='" << x0 << "' cy='" << y0 << "' r='1.2' fill='#666'/>\n";
    }
    os << "</svg>\n";
}

void write_scaling_svg(const std::string& path, const std::vector<EvalRow>& rows) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_scaling_svg: cannot open " + path);
    const int W = 520, H = 360, ml = 50, mb = 40, mt = 20, mr = 20;
    int kmax = 1;
    for (const auto& r : rows) kmax = std::max(kmax, r.cell.n + r.cell.m);
    auto sx = [&](double k) { return ml + k / kmax * (W - ml - mr); };
    auto sy = [&](double p) { return H - mb - p * (H - mb - mt); };
    std::map<TtsMode, std::string> colors{{TtsMode::none, "#555555"},
                                          {TtsMode::random, "#cc3333"},
                                          {TtsMode::direction_guided, "#3355cc"}};
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<line x1='" << ml << "' y1='" << sy(0) << "' x2='" << W - mr << "' y2='" << sy(0)
       << "' stroke='black'/>\n";
    os << "<line x1='" << ml << "' y1='" << sy(0) << "' x2='" << ml << "' y2='" << mt
       << "' stroke='black'/>\n";
    for (int i = 0; i <= 10; i += 2)
        os << "<text x='8' y='" << sy(i / 10.0) + 4 << "' font-size='11'>" << i / 10.0
           << "</text>\n";
    os << "<text x='" << W / 2 << "' y='" << H - 8
       << "' font-size='12'>candidate budget K = N + M</text>\n";
    for (auto& [mode, col] : colors) {
        std::vector<const EvalRow*> series;
        for (const auto& r : rows)
            if (r.cell.mode == mode) series.push_back(&r);
        if (series.empty()) continue;
        std::sort(series.begin(), series.end(), [](const EvalRow* a, const EvalRow* b) {
            return a->cell.n + a->cell.m < b->cell.n + b->cell.m;
        });
        std::string pts;
        for (const auto* r : series) {
            double x = sx(r->cell.n + r->cell.m), y = sy(r->rate);
            pts += std::to_string(x) + "," + std::to_string(y) + " ";
            os << "<circle cx='" << x << "' cy='" << y << "' r='3' fill='" << col << "'/>\n";
            os << "<line x1='" << x << "' y1='" << sy(r->ci_lo) << "' x2='" << x << "' y2='"
               << sy(r->ci_hi) << "' stroke='" << col << "' stroke-width='1'/>\n";
        }
        os << "<polyline points='" << pts << "' fill='none' stroke='" << col
           << "' stroke-width='1.5'/>\n";
        os << "<text x='" << W - 150 << "' y='"
           << mt + 14 * (mode == TtsMode::none ? 1 : mode == TtsMode::random ? 2 : 3)
           << "' font-size='11' fill='" << col << "'>" << to_string(mode) << "</text>\n";
    }
    os << "</svg>\n";
}

}  // namespace rv
