#include "buckrl/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>

namespace buckrl {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

void panel(std::string& svg, std::span<const TraceRow> trace, const std::function<double(const TraceRow&)>& value,
           const std::string& name, const std::string& colour, double top, const PlotOptions& opt) {
    const double margin_l = 60, margin_r = 20, margin_t = 30, margin_b = 30;
    const double w = opt.width - margin_l - margin_r;
    const double h = opt.panel_height - margin_t - margin_b;
    const double t0 = trace.front().t, t1 = trace.back().t;
    double lo = value(trace.front()), hi = lo;
    for (const TraceRow& r : trace) {
        lo = std::min(lo, value(r));
        hi = std::max(hi, value(r));
    }
    if (hi - lo < 1e-9) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double span_t = t1 > t0 ? t1 - t0 : 1.0;
    auto px = [&](double t) { return margin_l + (t - t0) / span_t * w; };
    auto py = [&](double v) { return top + margin_t + (hi - v) / (hi - lo) * h; };

    svg += "<rect x=\"" + num(margin_l) + "\" y=\"" + num(top + margin_t) + "\" width=\"" + num(w) +
           "\" height=\"" + num(h) + "\" fill=\"none\" stroke=\"#888\"/>\n";
    svg += "<text x=\"" + num(margin_l) + "\" y=\"" + num(top + margin_t - 8) + "\" font-size=\"13\">" + name +
           "</text>\n";
    svg += "<text x=\"4\" y=\"" + num(py(hi) + 4) + "\" font-size=\"11\">" + label(hi) + "</text>\n";
    svg += "<text x=\"4\" y=\"" + num(py(lo) + 4) + "\" font-size=\"11\">" + label(lo) + "</text>\n";
    svg += "<text x=\"" + num(margin_l) + "\" y=\"" + num(top + margin_t + h + 16) + "\" font-size=\"11\">" +
           label(t0) + " s</text>\n";
    svg += "<text x=\"" + num(margin_l + w - 40) + "\" y=\"" + num(top + margin_t + h + 16) +
           "\" font-size=\"11\">" + label(t1) + " s</text>\n";
    svg += "<polyline fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        if (i) svg += ' ';
        svg += num(px(trace[i].t)) + "," + num(py(value(trace[i])));
    }
    svg += "\"/>\n";
}

}  // namespace

std::string render_plot_svg(std::span<const TraceRow> trace, const PlotOptions& opt) {
    if (trace.empty()) throw EmptyTrace();
    const int panels = opt.include_current ? 2 : 1;
    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(opt.width) +
                      "\" height=\"" + std::to_string(panels * opt.panel_height) + "\">\n";
    svg += "<title>" + opt.title + "</title>\n";
    panel(svg, trace, [](const TraceRow& r) { return r.v_o; }, "v_o [V]", "#1f4e9c", 0.0, opt);
    if (opt.include_current)
        panel(svg, trace, [](const TraceRow& r) { return r.i_l; }, "i_L [A]", "#b5381f", opt.panel_height, opt);
    svg += "</svg>\n";
    return svg;
}

void export_plot(std::span<const TraceRow> trace, const std::string& path, const PlotOptions& options) {
    const std::string svg = render_plot_svg(trace, options);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write plot: " + path);
    out << svg;
}

}  // namespace buckrl
