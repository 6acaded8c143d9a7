#pragma once

#include "buckrl/trace.hpp"

#include <span>
#include <string>

namespace buckrl {

struct PlotOptions {
    bool include_current = true;
    std::string title = "output voltage";
    int width = 800;
    int panel_height = 300;
};

/// SVG line plot of v_o(t), optionally with i_l(t) in a second panel.
/// Presentation only; output depends only on the trace and options.
std::string render_plot_svg(std::span<const TraceRow> trace, const PlotOptions& options = {});
void export_plot(std::span<const TraceRow> trace, const std::string& path, const PlotOptions& options = {});

}  // namespace buckrl
