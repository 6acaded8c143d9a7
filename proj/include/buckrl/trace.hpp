#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace buckrl {

/// One sample of a closed-loop run. reward/action are empty for the PI baseline.
struct TraceRow {
    double t = 0.0;
    double v_o = 0.0;
    double i_l = 0.0;
    double duty = 0.0;
    double p_cpl = 0.0;
    double e = 0.0;
    std::optional<double> reward;
    std::optional<long> action_index;
};

class EmptyTrace : public std::runtime_error {
public:
    EmptyTrace() : std::runtime_error("EmptyTrace: trace has no rows") {}
};

inline constexpr const char* kTraceHeader = "t,v_o,i_l,duty,p_cpl,e,reward,action_index";

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows);
void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows);
std::vector<TraceRow> read_trace_csv(std::istream& in);
std::vector<TraceRow> read_trace_csv(const std::string& path);

}  // namespace buckrl
