#include "buckrl/trace.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace buckrl {

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
    out << kTraceHeader << '\n';
    out << std::setprecision(17);
    for (const TraceRow& r : rows) {
        out << r.t << ',' << r.v_o << ',' << r.i_l << ',' << r.duty << ',' << r.p_cpl << ',' << r.e << ',';
        if (r.reward) out << *r.reward;
        out << ',';
        if (r.action_index) out << *r.action_index;
        out << '\n';
    }
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open trace file for writing: " + path);
    write_trace_csv(out, rows);
}

namespace {

double parse_double(const std::string& field, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("trace line " + std::to_string(line) + ": bad number '" + field + "'");
    }
}

}  // namespace

std::vector<TraceRow> read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw EmptyTrace();
    if (line != kTraceHeader) throw std::runtime_error("trace header mismatch: " + line);
    std::vector<TraceRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (line.back() == ',') f.emplace_back();
        if (f.size() != 8) throw std::runtime_error("trace line " + std::to_string(lineno) + ": expected 8 columns");
        TraceRow r;
        r.t = parse_double(f[0], lineno);
        r.v_o = parse_double(f[1], lineno);
        r.i_l = parse_double(f[2], lineno);
        r.duty = parse_double(f[3], lineno);
        r.p_cpl = parse_double(f[4], lineno);
        r.e = parse_double(f[5], lineno);
        if (!f[6].empty()) r.reward = parse_double(f[6], lineno);
        if (!f[7].empty()) r.action_index = static_cast<long>(parse_double(f[7], lineno));
        rows.push_back(r);
    }
    return rows;
}

std::vector<TraceRow> read_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace file: " + path);
    return read_trace_csv(in);
}

}  // namespace buckrl
