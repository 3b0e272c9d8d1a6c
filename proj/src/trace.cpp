#include "smd/trace.hpp"

#include "smd/io.hpp"

#include <cmath>
#include <sstream>

namespace smd {

std::string join_indices(const BatchIndexSet& I, char sep) {
    std::string out;
    for (auto i : I) {
        if (!out.empty())
            out += sep;
        out += std::to_string(i);
    }
    return out;
}

std::string trace_csv(const RunTrace& trace) {
    std::ostringstream os;
    os << "n,indices,t,batch_res,full_res,rel_err,bregman,l1_sq\n";
    for (const auto& r : trace.records) {
        os << r.n << ',' << join_indices(r.batch) << ',' << format_double(r.step) << ','
           << format_double(r.batch_res) << ',' << format_double(r.full_res) << ',' << format_double(r.rel_err)
           << ',' << format_double(r.bregman) << ',' << format_double(r.l1_sq) << '\n';
    }
    return os.str();
}

std::string trace_gnuplot(const RunTrace& trace) {
    auto cell = [](double v) { return std::isnan(v) ? std::string("NaN") : format_double(v); };
    std::ostringstream os;
    os << "# n t batch_res full_res rel_err bregman l1_sq\n";
    for (const auto& r : trace.records)
        os << r.n << ' ' << cell(r.step) << ' ' << cell(r.batch_res) << ' ' << cell(r.full_res) << ' '
           << cell(r.rel_err) << ' ' << cell(r.bregman) << ' ' << cell(r.l1_sq) << '\n';
    return os.str();
}

}  // namespace smd
