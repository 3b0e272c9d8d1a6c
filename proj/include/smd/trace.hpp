#pragma once

#include "smd/engine.hpp"

#include <string>

namespace smd {

// Columns: n, indices (semicolon-joined), t, batch_res, full_res, rel_err,
// bregman, l1_sq. Blank cells for values that were not recorded.
std::string trace_csv(const RunTrace& trace);

// Whitespace-separated columns with a '#' header, for gnuplot.
std::string trace_gnuplot(const RunTrace& trace);

std::string join_indices(const BatchIndexSet& I, char sep = ';');

}  // namespace smd
