#pragma once

#include <string>
#include <vector>

#include "lagrangekit/optimizers.hpp"

namespace lagrangekit {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path);

// Fixed column order for diffability:
// iter, f, g_0..g_{m-1}, h_0..h_{n-1}, lambda_0.., mu_0.., stationarity,
// feasible
void save_trace_csv(const Trace& trace, const std::string& path);

std::vector<std::string> trace_csv_header(int num_ineq, int num_eq);

}  // namespace lagrangekit
