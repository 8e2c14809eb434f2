#include "lagrangekit/csv.hpp"

#include <fstream>
#include <sstream>

namespace lagrangekit {

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "read_csv: cannot open " + path);
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      table.rows.push_back(std::move(fields));
    }
  }
  require(!table.header.empty(), "read_csv: missing header in " + path);
  return table;
}

std::vector<std::string> trace_csv_header(int num_ineq, int num_eq) {
  std::vector<std::string> h;
  h.push_back("iter");
  h.push_back("f");
  for (int i = 0; i < num_ineq; ++i) h.push_back("g_" + std::to_string(i));
  for (int i = 0; i < num_eq; ++i) h.push_back("h_" + std::to_string(i));
  for (int i = 0; i < num_ineq; ++i) h.push_back("lambda_" + std::to_string(i));
  for (int i = 0; i < num_eq; ++i) h.push_back("mu_" + std::to_string(i));
  h.push_back("stationarity");
  h.push_back("feasible");
  return h;
}

void save_trace_csv(const Trace& trace, const std::string& path) {
  require(!trace.records.empty(), "save_trace_csv: empty trace");
  std::ofstream out(path);
  require(out.good(), "save_trace_csv: cannot open " + path);

  const TraceRecord& first = trace.records.front();
  auto header = trace_csv_header(static_cast<int>(first.g.size()),
                                 static_cast<int>(first.h.size()));
  for (size_t i = 0; i < header.size(); ++i) {
    out << header[i] << (i + 1 < header.size() ? ',' : '\n');
  }
  for (const TraceRecord& r : trace.records) {
    out << r.t << ',' << format_sig(r.f);
    for (int i = 0; i < r.g.size(); ++i) out << ',' << format_sig(r.g[i]);
    for (int i = 0; i < r.h.size(); ++i) out << ',' << format_sig(r.h[i]);
    for (int i = 0; i < r.lambda.size(); ++i)
      out << ',' << format_sig(r.lambda[i]);
    for (int i = 0; i < r.mu.size(); ++i) out << ',' << format_sig(r.mu[i]);
    out << ',' << format_sig(r.stationarity) << ',' << (r.is_feasible ? 1 : 0)
        << '\n';
  }
}

}  // namespace lagrangekit
