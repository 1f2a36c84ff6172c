#include <fstream>
#include <sstream>

#include "geonet/errors.hpp"
#include "geonet/format.hpp"
#include "geonet/trainer.hpp"

namespace geonet {

namespace {
constexpr const char* kTraceHeader =
    "L,scale,drawn,passing,best_margin,delta,train_rmse,test_rmse,elapsed_ms,fallback";
}

std::string trace_to_csv(const TrainTrace& trace) {
  std::ostringstream out;
  out << kTraceHeader << '\n';
  for (const auto& r : trace.rows) {
    out << r.L << ',' << fmt_double(r.scale_used) << ',' << r.candidates_drawn << ','
        << r.candidates_passing << ',' << fmt_double(r.best_margin) << ','
        << fmt_double(r.chosen_delta) << ',' << fmt_double(r.train_rmse) << ',';
    if (r.test_rmse) out << fmt_double(*r.test_rmse);
    out << ',' << fmt_double(r.elapsed_ms) << ',' << (r.fallback_used ? 1 : 0) << '\n';
  }
  out << "# status=" << to_string(trace.status) << '\n';
  return out.str();
}

void write_trace_csv(const TrainTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << trace_to_csv(trace);
  if (!out) throw IoError("write failed: " + path);
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double need_double(const std::string& tok, std::size_t lineno) {
  const auto v = parse_double(tok);
  if (!v) throw DataError("trace:" + std::to_string(lineno) + ": bad number '" + tok + "'");
  return *v;
}

int need_int(const std::string& tok, std::size_t lineno) {
  const auto v = parse_int(tok);
  if (!v) throw DataError("trace:" + std::to_string(lineno) + ": bad integer '" + tok + "'");
  return static_cast<int>(*v);
}

} // namespace

TrainTrace parse_trace_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("trace: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw DataError("trace: unexpected header: '" + line + "'");

  TrainTrace trace;
  bool saw_status = false;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# status=", 0) == 0) {
      trace.status = status_from_string(line.substr(9));
      saw_status = true;
      continue;
    }
    const auto f = split_commas(line);
    if (f.size() != 10)
      throw DataError("trace:" + std::to_string(lineno) + ": expected 10 fields");
    TraceRow r;
    r.L = need_int(f[0], lineno);
    r.scale_used = need_double(f[1], lineno);
    r.candidates_drawn = need_int(f[2], lineno);
    r.candidates_passing = need_int(f[3], lineno);
    r.best_margin = need_double(f[4], lineno);
    r.chosen_delta = need_double(f[5], lineno);
    r.train_rmse = need_double(f[6], lineno);
    if (!f[7].empty()) r.test_rmse = need_double(f[7], lineno);
    r.elapsed_ms = need_double(f[8], lineno);
    r.fallback_used = need_int(f[9], lineno) != 0;
    trace.rows.push_back(r);
  }
  if (!saw_status) throw DataError("trace: missing trailing '# status=' line");
  return trace;
}

TrainTrace load_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_trace_csv(ss.str());
}

} // namespace geonet
