#include <charconv>
#include <istream>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "a2a/error.hpp"
#include "a2a/harness.hpp"

namespace a2a::harness {

const char* const kCsvHeader =
    "algorithm,impl,n_nodes,ppn,group_size,block_bytes,total_bytes_per_rank,"
    "steps,msgs_l0,msgs_l1,msgs_l2,bytes_l0,bytes_l1,bytes_l2,"
    "predicted_total_s,predicted_l2_s,payload_checked";

std::string impl_label(AlgorithmKind kind, ExchangeImpl impl) {
  return uses_exchange_impl(kind) ? std::string(to_string(impl)) : "none";
}

CsvRow to_row(const PointResult& result) {
  const Point& pt = result.point;
  const CostReport& rep = result.report;
  CsvRow row;
  row.algorithm = to_string(pt.algorithm);
  row.impl = impl_label(pt.algorithm, pt.impl);
  row.n_nodes = pt.n_nodes;
  row.ppn = pt.ppn;
  row.group_size = pt.group_size;
  row.block_bytes = pt.block_bytes;
  row.total_bytes_per_rank = static_cast<std::uint64_t>(pt.n_nodes) *
                             static_cast<std::uint64_t>(pt.ppn) * pt.block_bytes;
  row.steps = rep.message_steps;
  row.msgs = rep.traffic.messages;
  row.bytes = rep.traffic.bytes;
  row.predicted_total_s = rep.total_seconds;
  row.predicted_l2_s = rep.l2_seconds;
  row.payload_checked = result.payload_checked;
  return row;
}

std::string format_row(const CsvRow& r) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                     r.algorithm, r.impl, r.n_nodes, r.ppn, r.group_size,
                     r.block_bytes, r.total_bytes_per_rank, r.steps, r.msgs[0],
                     r.msgs[1], r.msgs[2], r.bytes[0], r.bytes[1], r.bytes[2],
                     r.predicted_total_s, r.predicted_l2_s,
                     r.payload_checked ? "true" : "false");
}

void write_csv(std::ostream& out, const std::vector<CsvRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& row : rows) out << format_row(row) << '\n';
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
T number(std::string_view text, int line_no) {
  T v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(fmt::format("csv line {}: bad number '{}'", line_no, text));
  }
  return v;
}

}  // namespace

std::vector<CsvRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw ConfigError("csv: unexpected header: " + line);

  std::vector<CsvRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 17) {
      throw ConfigError(fmt::format("csv line {}: expected 17 fields, got {}",
                                    line_no, f.size()));
    }
    CsvRow r;
    r.algorithm = f[0];
    r.impl = f[1];
    r.n_nodes = number<int>(f[2], line_no);
    r.ppn = number<int>(f[3], line_no);
    r.group_size = number<int>(f[4], line_no);
    r.block_bytes = number<std::uint64_t>(f[5], line_no);
    r.total_bytes_per_rank = number<std::uint64_t>(f[6], line_no);
    r.steps = number<std::uint64_t>(f[7], line_no);
    for (std::size_t l = 0; l < kLevelCount; ++l) {
      r.msgs[l] = number<std::uint64_t>(f[8 + l], line_no);
      r.bytes[l] = number<std::uint64_t>(f[11 + l], line_no);
    }
    r.predicted_total_s = number<double>(f[14], line_no);
    r.predicted_l2_s = number<double>(f[15], line_no);
    if (f[16] == "true") {
      r.payload_checked = true;
    } else if (f[16] != "false") {
      throw ConfigError(fmt::format("csv line {}: payload_checked must be true or false",
                                    line_no));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace a2a::harness
